#!/usr/bin/env python3
"""Clip planning and interval arithmetic.

Walks through the temporal primitives everything else builds on: tiling a
timeline with fixed 20-second clips, subdividing externally detected
scenes, and measuring overlap with intersection-over-reference.
"""

from clipline import (
    SceneList,
    TimeInterval,
    intersection_ms,
    ior,
    plan_fixed_clips,
    subdivide_scenes,
)

# A two-hour movie tiled into 20-second clips. The tail is kept even when
# the duration is not an exact multiple, so coverage is always complete.
duration_ms = 7_080_000
clips = plan_fixed_clips(duration_ms, clip_len_ms=20_000)
print(f"a {duration_ms/3600000:.2f} h movie yields {len(clips)} clips")
print("first three:", [(c.id, c.interval.end_ms) for c in clips[:3]])

odd = plan_fixed_clips(70_000, 20_000)
print("70 s movie keeps a short tail clip:", (odd[-1].interval.start_ms, odd[-1].interval.end_ms))

# Clip ids double as start timestamps, which keeps captions, selections and
# media file names trivially joinable.
assert all(c.id == c.interval.start_ms for c in clips)

# Scene-based planning: each scene is split into equal parts so the average
# part lands near the target, and no part ever crosses a scene boundary.
scenes = SceneList.from_bounds([(0, 73_000), (73_000, 101_000), (101_000, 140_000)])
subdivided = subdivide_scenes(scenes, target_avg_ms=20_000)
print(f"\n{len(scenes.scenes)} scenes become {len(subdivided)} scene-aligned clips:")
for c in subdivided:
    print(f"  [{c.interval.start_ms:>6} .. {c.interval.end_ms:>6})  {c.interval.duration_ms} ms")

# Overlap measurement. IoR normalizes by the *reference* interval, so a
# long prediction fully covering a short reference still scores 1.0.
pred = TimeInterval(10_000, 30_000)
ref = TimeInterval(20_000, 60_000)
print(f"\nintersection: {intersection_ms(pred, ref)} ms")
print(f"IoR(pred, ref) = {ior(pred, ref):.2f}  (overlap / reference duration)")
print(f"IoR(ref, pred) = {ior(ref, pred):.2f}  (asymmetric by design)")
