#!/usr/bin/env python3
"""The three clip selection strategies side by side.

Renders the ranked-answer selection prompt over lightweight captions,
parses a model-style reply, and contrasts it with the seeded random and
silent-gap baselines.
"""

from clipline import (
    Caption,
    CaptionKind,
    SelectionConfig,
    Shots,
    TimeInterval,
    Utterance,
    build_selection_prompt,
    parse_selection_response,
    plan_fixed_clips,
    select_random,
    select_silent,
)

clips = plan_fixed_clips(120_000, 20_000)
captions = [
    Caption(clip_id=c.id, kind=CaptionKind.LIGHTWEIGHT,
            text=f"Placeholder description of the action around {c.id // 1000} seconds in.")
    for c in clips
]

cfg = SelectionConfig(k=2, movie_name="The Lighthouse Crossing")
prompt = build_selection_prompt(cfg, captions)
print("=== selection prompt (zero-shot) ===")
print(prompt[:400] + " ...\n")

two_shot = build_selection_prompt(
    SelectionConfig(k=2, movie_name="The Lighthouse Crossing", shots=Shots.TWO_SHOT), captions
)
print(f"two-shot variant prepends two worked examples ({len(two_shot)} chars total)\n")

# A typical ranked reply. The parser tolerates missing ranks, drops ids it
# has never planned, and reports everything it dropped.
reply = """1. Caption 40000: Justification: the storm first hits here.
2. Caption 40000: Justification: duplicate by accident.
3. Caption 999999: Justification: hallucinated id.
4. Caption 100000: Justification: the rescue.
"""
result = parse_selection_response(reply, {c.id for c in clips}, k=2)
print("parsed ids:", result.clip_ids())
print("parse report:", result.parse_report)

# Random baseline: uniform over the grid, deterministic per seed.
print("\nrandom, seed 7 :", sorted(select_random(clips, 2, seed=7).clip_ids()))
print("random, seed 7 :", sorted(select_random(clips, 2, seed=7).clip_ids()))
print("random, seed 9 :", sorted(select_random(clips, 2, seed=9).clip_ids()))

# Silent baseline: the longest dialogue-free stretches, longest first.
utterances = [
    Utterance(0, TimeInterval(0, 10_000), "intro chatter"),
    Utterance(1, TimeInterval(40_000, 50_000), "mid scene"),
    Utterance(2, TimeInterval(55_000, 90_000), "long argument"),
]
silent = select_silent(utterances, media_duration_ms=120_000, k=2)
print("\nsilent gaps picked:", silent.clip_ids(), "(ids are gap start times)")
