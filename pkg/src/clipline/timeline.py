"""Temporal backbone: intervals, fixed-window clip planning and scene subdivision.

All times are non-negative integer milliseconds and all intervals are
half-open ``[start_ms, end_ms)``, which keeps boundary arithmetic exact.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import InvalidArgumentError, ParseError

DEFAULT_CLIP_LEN_MS = 20_000


@dataclass(frozen=True, order=True)
class TimeInterval:
    """Half-open interval ``[start_ms, end_ms)`` with positive duration."""

    start_ms: int
    end_ms: int

    def __post_init__(self) -> None:
        if self.start_ms < 0:
            raise InvalidArgumentError(f"start_ms must be >= 0, got {self.start_ms}")
        if self.end_ms <= self.start_ms:
            raise InvalidArgumentError(
                f"interval must have positive duration, got [{self.start_ms}, {self.end_ms})"
            )

    @property
    def duration_ms(self) -> int:
        return self.end_ms - self.start_ms


class ClipOrigin(str, enum.Enum):
    FIXED_GRID = "FixedGrid"
    SCENE_SUBDIVIDED = "SceneSubdivided"
    SILENT_GAP = "SilentGap"
    REFERENCE = "Reference"
    EXTERNAL = "External"


@dataclass(frozen=True)
class Clip:
    """A selectable unit of video. The id always equals the start time in ms."""

    id: int
    interval: TimeInterval
    origin: ClipOrigin = ClipOrigin.FIXED_GRID

    def __post_init__(self) -> None:
        if self.id != self.interval.start_ms:
            raise InvalidArgumentError(
                f"clip id {self.id} must equal interval start {self.interval.start_ms}"
            )

    @classmethod
    def from_bounds(cls, start_ms: int, end_ms: int, origin: ClipOrigin = ClipOrigin.FIXED_GRID) -> "Clip":
        return cls(id=start_ms, interval=TimeInterval(start_ms, end_ms), origin=origin)


def validate_clip_list(clips: Sequence[Clip]) -> None:
    """Check that clips are sorted by start and pairwise non-overlapping."""
    for prev, cur in zip(clips, clips[1:]):
        if cur.interval.start_ms < prev.interval.end_ms:
            raise InvalidArgumentError(
                f"clips {prev.id} and {cur.id} overlap or are out of order"
            )


def plan_fixed_clips(duration_ms: int, clip_len_ms: int = DEFAULT_CLIP_LEN_MS) -> list[Clip]:
    """Tile ``[0, duration_ms)`` with consecutive fixed-length clips.

    A final shorter tail clip is kept when the duration is not an exact
    multiple of ``clip_len_ms``, so the plan always covers the full timeline.
    """
    if duration_ms <= 0:
        raise InvalidArgumentError(f"duration_ms must be positive, got {duration_ms}")
    if clip_len_ms <= 0:
        raise InvalidArgumentError(f"clip_len_ms must be positive, got {clip_len_ms}")
    clips = []
    for start in range(0, duration_ms, clip_len_ms):
        end = min(start + clip_len_ms, duration_ms)
        clips.append(Clip.from_bounds(start, end, ClipOrigin.FIXED_GRID))
    return clips


def intersection_ms(a: TimeInterval, b: TimeInterval) -> int:
    """Length of the temporal overlap between two intervals, in ms."""
    return max(0, min(a.end_ms, b.end_ms) - max(a.start_ms, b.start_ms))


def ior(p: TimeInterval, r: TimeInterval) -> float:
    """Intersection-over-reference: overlap of ``p`` with ``r`` divided by ``r``'s duration."""
    if r.duration_ms <= 0:
        raise InvalidArgumentError("reference interval must have positive duration")
    return intersection_ms(p, r) / r.duration_ms


@dataclass(frozen=True)
class SceneList:
    """Ordered scene intervals covering ``[0, duration)`` contiguously."""

    scenes: tuple[TimeInterval, ...]

    def __post_init__(self) -> None:
        if not self.scenes:
            raise InvalidArgumentError("scene list must not be empty")
        if self.scenes[0].start_ms != 0:
            raise InvalidArgumentError(
                f"scene list must start at 0, first scene starts at {self.scenes[0].start_ms}"
            )
        for prev, cur in zip(self.scenes, self.scenes[1:]):
            if cur.start_ms != prev.end_ms:
                raise InvalidArgumentError(
                    f"scene list has a gap or overlap at boundary {prev.end_ms} -> {cur.start_ms}"
                )

    @property
    def duration_ms(self) -> int:
        return self.scenes[-1].end_ms

    @classmethod
    def from_bounds(cls, bounds: Iterable[tuple[int, int]]) -> "SceneList":
        return cls(tuple(TimeInterval(s, e) for s, e in bounds))


def parse_scene_file(path: str | Path) -> SceneList:
    """Read a scene list from a text file with one ``start_ms<TAB>end_ms`` row per line."""
    bounds = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError(f"expected 'start_ms<TAB>end_ms', got {line!r}", line=lineno)
        try:
            start, end = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer scene bound in {line!r}", line=lineno) from None
        bounds.append((start, end))
    return SceneList.from_bounds(bounds)


def subdivide_scenes(scenes: SceneList, target_avg_ms: int = DEFAULT_CLIP_LEN_MS) -> list[Clip]:
    """Split every scene into equal parts so the average part is near ``target_avg_ms``.

    A scene of duration ``d`` is cut into ``max(1, round(d / target_avg_ms))``
    parts. Part boundaries are computed with integer arithmetic so the output
    exactly preserves total duration and never crosses a scene boundary.
    """
    if target_avg_ms <= 0:
        raise InvalidArgumentError(f"target_avg_ms must be positive, got {target_avg_ms}")
    clips = []
    for scene in scenes.scenes:
        d = scene.duration_ms
        # round-half-up in integer arithmetic
        n = max(1, (2 * d + target_avg_ms) // (2 * target_avg_ms))
        for i in range(n):
            start = scene.start_ms + (i * d) // n
            end = scene.start_ms + ((i + 1) * d) // n
            clips.append(Clip.from_bounds(start, end, ClipOrigin.SCENE_SUBDIVIDED))
    return clips
