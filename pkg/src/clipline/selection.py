"""Clip selection strategies.

The main strategy renders every lightweight caption into a single ranked
selection prompt and parses the model's numbered answer back into clip
ids. Random-grid and silent-gap baselines share the same result shape so
downstream stages treat all methods uniformly.
"""

from __future__ import annotations

import enum
import json
import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .captioning import Caption, CaptionKind
from .errors import InvalidArgumentError, ParseError
from .gateway import ChatRequest, ModelGateway
from .prompts import CLIP_SELECTION_TEMPLATE, SELECTION_EXEMPLARS, render_caption_block
from .screenplay import Utterance
from .timeline import Clip, ClipOrigin


class Shots(str, enum.Enum):
    ZERO_SHOT = "zero_shot"
    TWO_SHOT = "two_shot"


class SelectionMethod(str, enum.Enum):
    LLM_ZERO_SHOT = "llm_zero_shot"
    LLM_TWO_SHOT = "llm_two_shot"
    RANDOM = "random"
    SILENT = "silent"
    REFERENCE = "reference"


@dataclass(frozen=True)
class SelectionConfig:
    k: int
    shots: Shots = Shots.ZERO_SHOT
    movie_name: str = ""
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise InvalidArgumentError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class SelectionItem:
    clip_id: int
    justification: str | None = None


@dataclass(frozen=True)
class ParseReport:
    lines_total: int
    lines_parsed: int
    unknown_ids_dropped: int
    duplicates_dropped: int
    surplus_dropped: int = 0


@dataclass(frozen=True)
class SelectionResult:
    method: SelectionMethod
    k_requested: int
    items: tuple[SelectionItem, ...]
    parse_report: ParseReport | None = None
    warnings: tuple[str, ...] = ()

    def clip_ids(self) -> list[int]:
        return [it.clip_id for it in self.items]


def build_selection_prompt(cfg: SelectionConfig, captions: Sequence[Caption]) -> str:
    """Instantiate the selection template over all lightweight captions.

    Two-shot mode prepends both fixed exemplars, verbatim and in order,
    before the target query.
    """
    if not captions:
        raise InvalidArgumentError("cannot build a selection prompt from zero captions")
    for c in captions:
        if c.kind is not CaptionKind.LIGHTWEIGHT:
            raise InvalidArgumentError(
                f"selection runs over lightweight captions, clip {c.clip_id} is {c.kind.value}"
            )
    block = render_caption_block((c.clip_id, c.text) for c in captions)
    query = CLIP_SELECTION_TEMPLATE.format(movie_name=cfg.movie_name, captions=block, k=cfg.k)
    if cfg.shots is Shots.TWO_SHOT:
        return "\n\n".join((*SELECTION_EXEMPLARS, query))
    return query


# An answer line names a caption id, with or without a leading rank number.
_ANSWER_LINE_RE = re.compile(r"^\s*(?:\d+\s*[.)]\s*)?Caption\s+(\d+)\s*:\s*(.*)$", re.IGNORECASE)


def parse_selection_response(text: str, known_ids: Iterable[int], k: int,
                             method: SelectionMethod = SelectionMethod.LLM_ZERO_SHOT) -> SelectionResult:
    """Extract ranked clip ids from a model answer, in first-occurrence order.

    Unknown ids and duplicates are dropped and counted; anything beyond the
    first ``k`` valid ids is dropped as surplus. A response with no
    parseable id lines at all raises :class:`ParseError` carrying the raw
    text.
    """
    known = set(known_ids)
    lines = [ln for ln in text.splitlines() if ln.strip()]
    items: list[SelectionItem] = []
    seen: set[int] = set()
    parsed = unknown = dupes = surplus = 0
    for ln in lines:
        m = _ANSWER_LINE_RE.match(ln)
        if not m:
            continue
        parsed += 1
        clip_id = int(m.group(1))
        if clip_id not in known:
            unknown += 1
            continue
        if clip_id in seen:
            dupes += 1
            continue
        if len(items) >= k:
            surplus += 1
            continue
        seen.add(clip_id)
        justification = m.group(2).strip() or None
        items.append(SelectionItem(clip_id=clip_id, justification=justification))
    if parsed == 0:
        raise ParseError("no selection lines found in model response", raw=text)
    report = ParseReport(
        lines_total=len(lines),
        lines_parsed=parsed,
        unknown_ids_dropped=unknown,
        duplicates_dropped=dupes,
        surplus_dropped=surplus,
    )
    warnings = []
    if len(items) < k:
        warnings.append(f"model returned {len(items)} of {k} requested clips")
    return SelectionResult(
        method=method,
        k_requested=k,
        items=tuple(items),
        parse_report=report,
        warnings=tuple(warnings),
    )


def select_clips_llm(cfg: SelectionConfig, captions: Sequence[Caption],
                     gateway: ModelGateway) -> SelectionResult:
    """Prompt the selection model and parse its ranked answer.

    When the model returns fewer than ``k`` parseable ids the shortfall is
    surfaced as a warning; there is no automatic re-ask, which keeps runs
    deterministic and cost-bounded.
    """
    if cfg.k > len(captions):
        raise InvalidArgumentError(
            f"k={cfg.k} exceeds the {len(captions)} available captions"
        )
    method = SelectionMethod.LLM_TWO_SHOT if cfg.shots is Shots.TWO_SHOT else SelectionMethod.LLM_ZERO_SHOT
    prompt = build_selection_prompt(cfg, captions)
    response = gateway.complete(ChatRequest(model_tag="selector", user=prompt))
    return parse_selection_response(response.text, (c.clip_id for c in captions), cfg.k, method)


def select_random(clips: Sequence[Clip], k: int, seed: int) -> SelectionResult:
    """Sample ``k`` clips uniformly without replacement from the clip grid.

    Deterministic for a fixed seed; non-overlap is guaranteed because the
    grid clips never overlap.
    """
    if k > len(clips):
        raise InvalidArgumentError(f"k={k} exceeds the {len(clips)} planned clips")
    rng = random.Random(seed)
    ids = rng.sample([c.id for c in clips], k)
    return SelectionResult(
        method=SelectionMethod.RANDOM,
        k_requested=k,
        items=tuple(SelectionItem(clip_id=i) for i in ids),
    )


def silent_gap_clips(utterances: Sequence[Utterance], media_duration_ms: int,
                     include_edges: bool = True) -> list[Clip]:
    """All maximal dialogue-free intervals as clips, sorted by start.

    ``include_edges`` controls whether silence before the first utterance
    and after the last one counts as a gap.
    """
    if media_duration_ms <= 0:
        raise InvalidArgumentError("media_duration_ms must be positive")
    merged: list[list[int]] = []
    for u in sorted(utterances, key=lambda u: (u.interval.start_ms, u.interval.end_ms)):
        s, e = u.interval.start_ms, u.interval.end_ms
        if merged and s <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    gaps: list[Clip] = []

    def add_gap(start: int, end: int) -> None:
        start, end = max(start, 0), min(end, media_duration_ms)
        if end > start:
            gaps.append(Clip.from_bounds(start, end, ClipOrigin.SILENT_GAP))

    cursor = 0
    for s, e in merged:
        if include_edges or cursor > 0:
            add_gap(cursor, s)
        cursor = max(cursor, e)
    if include_edges:
        add_gap(cursor, media_duration_ms)
    return gaps


def select_silent(utterances: Sequence[Utterance], media_duration_ms: int, k: int,
                  include_edges: bool = True) -> SelectionResult:
    """Pick the ``k`` longest dialogue-free gaps, longest first.

    Ties in duration break toward the earlier gap. Fewer than ``k`` items
    are returned when the dialogue leaves fewer gaps.
    """
    gaps = silent_gap_clips(utterances, media_duration_ms, include_edges)
    gaps.sort(key=lambda c: (-c.interval.duration_ms, c.interval.start_ms))
    chosen = gaps[:k]
    return SelectionResult(
        method=SelectionMethod.SILENT,
        k_requested=k,
        items=tuple(SelectionItem(clip_id=c.id) for c in chosen),
    )


def resolve_selection(result: SelectionResult, clips: Sequence[Clip]) -> list[Clip]:
    """Map selected clip ids back to clip objects, keeping selection order."""
    by_id = {c.id: c for c in clips}
    resolved = []
    for item in result.items:
        if item.clip_id not in by_id:
            raise InvalidArgumentError(f"selected clip id {item.clip_id} is not in the clip plan")
        resolved.append(by_id[item.clip_id])
    return resolved


def selection_to_json(result: SelectionResult) -> str:
    obj = {
        "method": result.method.value,
        "k_requested": result.k_requested,
        "items": [
            {"clip_id": it.clip_id, "justification": it.justification} for it in result.items
        ],
        "parse_report": None
        if result.parse_report is None
        else {
            "lines_total": result.parse_report.lines_total,
            "lines_parsed": result.parse_report.lines_parsed,
            "unknown_ids_dropped": result.parse_report.unknown_ids_dropped,
            "duplicates_dropped": result.parse_report.duplicates_dropped,
            "surplus_dropped": result.parse_report.surplus_dropped,
        },
        "warnings": list(result.warnings),
    }
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=2) + "\n"


def selection_from_json(text: str) -> SelectionResult:
    obj = json.loads(text)
    report = obj.get("parse_report")
    return SelectionResult(
        method=SelectionMethod(obj["method"]),
        k_requested=obj["k_requested"],
        items=tuple(
            SelectionItem(clip_id=it["clip_id"], justification=it.get("justification"))
            for it in obj["items"]
        ),
        parse_report=None if report is None else ParseReport(**report),
        warnings=tuple(obj.get("warnings", ())),
    )


def load_selection(path: str | Path) -> SelectionResult:
    return selection_from_json(Path(path).read_text(encoding="utf-8"))
