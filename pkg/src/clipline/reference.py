"""Derive reference clips from a gold screenplay and its groundtruth summary.

Three steps: decompose the summary into atomic facts, classify each fact
as visual or textual by quoting the supporting screenplay line, then turn
every visual fact into the time interval spanned by the dialogue
immediately around its matched line.
"""

from __future__ import annotations

import enum
import json
import logging
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .errors import InvalidArgumentError, ParseError
from .gateway import ChatRequest, ModelGateway
from .prompts import FACT_CLASSIFICATION_TEMPLATE, FACT_IDENTIFICATION_TEMPLATE, render_fact_block
from .screenplay import LineKind, Screenplay, match_quote, serialize_screenplay
from .timeline import TimeInterval

log = logging.getLogger(__name__)

QUOTE_MATCH_THRESHOLD = 0.6


class Modality(str, enum.Enum):
    VISUAL = "Visual"
    TEXTUAL = "Textual"
    UNRESOLVED = "Unresolved"


@dataclass(frozen=True)
class Fact:
    """One atomic groundtruth-summary statement."""

    sentence_index: int
    fact_index: int
    text: str
    modality: Modality = Modality.UNRESOLVED
    quoted_line: str | None = None
    matched_line_index: int | None = None
    unresolved_reason: str | None = None


@dataclass(frozen=True)
class ReferenceClip:
    """Interval that visually supports one or more facts."""

    interval: TimeInterval
    supporting_fact_ids: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.supporting_fact_ids:
            raise InvalidArgumentError("reference clip needs at least one supporting fact")


_SENTENCE_HEADER_RE = re.compile(r"^\s*Sentence\s+(\d+)\s*:", re.IGNORECASE)
_BULLET_RE = re.compile(r"^\s*[*\-]\s*(.*)$")


def identify_facts(groundtruth_summary: str, gateway: ModelGateway) -> list[Fact]:
    """Decompose the groundtruth summary into per-sentence facts.

    All returned facts start unresolved; classification happens in a
    separate pass. Fact indices are 1-based and global across sentences.
    """
    if not groundtruth_summary.strip():
        raise InvalidArgumentError("groundtruth summary must be non-empty")
    prompt = FACT_IDENTIFICATION_TEMPLATE.format(summary=groundtruth_summary)
    response = gateway.complete(ChatRequest(model_tag="judge", user=prompt))
    return parse_fact_response(response.text)


def parse_fact_response(text: str) -> list[Fact]:
    facts: list[Fact] = []
    sentence: int | None = None
    facts_in_sentence = 0
    for line in text.splitlines():
        header = _SENTENCE_HEADER_RE.match(line)
        if header:
            if sentence is not None and facts_in_sentence == 0:
                log.warning("sentence %d produced no facts", sentence)
            sentence = int(header.group(1))
            facts_in_sentence = 0
            continue
        bullet = _BULLET_RE.match(line)
        if bullet and sentence is not None:
            fact_text = bullet.group(1).strip()
            if not fact_text:
                log.warning("skipping empty fact bullet under sentence %d", sentence)
                continue
            facts.append(
                Fact(sentence_index=sentence, fact_index=len(facts) + 1, text=fact_text)
            )
            facts_in_sentence += 1
    if sentence is None:
        raise ParseError("fact identification response has no sentence headers", raw=text)
    if sentence is not None and facts_in_sentence == 0:
        log.warning("sentence %d produced no facts", sentence)
    return facts


_FACT_BLOCK_RE = re.compile(
    r"^\s*Fact\s+(\d+)\s*:(.*?)(?=^\s*Fact\s+\d+\s*:|\Z)", re.DOTALL | re.MULTILINE
)
_ARROW_RE = re.compile(r"->\s*(.+)")


def _strip_wrapping_quotes(text: str) -> str:
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    return text


def classify_facts(facts: Sequence[Fact], gold: Screenplay, gateway: ModelGateway,
                   threshold: float = QUOTE_MATCH_THRESHOLD) -> list[Fact]:
    """Classify facts as visual or textual via quoted screenplay lines.

    A quote that matches a caption or action line makes the fact visual;
    a dialogue line makes it textual. Facts whose quote matches nothing
    above the threshold stay unresolved with a reason, and per-fact parse
    failures never abort the pass.
    """
    if not facts:
        return []
    prompt = FACT_CLASSIFICATION_TEMPLATE.format(
        screenplay=serialize_screenplay(gold),
        facts=render_fact_block(f.text for f in facts),
    )
    response = gateway.complete(ChatRequest(model_tag="judge", user=prompt))
    quotes: dict[int, str | None] = {}
    for m in _FACT_BLOCK_RE.finditer(response.text):
        number = int(m.group(1))
        arrow = _ARROW_RE.search(m.group(2))
        quotes[number] = _strip_wrapping_quotes(arrow.group(1).splitlines()[0]) if arrow else None

    classified: list[Fact] = []
    for pos, fact in enumerate(facts, 1):
        quote = quotes.get(pos)
        if not quote:
            classified.append(
                replace(fact, modality=Modality.UNRESOLVED,
                        unresolved_reason="no quoted line in classification response")
            )
            continue
        match = match_quote(quote, gold, threshold)
        if match is None:
            classified.append(
                replace(fact, modality=Modality.UNRESOLVED, quoted_line=quote,
                        unresolved_reason="quote matched no screenplay line above threshold")
            )
        elif match.matched_kind in (LineKind.CAPTION, LineKind.ACTION):
            classified.append(
                replace(fact, modality=Modality.VISUAL, quoted_line=quote,
                        matched_line_index=match.line_index, unresolved_reason=None)
            )
        elif match.matched_kind is LineKind.DIALOGUE:
            classified.append(
                replace(fact, modality=Modality.TEXTUAL, quoted_line=quote,
                        matched_line_index=match.line_index, unresolved_reason=None)
            )
        else:
            classified.append(
                replace(fact, modality=Modality.UNRESOLVED, quoted_line=quote,
                        unresolved_reason=f"quote matched a {match.matched_kind.value} line")
            )
    return classified


def _timed_dialogue_positions(s: Screenplay) -> list[tuple[int, int, int]]:
    """(line_index, start_ms, end_ms) for every fully timed dialogue line."""
    out = []
    for i, ln in enumerate(s.lines):
        if ln.kind is LineKind.DIALOGUE and ln.time_ms is not None and ln.end_ms is not None:
            out.append((i, ln.time_ms, ln.end_ms))
    return out


def derive_reference_clips(visual_facts: Sequence[Fact], timed_screenplay: Screenplay,
                           media_duration_ms: int) -> list[ReferenceClip]:
    """Turn visual facts into reference intervals via surrounding dialogue.

    A fact's interval starts at the start of the dialogue line nearest
    before its matched line and ends at the end of the dialogue line
    nearest after it; a missing neighbor clamps to the media bounds.
    Overlapping or duplicate intervals merge, pooling their fact ids.
    """
    dialogue = _timed_dialogue_positions(timed_screenplay)
    if not dialogue:
        raise InvalidArgumentError("screenplay has no timed dialogue lines")
    if media_duration_ms <= 0:
        raise InvalidArgumentError("media_duration_ms must be positive")

    raw: list[tuple[int, int, int]] = []  # (start, end, fact_id)
    for fact in visual_facts:
        if fact.modality is not Modality.VISUAL or fact.matched_line_index is None:
            raise InvalidArgumentError(
                f"fact {fact.fact_index} is not a matched visual fact"
            )
        li = fact.matched_line_index
        preceding = [d for d in dialogue if d[0] < li]
        following = [d for d in dialogue if d[0] > li]
        start = preceding[-1][1] if preceding else 0
        end = following[0][2] if following else media_duration_ms
        if end <= start:
            raise InvalidArgumentError(
                f"dialogue timestamps around line {li} are not in temporal order"
            )
        raw.append((start, end, fact.fact_index))

    raw.sort()
    merged: list[tuple[int, int, set[int]]] = []
    for start, end, fact_id in raw:
        if merged and start < merged[-1][1]:
            prev = merged[-1]
            merged[-1] = (prev[0], max(prev[1], end), prev[2] | {fact_id})
        else:
            merged.append((start, end, {fact_id}))
    return [
        ReferenceClip(interval=TimeInterval(s, e), supporting_fact_ids=tuple(sorted(ids)))
        for s, e, ids in merged
    ]


def proportional_timestamps(gold: Screenplay, media_duration_ms: int) -> Screenplay:
    """Assign uniform synthetic intervals to dialogue lines.

    Fallback for gold screenplays without audio alignment: dialogue line
    ``i`` of ``n`` covers ``[i*D/n, (i+1)*D/n)``. The output carries the
    synthetic-timestamps flag, which every downstream report inherits.
    """
    if media_duration_ms <= 0:
        raise InvalidArgumentError("media_duration_ms must be positive")
    n = sum(1 for ln in gold.lines if ln.kind is LineKind.DIALOGUE)
    if n == 0:
        raise InvalidArgumentError("screenplay has no dialogue lines to timestamp")
    new_lines = []
    seen = 0
    for ln in gold.lines:
        if ln.kind is LineKind.DIALOGUE:
            start = (seen * media_duration_ms) // n
            end = ((seen + 1) * media_duration_ms) // n
            new_lines.append(replace(ln, time_ms=start, end_ms=end))
            seen += 1
        else:
            new_lines.append(ln)
    return replace(gold, lines=tuple(new_lines), synthetic_timestamps=True)


def parse_alignment_file(path: str | Path) -> dict[int, tuple[int, int]]:
    """Read ``dialogue_index<TAB>start_ms<TAB>end_ms`` rows.

    The index counts dialogue lines only, 0-based, in screenplay order.
    """
    mapping: dict[int, tuple[int, int]] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ParseError(f"expected 'index<TAB>start_ms<TAB>end_ms', got {line!r}", line=lineno)
        try:
            mapping[int(parts[0])] = (int(parts[1]), int(parts[2]))
        except ValueError:
            raise ParseError(f"non-integer alignment value in {line!r}", line=lineno) from None
    return mapping


def apply_alignment(gold: Screenplay, alignment: dict[int, tuple[int, int]]) -> Screenplay:
    """Attach ingested intervals to dialogue lines by dialogue ordinal."""
    new_lines = []
    seen = 0
    for ln in gold.lines:
        if ln.kind is LineKind.DIALOGUE:
            if seen in alignment:
                start, end = alignment[seen]
                ln = replace(ln, time_ms=start, end_ms=end)
            seen += 1
        new_lines.append(ln)
    return replace(gold, lines=tuple(new_lines))


def fact_to_json(fact: Fact) -> str:
    return json.dumps(
        {
            "sentence_index": fact.sentence_index,
            "fact_index": fact.fact_index,
            "text": fact.text,
            "modality": fact.modality.value,
            "quoted_line": fact.quoted_line,
            "matched_line_index": fact.matched_line_index,
            "unresolved_reason": fact.unresolved_reason,
        },
        ensure_ascii=False,
        sort_keys=True,
    )


def save_facts_jsonl(facts: Sequence[Fact], path: str | Path) -> None:
    Path(path).write_text(
        "".join(fact_to_json(f) + "\n" for f in facts), encoding="utf-8"
    )


def load_facts_jsonl(path: str | Path) -> list[Fact]:
    facts = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            facts.append(
                Fact(
                    sentence_index=obj["sentence_index"],
                    fact_index=obj["fact_index"],
                    text=obj["text"],
                    modality=Modality(obj["modality"]),
                    quoted_line=obj.get("quoted_line"),
                    matched_line_index=obj.get("matched_line_index"),
                    unresolved_reason=obj.get("unresolved_reason"),
                )
            )
        except (KeyError, ValueError) as exc:
            raise ParseError(f"bad fact record: {exc}", line=lineno) from None
    return facts


def reference_clips_to_json(clips: Sequence[ReferenceClip], synthetic_timestamps: bool = False) -> str:
    obj = {
        "clips": [
            {
                "start_ms": c.interval.start_ms,
                "end_ms": c.interval.end_ms,
                "supporting_fact_ids": list(c.supporting_fact_ids),
            }
            for c in clips
        ],
        "synthetic_timestamps": synthetic_timestamps,
    }
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=2) + "\n"


def load_reference_clips(path: str | Path) -> tuple[list[ReferenceClip], bool]:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    clips = [
        ReferenceClip(
            interval=TimeInterval(c["start_ms"], c["end_ms"]),
            supporting_fact_ids=tuple(c["supporting_fact_ids"]),
        )
        for c in obj["clips"]
    ]
    return clips, bool(obj.get("synthetic_timestamps", False))
