"""Timestamped transcripts and screenplay documents.

Covers SubRip transcript parsing, the typed screenplay line model used for
both gold (dataset) and built (transcript + caption) documents, the plain
text serialization that round-trips for built screenplays, and fuzzy
matching of quoted lines back to screenplay positions.
"""

from __future__ import annotations

import enum
import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, replace

from .errors import InvalidArgumentError, ParseError
from .timeline import TimeInterval

log = logging.getLogger(__name__)

# Accepts both SubRip comma milliseconds and the dot form used in our
# serialized screenplays.
_TIMECODE = r"(\d{1,3}):(\d{2}):(\d{2})[,.](\d{1,3})"
_CUE_TIMING_RE = re.compile(rf"^\s*{_TIMECODE}\s*-->\s*{_TIMECODE}\s*$")
_BRACKET_TIME_RE = re.compile(rf"^\[{_TIMECODE}\]\s?(.*)$")
# Short ALL-CAPS token before a colon, e.g. "JOE:" or "SGT. O'HARA:".
_SPEAKER_RE = re.compile(r"^([A-Z][A-Z0-9 .'\-]{0,39}?)\s*:\s*(.+)$")

CAPTION_MARKER = "Caption:"


def ms_to_timecode(ms: int) -> str:
    """Render milliseconds as ``HH:MM:SS.mmm``."""
    if ms < 0:
        raise InvalidArgumentError(f"timecode must be non-negative, got {ms}")
    s, msec = divmod(ms, 1000)
    m, sec = divmod(s, 60)
    h, minute = divmod(m, 60)
    return f"{h:02d}:{minute:02d}:{sec:02d}.{msec:03d}"


def _timecode_to_ms(h: str, m: str, s: str, ms: str) -> int:
    return int(h) * 3_600_000 + int(m) * 60_000 + int(s) * 1000 + int(ms)


@dataclass(frozen=True)
class Utterance:
    """One spoken line with its time interval."""

    index: int
    interval: TimeInterval
    text: str
    speaker: str | None = None


def parse_srt(text: str, speaker_prefix: bool = False) -> list[Utterance]:
    """Parse a SubRip document into utterances sorted by start time.

    Multi-line cue text is joined with single spaces. Cues with empty text
    or non-positive duration are skipped with a logged warning. A malformed
    timing line raises :class:`ParseError` carrying the line number.

    With ``speaker_prefix`` enabled, a leading ``NAME:`` in capitals is
    split off into the speaker field.
    """
    cues: list[tuple[TimeInterval, str]] = []
    lines = text.splitlines()
    i = 0
    skipped = 0
    while i < len(lines):
        line = lines[i].strip()
        if not line:
            i += 1
            continue
        block_start = i + 1  # 1-based for error messages
        if line.isdigit():
            i += 1
            if i >= len(lines):
                raise ParseError("cue index with no timing line", line=block_start)
            line = lines[i].strip()
        match = _CUE_TIMING_RE.match(line)
        if not match:
            raise ParseError(f"malformed cue timing {line!r}", line=i + 1)
        start = _timecode_to_ms(*match.groups()[:4])
        end = _timecode_to_ms(*match.groups()[4:])
        i += 1
        text_lines = []
        while i < len(lines) and lines[i].strip():
            text_lines.append(lines[i].strip())
            i += 1
        cue_text = " ".join(text_lines)
        if not cue_text:
            log.warning("skipping cue at line %d: empty text", block_start)
            skipped += 1
            continue
        if end <= start:
            log.warning("skipping cue at line %d: non-positive duration", block_start)
            skipped += 1
            continue
        cues.append((TimeInterval(start, end), cue_text))
    cues.sort(key=lambda c: (c[0].start_ms, c[0].end_ms))
    if skipped:
        log.warning("skipped %d malformed cue(s)", skipped)

    utterances = []
    for idx, (interval, cue_text) in enumerate(cues):
        speaker = None
        if speaker_prefix:
            m = _SPEAKER_RE.match(cue_text)
            if m:
                speaker, cue_text = m.group(1), m.group(2)
        utterances.append(Utterance(index=idx, interval=interval, text=cue_text, speaker=speaker))
    return utterances


class LineKind(str, enum.Enum):
    DIALOGUE = "Dialogue"
    CAPTION = "Caption"
    HEADING = "Heading"
    ACTION = "Action"


class Provenance(str, enum.Enum):
    GOLD = "Gold"
    BUILT = "Built"


@dataclass(frozen=True)
class ScreenplayLine:
    kind: LineKind
    text: str
    time_ms: int | None = None
    end_ms: int | None = None
    speaker: str | None = None
    source_clip_id: int | None = None
    low_confidence: bool = False


@dataclass(frozen=True)
class Screenplay:
    lines: tuple[ScreenplayLine, ...]
    provenance: Provenance
    movie_id: str = ""
    synthetic_timestamps: bool = False

    def __post_init__(self) -> None:
        if self.provenance is Provenance.BUILT:
            stamped = [ln.time_ms for ln in self.lines if ln.time_ms is not None]
            if any(b < a for a, b in zip(stamped, stamped[1:])):
                raise InvalidArgumentError("built screenplay timestamps must be non-decreasing")
            for ln in self.lines:
                if ln.kind is LineKind.CAPTION and (ln.time_ms is None or ln.source_clip_id is None):
                    raise InvalidArgumentError(
                        "caption lines in built screenplays need time_ms and source_clip_id"
                    )

    def caption_lines(self) -> list[ScreenplayLine]:
        return [ln for ln in self.lines if ln.kind is LineKind.CAPTION]

    def dialogue_lines(self) -> list[ScreenplayLine]:
        return [ln for ln in self.lines if ln.kind is LineKind.DIALOGUE]


def _render_line(ln: ScreenplayLine) -> str:
    if ln.kind is LineKind.CAPTION:
        body = f"{CAPTION_MARKER} {ln.text}"
    elif ln.kind is LineKind.DIALOGUE and ln.speaker:
        body = f"{ln.speaker}: {ln.text}"
    else:
        body = ln.text
    if ln.time_ms is None:
        return body
    return f"[{ms_to_timecode(ln.time_ms)}] {body}"


def serialize_screenplay(s: Screenplay) -> str:
    """Render a screenplay as plain text, one line per screenplay line.

    Timestamped lines are prefixed with ``[HH:MM:SS.mmm]``; caption lines
    carry the ``Caption:`` marker. Built screenplays round-trip through
    :func:`parse_screenplay`.
    """
    return "\n".join(_render_line(ln) for ln in s.lines)


def _parse_built_line(raw: str, lineno: int) -> ScreenplayLine:
    m = _BRACKET_TIME_RE.match(raw)
    if not m:
        if raw.startswith(CAPTION_MARKER):
            raise ParseError("caption line without timestamp in built screenplay", line=lineno)
        sp = _SPEAKER_RE.match(raw)
        if sp:
            return ScreenplayLine(kind=LineKind.DIALOGUE, text=sp.group(2), speaker=sp.group(1))
        return ScreenplayLine(kind=LineKind.DIALOGUE, text=raw)
    time_ms = _timecode_to_ms(*m.groups()[:4])
    body = m.group(5)
    if body.startswith(CAPTION_MARKER):
        text = body[len(CAPTION_MARKER):].lstrip()
        # clip ids equal clip start times, so the timestamp recovers the id
        return ScreenplayLine(
            kind=LineKind.CAPTION, text=text, time_ms=time_ms, source_clip_id=time_ms
        )
    sp = _SPEAKER_RE.match(body)
    if sp:
        return ScreenplayLine(
            kind=LineKind.DIALOGUE, text=sp.group(2), time_ms=time_ms, speaker=sp.group(1)
        )
    return ScreenplayLine(kind=LineKind.DIALOGUE, text=body, time_ms=time_ms)


def _parse_jsonl_line(raw: str, lineno: int) -> ScreenplayLine:
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON object: {exc}", line=lineno) from None
    try:
        kind = LineKind(obj["kind"])
    except (KeyError, ValueError):
        raise ParseError(f"unknown or missing line kind in {raw!r}", line=lineno) from None
    if "text" not in obj:
        raise ParseError("screenplay line object without text", line=lineno)
    return ScreenplayLine(
        kind=kind,
        text=str(obj["text"]),
        time_ms=obj.get("start_ms"),
        end_ms=obj.get("end_ms"),
        speaker=obj.get("speaker"),
        source_clip_id=obj.get("source_clip_id"),
        low_confidence=bool(obj.get("low_confidence", False)),
    )


_HEADING_RE = re.compile(r"^(INT\.|EXT\.|INT/EXT)")


def _parse_gold_raw(text: str) -> list[ScreenplayLine]:
    """Best-effort import of raw screenplay text.

    An ALL-CAPS cue line introduces a speaker; the indented block that
    follows becomes one Dialogue line. Everything else is treated as
    Action. All lines are flagged low confidence since the raw markup
    carries no explicit kinds.
    """
    out: list[ScreenplayLine] = []
    speaker: str | None = None
    dialogue_block: list[str] = []

    def flush_dialogue() -> None:
        nonlocal speaker
        if dialogue_block:
            out.append(
                ScreenplayLine(
                    kind=LineKind.DIALOGUE,
                    text=" ".join(dialogue_block),
                    speaker=speaker,
                    low_confidence=True,
                )
            )
            dialogue_block.clear()
        speaker = None

    for raw in text.splitlines():
        stripped = raw.strip()
        if not stripped:
            flush_dialogue()
            continue
        indented = raw[:1] in (" ", "\t")
        if speaker is not None and indented:
            dialogue_block.append(stripped)
            continue
        flush_dialogue()
        if _HEADING_RE.match(stripped):
            out.append(ScreenplayLine(kind=LineKind.HEADING, text=stripped, low_confidence=True))
        elif stripped == stripped.upper() and any(c.isalpha() for c in stripped) and len(stripped) <= 40:
            speaker = stripped
        else:
            out.append(ScreenplayLine(kind=LineKind.ACTION, text=stripped, low_confidence=True))
    flush_dialogue()
    return out


def parse_screenplay(text: str, provenance: Provenance, movie_id: str = "") -> Screenplay:
    """Parse screenplay text into a typed line list.

    Built documents must use the :func:`serialize_screenplay` format. Gold
    documents are preferred as JSONL with explicit line kinds; raw text
    falls back to the heuristic importer and the resulting lines carry a
    low-confidence flag.
    """
    raw_lines = [ln for ln in text.splitlines()]
    nonempty = [(i + 1, ln.strip()) for i, ln in enumerate(raw_lines) if ln.strip()]
    if provenance is Provenance.BUILT:
        lines = tuple(_parse_built_line(body, lineno) for lineno, body in nonempty)
        return Screenplay(lines=lines, provenance=provenance, movie_id=movie_id)
    if nonempty and nonempty[0][1].startswith("{"):
        lines = tuple(_parse_jsonl_line(body, lineno) for lineno, body in nonempty)
        return Screenplay(lines=lines, provenance=provenance, movie_id=movie_id)
    return Screenplay(lines=tuple(_parse_gold_raw(text)), provenance=provenance, movie_id=movie_id)


def screenplay_to_jsonl(s: Screenplay) -> str:
    """Serialize as the normalized one-object-per-line gold format."""
    rows = []
    for ln in s.lines:
        obj: dict = {"kind": ln.kind.value, "text": ln.text}
        if ln.time_ms is not None:
            obj["start_ms"] = ln.time_ms
        if ln.end_ms is not None:
            obj["end_ms"] = ln.end_ms
        if ln.speaker is not None:
            obj["speaker"] = ln.speaker
        if ln.source_clip_id is not None:
            obj["source_clip_id"] = ln.source_clip_id
        if ln.low_confidence:
            obj["low_confidence"] = True
        rows.append(json.dumps(obj, ensure_ascii=False, sort_keys=True))
    return "\n".join(rows)


@dataclass(frozen=True)
class QuoteMatch:
    line_index: int
    score: float
    matched_kind: LineKind


_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _tokens(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def _token_f1(quote_counts: Counter, quote_len: int, line_tokens: list[str]) -> float:
    if quote_len == 0 or not line_tokens:
        return 0.0
    overlap = sum((quote_counts & Counter(line_tokens)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / quote_len
    recall = overlap / len(line_tokens)
    return 2 * precision * recall / (precision + recall)


def match_quote(quote: str, s: Screenplay, threshold: float = 0.6) -> QuoteMatch | None:
    """Find the screenplay line best matching a quoted string.

    Scoring is token-level F1 after lowercasing and stripping punctuation.
    Returns ``None`` when the best score is below ``threshold``; ties break
    toward the earliest line.
    """
    if not quote or not quote.strip():
        raise InvalidArgumentError("quote must be non-empty")
    quote_tokens = _tokens(quote)
    quote_counts = Counter(quote_tokens)
    best: QuoteMatch | None = None
    for idx, ln in enumerate(s.lines):
        score = _token_f1(quote_counts, len(quote_tokens), _tokens(ln.text))
        if best is None or score > best.score:
            best = QuoteMatch(line_index=idx, score=score, matched_kind=ln.kind)
    if best is None or best.score < threshold:
        return None
    return best


def with_dialogue_interval(s: Screenplay, line_index: int, start_ms: int, end_ms: int) -> Screenplay:
    """Return a copy with one dialogue line's interval replaced."""
    ln = s.lines[line_index]
    if ln.kind is not LineKind.DIALOGUE:
        raise InvalidArgumentError(f"line {line_index} is {ln.kind.value}, not Dialogue")
    new_lines = list(s.lines)
    new_lines[line_index] = replace(ln, time_ms=start_ms, end_ms=end_ms)
    return replace(s, lines=tuple(new_lines))
