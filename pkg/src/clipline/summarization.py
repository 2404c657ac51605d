"""Screenplay assembly and fixed-length multimodal summary generation."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Sequence

from .captioning import Caption
from .errors import InvalidArgumentError
from .gateway import ChatRequest, ModelGateway
from .prompts import SUMMARY_TEMPLATE
from .screenplay import (
    LineKind,
    Provenance,
    Screenplay,
    ScreenplayLine,
    Utterance,
    serialize_screenplay,
)
from .timeline import Clip

SUMMARY_WORD_LIMIT = 1000


class SummarySource(str, enum.Enum):
    TRANSCRIPT_ONLY = "transcript_only"
    BUILT_SCREENPLAY = "built_screenplay"
    GOLD_SCREENPLAY = "gold_screenplay"


@dataclass(frozen=True)
class Summary:
    text: str
    word_count: int
    source: SummarySource
    truncated: bool
    backend_id: str = ""


def truncate_words(text: str, limit: int = SUMMARY_WORD_LIMIT) -> str:
    """Keep the first ``limit`` whitespace-delimited tokens.

    Inputs at or under the limit pass through unchanged, which makes the
    operation idempotent; longer inputs come back joined by single spaces.
    """
    if limit < 1:
        raise InvalidArgumentError(f"word limit must be >= 1, got {limit}")
    tokens = text.split()
    if len(tokens) <= limit:
        return text
    return " ".join(tokens[:limit])


def build_screenplay(utterances: Sequence[Utterance], captions: Sequence[Caption],
                     clips: Sequence[Clip], movie_id: str = "") -> Screenplay:
    """Interleave dialogue with the selected clips' captions by timestamp.

    Each caption is inserted after the last utterance starting before the
    clip's start and before every utterance starting at or after it, so a
    caption whose clip starts exactly with an utterance comes first.
    """
    by_id = {c.id: c for c in clips}
    seen: set[int] = set()
    events: list[tuple[int, int, int, ScreenplayLine]] = []
    for cap in captions:
        clip = by_id.get(cap.clip_id)
        if clip is None:
            raise InvalidArgumentError(f"caption references unknown clip {cap.clip_id}")
        if cap.clip_id in seen:
            raise InvalidArgumentError(f"clip {cap.clip_id} has more than one caption to insert")
        seen.add(cap.clip_id)
        line = ScreenplayLine(
            kind=LineKind.CAPTION,
            text=cap.text,
            time_ms=clip.interval.start_ms,
            source_clip_id=clip.id,
        )
        events.append((clip.interval.start_ms, 0, len(events), line))
    for u in utterances:
        line = ScreenplayLine(
            kind=LineKind.DIALOGUE,
            text=u.text,
            time_ms=u.interval.start_ms,
            speaker=u.speaker,
        )
        events.append((u.interval.start_ms, 1, len(events), line))
    events.sort(key=lambda e: e[:3])
    return Screenplay(
        lines=tuple(e[3] for e in events),
        provenance=Provenance.BUILT,
        movie_id=movie_id,
    )


def _source_for(doc: Screenplay | str) -> SummarySource:
    if isinstance(doc, str):
        return SummarySource.TRANSCRIPT_ONLY
    if doc.provenance is Provenance.GOLD:
        return SummarySource.GOLD_SCREENPLAY
    return SummarySource.BUILT_SCREENPLAY


def summarize(doc: Screenplay | str, gateway: ModelGateway,
              word_limit: int = SUMMARY_WORD_LIMIT) -> Summary:
    """Generate the multimodal summary for a screenplay or bare transcript.

    The model output is capped at ``word_limit`` whitespace tokens so all
    systems are compared at the same summary length.
    """
    document = doc if isinstance(doc, str) else serialize_screenplay(doc)
    if not document.strip():
        raise InvalidArgumentError("cannot summarize an empty document")
    prompt = SUMMARY_TEMPLATE.format(document=document)
    response = gateway.complete(ChatRequest(model_tag="summarizer", user=prompt))
    raw_tokens = len(response.text.split())
    text = truncate_words(response.text, word_limit)
    return Summary(
        text=text,
        word_count=len(text.split()),
        source=_source_for(doc),
        truncated=raw_tokens > word_limit,
        backend_id=response.backend_id,
    )


def summary_sidecar_json(summary: Summary) -> str:
    """Metadata persisted next to the summary text."""
    return json.dumps(
        {
            "word_count": summary.word_count,
            "source": summary.source.value,
            "truncated": summary.truncated,
            "backend_id": summary.backend_id,
        },
        ensure_ascii=False,
        sort_keys=True,
        indent=2,
    ) + "\n"
