"""Clip captioning: cheap first-pass captions, high-quality recaptions,
and the cut-list manifests an external media tool uses to slice clips.

Caption records live in append-only JSONL files keyed by clip id; stages
communicate through those files so any stage can be rerun in isolation.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import InvalidArgumentError, ParseError
from .gateway import ChatFailure, ChatRequest, MediaAttachment, MockTransport, ModelGateway
from .prompts import LIGHTWEIGHT_CAPTION_PROMPT, RECAPTION_PROMPT
from .timeline import Clip

log = logging.getLogger(__name__)


class CaptionKind(str, enum.Enum):
    LIGHTWEIGHT = "Lightweight"
    RECAPTION = "Recaption"
    GOLD = "Gold"


@dataclass(frozen=True)
class Caption:
    clip_id: int
    text: str
    kind: CaptionKind
    model_tag: str = ""

    def __post_init__(self) -> None:
        if not self.text:
            raise InvalidArgumentError(f"caption for clip {self.clip_id} has empty text")


def clip_media_name(movie_id: str, clip_id: int) -> str:
    return f"{movie_id}_{clip_id}.mp4"


@dataclass(frozen=True)
class CutRow:
    clip_id: int
    start_ms: int
    end_ms: int
    output_name: str


@dataclass(frozen=True)
class CutManifest:
    media_ref: str
    rows: tuple[CutRow, ...]


def emit_cut_manifest(clips: Sequence[Clip], media_ref: str, movie_id: str) -> CutManifest:
    """One cut row per clip, named ``<movie_id>_<clip_id>.mp4``."""
    ids = [c.id for c in clips]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise InvalidArgumentError(f"duplicate clip ids in cut manifest: {dupes}")
    rows = tuple(
        CutRow(
            clip_id=c.id,
            start_ms=c.interval.start_ms,
            end_ms=c.interval.end_ms,
            output_name=clip_media_name(movie_id, c.id),
        )
        for c in sorted(clips, key=lambda c: c.interval.start_ms)
    )
    return CutManifest(media_ref=media_ref, rows=rows)


def write_cut_manifest(manifest: CutManifest, tsv_path: str | Path, commands_path: str | Path | None = None) -> None:
    """Persist the manifest as TSV plus a tool-agnostic command template file."""
    lines = [
        f"{r.clip_id}\t{r.start_ms}\t{r.end_ms}\t{r.output_name}" for r in manifest.rows
    ]
    Path(tsv_path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    if commands_path is not None:
        cmd_lines = ["# substitute {tool} with your media slicer and {outdir} with the clip directory"]
        for r in manifest.rows:
            cmd_lines.append(
                "{tool} --input %s --start-ms %d --end-ms %d --output {outdir}/%s"
                % (manifest.media_ref, r.start_ms, r.end_ms, r.output_name)
            )
        Path(commands_path).write_text("\n".join(cmd_lines) + "\n", encoding="utf-8")


def _caption_requests(clips: Sequence[Clip], media_dir: str | Path, movie_id: str,
                      prompt: str, model_tag: str) -> list[ChatRequest]:
    media_dir = Path(media_dir)
    return [
        ChatRequest(
            model_tag=model_tag,
            user=prompt,
            media=(MediaAttachment(ref=str(media_dir / clip_media_name(movie_id, c.id))),),
        )
        for c in clips
    ]


def _run_captioning(clips: Sequence[Clip], media_dir: str | Path, gateway: ModelGateway,
                    movie_id: str, prompt: str, model_tag: str, kind: CaptionKind,
                    check_media: bool | None = None) -> list[Caption]:
    if check_media is None:
        check_media = not isinstance(gateway.transport, MockTransport)
    requests_ = _caption_requests(clips, media_dir, movie_id, prompt, model_tag)
    runnable: list[int] = []
    for i, (clip, req) in enumerate(zip(clips, requests_)):
        if check_media and not Path(req.media[0].ref).exists():
            log.error("clip %d media missing: %s", clip.id, req.media[0].ref)
            continue
        runnable.append(i)
    outcomes = gateway.batch_complete([requests_[i] for i in runnable])
    captions: list[Caption] = []
    for i, outcome in zip(runnable, outcomes):
        clip = clips[i]
        if isinstance(outcome, ChatFailure):
            log.error("captioning clip %d failed: %s", clip.id, outcome.error)
            continue
        captions.append(
            Caption(clip_id=clip.id, text=outcome.text, kind=kind, model_tag=gateway.backend_id)
        )
    return captions


def caption_clips(clips: Sequence[Clip], media_dir: str | Path, gateway: ModelGateway,
                  movie_id: str, out_path: str | Path | None = None,
                  check_media: bool | None = None) -> list[Caption]:
    """Generate one lightweight caption per clip, in clip order.

    Clips whose media file is missing (or whose request fails) are logged
    and skipped; the batch keeps going. With ``out_path`` the captions are
    appended to the JSONL store.
    """
    captions = _run_captioning(
        clips, media_dir, gateway, movie_id,
        LIGHTWEIGHT_CAPTION_PROMPT, "captioner", CaptionKind.LIGHTWEIGHT, check_media,
    )
    if out_path is not None:
        append_captions_jsonl(captions, out_path)
    return captions


def recaption_clips(selected: Sequence[Clip], media_dir: str | Path, gateway: ModelGateway,
                    movie_id: str, out_path: str | Path | None = None,
                    check_media: bool | None = None) -> list[Caption]:
    """Generate one high-quality recaption per selected clip."""
    captions = _run_captioning(
        selected, media_dir, gateway, movie_id,
        RECAPTION_PROMPT, "recaptioner", CaptionKind.RECAPTION, check_media,
    )
    if out_path is not None:
        append_captions_jsonl(captions, out_path)
    return captions


def caption_to_json(c: Caption) -> str:
    return json.dumps(
        {"clip_id": c.clip_id, "kind": c.kind.value, "model_tag": c.model_tag, "text": c.text},
        ensure_ascii=False,
        sort_keys=True,
    )


def append_captions_jsonl(captions: Sequence[Caption], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as fh:
        for c in captions:
            fh.write(caption_to_json(c) + "\n")


def load_captions_jsonl(path: str | Path) -> list[Caption]:
    """Load a caption store; on duplicate clip ids the latest record wins."""
    by_id: dict[int, Caption] = {}
    order: list[int] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            cap = Caption(
                clip_id=int(obj["clip_id"]),
                text=obj["text"],
                kind=CaptionKind(obj["kind"]),
                model_tag=obj.get("model_tag", ""),
            )
        except (KeyError, ValueError) as exc:
            raise ParseError(f"bad caption record: {exc}", line=lineno) from None
        if cap.clip_id not in by_id:
            order.append(cap.clip_id)
        by_id[cap.clip_id] = cap
    return [by_id[i] for i in order]
