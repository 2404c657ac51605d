"""Stage-based pipeline driver with content-addressed, resumable runs.

Every stage reads its inputs from files, writes its artifacts under
``runs/<movie_id>/<stage>/`` and records an input fingerprint in the run
manifest. A stage reruns only when that fingerprint changes or the caller
forces it, so swapping one backend or parameter replays just the affected
suffix of the pipeline. Under mock backends the artifact tree is a pure
function of config and inputs; wall-clock timings go to a separate log so
the tree stays byte-reproducible.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import yaml

from . import captioning, evaluation, reference, selection, summarization
from .captioning import load_captions_jsonl
from .errors import ConfigError, DependencyError, InvalidArgumentError
from .gateway import BackendConfig, MOCK_SCHEME, ModelGateway, Usage
from .reference import load_reference_clips
from .screenplay import Provenance, parse_screenplay, parse_srt, serialize_screenplay
from .selection import SelectionMethod, Shots
from .summarization import SummarySource
from .timeline import (
    Clip,
    ClipOrigin,
    TimeInterval,
    parse_scene_file,
    plan_fixed_clips,
    subdivide_scenes,
)

log = logging.getLogger(__name__)

STAGES = (
    "plan",
    "caption",
    "select",
    "build",
    "summarize",
    "derive-reference",
    "evaluate",
    "report",
)

BACKEND_ROLES = ("captioner", "recaptioner", "selector", "summarizer", "judge")

MANIFEST_NAME = "manifest.json"
TIMINGS_NAME = "timings.log"


@dataclass(frozen=True)
class RunConfig:
    movie_id: str
    media_duration_ms: int
    transcript_path: str
    media_ref: str = ""
    media_dir: str = ""
    gold_screenplay_path: str | None = None
    groundtruth_summary_path: str | None = None
    alignment_path: str | None = None
    scene_file: str | None = None
    k: int = 25
    shots: Shots = Shots.ZERO_SHOT
    tau: float = evaluation.DEFAULT_TAU
    tau_sweep: tuple[float, ...] = ()
    seed: int = 0
    clip_len_ms: int = 20_000
    selection_method: str = "llm"
    recaption: bool = True
    summary_source: str = "built"
    speaker_prefix: bool = False
    include_edge_silence: bool = True
    quote_match_threshold: float = reference.QUOTE_MATCH_THRESHOLD
    summary_word_limit: int = summarization.SUMMARY_WORD_LIMIT
    claimed_fractions: dict = field(default_factory=dict)
    cache_dir: str | None = None
    backends: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.movie_id:
            raise ConfigError("movie_id must be set")
        if self.media_duration_ms <= 0:
            raise ConfigError("media_duration_ms must be positive")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if not 0 < self.tau <= 1:
            raise ConfigError(f"tau must be in (0, 1], got {self.tau}")
        if self.selection_method not in ("llm", "random", "silent"):
            raise ConfigError(f"unknown selection_method {self.selection_method!r}")
        if self.summary_source not in ("built", "transcript", "gold"):
            raise ConfigError(f"unknown summary_source {self.summary_source!r}")

    def effective_tau_sweep(self) -> tuple[float, ...]:
        return self.tau_sweep or (self.tau,)


def _resolve_path(base: Path, value: str | None) -> str | None:
    if value is None:
        return None
    path = Path(value)
    return str(path if path.is_absolute() else (base / path).resolve())


def _backend_from_dict(obj: dict, base: Path) -> BackendConfig:
    obj = dict(obj)
    url = obj.get("base_url", "")
    if url.startswith(MOCK_SCHEME):
        script = url[len(MOCK_SCHEME):]
        obj["base_url"] = MOCK_SCHEME + str(_resolve_path(base, script))
    try:
        return BackendConfig(**obj)
    except TypeError as exc:
        raise ConfigError(f"bad backend entry: {exc}") from None


def load_run_config(path: str | Path) -> RunConfig:
    """Load a YAML or JSON run config, resolving relative paths against it."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    raw = path.read_text(encoding="utf-8")
    obj = yaml.safe_load(raw) if path.suffix in (".yaml", ".yml") else json.loads(raw)
    if not isinstance(obj, dict):
        raise ConfigError(f"config root must be a mapping: {path}")
    base = path.parent.resolve()
    for key in ("transcript_path", "gold_screenplay_path", "groundtruth_summary_path",
                "alignment_path", "scene_file", "media_dir", "cache_dir"):
        if key in obj:
            obj[key] = _resolve_path(base, obj[key])
    if "shots" in obj:
        obj["shots"] = Shots(obj["shots"])
    if "tau_sweep" in obj:
        obj["tau_sweep"] = tuple(obj["tau_sweep"])
    if "claimed_fractions" in obj:
        obj["claimed_fractions"] = {int(k): float(v) for k, v in obj["claimed_fractions"].items()}
    backends = {
        role: _backend_from_dict(entry, base)
        for role, entry in (obj.get("backends") or {}).items()
    }
    obj["backends"] = backends
    try:
        return RunConfig(**obj)
    except TypeError as exc:
        raise ConfigError(f"bad config field: {exc}") from None


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _file_digest(path: str | Path) -> str:
    return _sha256(Path(path).read_bytes())


def _fingerprint(parts: dict) -> str:
    return _sha256(json.dumps(parts, sort_keys=True, ensure_ascii=True).encode("utf-8"))


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _write_json(path: Path, obj: object) -> None:
    _write_text(path, json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=2) + "\n")


def _clips_to_json(clips: Sequence[Clip]) -> dict:
    return {
        "clips": [
            {
                "id": c.id,
                "start_ms": c.interval.start_ms,
                "end_ms": c.interval.end_ms,
                "origin": c.origin.value,
            }
            for c in clips
        ]
    }


def _clips_from_json(obj: dict) -> list[Clip]:
    return [
        Clip(
            id=c["id"],
            interval=TimeInterval(c["start_ms"], c["end_ms"]),
            origin=ClipOrigin(c["origin"]),
        )
        for c in obj["clips"]
    ]


class Run:
    """One movie's pipeline run rooted at ``runs_root/movie_id``."""

    def __init__(self, config: RunConfig, runs_root: str | Path = "runs", force: bool = False):
        self.config = config
        self.run_dir = Path(runs_root) / config.movie_id
        self.force = force
        self.manifest: dict = self._load_manifest()
        self._gateways: dict[str, ModelGateway] = {}

    # -- manifest ----------------------------------------------------------

    def _load_manifest(self) -> dict:
        path = self.run_dir / MANIFEST_NAME
        if path.exists():
            return json.loads(path.read_text(encoding="utf-8"))
        return {"movie_id": self.config.movie_id, "stages": {}}

    def _save_manifest(self) -> None:
        path = self.run_dir / MANIFEST_NAME
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(
            json.dumps(self.manifest, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )
        tmp.replace(path)

    def _log_timing(self, stage: str, wall_s: float, status: str) -> None:
        path = self.run_dir / TIMINGS_NAME
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("a", encoding="utf-8") as fh:
            fh.write(f"stage={stage} status={status} wall_time_s={wall_s:.3f}\n")

    # -- helpers -----------------------------------------------------------

    def stage_dir(self, stage: str) -> Path:
        return self.run_dir / stage

    def artifact(self, stage: str, name: str) -> Path:
        return self.stage_dir(stage) / name

    def _require(self, stage: str, name: str) -> Path:
        path = self.artifact(stage, name)
        if not path.exists():
            raise DependencyError(
                f"missing artifact {name!r}; run the {stage!r} stage first",
                producing_stage=stage,
            )
        return path

    def _require_config_path(self, value: str | None, what: str) -> str:
        if not value:
            raise ConfigError(f"config is missing {what}")
        if not Path(value).exists():
            raise ConfigError(f"{what} does not exist: {value}")
        return value

    def _gateway(self, role: str) -> ModelGateway:
        if role not in self._gateways:
            backend = self.config.backends.get(role)
            if backend is None:
                raise ConfigError(f"no backend configured for role {role!r}")
            self._gateways[role] = ModelGateway(backend, cache_dir=self.config.cache_dir)
        return self._gateways[role]

    @staticmethod
    def _usage_since(gateway: ModelGateway, before: Usage) -> Usage:
        after = gateway.usage_snapshot()
        return Usage(
            after.input_tokens - before.input_tokens,
            after.output_tokens - before.output_tokens,
        )

    def _backend_name(self, role: str) -> str:
        backend = self.config.backends.get(role)
        return backend.model_name if backend else ""

    def _selection_method(self) -> SelectionMethod:
        if self.config.selection_method == "random":
            return SelectionMethod.RANDOM
        if self.config.selection_method == "silent":
            return SelectionMethod.SILENT
        if self.config.shots is Shots.TWO_SHOT:
            return SelectionMethod.LLM_TWO_SHOT
        return SelectionMethod.LLM_ZERO_SHOT

    def _selection_file(self) -> str:
        return f"selection.{self._selection_method().value}.json"

    def _summary_tag(self) -> str:
        return {
            "built": SummarySource.BUILT_SCREENPLAY.value,
            "transcript": SummarySource.TRANSCRIPT_ONLY.value,
            "gold": SummarySource.GOLD_SCREENPLAY.value,
        }[self.config.summary_source]

    def _transcript_utterances(self):
        path = self._require_config_path(self.config.transcript_path, "transcript_path")
        return parse_srt(Path(path).read_text(encoding="utf-8"), self.config.speaker_prefix)

    # -- stage engine ------------------------------------------------------

    def execute(self, stages: Sequence[str]) -> dict:
        unknown = [s for s in stages if s not in STAGES]
        if unknown:
            raise ConfigError(f"unknown stage(s): {', '.join(unknown)}")
        ordered = [s for s in STAGES if s in stages]
        for stage in ordered:
            self._run_stage(stage)
        return self.manifest

    def _run_stage(self, stage: str) -> None:
        impl: Callable[[], tuple[list[str], list[str], Usage]] = {
            "plan": self._stage_plan,
            "caption": self._stage_caption,
            "select": self._stage_select,
            "build": self._stage_build,
            "summarize": self._stage_summarize,
            "derive-reference": self._stage_derive_reference,
            "evaluate": self._stage_evaluate,
            "report": self._stage_report,
        }[stage]
        fingerprint = self._stage_fingerprint(stage)
        entry = self.manifest["stages"].get(stage)
        if (
            not self.force
            and entry is not None
            and entry.get("input_hash") == fingerprint
            and all((self.run_dir / rel).exists() for rel in entry.get("outputs", []))
        ):
            log.info("stage %s: cached", stage)
            self._log_timing(stage, 0.0, "cached")
            entry["status"] = "cached"
            self._save_manifest()
            return
        started = time.monotonic()
        outputs, backend_ids, usage = impl()
        wall = time.monotonic() - started
        self.manifest["stages"][stage] = {
            "input_hash": fingerprint,
            "outputs": sorted(outputs),
            "backend_ids": backend_ids,
            "token_usage": {
                "input_tokens": usage.input_tokens,
                "output_tokens": usage.output_tokens,
            },
            "status": "ran",
        }
        self._save_manifest()
        self._log_timing(stage, wall, "ran")
        log.info("stage %s: ran in %.2fs", stage, wall)

    def _stage_fingerprint(self, stage: str) -> str:
        cfg = self.config
        parts: dict = {"stage": stage}
        if stage == "plan":
            parts.update(duration=cfg.media_duration_ms, clip_len=cfg.clip_len_ms)
            if cfg.scene_file:
                parts["scenes"] = _file_digest(cfg.scene_file)
        elif stage == "caption":
            parts.update(
                plan=self._artifact_digest("plan", "clips.json"),
                backend=self._backend_name("captioner"),
            )
        elif stage == "select":
            parts.update(
                method=cfg.selection_method,
                k=cfg.k,
                shots=cfg.shots.value,
                seed=cfg.seed,
                movie=cfg.movie_id,
            )
            if cfg.selection_method == "llm":
                parts.update(
                    captions=self._artifact_digest("caption", "captions.lightweight.jsonl"),
                    backend=self._backend_name("selector"),
                )
            elif cfg.selection_method == "random":
                parts["plan"] = self._artifact_digest("plan", "clips.json")
            else:
                parts.update(
                    transcript=self._input_digest(cfg.transcript_path),
                    duration=cfg.media_duration_ms,
                    edges=cfg.include_edge_silence,
                )
        elif stage == "build":
            parts.update(
                selection=self._artifact_digest("select", "selected_clips.json"),
                transcript=self._input_digest(cfg.transcript_path),
                recaption=cfg.recaption,
                speaker_prefix=cfg.speaker_prefix,
                backend=self._backend_name("recaptioner") if cfg.recaption else "",
                captions=self._artifact_digest("caption", "captions.lightweight.jsonl")
                if not cfg.recaption
                else "",
            )
        elif stage == "summarize":
            parts.update(
                source=cfg.summary_source,
                word_limit=cfg.summary_word_limit,
                backend=self._backend_name("summarizer"),
            )
            if cfg.summary_source == "built":
                parts["document"] = self._artifact_digest("build", "screenplay.built.txt")
            elif cfg.summary_source == "transcript":
                parts["document"] = self._input_digest(cfg.transcript_path)
            else:
                parts["document"] = self._input_digest(cfg.gold_screenplay_path)
        elif stage == "derive-reference":
            parts.update(
                gold=self._input_digest(cfg.gold_screenplay_path),
                summary=self._input_digest(cfg.groundtruth_summary_path),
                alignment=self._input_digest(cfg.alignment_path),
                duration=cfg.media_duration_ms,
                threshold=cfg.quote_match_threshold,
                backend=self._backend_name("judge"),
            )
        elif stage == "evaluate":
            parts.update(
                refs=self._artifact_digest("derive-reference", "reference_clips.json"),
                selection=self._artifact_digest("select", "selected_clips.json"),
                summary=self._artifact_digest("summarize", f"summary.{self._summary_tag()}.txt"),
                facts=self._artifact_digest("derive-reference", "facts.jsonl"),
                gt=self._input_digest(cfg.groundtruth_summary_path),
                tau=cfg.tau,
                sweep=list(cfg.effective_tau_sweep()),
                backend=self._backend_name("judge"),
            )
        elif stage == "report":
            parts.update(
                eval=self._artifact_digest("evaluate", "eval_report.json"),
                recalls=self._artifact_digest("evaluate", "recalls.json"),
                claims={str(k): v for k, v in sorted(cfg.claimed_fractions.items())},
                plan=self._artifact_digest("plan", "clips.json"),
            )
        return _fingerprint(parts)

    def _artifact_digest(self, stage: str, name: str) -> str:
        path = self.artifact(stage, name)
        return _file_digest(path) if path.exists() else ""

    def _input_digest(self, path: str | None) -> str:
        return _file_digest(path) if path and Path(path).exists() else ""

    # -- stages ------------------------------------------------------------

    def _stage_plan(self) -> tuple[list[str], list[str], Usage]:
        cfg = self.config
        if cfg.scene_file:
            scenes = parse_scene_file(self._require_config_path(cfg.scene_file, "scene_file"))
            if scenes.duration_ms != cfg.media_duration_ms:
                raise ConfigError(
                    f"scene file covers {scenes.duration_ms} ms, config says {cfg.media_duration_ms} ms"
                )
            clips = subdivide_scenes(scenes, cfg.clip_len_ms)
        else:
            clips = plan_fixed_clips(cfg.media_duration_ms, cfg.clip_len_ms)
        _write_json(self.artifact("plan", "clips.json"), _clips_to_json(clips))
        manifest = captioning.emit_cut_manifest(clips, cfg.media_ref, cfg.movie_id)
        captioning.write_cut_manifest(
            manifest,
            self.artifact("plan", "cut_manifest.tsv"),
            self.artifact("plan", "cut_commands.txt"),
        )
        return ["plan/clips.json", "plan/cut_manifest.tsv", "plan/cut_commands.txt"], [], Usage(0, 0)

    def _load_plan(self) -> list[Clip]:
        path = self._require("plan", "clips.json")
        return _clips_from_json(json.loads(path.read_text(encoding="utf-8")))

    def _stage_caption(self) -> tuple[list[str], list[str], Usage]:
        clips = self._load_plan()
        gateway = self._gateway("captioner")
        before = gateway.usage_snapshot()
        out = self.artifact("caption", "captions.lightweight.jsonl")
        out.parent.mkdir(parents=True, exist_ok=True)
        if out.exists():
            out.unlink()
        captions = captioning.caption_clips(
            clips, self.config.media_dir, gateway, self.config.movie_id, out_path=out
        )
        if len(captions) < len(clips):
            log.warning("captioned %d of %d clips", len(captions), len(clips))
        return (
            ["caption/captions.lightweight.jsonl"],
            [gateway.backend_id],
            self._usage_since(gateway, before),
        )

    def _stage_select(self) -> tuple[list[str], list[str], Usage]:
        cfg = self.config
        method = self._selection_method()
        backend_ids: list[str] = []
        usage = Usage(0, 0)
        if method in (SelectionMethod.LLM_ZERO_SHOT, SelectionMethod.LLM_TWO_SHOT):
            captions = load_captions_jsonl(self._require("caption", "captions.lightweight.jsonl"))
            gateway = self._gateway("selector")
            backend_ids.append(gateway.backend_id)
            before = gateway.usage_snapshot()
            sel_cfg = selection.SelectionConfig(
                k=cfg.k, shots=cfg.shots, movie_name=cfg.movie_id, seed=cfg.seed
            )
            result = selection.select_clips_llm(sel_cfg, captions, gateway)
            usage = self._usage_since(gateway, before)
            pool = self._load_plan()
        elif method is SelectionMethod.RANDOM:
            pool = self._load_plan()
            result = selection.select_random(pool, cfg.k, cfg.seed)
        else:
            utterances = self._transcript_utterances()
            pool = selection.silent_gap_clips(
                utterances, cfg.media_duration_ms, cfg.include_edge_silence
            )
            result = selection.select_silent(
                utterances, cfg.media_duration_ms, cfg.k, cfg.include_edge_silence
            )
        selected = selection.resolve_selection(result, pool)
        sel_file = self._selection_file()
        _write_text(self.artifact("select", sel_file), selection.selection_to_json(result))
        _write_json(self.artifact("select", "selected_clips.json"), _clips_to_json(selected))
        outputs = [f"select/{sel_file}", "select/selected_clips.json"]
        extra = [c for c in selected if c.origin is not ClipOrigin.FIXED_GRID]
        if extra:
            manifest = captioning.emit_cut_manifest(extra, cfg.media_ref, cfg.movie_id)
            captioning.write_cut_manifest(manifest, self.artifact("select", "cut_manifest.extra.tsv"))
            outputs.append("select/cut_manifest.extra.tsv")
        return outputs, backend_ids, usage

    def _load_selected_clips(self) -> list[Clip]:
        path = self._require("select", "selected_clips.json")
        return _clips_from_json(json.loads(path.read_text(encoding="utf-8")))

    def _stage_build(self) -> tuple[list[str], list[str], Usage]:
        cfg = self.config
        utterances = self._transcript_utterances()
        selected = self._load_selected_clips()
        outputs = ["build/screenplay.built.txt"]
        backend_ids: list[str] = []
        usage = Usage(0, 0)
        if cfg.recaption:
            gateway = self._gateway("recaptioner")
            backend_ids.append(gateway.backend_id)
            before = gateway.usage_snapshot()
            out = self.artifact("build", "captions.recaption.jsonl")
            out.parent.mkdir(parents=True, exist_ok=True)
            if out.exists():
                out.unlink()
            captions = captioning.recaption_clips(
                selected, cfg.media_dir, gateway, cfg.movie_id, out_path=out
            )
            usage = self._usage_since(gateway, before)
            outputs.append("build/captions.recaption.jsonl")
            have = {c.clip_id for c in captions}
            missing = [c for c in selected if c.id not in have]
            if missing:
                # recaption failures fall back to the clip's lightweight caption
                lightweight = {
                    c.clip_id: c
                    for c in load_captions_jsonl(
                        self._require("caption", "captions.lightweight.jsonl")
                    )
                }
                for clip in missing:
                    if clip.id not in lightweight:
                        raise InvalidArgumentError(
                            f"clip {clip.id} has neither a recaption nor a lightweight caption"
                        )
                    captions.append(lightweight[clip.id])
        else:
            lightweight = {
                c.clip_id: c
                for c in load_captions_jsonl(self._require("caption", "captions.lightweight.jsonl"))
            }
            captions = []
            for clip in selected:
                if clip.id not in lightweight:
                    raise InvalidArgumentError(
                        f"selected clip {clip.id} has no lightweight caption"
                    )
                captions.append(lightweight[clip.id])
        captions.sort(key=lambda c: c.clip_id)
        screenplay = summarization.build_screenplay(utterances, captions, selected, cfg.movie_id)
        _write_text(
            self.artifact("build", "screenplay.built.txt"),
            serialize_screenplay(screenplay) + "\n",
        )
        return outputs, backend_ids, usage

    def _stage_summarize(self) -> tuple[list[str], list[str], Usage]:
        cfg = self.config
        gateway = self._gateway("summarizer")
        before = gateway.usage_snapshot()
        if cfg.summary_source == "built":
            text = self._require("build", "screenplay.built.txt").read_text(encoding="utf-8")
            doc: object = parse_screenplay(text, Provenance.BUILT, cfg.movie_id)
        elif cfg.summary_source == "transcript":
            utterances = self._transcript_utterances()
            doc = serialize_screenplay(summarization.build_screenplay(utterances, [], [], cfg.movie_id))
        else:
            path = self._require_config_path(cfg.gold_screenplay_path, "gold_screenplay_path")
            doc = parse_screenplay(
                Path(path).read_text(encoding="utf-8"), Provenance.GOLD, cfg.movie_id
            )
        summary = summarization.summarize(doc, gateway, cfg.summary_word_limit)
        tag = self._summary_tag()
        _write_text(self.artifact("summarize", f"summary.{tag}.txt"), summary.text + "\n")
        _write_text(
            self.artifact("summarize", f"summary.{tag}.json"),
            summarization.summary_sidecar_json(summary),
        )
        return (
            [f"summarize/summary.{tag}.txt", f"summarize/summary.{tag}.json"],
            [gateway.backend_id],
            self._usage_since(gateway, before),
        )

    def _timed_gold_screenplay(self):
        cfg = self.config
        path = self._require_config_path(cfg.gold_screenplay_path, "gold_screenplay_path")
        gold = parse_screenplay(Path(path).read_text(encoding="utf-8"), Provenance.GOLD, cfg.movie_id)
        if cfg.alignment_path:
            alignment = reference.parse_alignment_file(
                self._require_config_path(cfg.alignment_path, "alignment_path")
            )
            gold = reference.apply_alignment(gold, alignment)
        timed = all(
            ln.time_ms is not None and ln.end_ms is not None for ln in gold.dialogue_lines()
        )
        if not timed:
            gold = reference.proportional_timestamps(gold, cfg.media_duration_ms)
        return gold

    def _stage_derive_reference(self) -> tuple[list[str], list[str], Usage]:
        cfg = self.config
        gt_path = self._require_config_path(cfg.groundtruth_summary_path, "groundtruth_summary_path")
        gt_summary = Path(gt_path).read_text(encoding="utf-8")
        gateway = self._gateway("judge")
        before = gateway.usage_snapshot()
        gold = self._timed_gold_screenplay()
        facts = reference.identify_facts(gt_summary, gateway)
        classified = reference.classify_facts(facts, gold, gateway, cfg.quote_match_threshold)
        visual = [f for f in classified if f.modality is reference.Modality.VISUAL]
        clips = reference.derive_reference_clips(visual, gold, cfg.media_duration_ms)
        self.stage_dir("derive-reference").mkdir(parents=True, exist_ok=True)
        reference.save_facts_jsonl(classified, self.artifact("derive-reference", "facts.jsonl"))
        _write_text(
            self.artifact("derive-reference", "reference_clips.json"),
            reference.reference_clips_to_json(clips, gold.synthetic_timestamps),
        )
        return (
            ["derive-reference/facts.jsonl", "derive-reference/reference_clips.json"],
            [gateway.backend_id],
            self._usage_since(gateway, before),
        )

    def _stage_evaluate(self) -> tuple[list[str], list[str], Usage]:
        cfg = self.config
        refs_path = self.artifact("derive-reference", "reference_clips.json")
        if not refs_path.exists():
            raise DependencyError(
                "evaluate needs reference clips; run the 'derive-reference' stage first",
                producing_stage="derive-reference",
            )
        refs, synthetic = load_reference_clips(refs_path)
        have_selection = self.artifact("select", "selected_clips.json").exists()
        summary_path = self.artifact("summarize", f"summary.{self._summary_tag()}.txt")
        have_summary = summary_path.exists()
        if not have_selection and not have_summary:
            raise DependencyError(
                "evaluate needs a selection or a summary; run 'select' or 'summarize' first",
                producing_stage="select",
            )
        backend_ids: list[str] = []
        notes: list[str] = []
        recalls: dict[tuple[int, float], float] = {}
        prf = None
        if have_selection and refs:
            selected = self._load_selected_clips()
            for tau in cfg.effective_tau_sweep():
                recalls[(cfg.k, tau)] = evaluation.recall_at_k(selected, refs, tau)
            if selected:
                prf = evaluation.clipset_prf(selected, refs, cfg.tau)
                notes.append(f"clip-set PRF computed at tau={cfg.tau}")

        vis = text_rec = mfs = None
        rouge1 = rouge2 = rougelsum = None
        err_rate = 0.0
        usage = Usage(0, 0)
        if have_summary:
            summary_text = summary_path.read_text(encoding="utf-8")
            gt_path = cfg.groundtruth_summary_path
            if gt_path and Path(gt_path).exists():
                gt_text = Path(gt_path).read_text(encoding="utf-8")
                scores = evaluation.rouge_scores(summary_text, gt_text)
                rouge1, rouge2, rougelsum = scores.rouge1, scores.rouge2, scores.rougeLsum
            facts_path = self.artifact("derive-reference", "facts.jsonl")
            if facts_path.exists():
                all_facts = reference.load_facts_jsonl(facts_path)
                facts = [
                    f
                    for f in all_facts
                    if f.modality in (reference.Modality.VISUAL, reference.Modality.TEXTUAL)
                ]
                n_unresolved = len(all_facts) - len(facts)
                if n_unresolved:
                    notes.append(
                        f"{n_unresolved} unresolved fact(s) excluded from fact recall"
                    )
                if facts:
                    gateway = self._gateway("judge")
                    backend_ids.append(gateway.backend_id)
                    before = gateway.usage_snapshot()
                    judged = evaluation.judge_fact_support(summary_text, facts, gateway)
                    usage = self._usage_since(gateway, before)
                    err_rate = evaluation.parse_error_rate(judged)
                    scores = evaluation.mfactsum(judged)
                    vis, text_rec, mfs = scores.vis_rec, scores.text_rec, scores.mfs
                    if scores.n_visual == 0:
                        notes.append("no visual facts: visual recall absent")
                    if scores.n_textual == 0:
                        notes.append("no textual facts: textual recall absent")

        report = evaluation.EvalReport(
            recall_at_k=recalls,
            vis_rec=vis,
            text_rec=text_rec,
            mfs=mfs,
            rouge1=rouge1,
            rouge2=rouge2,
            rougeLsum=rougelsum,
            prf=prf,
            synthetic_timestamps=synthetic,
            parse_error_rate=err_rate,
            notes=tuple(notes),
        )
        _write_text(self.artifact("evaluate", "eval_report.json"), report.to_json())
        _write_json(
            self.artifact("evaluate", "recalls.json"),
            {
                "method": self._selection_method().value,
                "rows": evaluation.recall_curve_rows(self._selection_method().value, recalls),
            },
        )
        return (
            ["evaluate/eval_report.json", "evaluate/recalls.json"],
            backend_ids,
            usage,
        )

    def _stage_report(self) -> tuple[list[str], list[str], Usage]:
        cfg = self.config
        recalls_path = self._require("evaluate", "recalls.json")
        recalls = json.loads(recalls_path.read_text(encoding="utf-8"))
        csv_path = self.artifact("report", "recall_curves.csv")
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        with csv_path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["method", "k", "tau", "recall"])
            writer.writeheader()
            for row in recalls["rows"]:
                writer.writerow(row)
        outputs = ["report/recall_curves.csv"]
        clips = self._load_plan()
        stats: dict = {
            "n_planned_clips": len(clips),
            "k": cfg.k,
            "selection_fraction_pct": evaluation.selection_fraction_pct(cfg.k, len(clips)),
        }
        refs_path = self.artifact("derive-reference", "reference_clips.json")
        if refs_path.exists():
            refs, _ = load_reference_clips(refs_path)
            ref_ms = sum(r.interval.duration_ms for r in refs)
            stats["n_reference_clips"] = len(refs)
            stats["reference_runtime_pct"] = 100.0 * ref_ms / cfg.media_duration_ms
        if cfg.claimed_fractions:
            consistency = evaluation.check_claimed_fractions(len(clips), cfg.claimed_fractions)
            stats["claimed_fractions"] = [
                {
                    "k": k,
                    "claimed_pct": claimed,
                    "actual_pct": evaluation.selection_fraction_pct(k, len(clips)),
                    "consistent": consistency[k],
                }
                for k, claimed in sorted(cfg.claimed_fractions.items())
            ]
        _write_json(self.artifact("report", "summary_stats.json"), stats)
        outputs.append("report/summary_stats.json")
        return outputs, [], Usage(0, 0)


def run(config: RunConfig, stages: Sequence[str], runs_root: str | Path = "runs",
        force: bool = False) -> dict:
    """Execute the requested stages in dependency order; returns the manifest."""
    return Run(config, runs_root=runs_root, force=force).execute(stages)


def run_corpus(config_paths: Sequence[str | Path], stages: Sequence[str],
               runs_root: str | Path = "runs", force: bool = False,
               jobs: int = 2) -> list[tuple[str, dict | Exception]]:
    """Run many movies with a bounded worker pool; failures are per-movie."""
    results: list[tuple[str, dict | Exception]] = []

    def one(path: str | Path) -> tuple[str, dict | Exception]:
        try:
            config = load_run_config(path)
            return config.movie_id, run(config, stages, runs_root=runs_root, force=force)
        except Exception as exc:  # reported per movie, the corpus keeps going
            return str(path), exc

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        for item in pool.map(one, config_paths):
            results.append(item)
    return results


def write_corpus_rollup(runs_root: str | Path, out_path: str | Path) -> int:
    """Aggregate per-movie eval reports into one CSV; returns the row count.

    Emits one row per movie, recall entry and metric bundle, plus macro
    and micro aggregate rows for the clip-set PRF since either aggregation
    convention may be wanted.
    """
    runs_root = Path(runs_root)
    rows: list[dict] = []
    prf_rows: list[dict] = []
    for report_path in sorted(runs_root.glob("*/evaluate/eval_report.json")):
        movie_id = report_path.parent.parent.name
        obj = json.loads(report_path.read_text(encoding="utf-8"))
        recalls_path = report_path.parent / "recalls.json"
        method = ""
        if recalls_path.exists():
            method = json.loads(recalls_path.read_text(encoding="utf-8")).get("method", "")
        base = {
            "movie_id": movie_id,
            "method": method,
            "vis_rec": obj.get("vis_rec"),
            "text_rec": obj.get("text_rec"),
            "mfs": obj.get("mfs"),
            "rouge1": obj.get("rouge1"),
            "rouge2": obj.get("rouge2"),
            "rougeLsum": obj.get("rougeLsum"),
            "synthetic_timestamps": obj.get("synthetic_timestamps"),
            "parse_error_rate": obj.get("parse_error_rate"),
        }
        prf = obj.get("prf")
        if prf:
            base.update(precision=prf["precision"], recall=prf["recall"], f1=prf["f1"])
            prf_rows.append(prf)
        entries = obj.get("recall_at_k") or [{}]
        for entry in entries:
            row = dict(base)
            row.update(k=entry.get("k"), tau=entry.get("tau"), recall_at_k=entry.get("recall"))
            rows.append(row)
    if prf_rows:
        mean_p = sum(r["precision"] for r in prf_rows) / len(prf_rows)
        mean_r = sum(r["recall"] for r in prf_rows) / len(prf_rows)
        # both aggregation conventions: the mean of per-movie F1 scores and
        # the harmonic mean of the averaged precision/recall
        rows.append({
            "movie_id": "ALL(mean-of-f1)",
            "precision": mean_p,
            "recall": mean_r,
            "f1": sum(r["f1"] for r in prf_rows) / len(prf_rows),
        })
        rows.append({
            "movie_id": "ALL(f1-of-means)",
            "precision": mean_p,
            "recall": mean_r,
            "f1": evaluation.harmonic_f1(mean_p, mean_r),
        })
    fieldnames = [
        "movie_id", "method", "k", "tau", "recall_at_k", "vis_rec", "text_rec", "mfs",
        "rouge1", "rouge2", "rougeLsum", "precision", "recall", "f1",
        "synthetic_timestamps", "parse_error_rate",
    ]
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    return len(rows)
