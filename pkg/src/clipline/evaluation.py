"""Scoring: interval recall, judged fact support, ROUGE and set PRF.

Interval matching uses strict intersection-over-reference: a reference
counts as retrieved only when some prediction covers strictly more than
``tau`` of it. Text metrics use lowercase alphanumeric tokens and make no
claim of bit-parity with any particular external scorer.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .errors import InvalidArgumentError, ParseError
from .gateway import ChatRequest, ModelGateway
from .prompts import FACT_SUPPORT_TEMPLATE, render_fact_block
from .reference import Fact, Modality, ReferenceClip
from .timeline import Clip, TimeInterval, ior

DEFAULT_TAU = 0.3
DEFAULT_K_VALUES = (25, 50, 75)
DEFAULT_TAU_SWEEP = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


@dataclass(frozen=True)
class EvalConfig:
    tau: float = DEFAULT_TAU
    k_values: tuple[int, ...] = DEFAULT_K_VALUES
    tau_sweep: tuple[float, ...] = (DEFAULT_TAU,)

    def __post_init__(self) -> None:
        for t in (self.tau, *self.tau_sweep):
            if not 0 < t <= 1:
                raise InvalidArgumentError(f"tau must be in (0, 1], got {t}")


IntervalLike = TimeInterval | Clip | ReferenceClip


def _as_interval(x: IntervalLike) -> TimeInterval:
    if isinstance(x, TimeInterval):
        return x
    return x.interval


def recall_at_k(preds: Sequence[IntervalLike], refs: Sequence[IntervalLike], tau: float) -> float:
    """Fraction of references overlapped above ``tau`` by some prediction.

    One prediction may retrieve several references and each reference
    needs only one matching prediction. The comparison is strict, so an
    overlap of exactly ``tau`` does not count.
    """
    if not refs:
        raise InvalidArgumentError("reference set must be non-empty")
    ref_intervals = [_as_interval(r) for r in refs]
    pred_intervals = [_as_interval(p) for p in preds]
    retrieved = sum(
        1 for r in ref_intervals if any(ior(p, r) > tau for p in pred_intervals)
    )
    return retrieved / len(ref_intervals)


def cross_reference_recall(set_a: Sequence[ReferenceClip], set_b: Sequence[ReferenceClip],
                           tau: float) -> float:
    """How much of ``set_b`` the clips in ``set_a`` recover, ``set_a`` acting as predictions."""
    if not set_b:
        raise InvalidArgumentError("set_b must be non-empty")
    return recall_at_k(set_a, set_b, tau)


@dataclass(frozen=True)
class PrfScores:
    precision: float
    recall: float
    f1: float


def harmonic_f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def clipset_prf(preds: Sequence[IntervalLike], refs: Sequence[IntervalLike], tau: float) -> PrfScores:
    """Precision, recall and F1 between two clip sets under the IoR rule."""
    if not preds or not refs:
        raise InvalidArgumentError("both clip sets must be non-empty")
    ref_intervals = [_as_interval(r) for r in refs]
    pred_intervals = [_as_interval(p) for p in preds]
    recall = recall_at_k(pred_intervals, ref_intervals, tau)
    matched_preds = sum(
        1 for p in pred_intervals if any(ior(p, r) > tau for r in ref_intervals)
    )
    precision = matched_preds / len(pred_intervals)
    return PrfScores(precision=precision, recall=recall, f1=harmonic_f1(precision, recall))


@dataclass(frozen=True)
class JudgedFact:
    fact: Fact
    supported: bool
    justification: str = ""
    parse_error: bool = False


_JUDGE_BLOCK_RE = re.compile(
    r"^\s*Fact\s+(\d+)\s*:(.*?)(?=^\s*Fact\s+\d+\s*:|\Z)", re.DOTALL | re.MULTILINE
)
_VERDICT_RE = re.compile(r"^\s*2\s*[.)]\s*(yes|no)\b", re.IGNORECASE | re.MULTILINE)
_BARE_VERDICT_RE = re.compile(r"^\s*(yes|no)\s*[.!]?\s*$", re.IGNORECASE | re.MULTILINE)
_JUSTIFICATION_RE = re.compile(r"^\s*1\s*[.)]\s*(.*)$", re.MULTILINE)


def parse_judge_response(text: str, facts: Sequence[Fact]) -> list[JudgedFact]:
    """Map per-fact verdict blocks back onto the input facts.

    Blocks may arrive out of order; they are matched to facts by number.
    A fact whose block is missing or carries no recognizable yes/no
    verdict is scored unsupported and flagged as a parse error.
    """
    blocks: dict[int, str] = {}
    for m in _JUDGE_BLOCK_RE.finditer(text):
        blocks.setdefault(int(m.group(1)), m.group(2))
    if not blocks:
        raise ParseError("judge response contains no fact blocks", raw=text)
    judged = []
    for pos, fact in enumerate(facts, 1):
        body = blocks.get(pos)
        if body is None:
            judged.append(JudgedFact(fact=fact, supported=False, parse_error=True))
            continue
        verdict = _VERDICT_RE.search(body) or _BARE_VERDICT_RE.search(body)
        just = _JUSTIFICATION_RE.search(body)
        justification = just.group(1).strip() if just else ""
        if verdict is None:
            judged.append(
                JudgedFact(fact=fact, supported=False, justification=justification, parse_error=True)
            )
            continue
        judged.append(
            JudgedFact(
                fact=fact,
                supported=verdict.group(1).lower() == "yes",
                justification=justification,
            )
        )
    return judged


def judge_fact_support(summary_text: str, facts: Sequence[Fact],
                       gateway: ModelGateway) -> list[JudgedFact]:
    """Ask the judge model whether the summary supports each fact."""
    if not facts:
        return []
    if not summary_text.strip():
        raise InvalidArgumentError("summary text must be non-empty")
    prompt = FACT_SUPPORT_TEMPLATE.format(
        summary=summary_text, facts=render_fact_block(f.text for f in facts)
    )
    response = gateway.complete(ChatRequest(model_tag="judge", user=prompt))
    return parse_judge_response(response.text, facts)


def parse_error_rate(judged: Sequence[JudgedFact]) -> float:
    if not judged:
        return 0.0
    return sum(1 for j in judged if j.parse_error) / len(judged)


@dataclass(frozen=True)
class MFactScores:
    """Visual and textual fact recall in percent, plus their mean."""

    vis_rec: float | None
    text_rec: float | None
    mfs: float | None
    n_visual: int
    n_textual: int


def mfactsum(judged: Sequence[JudgedFact]) -> MFactScores:
    """Fact-recall summary score: the mean of visual and textual recall.

    Unresolved facts are excluded from both denominators. When one
    modality is absent its component and the mean are reported as absent
    rather than silently zero.
    """
    visual = [j for j in judged if j.fact.modality is Modality.VISUAL]
    textual = [j for j in judged if j.fact.modality is Modality.TEXTUAL]
    vis_rec = 100.0 * sum(j.supported for j in visual) / len(visual) if visual else None
    text_rec = 100.0 * sum(j.supported for j in textual) / len(textual) if textual else None
    mfs = (vis_rec + text_rec) / 2 if vis_rec is not None and text_rec is not None else None
    return MFactScores(
        vis_rec=vis_rec, text_rec=text_rec, mfs=mfs,
        n_visual=len(visual), n_textual=len(textual),
    )


def round_report(value: float | None, digits: int = 2) -> float | None:
    """Reporting rounding rule: round-half-even to two decimals."""
    return None if value is None else round(value, digits)


_WORD_RE = re.compile(r"[a-z0-9]+")


def _tokenize(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _overlap_f1(pred: Counter, ref: Counter) -> float:
    overlap = sum((pred & ref).values())
    total_pred = sum(pred.values())
    total_ref = sum(ref.values())
    if overlap == 0 or total_pred == 0 or total_ref == 0:
        return 0.0
    return harmonic_f1(overlap / total_pred, overlap / total_ref)


# Sentence boundary for the summary-level LCS score: newline or period.
_SENTENCE_SPLIT_RE = re.compile(r"[.\n]+")


def _sentences(text: str) -> list[list[str]]:
    sents = [_tokenize(s) for s in _SENTENCE_SPLIT_RE.split(text)]
    return [s for s in sents if s]


def _lcs_ref_indices(ref: list[str], cand: list[str]) -> set[int]:
    """Indices of reference tokens participating in an LCS with ``cand``."""
    m, n = len(ref), len(cand)
    table = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m - 1, -1, -1):
        row, nxt = table[i], table[i + 1]
        for j in range(n - 1, -1, -1):
            if ref[i] == cand[j]:
                row[j] = nxt[j + 1] + 1
            else:
                row[j] = max(nxt[j], row[j + 1])
    indices: set[int] = set()
    i = j = 0
    while i < m and j < n:
        if ref[i] == cand[j]:
            indices.add(i)
            i += 1
            j += 1
        elif table[i + 1][j] >= table[i][j + 1]:
            i += 1
        else:
            j += 1
    return indices


@dataclass(frozen=True)
class RougeScores:
    rouge1: float
    rouge2: float
    rougeLsum: float


def rouge_scores(pred: str, ref: str) -> RougeScores:
    """F1 unigram/bigram overlap plus summary-level union-LCS.

    The LCS component splits on newlines and periods and, per reference
    sentence, unions the reference-token matches across all prediction
    sentences.
    """
    if not pred.strip() or not ref.strip():
        raise InvalidArgumentError("both texts must be non-empty")
    pred_tokens = _tokenize(pred)
    ref_tokens = _tokenize(ref)
    rouge1 = _overlap_f1(_ngram_counts(pred_tokens, 1), _ngram_counts(ref_tokens, 1))
    rouge2 = _overlap_f1(_ngram_counts(pred_tokens, 2), _ngram_counts(ref_tokens, 2))

    pred_sents = _sentences(pred)
    ref_sents = _sentences(ref)
    total_ref = sum(len(s) for s in ref_sents)
    total_pred = sum(len(s) for s in pred_sents)
    hits = 0
    for rs in ref_sents:
        union: set[int] = set()
        for cs in pred_sents:
            union |= _lcs_ref_indices(rs, cs)
        hits += len(union)
    if hits == 0 or total_ref == 0 or total_pred == 0:
        rouge_lsum = 0.0
    else:
        rouge_lsum = harmonic_f1(hits / total_pred, hits / total_ref)
    return RougeScores(rouge1=rouge1, rouge2=rouge2, rougeLsum=rouge_lsum)


def selection_fraction_pct(k: int, n_clips: int) -> float:
    """Share of the clip grid a selection of ``k`` clips covers, in percent."""
    if n_clips <= 0:
        raise InvalidArgumentError("n_clips must be positive")
    return 100.0 * k / n_clips


def check_claimed_fractions(n_clips: int, claims: dict[int, float],
                            tol_pct: float = 0.5) -> dict[int, bool]:
    """Compare externally claimed selection percentages against ``k / n``.

    Returns per-``k`` consistency so reports can flag claims that do not
    match the grid arithmetic.
    """
    return {
        k: abs(selection_fraction_pct(k, n_clips) - claimed) <= tol_pct
        for k, claimed in claims.items()
    }


@dataclass(frozen=True)
class EvalReport:
    """Full metric bundle for one movie run."""

    recall_at_k: dict[tuple[int, float], float]
    vis_rec: float | None = None
    text_rec: float | None = None
    mfs: float | None = None
    rouge1: float | None = None
    rouge2: float | None = None
    rougeLsum: float | None = None
    prf: PrfScores | None = None
    synthetic_timestamps: bool = False
    parse_error_rate: float = 0.0
    notes: tuple[str, ...] = ()

    def to_json(self) -> str:
        obj = {
            "recall_at_k": [
                {"k": k, "tau": tau, "recall": rec}
                for (k, tau), rec in sorted(self.recall_at_k.items())
            ],
            "vis_rec": round_report(self.vis_rec),
            "text_rec": round_report(self.text_rec),
            "mfs": round_report(self.mfs),
            "rouge1": self.rouge1,
            "rouge2": self.rouge2,
            "rougeLsum": self.rougeLsum,
            "prf": None
            if self.prf is None
            else {"precision": self.prf.precision, "recall": self.prf.recall, "f1": self.prf.f1},
            "synthetic_timestamps": self.synthetic_timestamps,
            "parse_error_rate": self.parse_error_rate,
            "notes": list(self.notes),
        }
        return json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=2) + "\n"


def recall_curve_rows(method: str, recalls: dict[tuple[int, float], float]) -> list[dict]:
    """Plot-ready rows (method, k, tau, recall) for recall-versus-tau curves."""
    return [
        {"method": method, "k": k, "tau": tau, "recall": rec}
        for (k, tau), rec in sorted(recalls.items())
    ]
