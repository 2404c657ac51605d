"""clipline: clip selection and multimodal summarization for long videos.

The package plans fixed-window clips over a timeline, captions them
through a model gateway, asks a language model to pick the most visually
important ones, assembles a screenplay-style document from transcripts
plus captions, summarizes it, derives reference clips from gold
annotations, and scores everything with interval-recall and fact-recall
metrics.
"""

from .captioning import Caption, CaptionKind, CutManifest, emit_cut_manifest
from .errors import (
    BackendError,
    ClipLineError,
    ConfigError,
    DependencyError,
    InvalidArgumentError,
    ParseError,
    TransportError,
)
from .evaluation import (
    EvalConfig,
    EvalReport,
    JudgedFact,
    MFactScores,
    PrfScores,
    RougeScores,
    clipset_prf,
    cross_reference_recall,
    judge_fact_support,
    mfactsum,
    recall_at_k,
    rouge_scores,
)
from .gateway import (
    BackendConfig,
    ChatFailure,
    ChatRequest,
    ChatResponse,
    MediaAttachment,
    ModelGateway,
)
from .reference import (
    Fact,
    Modality,
    ReferenceClip,
    classify_facts,
    derive_reference_clips,
    identify_facts,
    proportional_timestamps,
)
from .screenplay import (
    LineKind,
    Provenance,
    QuoteMatch,
    Screenplay,
    ScreenplayLine,
    Utterance,
    match_quote,
    parse_screenplay,
    parse_srt,
    serialize_screenplay,
)
from .selection import (
    SelectionConfig,
    SelectionMethod,
    SelectionResult,
    Shots,
    build_selection_prompt,
    parse_selection_response,
    select_clips_llm,
    select_random,
    select_silent,
)
from .summarization import Summary, SummarySource, build_screenplay, summarize, truncate_words
from .timeline import (
    Clip,
    ClipOrigin,
    SceneList,
    TimeInterval,
    intersection_ms,
    ior,
    plan_fixed_clips,
    subdivide_scenes,
)

__version__ = "0.1.0"
