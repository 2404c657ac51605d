import pytest
from hypothesis import given, strategies as st

from clipline.captioning import Caption, CaptionKind
from clipline.errors import InvalidArgumentError
from clipline.prompts import SUMMARY_TEMPLATE
from clipline.screenplay import (
    LineKind,
    Provenance,
    Screenplay,
    ScreenplayLine,
    Utterance,
    parse_screenplay,
    serialize_screenplay,
)
from clipline.summarization import (
    SummarySource,
    build_screenplay,
    summarize,
    truncate_words,
)
from clipline.timeline import Clip, TimeInterval


def utt(index, start, end, text, speaker=None):
    return Utterance(index, TimeInterval(start, end), text, speaker)


def recaption(clip_id, text):
    return Caption(clip_id=clip_id, text=text, kind=CaptionKind.RECAPTION)


class TestBuildScreenplay:
    def test_caption_inserted_between_utterances(self):
        utts = [utt(0, 0, 2_000, "First."), utt(1, 30_000, 32_000, "Second.")]
        clips = [Clip.from_bounds(20_000, 40_000)]
        sp = build_screenplay(utts, [recaption(20_000, "A storm.")], clips)
        kinds = [ln.kind for ln in sp.lines]
        assert kinds == [LineKind.DIALOGUE, LineKind.CAPTION, LineKind.DIALOGUE]
        assert sp.lines[1].source_clip_id == 20_000

    def test_tie_places_caption_first(self):
        utts = [utt(0, 20_000, 22_000, "Same start.")]
        clips = [Clip.from_bounds(20_000, 40_000)]
        sp = build_screenplay(utts, [recaption(20_000, "Tied.")], clips)
        assert [ln.kind for ln in sp.lines] == [LineKind.CAPTION, LineKind.DIALOGUE]

    def test_zero_captions_is_exactly_the_transcript(self):
        utts = [utt(0, 0, 2_000, "One."), utt(1, 5_000, 7_000, "Two.")]
        sp = build_screenplay(utts, [], [])
        assert serialize_screenplay(sp).count("Caption:") == 0
        assert [ln.text for ln in sp.lines] == ["One.", "Two."]

    def test_marker_count_equals_caption_count(self):
        utts = [utt(i, i * 10_000, i * 10_000 + 2_000, f"u{i}") for i in range(5)]
        clips = [Clip.from_bounds(s, s + 20_000) for s in (0, 20_000, 40_000)]
        captions = [recaption(c.id, f"cap {c.id}") for c in clips]
        text = serialize_screenplay(build_screenplay(utts, captions, clips))
        assert text.count("Caption:") == 3

    def test_unknown_clip_rejected(self):
        with pytest.raises(InvalidArgumentError, match="99999"):
            build_screenplay([utt(0, 0, 1_000, "x")], [recaption(99_999, "y")], [])

    def test_duplicate_caption_for_clip_rejected(self):
        clips = [Clip.from_bounds(0, 20_000)]
        caps = [recaption(0, "a"), recaption(0, "b")]
        with pytest.raises(InvalidArgumentError):
            build_screenplay([utt(0, 0, 1_000, "x")], caps, clips)

    def test_removing_captions_recovers_transcript(self):
        utts = [utt(i, i * 7_000, i * 7_000 + 3_000, f"line {i}") for i in range(6)]
        clips = [Clip.from_bounds(s, s + 20_000) for s in (0, 20_000)]
        captions = [recaption(c.id, f"cap {c.id}") for c in clips]
        sp = build_screenplay(utts, captions, clips)
        dialogue = [ln.text for ln in sp.lines if ln.kind is LineKind.DIALOGUE]
        assert dialogue == [u.text for u in utts]

    def test_timestamps_nondecreasing(self):
        utts = [utt(0, 0, 1_000, "a"), utt(1, 50_000, 51_000, "b")]
        clips = [Clip.from_bounds(20_000, 40_000), Clip.from_bounds(40_000, 60_000)]
        captions = [recaption(c.id, "c") for c in clips]
        sp = build_screenplay(utts, captions, clips)
        stamps = [ln.time_ms for ln in sp.lines]
        assert stamps == sorted(stamps)


class TestTruncateWords:
    def test_short_text_unchanged(self):
        assert truncate_words("one two three", 1000) == "one two three"

    def test_exactly_limit_plus_one(self):
        text = " ".join(["tok"] * 1001)
        out = truncate_words(text, 1000)
        assert len(out.split()) == 1000

    def test_whitespace_kind_does_not_change_count(self):
        text = "a\tb\nc  d\re"
        assert truncate_words(text, 3) == "a b c"
        assert truncate_words(text, 10) == text

    def test_idempotent(self):
        text = " ".join(f"w{i}" for i in range(1500))
        once = truncate_words(text, 1000)
        assert truncate_words(once, 1000) == once

    @given(st.text(alphabet="ab \t\n", max_size=400), st.integers(min_value=1, max_value=50))
    def test_never_exceeds_limit_and_idempotent(self, text, limit):
        out = truncate_words(text, limit)
        assert len(out.split()) <= limit
        assert truncate_words(out, limit) == out

    def test_limit_must_be_positive(self):
        with pytest.raises(InvalidArgumentError):
            truncate_words("x", 0)


class TestSummarize:
    def test_transcript_only_source(self, make_mock_gateway):
        gw = make_mock_gateway(default="A short summary.")
        summary = summarize("KEEPER: The lamp must stay lit.", gw)
        assert summary.source is SummarySource.TRANSCRIPT_ONLY
        assert summary.truncated is False
        assert summary.word_count == 3

    def test_built_screenplay_source_and_prompt(self, make_mock_gateway):
        seen = []
        gw = make_mock_gateway(default="Summary words.")
        inner = gw.transport
        gw.transport = lambda req: (seen.append(req.user), inner(req))[1]
        sp = parse_screenplay("[00:00:01.000] Hello.", Provenance.BUILT)
        summary = summarize(sp, gw)
        assert summary.source is SummarySource.BUILT_SCREENPLAY
        assert seen[0] == SUMMARY_TEMPLATE.format(document="[00:00:01.000] Hello.")

    def test_gold_screenplay_source(self, make_mock_gateway):
        gw = make_mock_gateway(default="words")
        gold = Screenplay(
            lines=(ScreenplayLine(kind=LineKind.ACTION, text="He runs."),),
            provenance=Provenance.GOLD,
        )
        assert summarize(gold, gw).source is SummarySource.GOLD_SCREENPLAY

    def test_long_output_truncated_to_cap(self, make_mock_gateway):
        reply = " ".join(f"w{i}" for i in range(1200))
        gw = make_mock_gateway(default=reply)
        summary = summarize("some transcript", gw)
        assert summary.truncated is True
        assert summary.word_count == 1000

    def test_empty_document_rejected(self, make_mock_gateway):
        with pytest.raises(InvalidArgumentError):
            summarize("   ", make_mock_gateway(default="x"))
