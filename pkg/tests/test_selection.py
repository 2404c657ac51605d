import pytest
from hypothesis import given, strategies as st

from clipline.captioning import Caption, CaptionKind
from clipline.errors import InvalidArgumentError, ParseError
from clipline.prompts import SELECTION_EXEMPLARS
from clipline.screenplay import Utterance
from clipline.selection import (
    SelectionConfig,
    SelectionMethod,
    Shots,
    build_selection_prompt,
    parse_selection_response,
    resolve_selection,
    select_clips_llm,
    select_random,
    select_silent,
    selection_from_json,
    selection_to_json,
    silent_gap_clips,
)
from clipline.timeline import TimeInterval, plan_fixed_clips

# Answer text in the exact shape the selection prompt requests, including
# the unranked variant the two-shot exemplar answers use.
RANKED_ANSWER = """1. Caption 1130000: Justification why this clip matters most.
2. Caption 1170000: Justification for the second clip.
3. Caption 1190000: Justification for the third clip.
"""

EXEMPLAR_STYLE_ANSWER = """Caption 1130000: Justification: This caption depicts the removal of the leg braces.
Caption 1170000: Justification: This caption illustrates the chase.
Caption 1190000: Justification: This caption depicts the football field.
"""

KNOWN = {1_110_000, 1_130_000, 1_150_000, 1_170_000, 1_190_000, 1_210_000, 1_230_000}


def lightweight(clip_id, text="some caption text"):
    return Caption(clip_id=clip_id, text=text, kind=CaptionKind.LIGHTWEIGHT)


class TestBuildSelectionPrompt:
    def test_zero_shot_matches_golden_file(self, prompt_fixture):
        captions = [
            lightweight(0, "A fishing boat rocks in heavy surf while two men argue on deck."),
            lightweight(20_000, "A woman on the cliff lights a signal lantern as rain starts to fall."),
        ]
        cfg = SelectionConfig(k=3, movie_name="The Lighthouse Crossing")
        assert build_selection_prompt(cfg, captions) == prompt_fixture("selection_zero_shot.txt")

    def test_two_shot_matches_golden_file(self, prompt_fixture):
        captions = [
            lightweight(0, "A fishing boat rocks in heavy surf while two men argue on deck."),
            lightweight(20_000, "A woman on the cliff lights a signal lantern as rain starts to fall."),
        ]
        cfg = SelectionConfig(k=3, movie_name="The Lighthouse Crossing", shots=Shots.TWO_SHOT)
        assert build_selection_prompt(cfg, captions) == prompt_fixture("selection_two_shot.txt")

    def test_contains_k_and_caption_blocks(self):
        cfg = SelectionConfig(k=3, movie_name="X")
        prompt = build_selection_prompt(cfg, [lightweight(0, "a"), lightweight(20_000, "b")])
        assert "the 3 most important Captions" in prompt
        assert "Caption 0: a" in prompt
        assert "Caption 20000: b" in prompt

    def test_two_shot_starts_with_first_exemplar(self):
        cfg = SelectionConfig(k=2, movie_name="X", shots=Shots.TWO_SHOT)
        prompt = build_selection_prompt(cfg, [lightweight(0), lightweight(20_000)])
        assert prompt.startswith("Here are captions from the movie Forrest Gump:")
        for exemplar in SELECTION_EXEMPLARS:
            assert exemplar in prompt

    def test_empty_captions_rejected(self):
        with pytest.raises(InvalidArgumentError):
            build_selection_prompt(SelectionConfig(k=1, movie_name="X"), [])

    def test_non_lightweight_captions_rejected(self):
        cap = Caption(clip_id=0, text="x", kind=CaptionKind.RECAPTION)
        with pytest.raises(InvalidArgumentError):
            build_selection_prompt(SelectionConfig(k=1, movie_name="X"), [cap])


class TestParseSelectionResponse:
    def test_ranked_answer(self):
        result = parse_selection_response(RANKED_ANSWER, KNOWN, 3)
        assert result.clip_ids() == [1_130_000, 1_170_000, 1_190_000]
        assert result.items[0].justification == "Justification why this clip matters most."

    def test_exemplar_style_answer_without_ranks(self):
        result = parse_selection_response(EXEMPLAR_STYLE_ANSWER, KNOWN, 3)
        assert result.clip_ids() == [1_130_000, 1_170_000, 1_190_000]

    def test_surplus_truncated_to_k(self):
        text = "\n".join(f"{i+1}. Caption {cid}: because" for i, cid in enumerate(sorted(KNOWN)))
        result = parse_selection_response(text, KNOWN, 3)
        assert len(result.items) == 3
        assert result.parse_report.surplus_dropped == len(KNOWN) - 3

    def test_unknown_id_dropped_and_counted(self):
        text = "1. Caption 999: nope\n2. Caption 1130000: yes\n"
        result = parse_selection_response(text, KNOWN, 3)
        assert result.clip_ids() == [1_130_000]
        assert result.parse_report.unknown_ids_dropped == 1

    def test_duplicates_dropped_and_counted(self):
        text = "1. Caption 1130000: a\n2. Caption 1130000: again\n"
        result = parse_selection_response(text, KNOWN, 3)
        assert result.clip_ids() == [1_130_000]
        assert result.parse_report.duplicates_dropped == 1

    def test_prose_lines_ignored(self):
        text = "Here is my reasoning.\n1. Caption 1130000: a\nThanks!\n"
        result = parse_selection_response(text, KNOWN, 2)
        assert result.clip_ids() == [1_130_000]
        assert result.parse_report.lines_total == 3
        assert result.parse_report.lines_parsed == 1

    def test_zero_parsable_lines_raises_with_raw(self):
        with pytest.raises(ParseError) as err:
            parse_selection_response("no captions here at all", KNOWN, 3)
        assert err.value.raw == "no captions here at all"

    def test_short_result_carries_warning(self):
        result = parse_selection_response("1. Caption 1130000: only one", KNOWN, 5)
        assert len(result.items) == 1
        assert any("1 of 5" in w for w in result.warnings)

    @given(ids=st.lists(st.sampled_from(sorted(KNOWN)), min_size=1, max_size=7, unique=True))
    def test_order_preserved(self, ids):
        text = "\n".join(f"{i+1}. Caption {cid}: j" for i, cid in enumerate(ids))
        result = parse_selection_response(text, KNOWN, len(ids))
        assert result.clip_ids() == ids


class TestSelectClipsLlm:
    def test_composition_with_mock(self, make_mock_gateway):
        captions = [lightweight(cid) for cid in sorted(KNOWN)]
        gw = make_mock_gateway(default=RANKED_ANSWER)
        cfg = SelectionConfig(k=3, movie_name="Forrest Gump")
        result = select_clips_llm(cfg, captions, gw)
        assert result.method is SelectionMethod.LLM_ZERO_SHOT
        assert result.clip_ids() == [1_130_000, 1_170_000, 1_190_000]

    def test_two_shot_method_tag(self, make_mock_gateway):
        captions = [lightweight(cid) for cid in sorted(KNOWN)]
        gw = make_mock_gateway(default=RANKED_ANSWER)
        cfg = SelectionConfig(k=3, movie_name="Forrest Gump", shots=Shots.TWO_SHOT)
        assert select_clips_llm(cfg, captions, gw).method is SelectionMethod.LLM_TWO_SHOT

    def test_k_larger_than_caption_count(self, make_mock_gateway):
        gw = make_mock_gateway(default=RANKED_ANSWER)
        with pytest.raises(InvalidArgumentError):
            select_clips_llm(SelectionConfig(k=3, movie_name="X"), [lightweight(0)], gw)


class TestSelectRandom:
    def test_same_seed_same_selection(self):
        clips = plan_fixed_clips(7_080_000, 20_000)
        a = select_random(clips, 25, seed=7)
        b = select_random(clips, 25, seed=7)
        assert a.clip_ids() == b.clip_ids()
        assert select_random(clips, 25, seed=8).clip_ids() != a.clip_ids()

    def test_k_equals_clip_count_selects_all(self):
        clips = plan_fixed_clips(100_000, 20_000)
        result = select_random(clips, len(clips), seed=0)
        assert sorted(result.clip_ids()) == [c.id for c in clips]

    def test_k_too_large(self):
        with pytest.raises(InvalidArgumentError):
            select_random(plan_fixed_clips(40_000, 20_000), 3, seed=0)

    def test_ids_unique_and_known(self):
        clips = plan_fixed_clips(500_000, 20_000)
        result = select_random(clips, 10, seed=3)
        ids = result.clip_ids()
        assert len(set(ids)) == 10
        assert set(ids) <= {c.id for c in clips}


FIXTURE_UTTS = [
    Utterance(0, TimeInterval(0, 10_000), "a"),
    Utterance(1, TimeInterval(40_000, 50_000), "b"),
    Utterance(2, TimeInterval(55_000, 90_000), "c"),
]


class TestSelectSilent:
    def test_longest_gap_first(self):
        result = select_silent(FIXTURE_UTTS, 90_000, k=1)
        assert result.clip_ids() == [10_000]

    def test_descending_duration_order(self):
        result = select_silent(FIXTURE_UTTS, 90_000, k=2)
        gaps = {c.id: c for c in silent_gap_clips(FIXTURE_UTTS, 90_000)}
        picked = [gaps[i].interval for i in result.clip_ids()]
        assert [(iv.start_ms, iv.end_ms) for iv in picked] == [(10_000, 40_000), (50_000, 55_000)]

    def test_continuous_dialogue_yields_nothing(self):
        utts = [Utterance(0, TimeInterval(0, 90_000), "talk")]
        assert select_silent(utts, 90_000, k=3).items == ()

    def test_leading_and_trailing_gaps(self):
        utts = [Utterance(0, TimeInterval(10_000, 20_000), "x")]
        gaps = silent_gap_clips(utts, 50_000)
        assert [(g.interval.start_ms, g.interval.end_ms) for g in gaps] == [
            (0, 10_000), (20_000, 50_000)
        ]
        no_edges = silent_gap_clips(utts, 50_000, include_edges=False)
        assert no_edges == []

    def test_duration_ties_break_by_earlier_start(self):
        utts = [
            Utterance(0, TimeInterval(10_000, 20_000), "x"),
            Utterance(1, TimeInterval(30_000, 40_000), "y"),
        ]
        result = select_silent(utts, 50_000, k=3)
        assert result.clip_ids() == [0, 20_000, 40_000]

    @given(st.lists(st.tuples(
        st.integers(min_value=0, max_value=80_000),
        st.integers(min_value=1, max_value=20_000),
    ), min_size=1, max_size=10))
    def test_gaps_never_overlap_dialogue(self, spans):
        utts = [
            Utterance(i, TimeInterval(s, s + d), f"u{i}")
            for i, (s, d) in enumerate(sorted(spans))
        ]
        for gap in silent_gap_clips(utts, 120_000):
            for u in utts:
                overlap = min(gap.interval.end_ms, u.interval.end_ms) - max(
                    gap.interval.start_ms, u.interval.start_ms
                )
                assert overlap <= 0


class TestResolveAndSerialize:
    def test_resolve_unknown_id(self):
        clips = plan_fixed_clips(40_000, 20_000)
        result = select_random(clips, 2, seed=0)
        with pytest.raises(InvalidArgumentError, match="99999"):
            resolve_selection(
                parse_selection_response("1. Caption 99999: x", {99_999}, 1), clips
            )
        assert len(resolve_selection(result, clips)) == 2

    def test_json_roundtrip(self):
        result = parse_selection_response(RANKED_ANSWER, KNOWN, 2)
        again = selection_from_json(selection_to_json(result))
        assert again == result
