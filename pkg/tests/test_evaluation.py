import random

import pytest
from hypothesis import given, strategies as st

from clipline.errors import InvalidArgumentError, ParseError
from clipline.evaluation import (
    EvalConfig,
    JudgedFact,
    check_claimed_fractions,
    clipset_prf,
    cross_reference_recall,
    harmonic_f1,
    judge_fact_support,
    mfactsum,
    parse_error_rate,
    parse_judge_response,
    recall_at_k,
    rouge_scores,
    selection_fraction_pct,
)
from clipline.reference import Fact, Modality, ReferenceClip
from clipline.timeline import TimeInterval


def iv(start, end):
    return TimeInterval(start, end)


def ref(start, end, fact_ids=(1,)):
    return ReferenceClip(interval=TimeInterval(start, end), supporting_fact_ids=tuple(fact_ids))


# Independent oracle: per (prediction, reference) pair, recompute the overlap
# ratio from raw bounds and apply the strict threshold test.
def brute_force_recall(preds, refs, tau):
    retrieved = 0
    for r in refs:
        hit = False
        for p in preds:
            overlap = min(p[1], r[1]) - max(p[0], r[0])
            if overlap < 0:
                overlap = 0
            if overlap / (r[1] - r[0]) > tau:
                hit = True
        retrieved += 1 if hit else 0
    return retrieved / len(refs)


def random_instances(n, seed, max_coord=100):
    rng = random.Random(seed)
    for _ in range(n):
        def spans(k):
            out = []
            for _ in range(k):
                a = rng.randrange(0, max_coord - 1)
                b = rng.randrange(a + 1, max_coord)
                out.append((a, b))
            return out
        yield (
            spans(rng.randint(1, 6)),
            spans(rng.randint(1, 6)),
            rng.choice([0.1, 0.25, 0.3, 0.5, 0.75, 0.9]),
        )


class TestRecallAtK:
    def test_identity(self):
        assert recall_at_k([iv(0, 10_000)], [ref(0, 10_000)], 0.3) == 1.0

    def test_partial(self):
        refs = [ref(0, 10_000), ref(50_000, 60_000)]
        assert recall_at_k([iv(0, 20_000)], refs, 0.3) == 0.5

    def test_strict_threshold_boundary(self):
        # prediction covers exactly 30% of the reference
        refs = [ref(0, 10)]
        assert recall_at_k([iv(0, 3)], refs, 0.3) == 0.0
        assert recall_at_k([iv(0, 4)], refs, 0.3) == 1.0

    def test_one_prediction_can_retrieve_many_references(self):
        refs = [ref(0, 10), ref(5, 15)]
        assert recall_at_k([iv(0, 15)], refs, 0.5) == 1.0

    def test_empty_refs_rejected(self):
        with pytest.raises(InvalidArgumentError):
            recall_at_k([iv(0, 10)], [], 0.3)

    def test_no_predictions_gives_zero(self):
        assert recall_at_k([], [ref(0, 10)], 0.3) == 0.0

    def test_matches_brute_force_oracle(self):
        for preds, refs, tau in random_instances(300, seed=11):
            got = recall_at_k(
                [iv(a, b) for a, b in preds], [ref(a, b) for a, b in refs], tau
            )
            assert got == brute_force_recall(preds, refs, tau)

    @given(
        spans=st.lists(st.tuples(st.integers(0, 90), st.integers(1, 10)), min_size=1, max_size=6),
        extra=st.tuples(st.integers(0, 90), st.integers(1, 10)),
        tau=st.sampled_from([0.1, 0.3, 0.5, 0.9]),
    )
    def test_adding_a_prediction_never_lowers_recall(self, spans, extra, tau):
        refs = [ref(0, 10), ref(40, 60), ref(80, 95)]
        preds = [iv(a, a + d) for a, d in spans]
        more = preds + [iv(extra[0], extra[0] + extra[1])]
        assert recall_at_k(more, refs, tau) >= recall_at_k(preds, refs, tau)

    @given(
        spans=st.lists(st.tuples(st.integers(0, 90), st.integers(1, 10)), min_size=1, max_size=6),
    )
    def test_recall_non_increasing_in_tau(self, spans):
        refs = [ref(0, 10), ref(40, 60), ref(80, 95)]
        preds = [iv(a, a + d) for a, d in spans]
        values = [recall_at_k(preds, refs, t) for t in (0.1, 0.3, 0.5, 0.7, 0.9)]
        assert values == sorted(values, reverse=True)


class TestClipsetPrf:
    def test_identical_sets(self):
        clips = [ref(0, 10), ref(20, 30)]
        scores = clipset_prf(clips, clips, 0.3)
        assert (scores.precision, scores.recall, scores.f1) == (1.0, 1.0, 1.0)

    def test_zero_overlap(self):
        scores = clipset_prf([iv(0, 10)], [ref(50, 60)], 0.3)
        assert (scores.precision, scores.recall, scores.f1) == (0.0, 0.0, 0.0)

    def test_recall_component_matches_recall_at_k(self):
        for preds, refs, tau in random_instances(100, seed=23):
            pred_ivs = [iv(a, b) for a, b in preds]
            ref_clips = [ref(a, b) for a, b in refs]
            assert clipset_prf(pred_ivs, ref_clips, tau).recall == recall_at_k(
                pred_ivs, ref_clips, tau
            )

    def test_matches_pairwise_oracle(self):
        for preds, refs, tau in random_instances(200, seed=37):
            scores = clipset_prf([iv(a, b) for a, b in preds], [ref(a, b) for a, b in refs], tau)
            matched_p = sum(
                1 for p in preds if any(
                    max(0, min(p[1], r[1]) - max(p[0], r[0])) / (r[1] - r[0]) > tau for r in refs
                )
            )
            assert scores.precision == matched_p / len(preds)
            assert scores.recall == brute_force_recall(preds, refs, tau)

    def test_empty_inputs_rejected(self):
        with pytest.raises(InvalidArgumentError):
            clipset_prf([], [ref(0, 10)], 0.3)
        with pytest.raises(InvalidArgumentError):
            clipset_prf([iv(0, 10)], [], 0.3)

    def test_aggregation_convention_check(self):
        # harmonic mean of averaged precision/recall columns lands near the
        # averaged F1 when per-item scores are homogeneous
        assert harmonic_f1(83.65, 90.3) == pytest.approx(86.85, abs=0.005)
        assert abs(harmonic_f1(83.65, 90.3) - 86.5) < 0.5


class TestCrossReferenceRecall:
    def test_identical_sets(self):
        clips = [ref(0, 10), ref(20, 30)]
        assert cross_reference_recall(clips, clips, 0.3) == 1.0

    def test_disjoint_sets(self):
        assert cross_reference_recall([ref(0, 10)], [ref(50, 60)], 0.3) == 0.0

    def test_equals_recall_with_a_as_predictions(self):
        for preds, refs, tau in random_instances(100, seed=5):
            a = [ref(x, y) for x, y in preds]
            b = [ref(x, y) for x, y in refs]
            assert cross_reference_recall(a, b, tau) == recall_at_k(a, b, tau)

    def test_empty_b_rejected(self):
        with pytest.raises(InvalidArgumentError):
            cross_reference_recall([ref(0, 10)], [], 0.3)


def fact(i, modality):
    return Fact(sentence_index=1, fact_index=i, text=f"fact {i}", modality=modality)


def judged_set(n_visual, visual_supported, n_textual, textual_supported):
    out = []
    for i in range(n_visual):
        out.append(JudgedFact(fact=fact(i + 1, Modality.VISUAL), supported=i < visual_supported))
    for i in range(n_textual):
        out.append(
            JudgedFact(fact=fact(n_visual + i + 1, Modality.TEXTUAL), supported=i < textual_supported)
        )
    return out


class TestMFactSum:
    def test_hand_computed_ratios(self):
        scores = mfactsum(judged_set(4, 3, 2, 1))
        assert scores.vis_rec == 75.0
        assert scores.text_rec == 50.0
        assert scores.mfs == 62.5

    def test_all_unsupported(self):
        scores = mfactsum(judged_set(3, 0, 3, 0))
        assert (scores.vis_rec, scores.text_rec, scores.mfs) == (0.0, 0.0, 0.0)

    def test_missing_modality_reported_absent(self):
        scores = mfactsum(judged_set(3, 2, 0, 0))
        assert scores.text_rec is None
        assert scores.mfs is None
        assert scores.vis_rec == pytest.approx(100 * 2 / 3)

    def test_unresolved_excluded(self):
        judged = judged_set(2, 2, 2, 2)
        judged.append(JudgedFact(fact=fact(9, Modality.UNRESOLVED), supported=False))
        scores = mfactsum(judged)
        assert scores.n_visual == 2
        assert scores.n_textual == 2
        assert scores.mfs == 100.0

    @given(
        nv=st.integers(1, 40), sv=st.integers(0, 40),
        nt=st.integers(1, 40), st_=st.integers(0, 40),
    )
    def test_mean_identity(self, nv, sv, nt, st_):
        sv, st_ = min(sv, nv), min(st_, nt)
        scores = mfactsum(judged_set(nv, sv, nt, st_))
        assert scores.mfs == (scores.vis_rec + scores.text_rec) / 2


JUDGE_RESPONSE = """Fact 1: The keeper fights the storm.
1. The summary says he battles the weather all night.
2. Yes

Fact 2: The assistant rows for help.
1. Nothing about rowing appears.
2. No
"""


class TestJudgeParsing:
    def _facts(self, n):
        return [fact(i + 1, Modality.VISUAL) for i in range(n)]

    def test_basic_yes_no(self):
        judged = parse_judge_response(JUDGE_RESPONSE, self._facts(2))
        assert [j.supported for j in judged] == [True, False]
        assert judged[0].justification.startswith("The summary says")
        assert not any(j.parse_error for j in judged)

    def test_reordered_blocks_map_by_number(self):
        text = "Fact 2: b\n1. j\n2. No\n\nFact 1: a\n1. j\n2. Yes\n"
        judged = parse_judge_response(text, self._facts(2))
        assert [j.supported for j in judged] == [True, False]

    def test_case_insensitive_verdicts(self):
        text = "Fact 1: a\n2. YES\n\nFact 2: b\n2. no.\n"
        judged = parse_judge_response(text, self._facts(2))
        assert [j.supported for j in judged] == [True, False]
        assert not any(j.parse_error for j in judged)

    def test_bare_verdict_line_accepted(self):
        text = "Fact 1: a\nJustified above.\nYes\n"
        judged = parse_judge_response(text, self._facts(1))
        assert judged[0].supported is True

    def test_missing_justification_is_fine(self):
        text = "Fact 1: a\n2. Yes\n"
        judged = parse_judge_response(text, self._facts(1))
        assert judged[0].supported is True
        assert judged[0].justification == ""

    def test_unparseable_block_flags_parse_error(self):
        text = "Fact 1: a\n1. Some rambling with no verdict.\n\nFact 2: b\n2. Yes\n"
        judged = parse_judge_response(text, self._facts(2))
        assert judged[0].supported is False
        assert judged[0].parse_error is True
        assert judged[1].supported is True

    def test_missing_fact_number_flags_parse_error(self):
        text = "Fact 1: a\n2. Yes\n"
        judged = parse_judge_response(text, self._facts(3))
        assert [j.parse_error for j in judged] == [False, True, True]

    def test_wholly_unparseable_raises_with_raw(self):
        with pytest.raises(ParseError) as err:
            parse_judge_response("nothing structured here", self._facts(2))
        assert err.value.raw == "nothing structured here"

    def test_parse_error_rate(self):
        judged = [
            JudgedFact(fact=fact(1, Modality.VISUAL), supported=True),
            JudgedFact(fact=fact(2, Modality.VISUAL), supported=False, parse_error=True),
        ]
        assert parse_error_rate(judged) == 0.5

    def test_judge_fact_support_via_mock(self, make_mock_gateway):
        gw = make_mock_gateway(default=JUDGE_RESPONSE)
        facts = [fact(1, Modality.VISUAL), fact(2, Modality.TEXTUAL)]
        judged = judge_fact_support("summary text", facts, gw)
        assert [j.supported for j in judged] == [True, False]

    def test_empty_fact_list_skips_backend(self, make_mock_gateway):
        gw = make_mock_gateway()  # no rules, no default: any call would fail
        assert judge_fact_support("summary", [], gw) == []


class TestRouge:
    def test_identical_texts(self):
        scores = rouge_scores("The cat sat. It purred.", "The cat sat. It purred.")
        assert scores.rouge1 == 1.0
        assert scores.rouge2 == 1.0
        assert scores.rougeLsum == 1.0

    def test_hand_counted_unigram_case(self):
        assert rouge_scores("the cat sat", "the cat ran").rouge1 == pytest.approx(2 / 3, abs=1e-9)

    def test_disjoint_vocabulary(self):
        scores = rouge_scores("alpha beta", "gamma delta")
        assert (scores.rouge1, scores.rouge2, scores.rougeLsum) == (0.0, 0.0, 0.0)

    def test_empty_inputs_rejected(self):
        with pytest.raises(InvalidArgumentError):
            rouge_scores("", "ref")
        with pytest.raises(InvalidArgumentError):
            rouge_scores("pred", "   ")

    def test_tokenization_ignores_case_and_punctuation(self):
        assert rouge_scores("The CAT, sat!", "the cat sat").rouge1 == 1.0

    def test_lsum_rewards_in_sentence_order(self):
        ref_text = "a b c d. e f g h."
        in_order = rouge_scores("a b c d. e f g h.", ref_text).rougeLsum
        scrambled = rouge_scores("d c b a. h g f e.", ref_text).rougeLsum
        assert in_order > scrambled


class TestFractions:
    def test_grid_share_percentages(self):
        assert selection_fraction_pct(25, 354) == pytest.approx(7.06, abs=0.005)
        assert selection_fraction_pct(50, 354) == pytest.approx(14.12, abs=0.005)
        assert selection_fraction_pct(75, 354) == pytest.approx(21.19, abs=0.005)

    def test_claim_check_flags_mismatch(self):
        consistency = check_claimed_fractions(354, {25: 7.0, 50: 14.0, 75: 28.0})
        assert consistency == {25: True, 50: True, 75: False}

    def test_eval_config_validates_tau(self):
        with pytest.raises(InvalidArgumentError):
            EvalConfig(tau=0.0)
        with pytest.raises(InvalidArgumentError):
            EvalConfig(tau=0.3, tau_sweep=(0.3, 1.5))
