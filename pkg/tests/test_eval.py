"""ROC construction against a brute-force oracle, operating points,
comparison arithmetic, and report files."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spotter import evaluate, nets, synth
from spotter.errors import PrecisionUnreachable, SpotterError
from spotter.evaluate import ScoredSet


def brute_force_curve(scored):
    """Re-classify the whole set at every candidate threshold."""
    thresholds = [evaluate.TOP_THRESHOLD] + sorted(set(scored.scores), reverse=True) + [0.0]
    return [evaluate.confusion_at(scored, t) for t in thresholds]


HAND_SET = ScoredSet(np.array([0.9, 0.8, 0.4, 0.3]), np.array([1, 0, 1, 0]))


class TestRocCurve:
    def test_hand_enumerated_counts_at_half(self):
        pt = evaluate.confusion_at(HAND_SET, 0.5)
        assert (pt.tp, pt.fp, pt.tn, pt.fn) == (1, 1, 1, 1)
        assert pt.tpr == 0.5 and pt.fpr == 0.5

    def test_endpoints(self):
        curve = evaluate.roc_curve(HAND_SET)
        top, bottom = curve[0], curve[-1]
        assert top.threshold > 1.0 and top.tpr == 0.0 and top.fpr == 0.0
        assert top.precision == 1.0  # defined value for an empty prediction set
        assert bottom.threshold == 0.0 and bottom.tpr == 1.0 and bottom.fpr == 1.0

    def test_one_point_per_distinct_score(self):
        scored = ScoredSet(np.array([0.7, 0.7, 0.4, 0.2]), np.array([1, 0, 1, 0]))
        curve = evaluate.roc_curve(scored)
        assert len(curve) == 3 + 2  # distinct scores + endpoints
        at_07 = [pt for pt in curve if pt.threshold == 0.7][0]
        assert (at_07.tp, at_07.fp) == (1, 1)

    def test_monotone_counts(self):
        rng = np.random.default_rng(0)
        scored = ScoredSet(rng.random(150), rng.integers(0, 2, 150))
        curve = evaluate.roc_curve(scored)
        for a, b in zip(curve, curve[1:]):
            assert b.tp >= a.tp and b.fp >= a.fp
            assert b.tpr >= a.tpr and b.fpr >= a.fpr

    def test_matches_brute_force_oracle_randomized(self):
        rng = np.random.default_rng(42)
        for _ in range(40):
            n = int(rng.integers(2, 200))
            labels = rng.integers(0, 2, n)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            scores = np.round(rng.random(n), 2)  # force score ties
            scored = ScoredSet(scores, labels)
            curve = evaluate.roc_curve(scored)
            oracle = brute_force_curve(scored)
            assert len(curve) == len(oracle)
            for got, want in zip(curve, oracle):
                assert (got.tp, got.fp, got.tn, got.fn) == (want.tp, want.fp, want.tn, want.fn)

    @settings(max_examples=40, deadline=None)
    @given(
        st.lists(
            st.tuples(st.floats(0.001, 0.999), st.integers(0, 1)),
            min_size=2, max_size=60,
        ).filter(lambda xs: {l for _, l in xs} == {0, 1})
    )
    def test_oracle_property(self, pairs):
        scored = ScoredSet(
            np.array([s for s, _ in pairs]), np.array([l for _, l in pairs])
        )
        curve = evaluate.roc_curve(scored)
        oracle = brute_force_curve(scored)
        assert [(p.tp, p.fp) for p in curve] == [(p.tp, p.fp) for p in oracle]

    def test_single_class_rejected(self):
        with pytest.raises(SpotterError, match="both classes"):
            evaluate.roc_curve(ScoredSet(np.array([0.5, 0.6]), np.array([1, 1])))


class TestOperatingPoint:
    def test_f_score_at_90_precision(self):
        # precision 0.9 with recall 0.6 must read back f = 0.72
        curve = [
            evaluate.RocPoint(0.8, 9, 1, 9, 6, 0.6, 0.1, 0.9, 0.6),
            evaluate.RocPoint(evaluate.TOP_THRESHOLD, 0, 0, 10, 15, 0, 0, 1.0, 0),
        ]
        op = evaluate.operating_point(curve, 0.9)
        assert op.f_score == pytest.approx(0.72)
        assert op.recall == pytest.approx(0.6)

    def test_perfect_classifier_zero_fpr(self):
        scored = ScoredSet(
            np.array([0.9, 0.85, 0.8, 0.2, 0.15, 0.1]),
            np.array([1, 1, 1, 0, 0, 0]),
        )
        curve = evaluate.roc_curve(scored)
        for target in (0.5, 0.9, 1.0):
            op = evaluate.operating_point(curve, target)
            assert op.fpr == 0.0 and op.recall == 1.0

    def test_max_recall_then_min_fpr(self):
        scored = ScoredSet(
            np.array([0.9, 0.8, 0.7, 0.6, 0.5]), np.array([1, 1, 1, 1, 0])
        )
        op = evaluate.operating_point(evaluate.roc_curve(scored), 0.8)
        # thresholds 0.6, 0.5 and 0.0 all reach recall 1 above the floor;
        # the clean one (no false positive) wins
        assert op.recall == 1.0
        assert op.fpr == 0.0
        assert op.threshold == pytest.approx(0.6)

    def test_identical_count_ties_pick_lower_threshold(self):
        scored = ScoredSet(np.array([0.9, 0.2]), np.array([0, 1]))
        op = evaluate.operating_point(evaluate.roc_curve(scored), 0.5)
        # the min-score point and the 0.0 endpoint carry identical counts
        assert op.threshold == 0.0

    def test_unreachable_precision(self):
        # perfectly interleaved: no real point reaches 0.9 precision
        scored = ScoredSet(
            np.array([0.9, 0.8, 0.7, 0.6]), np.array([0, 1, 0, 1])
        )
        curve = evaluate.roc_curve(scored)
        with pytest.raises(PrecisionUnreachable, match="unreachable"):
            evaluate.operating_point(curve, 0.9)
        try:
            evaluate.operating_point(curve, 0.9)
        except PrecisionUnreachable as e:
            assert e.best == pytest.approx(0.5)

    def test_bad_target_rejected(self):
        with pytest.raises(ValueError, match="target precision"):
            evaluate.operating_point(evaluate.roc_curve(HAND_SET), 0.0)


class TestCompare:
    def test_paper_arithmetic(self):
        # 0.284 -> 0.204 is a 28.17% relative reduction
        def curve_with_fpr(fpr):
            n = 1000
            fp = int(round(fpr * n))
            return [
                evaluate.RocPoint(evaluate.TOP_THRESHOLD, 0, 0, n, 100, 0, 0, 1.0, 0),
                evaluate.RocPoint(0.5, 90, fp, n - fp, 10, 0.9, fp / n, 90 / (90 + fp), 0.9),
            ]

        # construct sets directly so the curves carry the target FPRs
        a = curve_with_fpr(0.284)
        b = curve_with_fpr(0.204)
        # precision floors: pick one both curves satisfy
        floor = min(a[1].precision, b[1].precision)
        red = evaluate.compare(a, b, floor)
        assert red == pytest.approx((0.284 - 0.204) / 0.284, abs=1e-12)
        assert red == pytest.approx(0.2817, abs=5e-4)

    def test_identical_curves_zero(self):
        curve = evaluate.roc_curve(HAND_SET)
        assert evaluate.compare(curve, curve, 0.5) == 0.0

    def test_candidate_perfect_gives_one(self):
        base = evaluate.roc_curve(HAND_SET)
        perfect = evaluate.roc_curve(
            ScoredSet(np.array([0.9, 0.8, 0.2, 0.1]), np.array([1, 1, 0, 0]))
        )
        assert evaluate.compare(base, perfect, 0.5) == 1.0

    def test_perfect_baseline_rejected(self):
        perfect = evaluate.roc_curve(
            ScoredSet(np.array([0.9, 0.8, 0.2, 0.1]), np.array([1, 1, 0, 0]))
        )
        base = evaluate.roc_curve(HAND_SET)
        with pytest.raises(SpotterError, match="already perfect"):
            evaluate.compare(perfect, base, 0.5)

    def test_antisymmetric_sign(self):
        a = evaluate.roc_curve(
            ScoredSet(np.array([0.9, 0.6, 0.55, 0.1]), np.array([1, 0, 1, 0]))
        )
        b = evaluate.roc_curve(
            ScoredSet(np.array([0.9, 0.8, 0.3, 0.2, 0.1]), np.array([1, 0, 1, 0, 0]))
        )
        fwd = evaluate.compare(a, b, 0.5)
        rev = evaluate.compare(b, a, 0.5)
        assert fwd > 0 > rev


GOLDEN_CSV = """threshold,tp,fp,tn,fn,tpr,fpr,precision,recall
1.000001,0,0,2,2,0.000000,0.000000,1.000000,0.000000
0.900000,1,0,2,1,0.500000,0.000000,1.000000,0.500000
0.800000,1,1,1,1,0.500000,0.500000,0.500000,0.500000
0.400000,2,1,1,0,1.000000,0.500000,0.666667,1.000000
0.300000,2,2,0,0,1.000000,1.000000,0.500000,1.000000
0.000000,2,2,0,0,1.000000,1.000000,0.500000,1.000000
"""


class TestReports:
    def test_csv_golden_bytes(self, tmp_path):
        path = tmp_path / "roc.csv"
        evaluate.write_roc_csv(evaluate.roc_curve(HAND_SET), path)
        assert path.read_text() == GOLDEN_CSV

    def test_csv_row_count(self, tmp_path):
        curve = evaluate.roc_curve(HAND_SET)
        path = tmp_path / "roc.csv"
        evaluate.write_roc_csv(curve, path)
        assert len(path.read_text().splitlines()) == len(curve) + 1

    def test_csv_round_trip(self, tmp_path):
        curve = evaluate.roc_curve(HAND_SET)
        path = tmp_path / "roc.csv"
        evaluate.write_roc_csv(curve, path)
        back = evaluate.read_roc_csv(path)
        assert len(back) == len(curve)
        for a, b in zip(curve, back):
            assert (a.tp, a.fp, a.tn, a.fn) == (b.tp, b.fp, b.tn, b.fn)
            assert abs(a.threshold - b.threshold) <= 1e-6
            assert abs(a.precision - b.precision) <= 1e-6

    def test_svg_is_self_contained(self, tmp_path):
        path = tmp_path / "roc.svg"
        evaluate.write_roc_svg(evaluate.roc_curve(HAND_SET), path)
        text = path.read_text()
        assert text.startswith("<svg")
        assert "polyline" in text
        assert "href" not in text  # no external references

    def test_emit_report_dispatch(self, tmp_path):
        curve = evaluate.roc_curve(HAND_SET)
        evaluate.emit_report(curve, tmp_path / "r.csv", "csv")
        evaluate.emit_report(curve, tmp_path / "r.svg", "svg")
        with pytest.raises(ValueError, match="format"):
            evaluate.emit_report(curve, tmp_path / "r.png", "png")
        with pytest.raises(ValueError, match="empty"):
            evaluate.emit_report([], tmp_path / "r.csv", "csv")


class TestScoreDataset:
    def test_zero_weight_model_scores_half(self):
        spec = nets.build_net("unigram")
        params = nets.zero_params(spec)
        ds = synth.generate_dataset(synth.GenConfig("unigram", 8, seed=0))
        scored = evaluate.score_dataset(spec, params, ds)
        np.testing.assert_array_equal(scored.scores, 0.5)

    def test_scores_in_open_interval(self, small_unigram):
        spec, params, _, val = small_unigram
        scored = evaluate.score_dataset(spec, params, val)
        assert (scored.scores > 0).all() and (scored.scores < 1).all()

    def test_order_independent_multiset(self, small_unigram):
        spec, params, _, val = small_unigram
        perm = np.random.default_rng(0).permutation(len(val))
        shuffled = synth.Dataset(val.patches[perm], val.labels[perm])
        a = evaluate.score_dataset(spec, params, val)
        b = evaluate.score_dataset(spec, params, shuffled)
        assert sorted(zip(a.scores, a.labels)) == sorted(zip(b.scores, b.labels))

    def test_dimension_mismatch_rejected(self, small_unigram):
        spec, params, _, _ = small_unigram
        ds = synth.generate_dataset(synth.GenConfig("bigram", 4, seed=0))
        with pytest.raises(ValueError, match="window"):
            evaluate.score_dataset(spec, params, ds)

    def test_trained_model_separates_text_from_noise(self, small_unigram):
        """Positives must outscore textless noise fields on average."""
        spec, params, _, _ = small_unigram
        rng = np.random.default_rng(5)
        pos_cfg = synth.GenConfig("unigram", 120, pos_frac=1.0, seed=60)
        pos = synth.generate_dataset(pos_cfg)
        pos_scores = evaluate.score_dataset(spec, params, pos).scores
        noise_patches = np.stack(
            [synth._quantize(synth.bg_noise(rng, 32, 32)) for _ in range(120)]
        )
        noise = synth.Dataset(noise_patches, np.zeros(120, np.uint8))
        noise_scores = evaluate.score_dataset(spec, params, noise).scores
        assert pos_scores.mean() > noise_scores.mean()
