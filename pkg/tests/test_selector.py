import json
import math

import numpy as np
import pytest

from conftest import make_dataset, random_rows
from tdselector.errors import AlphaSearchError, EmptyPoolError
from tdselector.selector import (
    NormalizationContext,
    NormalizationMethod,
    SelectorConfig,
    alpha_grid,
    normalize_defect_count,
    optimize_alpha,
    score_pair,
    select_from_similarity,
    select_training_set,
    select_with_bug_threshold,
    canonical_pool,
)
from tdselector.similarity import similarity_matrix, similarity_of

CTX = NormalizationContext(min=0, max=10)


class TestNormalization:
    def test_logistic_zero(self):
        assert normalize_defect_count("logistic", 0) == pytest.approx(0.0, abs=1e-15)

    def test_logistic_three(self):
        # direct evaluation: 1/(1+e^-3) - 0.5
        expected = 1.0 / (1.0 + math.exp(-3)) - 0.5
        got = normalize_defect_count("logistic", 3)
        assert got == pytest.approx(expected, abs=1e-15)
        assert got == pytest.approx(0.45257, abs=5e-6)

    def test_sqrt_three(self):
        assert normalize_defect_count("sqrt", 3) == pytest.approx(0.5, abs=1e-15)

    def test_log_nine(self):
        assert normalize_defect_count("log", 9) == pytest.approx(1.0, abs=1e-15)

    def test_arctan_one(self):
        assert normalize_defect_count("arctan", 1) == pytest.approx(0.5, abs=1e-15)

    def test_linear(self):
        ctx = NormalizationContext(min=0, max=4)
        assert normalize_defect_count("linear", 0, ctx) == 0.0
        assert normalize_defect_count("linear", 4, ctx) == 1.0
        assert normalize_defect_count("linear", 1, ctx) == pytest.approx(0.25)

    def test_linear_degenerate_pool(self):
        ctx = NormalizationContext(min=2, max=2)
        assert normalize_defect_count("linear", 2, ctx) == 0.0

    def test_linear_requires_context(self):
        with pytest.raises(ValueError):
            normalize_defect_count("linear", 1)

    def test_log_unclipped_beyond_nine(self):
        assert normalize_defect_count("log", 99) == pytest.approx(2.0)
        assert normalize_defect_count("log", 99, clip_log=True) == 1.0

    def test_monotone_nondecreasing_all_methods(self):
        xs = range(0, 1001)
        for method in NormalizationMethod:
            values = [normalize_defect_count(method, x, CTX._replace_max(1000)
                                             if False else
                                             NormalizationContext(0, 1000))
                      for x in xs]
            assert all(a <= b for a, b in zip(values, values[1:]))
            if method is not NormalizationMethod.LINEAR:
                assert all(a < b for a, b in zip(values, values[1:]))

    def test_ranges(self):
        ctx = NormalizationContext(0, 1000)
        for x in range(0, 1001, 7):
            assert 0.0 <= normalize_defect_count("linear", x, ctx) <= 1.0
            assert 0.0 <= normalize_defect_count("sqrt", x) < 1.0
            assert 0.0 <= normalize_defect_count("arctan", x) < 1.0
            assert 0.0 <= normalize_defect_count("logistic", x) < 0.5
            assert normalize_defect_count("log", x) >= 0.0

    def test_negative_count_rejected(self):
        with pytest.raises(ValueError):
            normalize_defect_count("sqrt", -1)


class TestScorePair:
    def _instances(self):
        ds = make_dataset("p", [((1.0, 0.0), 4), ((0.0, 1.0), 0)])
        return ds.instances[0], ds.instances[1]

    def test_alpha_one_is_similarity_only(self):
        cand, test = self._instances()
        cfg = SelectorConfig(alpha=1.0, normalization="sqrt")
        sc = score_pair(cand, test, cfg)
        assert sc.score == pytest.approx(sc.sim)

    def test_alpha_zero_is_counts_only(self):
        cand, test = self._instances()
        cfg = SelectorConfig(alpha=0.0, normalization="sqrt")
        sc = score_pair(cand, test, cfg)
        assert sc.score == pytest.approx(sc.norm_defects)

    def test_midpoint_arithmetic(self):
        # alpha 0.5, sim 0.8, norm 0.4 -> 0.6, checked through the dataclass
        cand, test = self._instances()
        cfg = SelectorConfig(alpha=0.5, normalization="sqrt")
        sc = score_pair(cand, test, cfg)
        assert sc.score == pytest.approx(0.5 * sc.sim + 0.5 * sc.norm_defects)
        assert 0.5 * 0.8 + 0.5 * 0.4 == pytest.approx(0.6)

    def test_affine_in_alpha(self):
        # three-point collinearity on random inputs
        rng = np.random.default_rng(0)
        ds = make_dataset("p", random_rows(rng, 10, 4))
        for _ in range(25):
            cand, test = rng.choice(ds.instances, size=2, replace=False)
            scores = []
            for alpha in (0.0, 0.5, 1.0):
                cfg = SelectorConfig(alpha=alpha, normalization="logistic")
                scores.append(score_pair(cand, test, cfg).score)
            assert scores[1] == pytest.approx((scores[0] + scores[2]) / 2,
                                              abs=1e-12)


class TestSelectTrainingSet:
    def test_worked_example_rank_table(self, fig2_pool, fig2_test_set):
        # Euclidean, similarity only, k=1: three-way tie at distance 0.5
        cfg = SelectorConfig(similarity="euclidean", alpha=1.0, k=1)
        result = select_training_set(fig2_pool, fig2_test_set, cfg)
        assert {i.row for i in result.selected} == {0, 1, 4}  # I1, I2, I5
        ranked = result.per_test_topk[fig2_test_set.instances[0].uid]
        assert ranked == ["source@1.0:0", "source@1.0:1", "source@1.0:4"]
        # the full ranking continues I4 then I3
        cfg_all = SelectorConfig(similarity="euclidean", alpha=1.0, k=5)
        full = select_training_set(fig2_pool, fig2_test_set, cfg_all)
        order = full.per_test_topk[fig2_test_set.instances[0].uid]
        assert order == ["source@1.0:0", "source@1.0:1", "source@1.0:4",
                         "source@1.0:3", "source@1.0:2"]

    def test_identical_topk_lists_deduplicate(self):
        rng = np.random.default_rng(1)
        pool = make_dataset("p", random_rows(rng, 20, 3)).instances
        test = make_dataset("t", [((0.0, 0.0, 0.0), 0),
                                  ((0.0, 0.0, 0.0), 0)])
        cfg = SelectorConfig(similarity="euclidean", alpha=1.0, k=4)
        result = select_training_set(pool, test, cfg)
        lists = list(result.per_test_topk.values())
        assert lists[0] == lists[1]
        assert len(result.selected) == len(lists[0])

    def test_disjoint_topk_lists_attain_k_times_l(self):
        # two far-apart test instances with their own close candidate clusters
        pool_rows = [((float(i), 0.0), 0) for i in range(5)]
        pool_rows += [((100.0 + i, 0.0), 0) for i in range(5)]
        pool = make_dataset("p", pool_rows).instances
        test = make_dataset("t", [((0.0, 0.0), 0), ((100.0, 0.0), 0)])
        cfg = SelectorConfig(similarity="euclidean", alpha=1.0, k=3)
        result = select_training_set(pool, test, cfg)
        assert len(result.selected) == 6

    def test_k_larger_than_pool_returns_whole_pool(self):
        rng = np.random.default_rng(2)
        pool = make_dataset("p", random_rows(rng, 4, 3)).instances
        test = make_dataset("t", random_rows(rng, 2, 3))
        cfg = SelectorConfig(alpha=0.7, k=50)
        result = select_training_set(pool, test, cfg)
        assert len(result.selected) == 4

    def test_tie_inclusive_cut_beyond_k(self):
        # four candidates tied at distance 1, k=2 keeps all four
        pool_rows = [((1.0, 0.0), 0), ((-1.0, 0.0), 0),
                     ((0.0, 1.0), 0), ((0.0, -1.0), 0), ((5.0, 5.0), 0)]
        pool = make_dataset("p", pool_rows).instances
        test = make_dataset("t", [((0.0, 0.0), 0)])
        cfg = SelectorConfig(similarity="euclidean", alpha=1.0, k=2)
        result = select_training_set(pool, test, cfg)
        assert {i.row for i in result.selected} == {0, 1, 2, 3}

    def test_empty_pool_rejected(self, fig2_test_set):
        with pytest.raises(EmptyPoolError):
            select_training_set([], fig2_test_set, SelectorConfig())

    def test_determinism_byte_identical(self):
        rng = np.random.default_rng(3)
        pool = make_dataset("p", random_rows(rng, 30, 4)).instances
        test = make_dataset("t", random_rows(rng, 6, 4))
        cfg = SelectorConfig(similarity="manhattan", normalization="log",
                             alpha=0.4, k=5)

        def snapshot():
            r = select_training_set(pool, test, cfg)
            return json.dumps({
                "selected": [i.uid for i in r.selected],
                "topk": r.per_test_topk,
                "alpha": r.alpha_used,
            }, sort_keys=True)

        assert snapshot() == snapshot()

    def test_selected_sorted_and_unique(self):
        rng = np.random.default_rng(4)
        pool = (make_dataset("b", random_rows(rng, 10, 3)).instances
                + make_dataset("a", random_rows(rng, 10, 3)).instances)
        test = make_dataset("t", random_rows(rng, 4, 3))
        result = select_training_set(pool, test,
                                     SelectorConfig(alpha=0.5, k=3))
        uids = [i.uid for i in result.selected]
        assert uids == sorted(uids)
        assert len(set(uids)) == len(uids)
        topk_union = set().union(*result.per_test_topk.values())
        assert set(uids) == topk_union

    def test_matches_precomputed_similarity_entry_point(self):
        rng = np.random.default_rng(5)
        pool = make_dataset("p", random_rows(rng, 25, 4)).instances
        test = make_dataset("t", random_rows(rng, 5, 4))
        for kind in ("cosine", "euclidean", "manhattan"):
            cfg = SelectorConfig(similarity=kind, normalization="arctan",
                                 alpha=0.3, k=4)
            direct = select_training_set(pool, test, cfg)
            ordered = canonical_pool(pool)
            sim = similarity_matrix(kind, test.metrics_matrix(),
                                    np.vstack([i.metrics for i in ordered]))
            cached = select_from_similarity(ordered, test, sim, cfg)
            assert [i.uid for i in direct.selected] == \
                [i.uid for i in cached.selected]
            assert direct.per_test_topk == cached.per_test_topk


class TestNoDIdentity:
    def test_alpha_one_ignores_defect_counts(self):
        # similarity-only selection must not move when counts are perturbed
        rng = np.random.default_rng(6)
        for trial in range(20):
            pool_ds = make_dataset("p", random_rows(rng, 15, 3))
            test = make_dataset("t", random_rows(rng, 3, 3))
            cfg = SelectorConfig(similarity="euclidean", alpha=1.0, k=4,
                                 normalization="linear")
            baseline = select_training_set(pool_ds.instances, test, cfg)
            perturbed = make_dataset("p", [
                (tuple(i.metrics), int(rng.integers(0, 50)))
                for i in pool_ds.instances
            ])
            shuffled = select_training_set(perturbed.instances, test, cfg)
            assert [i.uid for i in baseline.selected] == \
                [i.uid for i in shuffled.selected]


class TestOptimizeAlpha:
    def test_grid_shape_and_validation(self):
        assert alpha_grid(0.1) == pytest.approx(
            [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0])
        assert len(alpha_grid(0.1)) == 11
        assert alpha_grid(0.5) == [0.0, 0.5, 1.0]
        with pytest.raises(ValueError):
            alpha_grid(0.3)

    def test_all_equal_aucs_return_smallest_alpha(self, fig2_pool,
                                                  fig2_test_set):
        cfg = SelectorConfig(k=2)
        result = optimize_alpha(fig2_pool, fig2_test_set, cfg,
                                evaluate=lambda sel: 0.5)
        assert result.alpha == 0.0
        assert result.best_auc == 0.5
        assert len(result.trace) == 11
        assert [a for a, _ in result.trace] == alpha_grid(0.1)

    def test_trace_matches_brute_force_grid(self, fig2_pool, fig2_test_set):
        # oracle: enumerate the grid by hand with an arbitrary scoring oracle
        cfg = SelectorConfig(k=2, normalization="sqrt")

        def fake_auc(selection):
            return sum(i.defect_count for i in selection.selected) / 10.0

        result = optimize_alpha(fig2_pool, fig2_test_set, cfg, fake_auc)
        expected = []
        from dataclasses import replace
        for alpha in alpha_grid(0.1):
            sel = select_training_set(fig2_pool, fig2_test_set,
                                      replace(cfg, alpha=alpha))
            expected.append((alpha, fake_auc(sel)))
        assert result.trace == expected
        best = max(expected, key=lambda t: t[1])[1]
        assert result.best_auc == best
        assert result.alpha == min(a for a, v in expected if v == best)

    def test_informative_counts_pull_alpha_below_one(self):
        # pool where counts flag the truly defective region but metrics are
        # noisy: verified against the brute-force grid
        rng = np.random.default_rng(7)
        direction = np.array([1.0, -0.5, 0.25])
        pool_rows = []
        for _ in range(60):
            x = rng.normal(size=3)
            defective = x @ direction > 0
            count = int(1 + rng.poisson(3)) if defective else 0
            noisy = tuple(x + rng.normal(scale=1.5, size=3))
            pool_rows.append((noisy, count))
        test_rows = []
        for _ in range(30):
            x = rng.normal(size=3)
            test_rows.append((tuple(x), int(x @ direction > 0)))
        pool = make_dataset("p", pool_rows).instances
        test = make_dataset("t", test_rows)

        from tdselector.learner import auc, predict_proba_matrix, train

        def evaluate(selection):
            model = train(selection.selected)
            probs = predict_proba_matrix(model, test.metrics_matrix())
            return auc(probs, test.labels())

        cfg = SelectorConfig(similarity="euclidean", normalization="linear",
                             k=8)
        result = optimize_alpha(pool, test, cfg, evaluate)
        assert result.alpha < 1.0
        auc_at_one = dict(result.trace)[1.0]
        assert result.best_auc >= auc_at_one

    def test_oracle_failure_reports_alpha(self, fig2_pool, fig2_test_set):
        def explode(selection):
            raise RuntimeError("boom")

        with pytest.raises(AlphaSearchError) as err:
            optimize_alpha(fig2_pool, fig2_test_set, SelectorConfig(k=1),
                           explode)
        assert err.value.alpha == 0.0


class TestBugThreshold:
    def test_worked_example_forced_instance(self, fig2_pool, fig2_test_set):
        cfg = SelectorConfig(similarity="euclidean", alpha=1.0, k=1,
                             bug_threshold=3)
        result = select_with_bug_threshold(fig2_pool, fig2_test_set, cfg)
        assert result.forced_uids == {"source@1.0:0"}  # I1, 3 bugs
        # the scored stage runs on I2..I5 only; I2/I5 tie at distance 0.5
        ranked = result.per_test_topk[fig2_test_set.instances[0].uid]
        assert ranked == ["source@1.0:1", "source@1.0:4"]
        assert {i.row for i in result.selected} == {0, 1, 4}

    def test_threshold_one_on_all_defective_pool(self, fig2_test_set):
        pool = make_dataset("p", [((1.0, 0, 0, 0), 1), ((0, 1.0, 0, 0), 2),
                                  ((0, 0, 1.0, 0), 3)]).instances
        cfg = SelectorConfig(bug_threshold=1, k=1)
        result = select_with_bug_threshold(pool, fig2_test_set, cfg)
        assert len(result.selected) == 3
        assert len(result.forced_uids) == 3

    def test_threshold_above_all_counts_equals_plain_selection(
            self, fig2_pool, fig2_test_set):
        cfg = SelectorConfig(similarity="euclidean", alpha=1.0, k=2,
                             bug_threshold=99)
        forced = select_with_bug_threshold(fig2_pool, fig2_test_set, cfg)
        plain = select_training_set(fig2_pool, fig2_test_set,
                                    SelectorConfig(similarity="euclidean",
                                                   alpha=1.0, k=2))
        assert [i.uid for i in forced.selected] == \
            [i.uid for i in plain.selected]
        assert forced.forced_uids == frozenset()

    def test_all_forced_skips_scored_stage(self, fig2_test_set, caplog):
        pool = make_dataset("p", [((1.0, 0, 0, 0), 5), ((0, 1.0, 0, 0), 7)]).instances
        cfg = SelectorConfig(bug_threshold=2, k=1)
        with caplog.at_level("WARNING"):
            result = select_with_bug_threshold(pool, fig2_test_set, cfg)
        assert len(result.selected) == 2
        assert result.per_test_topk == {}
        assert any("captured the whole pool" in r.message for r in caplog.records)

    def test_random_pools_forced_size_and_dedup(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            pool = make_dataset("p", random_rows(rng, 25, 3, max_count=6)).instances
            test = make_dataset("t", random_rows(rng, 4, 3))
            cfg = SelectorConfig(alpha=0.5, k=3, bug_threshold=3)
            result = select_with_bug_threshold(pool, test, cfg)
            expected_forced = {i.uid for i in pool if i.defect_count >= 3}
            assert result.forced_uids == expected_forced
            uids = [i.uid for i in result.selected]
            assert len(set(uids)) == len(uids)
            assert expected_forced <= set(uids)


class TestConfigValidation:
    def test_bounds(self):
        with pytest.raises(ValueError):
            SelectorConfig(alpha=1.5)
        with pytest.raises(ValueError):
            SelectorConfig(k=0)
        with pytest.raises(ValueError):
            SelectorConfig(alpha_step=0.0)
        with pytest.raises(ValueError):
            SelectorConfig(bug_threshold=0)
        with pytest.raises(ValueError):
            SelectorConfig(distance_transform="nope")
