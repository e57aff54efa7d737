import numpy as np
import pytest

from cpdbench.costs import Penalty, manual_grid
from cpdbench.data import TimeSeries
from cpdbench.offline import (
    DetectorSpec,
    detect,
    detect_amoc,
    detect_binseg,
    detect_pelt,
    detect_segneigh,
    detect_zero,
    oracle_dp,
    partition_objective,
)

from .oracles import best_segmentation_bruteforce


def step_series(*levels, width=20, noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    parts = [np.full(width, float(level)) for level in levels]
    y = np.concatenate(parts)
    if noise:
        y = y + rng.normal(0.0, noise, y.size)
    return y


BIC_MEAN = Penalty.for_cost("bic", "mean")


class TestAmoc:
    def test_step_series(self):
        assert detect_amoc(step_series(0, 5), "mean", BIC_MEAN) == (21,)

    def test_constant_series(self):
        assert detect_amoc(np.zeros(40), "mean", BIC_MEAN) == ()

    def test_huge_penalty_blocks_split(self):
        assert detect_amoc(step_series(0, 5), "mean", Penalty("manual", 1e6)) == ()

    def test_split_position_is_exhaustive_argmin(self):
        rng = np.random.default_rng(4)
        y = np.concatenate([rng.normal(0, 1, 30), rng.normal(3, 1, 25)])
        got = detect_amoc(y, "mean", BIC_MEAN)
        direct = []
        from .oracles import segment_cost_direct

        for tau in range(2, y.size + 1):
            direct.append(
                (
                    segment_cost_direct(y, 1, tau - 1, "mean")
                    + segment_cost_direct(y, tau, y.size, "mean"),
                    tau,
                )
            )
        assert got == (min(direct)[1],)

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            detect_amoc(np.ones(3), "mean", BIC_MEAN, min_seg_len=2)

    def test_missing_rejected(self):
        with pytest.raises(ValueError):
            detect_amoc(np.array([1.0, np.nan, 2.0]), "mean", BIC_MEAN)


class TestBinseg:
    def test_single_step_matches_amoc(self):
        y = step_series(0, 5)
        assert detect_binseg(y, "mean", BIC_MEAN, 5) == detect_amoc(y, "mean", BIC_MEAN)

    def test_double_step(self):
        y = step_series(0, 5, 0)
        assert detect_binseg(y, "mean", BIC_MEAN, 5) == (21, 41)

    def test_budget_bound(self):
        y = step_series(0, 5, 0, 5)
        assert len(detect_binseg(y, "mean", BIC_MEAN, 1)) <= 1

    def test_exact_beats_or_ties_greedy(self):
        rng = np.random.default_rng(9)
        for trial in range(10):
            y = rng.normal(size=45) + np.repeat(rng.normal(0, 2, 3), 15)
            pen = Penalty("manual", float(rng.uniform(0.5, 10)))
            greedy = detect_binseg(y, "mean", pen, 5)
            exact = detect_segneigh(y, "mean", pen, 5)
            assert partition_objective(y, exact, "mean", pen) <= partition_objective(
                y, greedy, "mean", pen
            ) + 1e-9


class TestSegneigh:
    def test_step_series(self):
        assert detect_segneigh(step_series(0, 5), "mean", BIC_MEAN, 5) == (21,)

    @pytest.mark.parametrize("kind", ["mean", "meanvar"])
    def test_matches_exhaustive_enumeration(self, kind):
        rng = np.random.default_rng(17)
        for trial in range(25):
            n = int(rng.integers(8, 16))
            y = rng.normal(size=n) + np.repeat(
                rng.normal(0, 2, 2), [n // 2, n - n // 2]
            )
            penalty = Penalty.for_cost("bic", kind)
            got = detect_segneigh(y, kind, penalty, 3)
            from cpdbench.costs import penalty_value

            min_len = 1 if kind == "mean" else 2
            _, expected = best_segmentation_bruteforce(
                y, kind, penalty_value(penalty, n), 3, min_len
            )
            assert got == expected


class TestPeltAndOracle:
    def test_step_series(self):
        for fn in (detect_pelt, oracle_dp):
            assert fn(step_series(0, 5), "mean", BIC_MEAN) == (21,)

    def test_zero_penalty_overfits(self):
        y = np.random.default_rng(0).normal(size=30)
        cps = detect_pelt(y, "mean", Penalty("manual", 0.0))
        assert len(cps) == 29  # a change at every index but the first

    def test_extreme_penalty_returns_empty(self):
        assert detect_pelt(step_series(0, 5), "mean", Penalty("manual", 1e6)) == ()

    @pytest.mark.parametrize("kind", ["mean", "var", "meanvar"])
    def test_pelt_equals_oracle(self, kind):
        rng = np.random.default_rng(23)
        grid = manual_grid(9)
        for trial in range(30):
            n = int(rng.integers(10, 80))
            y = rng.normal(size=n) + np.repeat(
                rng.normal(0, 1.5, 4), np.diff(np.r_[0, np.sort(rng.integers(1, n, 3)), n])
            )
            penalty = Penalty.for_cost("manual", kind, float(grid[trial % grid.size]))
            pelt = detect_pelt(y, kind, penalty)
            exact = oracle_dp(y, kind, penalty)
            assert pelt == exact
            assert partition_objective(y, pelt, kind, penalty) == pytest.approx(
                partition_objective(y, exact, kind, penalty), abs=1e-9
            )

    def test_pelt_equals_oracle_under_mbic(self):
        rng = np.random.default_rng(31)
        for trial in range(10):
            y = rng.normal(size=60) + np.repeat(rng.normal(0, 2, 3), 20)
            penalty = Penalty.for_cost("mbic", "mean")
            assert detect_pelt(y, "mean", penalty) == oracle_dp(y, "mean", penalty)

    def test_oracle_dp_matches_exhaustive(self):
        rng = np.random.default_rng(41)
        from cpdbench.costs import penalty_value

        for trial in range(15):
            n = int(rng.integers(6, 13))
            y = rng.normal(size=n)
            penalty = Penalty("manual", float(rng.uniform(0.5, 4.0)))
            got = oracle_dp(y, "mean", penalty)
            _, expected = best_segmentation_bruteforce(
                y, "mean", penalty_value(penalty, n), n - 1
            )
            assert got == expected

    def test_lambda_monotonicity(self):
        y = np.random.default_rng(3).normal(size=80) + np.repeat(
            np.array([0.0, 4.0, 1.0, 5.0]), 20
        )
        counts = [
            len(detect_pelt(y, "mean", Penalty("manual", lam)))
            for lam in manual_grid(21)
        ]
        assert counts == sorted(counts, reverse=True)

    def test_translation_invariance(self):
        y = np.random.default_rng(8).normal(size=50) + np.repeat([0.0, 3.0], 25)
        penalty = Penalty.for_cost("bic", "mean")
        assert detect_pelt(y, "mean", penalty) == detect_pelt(y + 57.0, "mean", penalty)

    def test_respects_min_seg_len(self):
        y = np.random.default_rng(12).normal(size=40)
        cps = detect_pelt(y, "mean", Penalty("manual", 0.05), min_seg_len=5)
        cuts = [1, *cps, 41]
        assert all(b - a >= 5 for a, b in zip(cuts, cuts[1:]))


class TestZeroAndDispatch:
    def test_zero(self):
        assert detect_zero(np.ones(10)) == ()
        assert detect_zero(TimeSeries("s", np.random.default_rng(0).normal(size=(5, 3)))) == ()

    def test_detect_dispatch(self):
        series = TimeSeries("step", step_series(0, 5))
        for name, expected in [
            ("amoc", (21,)),
            ("binseg", (21,)),
            ("segneigh", (21,)),
            ("pelt", (21,)),
            ("oracle_dp", (21,)),
            ("zero", ()),
        ]:
            spec = DetectorSpec(name=name, penalty=BIC_MEAN)
            assert detect(spec, series) == expected

    def test_detect_rejects_multivariate(self):
        series = TimeSeries("mv", np.ones((10, 2)))
        with pytest.raises(ValueError):
            detect(DetectorSpec(name="pelt"), series)

    def test_unknown_detector_rejected(self):
        with pytest.raises(ValueError):
            DetectorSpec(name="wbs")

    def test_outputs_are_valid_change_point_sets(self):
        rng = np.random.default_rng(2)
        y = rng.normal(size=60) + np.repeat([0, 3, 0], 20)
        for name in ("amoc", "binseg", "segneigh", "pelt", "oracle_dp"):
            cps = detect(DetectorSpec(name=name, penalty=BIC_MEAN), TimeSeries("s", y))
            assert list(cps) == sorted(set(cps))
            assert all(2 <= c <= 60 for c in cps)
