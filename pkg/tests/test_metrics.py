import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as scipy_stats

from timefair.core import CostMatrix, RunRecord, Termination, TrajectoryPoint
from timefair.metrics import (
    amortize_tuning,
    anytime_ecdf,
    default_time_grid,
    ert,
    median_trajectory,
    performance_profile,
    rank_sum_test,
    time_to_target,
)

from conftest import random_record


def make_record(points, instance_id="sphere-d2", time_used=None):
    traj = tuple(TrajectoryPoint(*p) for p in points)
    return RunRecord(
        algorithm_id="alg",
        instance_id=instance_id,
        seed=0,
        trajectory=traj,
        time_used=time_used if time_used is not None else (traj[-1].elapsed if traj else 0.0),
        evals_used=traj[-1].evals if traj else 0,
        termination=Termination.INTERNAL_STOP,
    )


TWO_STEP = make_record([(1.0, 10, 7.0), (3.0, 30, 4.5)])


class TestTimeToTarget:
    def test_first_crossing(self):
        assert time_to_target(TWO_STEP, 5.0) == 3.0

    def test_first_point_qualifies(self):
        assert time_to_target(TWO_STEP, 7.0) == 1.0

    def test_never_attained(self):
        assert time_to_target(TWO_STEP, 1.0) is None

    def test_hits_never_exceed_time_used(self, rng):
        for _ in range(200):
            record = random_record(rng)
            for q in (-10.0, 0.0, 25.0, 80.0):
                t = time_to_target(record, q)
                assert t is None or t <= record.time_used


def ert_oracle(times, T):
    """Independent re-derivation with exact rational arithmetic."""
    total = Fraction(0)
    successes = 0
    for t in times:
        if t is None:
            total += Fraction(T)
        else:
            total += Fraction(min(t, T))
            successes += 1
    if successes == 0:
        return math.inf, 0
    return float(total / successes), successes


class TestErt:
    def test_uniform_successes(self):
        result = ert([2.0] * 5, T=10.0)
        assert result.ert == 2.0 and result.success_rate == 1.0

    def test_mixed_hand_computation(self):
        result = ert([3.0, 7.0, None, None], T=10.0)
        assert result.ert == 15.0
        assert result.success_rate == 0.5
        assert result.successes == 2 and result.runs == 4

    def test_nineteen_hits_one_failure(self):
        result = ert([18.0] * 19 + [None], T=50.0)
        assert abs(result.ert - 392.0 / 19.0) <= 1e-9 * (392.0 / 19.0)
        assert result.success_rate == 0.95

    def test_no_successes_is_infinite(self):
        result = ert([None, None, None], T=5.0)
        assert math.isinf(result.ert) and result.success_rate == 0.0

    def test_matches_oracle_on_random_fixtures(self, rng):
        for _ in range(1000):
            T = float(rng.uniform(0.5, 100.0))
            n = int(rng.integers(1, 51))
            times = [
                None if rng.random() < 0.3 else float(rng.uniform(0.0, T))
                for _ in range(n)
            ]
            expected, successes = ert_oracle(times, T)
            result = ert(times, T)
            assert result.successes == successes
            if math.isinf(expected):
                assert math.isinf(result.ert)
            else:
                assert math.isclose(result.ert, expected, rel_tol=1e-12)

    def test_adding_a_failure_never_decreases_ert(self, rng):
        for _ in range(200):
            T = 10.0
            n = int(rng.integers(1, 20))
            times = [None if rng.random() < 0.4 else float(rng.uniform(0, T)) for _ in range(n)]
            base = ert(times, T)
            worse = ert(times + [None], T)
            assert worse.ert >= base.ert

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            ert([], T=1.0)


def ecdf_oracle(records, targets_by_instance, grid):
    """Brute-force pair recount at every grid point."""
    fractions = []
    for t in grid:
        num = 0
        den = 0
        for record in records:
            for q in targets_by_instance[record.instance_id]:
                den += 1
                hit = None
                for point in record.trajectory:
                    if point.best_f <= q:
                        hit = point.elapsed
                        break
                if hit is not None and hit <= t:
                    num += 1
        fractions.append(num / den)
    return fractions


class TestAnytimeEcdf:
    def test_single_run_single_target(self):
        record = make_record([(5.0, 3, 0.5)])
        curve = anytime_ecdf([record], {"sphere-d2": [1.0]}, [1.0, 5.0, 10.0])
        assert curve.fraction == (0.0, 1.0, 1.0)

    def test_half_of_two_pairs(self):
        hit = make_record([(2.0, 2, 0.5)])
        miss = make_record([(1.0, 1, 9.0)])
        curve = anytime_ecdf([hit, miss], {"sphere-d2": [1.0]}, [1.0, 3.0])
        assert curve.fraction == (0.0, 0.5)
        assert curve.numerators == (0, 1)
        assert curve.denominators == (2, 2)

    def test_matches_bruteforce_recount(self, rng):
        records = [random_record(rng) for _ in range(40)]
        targets = {"sphere-d2": (60.0, 30.0, 0.0), "rastrigin-d5": (45.0, 10.0)}
        grid = sorted(float(rng.uniform(0, 20)) for _ in range(25))
        curve = anytime_ecdf(records, targets, grid)
        assert list(curve.fraction) == ecdf_oracle(records, targets, grid)

    def test_monotone_within_unit_interval(self, rng):
        records = [random_record(rng) for _ in range(30)]
        targets = {"sphere-d2": (50.0, 20.0), "rastrigin-d5": (50.0, 20.0)}
        curve = anytime_ecdf(records, targets, default_time_grid(10.0))
        assert all(0.0 <= f <= 1.0 for f in curve.fraction)
        assert all(b >= a for a, b in zip(curve.fraction, curve.fraction[1:]))

    def test_empty_groups_rejected(self):
        with pytest.raises(ValueError):
            anytime_ecdf([], {"sphere-d2": [1.0]}, [1.0])


class TestMedianTrajectory:
    def test_identical_runs_have_zero_width_interval(self):
        record = make_record([(1.0, 1, 5.0), (2.0, 2, 1.0)])
        curve = median_trajectory([record] * 4, [0.5, 1.5, 2.5], bootstrap_samples=200)
        assert curve.ci_lo == curve.ci_hi == curve.median
        assert curve.median == (math.inf, 5.0, 1.0)

    def test_odd_count_median(self):
        records = [make_record([(1.0, 1, v)]) for v in (1.0, 2.0, 9.0)]
        curve = median_trajectory(records, [2.0], bootstrap_samples=100)
        assert curve.median == (2.0,)

    def test_interval_contains_median_everywhere(self, rng):
        records = [random_record(rng, allow_empty=False) for _ in range(12)]
        curve = median_trajectory(records, default_time_grid(8.0), bootstrap_samples=1000)
        for lo, med, hi in zip(curve.ci_lo, curve.median, curve.ci_hi):
            assert lo <= med <= hi

    def test_too_few_bootstrap_samples_rejected(self):
        with pytest.raises(ValueError):
            median_trajectory([make_record([(1.0, 1, 0.0)])], [1.0], bootstrap_samples=10)


class TestPerformanceProfile:
    def test_single_solver_profile_is_flat_one(self):
        costs = CostMatrix(("a",), ("p1", "p2"), ((2.0,), (7.0,)))
        (curve,) = performance_profile(costs)
        assert curve.ratios == (1.0,)
        assert curve.rho == (1.0,)
        assert curve.rho_at(1.0) == 1.0 and curve.rho_at(100.0) == 1.0

    def test_hand_computed_two_by_two(self):
        costs = CostMatrix(("A", "B"), ("p1", "p2"), ((2.0, 4.0), (6.0, 3.0)))
        curve_a, curve_b = performance_profile(costs)
        assert curve_a.rho_at(1.0) == 0.5 and curve_a.rho_at(2.0) == 1.0
        assert curve_b.rho_at(1.0) == 0.5 and curve_b.rho_at(2.0) == 1.0
        assert curve_a.ratios == (1.0, 2.0)

    def test_all_failing_solver_has_zero_profile(self):
        costs = CostMatrix(("A", "B"), ("p1", "p2"), ((2.0, math.inf), (6.0, math.inf)))
        _, curve_b = performance_profile(costs)
        assert curve_b.ratios == ()
        assert curve_b.rho_at(1e9) == 0.0

    def test_all_failed_rows_are_excluded_with_count(self):
        costs = CostMatrix(
            ("A", "B"),
            ("p1", "p2", "p3"),
            ((2.0, 4.0), (math.inf, math.inf), (1.0, 1.0)),
        )
        curves = performance_profile(costs)
        assert all(c.n_instances == 2 and c.n_excluded == 1 for c in curves)
        included = performance_profile(costs, include_all_failed=True)
        assert all(c.n_instances == 3 and c.n_excluded == 0 for c in included)
        # failures never satisfy any finite tau
        assert included[0].rho_at(1e12) == pytest.approx(2 / 3)

    def test_monotone_in_unit_interval(self, rng):
        for _ in range(30):
            n_solvers = int(rng.integers(1, 5))
            n_instances = int(rng.integers(1, 7))
            rows = tuple(
                tuple(
                    math.inf if rng.random() < 0.2 else float(rng.uniform(0.1, 50))
                    for _ in range(n_solvers)
                )
                for _ in range(n_instances)
            )
            costs = CostMatrix(
                tuple(f"s{i}" for i in range(n_solvers)),
                tuple(f"p{i}" for i in range(n_instances)),
                rows,
            )
            for curve in performance_profile(costs):
                assert all(r >= 1.0 for r in curve.ratios)
                assert all(0.0 <= v <= 1.0 for v in curve.rho)
                assert all(b >= a for a, b in zip(curve.rho, curve.rho[1:]))

    @pytest.mark.parametrize("scale", [0.1, 3.0, 1000.0])
    def test_scale_invariance(self, scale, rng):
        rows = tuple(
            tuple(math.inf if rng.random() < 0.2 else float(rng.uniform(0.5, 20)) for _ in range(3))
            for _ in range(6)
        )
        solvers = ("x", "y", "z")
        instances = tuple(f"p{i}" for i in range(6))
        base = performance_profile(CostMatrix(solvers, instances, rows))
        scaled_rows = tuple(tuple(c * scale for c in row) for row in rows)
        scaled = performance_profile(CostMatrix(solvers, instances, scaled_rows))
        probe_taus = (1.0, 1.3, 2.0, 5.5, 47.0, 1e6)
        for b, s in zip(base, scaled):
            assert b.rho == s.rho
            assert np.allclose(b.ratios, s.ratios, rtol=1e-12)
            for tau in probe_taus:
                assert b.rho_at(tau) == s.rho_at(tau)


class TestAmortizeTuning:
    def _matrix(self):
        return CostMatrix(
            ("A", "B"),
            tuple(f"p{i}" for i in range(10)),
            tuple((float(i + 1), math.inf if i == 3 else float(2 * i + 1)) for i in range(10)),
        )

    def test_zero_surcharge_is_identity(self):
        costs = self._matrix()
        assert amortize_tuning(costs, {"A": 0.0}) == costs

    def test_uniform_spread_over_instances(self):
        costs = self._matrix()
        amortized = amortize_tuning(costs, {"A": 100.0})
        for before, after in zip(costs.costs, amortized.costs):
            assert after[0] == before[0] + 10.0
            assert after[1] == before[1]  # untouched solver

    def test_failures_stay_failures(self):
        amortized = amortize_tuning(self._matrix(), {"B": 50.0})
        assert math.isinf(amortized.costs[3][1])

    def test_amortized_profile_never_beats_original(self, rng):
        costs = self._matrix()
        amortized = amortize_tuning(costs, {"A": float(rng.uniform(1, 200))})
        base_a = performance_profile(costs)[0]
        amortized_a = performance_profile(amortized)[0]
        for tau in (1.0, 1.5, 2.0, 4.0, 10.0, 1e4):
            assert amortized_a.rho_at(tau) <= base_a.rho_at(tau)

    def test_unknown_solver_rejected(self):
        with pytest.raises(KeyError):
            amortize_tuning(self._matrix(), {"Z": 1.0})


class TestRankSumTest:
    def test_identical_samples_are_degenerate(self):
        result = rank_sum_test([4.0, 4.0, 4.0], [4.0, 4.0, 4.0])
        assert result.p_value == 1.0 and result.degenerate

    def test_full_separation_small_samples(self):
        result = rank_sum_test([1.0, 2.0, 3.0], [10.0, 11.0, 12.0])
        assert result.statistic == 0.0
        assert result.p_value == pytest.approx(0.1)
        assert result.method == "exact"

    def test_symmetric_under_sample_order(self, rng):
        a = list(rng.normal(size=5))
        b = list(rng.normal(size=7))
        assert rank_sum_test(a, b).p_value == pytest.approx(rank_sum_test(b, a).p_value)

    def test_matches_scipy_exact_without_ties(self, rng):
        for _ in range(50):
            a = list(rng.normal(size=int(rng.integers(3, 9))))
            b = list(rng.normal(loc=rng.normal(), size=int(rng.integers(3, 9))))
            mine = rank_sum_test(a, b)
            ref = scipy_stats.mannwhitneyu(a, b, alternative="two-sided", method="exact")
            assert mine.method == "exact"
            assert mine.p_value == pytest.approx(ref.pvalue, abs=1e-12)

    def test_large_samples_use_normal_approximation(self, rng):
        a = list(rng.normal(size=15))
        b = list(rng.normal(size=15))
        result = rank_sum_test(a, b)
        assert result.method == "normal-approximation"
        ref = scipy_stats.mannwhitneyu(
            a, b, alternative="two-sided", method="asymptotic", use_continuity=False
        )
        assert result.p_value == pytest.approx(ref.pvalue)

    def test_small_samples_rejected(self):
        with pytest.raises(ValueError):
            rank_sum_test([1.0, 2.0], [3.0, 4.0, 5.0])


class TestTimeGrid:
    def test_endpoints_are_exact(self):
        grid = default_time_grid(50.0)
        assert len(grid) == 64
        assert grid[0] == 0.05 and grid[-1] == 50.0
        assert all(b > a for a, b in zip(grid, grid[1:]))

    def test_bad_inputs_rejected(self):
        with pytest.raises(ValueError):
            default_time_grid(0.0)
        with pytest.raises(ValueError):
            default_time_grid(1.0, points=1)


@settings(max_examples=50)
@given(
    st.lists(
        st.one_of(st.none(), st.floats(min_value=0.0, max_value=100.0)),
        min_size=1,
        max_size=30,
    ),
    st.floats(min_value=0.1, max_value=100.0),
)
def test_ert_hypothesis_matches_oracle(times, T):
    expected, successes = ert_oracle(times, T)
    result = ert(times, T)
    assert result.successes == successes
    if math.isinf(expected):
        assert math.isinf(result.ert)
    else:
        assert math.isclose(result.ert, expected, rel_tol=1e-12)
