"""Quantitative analysis of run logs.

All operations are pure functions over immutable inputs. Time-to-target
uses the non-strict success rule best_f <= q. A target time of ``None``
means the target was not reached within the run (NotReached).
"""

from __future__ import annotations

import itertools
import logging
import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import CostMatrix, ErtResult, RunRecord

logger = logging.getLogger(__name__)

DEFAULT_RELATIVE_LADDER = (10.0, 1.0, 0.1, 0.01, 0.001)
DEFAULT_GRID_POINTS = 64
DEFAULT_BOOTSTRAP_SAMPLES = 1000
DEFAULT_CONFIDENCE = 0.95


def default_time_grid(T: float, points: int = DEFAULT_GRID_POINTS) -> tuple[float, ...]:
    """Logarithmic grid from T/1000 to T; anytime behavior spans decades."""
    if T <= 0:
        raise ValueError("T must be > 0")
    if points < 2:
        raise ValueError("points must be >= 2")
    grid = np.geomspace(1e-3 * T, T, points)
    grid[0] = 1e-3 * T
    grid[-1] = T  # pin endpoints exactly so hits at T are counted
    return tuple(float(t) for t in grid)


def time_to_target(record: RunRecord, q: float, T: float = math.inf) -> Optional[float]:
    """Earliest elapsed at which the run attained best_f <= q, else None.

    Hits after T (malformed logs only; runs never outlive the budget) do
    not count.
    """
    for point in record.trajectory:
        if point.best_f <= q:
            return point.elapsed if point.elapsed <= T else None
    return None


def ert(
    times: Sequence[Optional[float]],
    T: float,
    target: Optional[float] = None,
) -> ErtResult:
    """Expected running time: sum of min(t_i, T) over successes.

    Unsuccessful runs (None) contribute T to the numerator and nothing to
    the success count; zero successes yield +inf with the success rate
    still reported. Successful times are clamped at T for robustness
    against malformed logs, though first-hit logging keeps them <= T.
    """
    times = list(times)
    if not times:
        raise ValueError("ert requires at least one run time")
    if T <= 0:
        raise ValueError("T must be > 0")
    successes = sum(1 for t in times if t is not None)
    total = sum(T if t is None else min(t, T) for t in times)
    value = total / successes if successes else math.inf
    return ErtResult(
        target=target,
        ert=value,
        successes=successes,
        runs=len(times),
        success_rate=successes / len(times),
    )


@dataclass(frozen=True)
class EcdfCurve:
    """Fraction of (run, target) pairs attained by each grid time."""

    time_grid: tuple[float, ...]
    fraction: tuple[float, ...]
    numerators: tuple[int, ...]
    denominators: tuple[int, ...]


def anytime_ecdf(
    records: Sequence[RunRecord],
    targets_by_instance: Mapping[str, Sequence[float]],
    time_grid: Sequence[float],
) -> EcdfCurve:
    """ECDF of first-hit times over all (run, target) pairs.

    Aggregates across instances and repetitions: each run contributes one
    pair per target defined for its instance.
    """
    grid = tuple(float(t) for t in time_grid)
    if not grid or any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("time_grid must be non-empty and ordered")
    hits: list[float] = []
    pairs = 0
    for record in records:
        for q in targets_by_instance[record.instance_id]:
            pairs += 1
            t = time_to_target(record, q)
            if t is not None:
                hits.append(t)
    if pairs == 0:
        raise ValueError("no (run, target) pairs to aggregate")
    hits.sort()
    numerators = tuple(bisect_right(hits, t) for t in grid)
    return EcdfCurve(
        time_grid=grid,
        fraction=tuple(n / pairs for n in numerators),
        numerators=numerators,
        denominators=(pairs,) * len(grid),
    )


@dataclass(frozen=True)
class MedianCurve:
    """Median best-so-far over runs with a bootstrap confidence band.

    +inf marks grid times before a median run has evaluated anything.
    """

    time_grid: tuple[float, ...]
    median: tuple[float, ...]
    ci_lo: tuple[float, ...]
    ci_hi: tuple[float, ...]


def _best_so_far_matrix(records: Sequence[RunRecord], grid: Sequence[float]) -> np.ndarray:
    values = np.full((len(records), len(grid)), math.inf)
    for i, record in enumerate(records):
        elapsed = [p.elapsed for p in record.trajectory]
        best = [p.best_f for p in record.trajectory]
        for j, t in enumerate(grid):
            k = bisect_right(elapsed, t)
            if k:
                values[i, j] = best[k - 1]  # carry last improvement forward
    return values


def median_trajectory(
    records: Sequence[RunRecord],
    time_grid: Sequence[float],
    bootstrap_samples: int = DEFAULT_BOOTSTRAP_SAMPLES,
    confidence: float = DEFAULT_CONFIDENCE,
    seed: int = 0,
) -> MedianCurve:
    """Per-grid-point median of best-so-far values with a percentile
    bootstrap CI over runs.

    Quantiles of the bootstrap medians use order statistics (no
    interpolation) so +inf sentinels never produce NaN.
    """
    records = list(records)
    if not records:
        raise ValueError("median_trajectory requires at least one record")
    if bootstrap_samples < 100:
        raise ValueError("bootstrap_samples must be >= 100")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    grid = tuple(float(t) for t in time_grid)
    values = _best_so_far_matrix(records, grid)
    med = np.median(values, axis=0)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(records), size=(bootstrap_samples, len(records)))
    boot_medians = np.median(values[idx], axis=1)  # (B, grid)
    alpha = (1.0 - confidence) / 2.0
    lo = np.quantile(boot_medians, alpha, axis=0, method="lower")
    hi = np.quantile(boot_medians, 1.0 - alpha, axis=0, method="higher")
    return MedianCurve(
        time_grid=grid,
        median=tuple(float(v) for v in med),
        ci_lo=tuple(float(v) for v in lo),
        ci_hi=tuple(float(v) for v in hi),
    )


@dataclass(frozen=True)
class ProfileCurve:
    """One solver's performance profile: rho(tau) over cost ratios.

    `ratios` are the breakpoints (sorted, >= 1); `rho` the value from that
    breakpoint on. rho converges to the solver's finite-cost fraction;
    failures never satisfy any finite tau.
    """

    solver_id: str
    ratios: tuple[float, ...]
    rho: tuple[float, ...]
    n_instances: int
    n_excluded: int

    def rho_at(self, tau: float) -> float:
        k = bisect_right(self.ratios, tau)
        return self.rho[k - 1] if k else 0.0


def performance_profile(
    costs: CostMatrix, include_all_failed: bool = False
) -> list[ProfileCurve]:
    """Dolan-Moré profiles with time as the cost measure.

    Instances where every solver failed have no finite ratio reference;
    they are excluded from the instance count (with a warning) unless
    `include_all_failed` counts them against all solvers equally.
    """
    excluded = set() if include_all_failed else set(costs.all_failed_instances)
    if excluded:
        logger.warning(
            "performance_profile: excluding %d all-failed instance(s): %s",
            len(excluded),
            ", ".join(sorted(excluded)),
        )
    kept_rows = [
        row
        for instance, row in zip(costs.instances, costs.costs)
        if instance not in excluded
    ]
    n = len(kept_rows)
    curves = []
    for j, solver in enumerate(costs.solvers):
        finite_ratios = []
        for row in kept_rows:
            best = min(row)
            if math.isfinite(row[j]) and math.isfinite(best):
                finite_ratios.append(row[j] / best)
        finite_ratios.sort()
        ratios: list[float] = []
        rho: list[float] = []
        for k, r in enumerate(finite_ratios, start=1):
            if ratios and r == ratios[-1]:
                rho[-1] = k / n
            else:
                ratios.append(r)
                rho.append(k / n)
        curves.append(
            ProfileCurve(
                solver_id=solver,
                ratios=tuple(ratios),
                rho=tuple(rho),
                n_instances=n,
                n_excluded=len(excluded),
            )
        )
    return curves


def amortize_tuning(costs: CostMatrix, tuning_time: Mapping[str, float]) -> CostMatrix:
    """Spread per-solver tuning time uniformly over the instance set.

    Each finite cost of solver s gains tuning_time[s] / n_instances;
    failures stay failures.
    """
    for solver, seconds in tuning_time.items():
        if solver not in costs.solvers:
            raise KeyError(f"unknown solver {solver!r} in tuning_time")
        if seconds < 0:
            raise ValueError("tuning_time must be >= 0")
    n = len(costs.instances)
    surcharge = [tuning_time.get(s, 0.0) / n for s in costs.solvers]
    rows = tuple(
        tuple(c + surcharge[j] if math.isfinite(c) else c for j, c in enumerate(row))
        for row in costs.costs
    )
    return CostMatrix(solvers=costs.solvers, instances=costs.instances, costs=rows)


@dataclass(frozen=True)
class RankSumResult:
    statistic: float  # Mann-Whitney U of the first sample
    p_value: float
    method: str  # "exact" or "normal-approximation"
    degenerate: bool = False  # all pooled values equal


def _midranks(pooled: Sequence[float]) -> list[float]:
    order = sorted(range(len(pooled)), key=pooled.__getitem__)
    ranks = [0.0] * len(pooled)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        mid = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = mid
        i = j + 1
    return ranks


def rank_sum_test(sample_a: Sequence[float], sample_b: Sequence[float]) -> RankSumResult:
    """Two-sided Mann-Whitney U test.

    Exact permutation enumeration (tie-aware) when the pooled size is at
    most 20; tie-corrected normal approximation (no continuity
    correction) otherwise. All-equal samples are degenerate: p = 1.
    """
    a = [float(v) for v in sample_a]
    b = [float(v) for v in sample_b]
    if len(a) < 3 or len(b) < 3:
        raise ValueError("each sample needs at least 3 values")
    n1, n2 = len(a), len(b)
    pooled = a + b
    ranks = _midranks(pooled)
    u_obs = sum(ranks[:n1]) - n1 * (n1 + 1) / 2.0
    mu = n1 * n2 / 2.0
    if len(set(pooled)) == 1:
        return RankSumResult(statistic=u_obs, p_value=1.0, method="exact", degenerate=True)
    if n1 + n2 <= 20:
        d_obs = abs(u_obs - mu)
        hits = 0
        total = 0
        for combo in itertools.combinations(range(n1 + n2), n1):
            u = sum(ranks[i] for i in combo) - n1 * (n1 + 1) / 2.0
            # tolerance absorbs float noise in midrank sums
            if abs(u - mu) >= d_obs - 1e-9:
                hits += 1
            total += 1
        return RankSumResult(statistic=u_obs, p_value=hits / total, method="exact")
    n = n1 + n2
    tie_counts = [len(list(g)) for _, g in itertools.groupby(sorted(pooled))]
    tie_term = sum(t**3 - t for t in tie_counts) / (n * (n - 1))
    sigma2 = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    z = (u_obs - mu) / math.sqrt(sigma2)
    p = math.erfc(abs(z) / math.sqrt(2.0))
    return RankSumResult(statistic=u_obs, p_value=min(1.0, p), method="normal-approximation")
