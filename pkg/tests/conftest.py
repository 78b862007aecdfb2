import numpy as np
import pytest

from timefair.core import RunRecord, Termination, TrajectoryPoint

TERMINATIONS = (
    Termination.TARGET_REACHED,
    Termination.BUDGET_EXHAUSTED,
    Termination.INTERNAL_STOP,
)


def random_record(rng: np.random.Generator, allow_empty: bool = True) -> RunRecord:
    """A structurally valid RunRecord with a random improvement trajectory."""
    n_points = int(rng.integers(0 if allow_empty else 1, 9))
    points = []
    elapsed = 0.0
    evals = 0
    best = float(rng.normal(50.0, 20.0))
    for _ in range(n_points):
        elapsed += float(rng.uniform(1e-4, 2.0))
        evals += int(rng.integers(1, 40))
        best -= float(rng.uniform(1e-6, 10.0))
        points.append(TrajectoryPoint(elapsed=elapsed, evals=evals, best_f=best))
    time_used = elapsed + float(rng.uniform(0.0, 1.0))
    evals_used = evals + int(rng.integers(0, 20)) if n_points else 0
    return RunRecord(
        algorithm_id=str(rng.choice(["alpha", "beta", "gamma"])),
        instance_id=str(rng.choice(["sphere-d2", "rastrigin-d5"])),
        seed=int(rng.integers(0, 2**64, dtype=np.uint64)),
        trajectory=tuple(points),
        time_used=time_used,
        evals_used=evals_used,
        termination=TERMINATIONS[int(rng.integers(0, 3))],
        repetition=int(rng.integers(0, 5)),
        run_index=int(rng.integers(0, 5)),
        n_clamped=int(rng.integers(0, 3)),
        max_step_seconds=float(rng.uniform(0.0, 0.5)),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
