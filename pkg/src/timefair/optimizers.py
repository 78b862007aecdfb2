"""Reference optimizers behind an iteration-granular stepping contract.

The protocol drives every algorithm through the same loop: ``init`` builds
a state without consuming evaluations, ``step`` performs exactly one
iteration through the run's counting evaluator. Budget checks happen
between steps, so per-step evaluation counts are declared up front
(`evals_per_step`) and synthetic per-step charges are enumerable
(`step_charges`), which lets the virtual-mode runner predict whether the
next step still fits the budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .problems import ProblemInstance
from .seeds import subseed


@dataclass
class StepReport:
    """Outcome of one iteration."""

    evals: int
    new_best: Optional[tuple[np.ndarray, float]] = None
    stop: bool = False  # algorithm declares it is done (InternalStop)


@dataclass(frozen=True)
class PsoParams:
    """Constriction-style global-best PSO coefficients."""

    swarm_size: int = 40
    inertia: float = 0.7298
    cognitive: float = 1.49618
    social: float = 1.49618
    velocity_clamp: float = 0.5  # fraction of the per-coordinate bound range

    def __post_init__(self) -> None:
        if self.swarm_size < 2:
            raise ValueError("swarm_size must be >= 2")
        if not 0.0 <= self.inertia < 1.0:
            raise ValueError("inertia must lie in [0, 1)")
        if self.cognitive <= 0 or self.social <= 0:
            raise ValueError("cognitive and social coefficients must be > 0")
        if self.velocity_clamp <= 0:
            raise ValueError("velocity_clamp must be > 0")


class Algorithm:
    """Common surface shared by concrete optimizers and wrappers."""

    kind: str = ""
    label: str = ""
    evals_per_step: int = 1

    def step_charges(self) -> list[float]:
        """Explicit per-step clock charges, outermost wrapper first."""
        return []

    def describe(self) -> dict:
        """Effective parameters, echoed into run headers and the manifest."""
        raise NotImplementedError

    def init(self, instance: ProblemInstance, seed: int):
        raise NotImplementedError

    def step(self, state, evaluator) -> StepReport:
        raise NotImplementedError


@dataclass
class RandomSearchState:
    algorithm_id: str
    seed: int
    rng: np.random.Generator
    iterations: int = 0
    best_x: Optional[np.ndarray] = None
    best_f: float = math.inf


class RandomSearch(Algorithm):
    """Uniform random sampling; one evaluation per step."""

    kind = "random-search"
    evals_per_step = 1

    def __init__(self, max_iterations: Optional[int] = None):
        if max_iterations is not None and max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        self.max_iterations = max_iterations
        self.label = self.kind

    def describe(self) -> dict:
        return {"kind": self.kind, "max_iterations": self.max_iterations}

    def init(self, instance: ProblemInstance, seed: int) -> RandomSearchState:
        return RandomSearchState(
            algorithm_id=self.label, seed=seed, rng=np.random.default_rng(seed)
        )

    def step(self, state: RandomSearchState, evaluator) -> StepReport:
        x = evaluator.instance.uniform(state.rng)
        f = evaluator.evaluate(x)
        new_best = None
        if f < state.best_f:
            state.best_x, state.best_f = x, f
            new_best = (x, f)
        state.iterations += 1
        stop = self.max_iterations is not None and state.iterations >= self.max_iterations
        return StepReport(evals=1, new_best=new_best, stop=stop)


@dataclass
class PsoState:
    algorithm_id: str
    seed: int
    rng: np.random.Generator
    x: np.ndarray
    v: np.ndarray
    pbest_x: np.ndarray
    pbest_f: np.ndarray
    iterations: int = 0
    best_x: Optional[np.ndarray] = None
    best_f: float = math.inf


class PSO(Algorithm):
    """Global-best PSO; one full swarm update (= swarm_size FEs) per step.

    The first step evaluates the initial swarm; later steps move every
    particle and re-evaluate. Positions are clamped into bounds, velocities
    to `velocity_clamp` times the bound range.
    """

    kind = "pso"

    def __init__(self, params: PsoParams = PsoParams(), max_iterations: Optional[int] = None):
        if max_iterations is not None and max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        self.params = params
        self.max_iterations = max_iterations
        self.label = self.kind

    @property
    def evals_per_step(self) -> int:
        return self.params.swarm_size

    def describe(self) -> dict:
        p = self.params
        return {
            "kind": self.kind,
            "swarm_size": p.swarm_size,
            "inertia": p.inertia,
            "cognitive": p.cognitive,
            "social": p.social,
            "velocity_clamp": p.velocity_clamp,
            "topology": "global-best",
            "max_iterations": self.max_iterations,
        }

    def init(self, instance: ProblemInstance, seed: int) -> PsoState:
        rng = np.random.default_rng(seed)
        n = self.params.swarm_size
        x = instance.uniform(rng, n)
        return PsoState(
            algorithm_id=self.label,
            seed=seed,
            rng=rng,
            x=x,
            v=np.zeros_like(x),
            pbest_x=x.copy(),
            pbest_f=np.full(n, math.inf),
        )

    def step(self, state: PsoState, evaluator) -> StepReport:
        p = self.params
        instance = evaluator.instance
        before = state.best_f
        if state.iterations > 0:
            r1 = state.rng.random(state.x.shape)
            r2 = state.rng.random(state.x.shape)
            vmax = p.velocity_clamp * (instance.upper - instance.lower)
            v = (
                p.inertia * state.v
                + p.cognitive * r1 * (state.pbest_x - state.x)
                + p.social * r2 * (state.best_x - state.x)
            )
            state.v = np.clip(v, -vmax, vmax)
            state.x = np.clip(state.x + state.v, instance.lower, instance.upper)
        fs = evaluator.evaluate_rows(state.x)
        improved = fs < state.pbest_f
        state.pbest_x[improved] = state.x[improved]
        state.pbest_f[improved] = fs[improved]
        i = int(np.argmin(state.pbest_f))
        if state.pbest_f[i] < state.best_f:
            state.best_f = float(state.pbest_f[i])
            state.best_x = state.pbest_x[i].copy()
        state.iterations += 1
        stop = self.max_iterations is not None and state.iterations >= self.max_iterations
        new_best = (state.best_x, state.best_f) if state.best_f < before else None
        return StepReport(evals=p.swarm_size, new_best=new_best, stop=stop)


@dataclass
class StagnationRestartState:
    algorithm_id: str
    seed: int
    inner_state: object
    iterations: int = 0
    plateau_count: int = 0
    restart_count: int = 0
    best_x: Optional[np.ndarray] = None
    best_f: float = math.inf


class StagnationRestart(Algorithm):
    """Reinitialize the inner optimizer when its best value plateaus.

    A plateau is `plateau_window` consecutive iterations in which the
    (global) best improves by less than `plateau_epsilon`. Each restart
    draws a fresh sub-seed from the run seed's splitmix64 stream, so the
    inner sequence is never replayed; the global best is retained.
    """

    kind = "stagnation-restart"

    def __init__(
        self,
        inner: Algorithm,
        plateau_window: int,
        plateau_epsilon: float,
        max_restarts: Optional[int] = None,
    ):
        if plateau_window < 1:
            raise ValueError("plateau_window must be >= 1")
        if plateau_epsilon < 0:
            raise ValueError("plateau_epsilon must be >= 0")
        self.inner = inner
        self.plateau_window = plateau_window
        self.plateau_epsilon = plateau_epsilon
        self.max_restarts = max_restarts
        self.label = inner.label

    @property
    def evals_per_step(self) -> int:
        return self.inner.evals_per_step

    def step_charges(self) -> list[float]:
        return self.inner.step_charges()

    def describe(self) -> dict:
        desc = self.inner.describe()
        desc["stagnation_restart"] = {
            "plateau_window": self.plateau_window,
            "plateau_epsilon": self.plateau_epsilon,
            "max_restarts": self.max_restarts,
        }
        return desc

    def init(self, instance: ProblemInstance, seed: int) -> StagnationRestartState:
        return StagnationRestartState(
            algorithm_id=self.label,
            seed=seed,
            inner_state=self.inner.init(instance, subseed(seed, 0)),
        )

    def step(self, state: StagnationRestartState, evaluator) -> StepReport:
        before = state.best_f
        report = self.inner.step(state.inner_state, evaluator)
        inner_best = state.inner_state.best_f
        if inner_best < state.best_f:
            state.best_f = inner_best
            state.best_x = state.inner_state.best_x
        state.iterations += 1
        if before - state.best_f >= self.plateau_epsilon:
            state.plateau_count = 0
        else:
            state.plateau_count += 1
        stop = report.stop
        if state.plateau_count >= self.plateau_window and not stop:
            if self.max_restarts is not None and state.restart_count >= self.max_restarts:
                stop = True  # retries exhausted: declare convergence
            else:
                state.restart_count += 1
                state.inner_state = self.inner.init(
                    evaluator.instance, subseed(state.seed, state.restart_count)
                )
                state.plateau_count = 0
        new_best = (state.best_x, state.best_f) if state.best_f < before else None
        return StepReport(evals=report.evals, new_best=new_best, stop=stop)


class SyntheticOverhead(Algorithm):
    """Charge a fixed per-iteration cost on top of the inner algorithm.

    Emulates an expensive variant (surrogate fits, heavy bookkeeping)
    without changing search behavior. Only meaningful under a virtual
    clock; charging a real clock raises.
    """

    kind = "synthetic-overhead"

    def __init__(self, inner: Algorithm, overhead_per_iteration: float):
        if overhead_per_iteration < 0:
            raise ValueError("overhead_per_iteration must be >= 0")
        self.inner = inner
        self.overhead = overhead_per_iteration
        self.label = inner.label

    @property
    def evals_per_step(self) -> int:
        return self.inner.evals_per_step

    def step_charges(self) -> list[float]:
        return [self.overhead] + self.inner.step_charges()

    def describe(self) -> dict:
        desc = self.inner.describe()
        desc["synthetic_overhead_per_iteration"] = self.overhead
        return desc

    def init(self, instance: ProblemInstance, seed: int):
        return self.inner.init(instance, seed)

    def step(self, state, evaluator) -> StepReport:
        evaluator.charge(self.overhead)
        return self.inner.step(state, evaluator)


def wrap_stagnation_restart(
    inner: Algorithm,
    plateau_window: int,
    plateau_epsilon: float,
    max_restarts: Optional[int] = None,
) -> StagnationRestart:
    return StagnationRestart(inner, plateau_window, plateau_epsilon, max_restarts)


def wrap_synthetic_overhead(inner: Algorithm, overhead_per_iteration: float) -> SyntheticOverhead:
    return SyntheticOverhead(inner, overhead_per_iteration)


_KINDS = ("random-search", "pso")


def make_optimizer(kind: str, params: Optional[dict] = None, label: Optional[str] = None) -> Algorithm:
    """Build an optimizer from its catalog kind and a parameter dict.

    Unknown kinds and unknown parameter keys are errors; defaults are
    materialized so `describe()` echoes the full effective configuration.
    """
    params = dict(params or {})
    if kind == "random-search":
        alg: Algorithm = RandomSearch(max_iterations=params.pop("max_iterations", None))
    elif kind == "pso":
        pso_params = PsoParams(
            swarm_size=params.pop("swarm_size", 40),
            inertia=params.pop("inertia", 0.7298),
            cognitive=params.pop("cognitive", 1.49618),
            social=params.pop("social", 1.49618),
            velocity_clamp=params.pop("velocity_clamp", 0.5),
        )
        alg = PSO(pso_params, max_iterations=params.pop("max_iterations", None))
    else:
        raise KeyError(f"unknown algorithm kind {kind!r}; available: {', '.join(_KINDS)}")
    if params:
        raise ValueError(f"unknown parameters for {kind}: {', '.join(sorted(params))}")
    if label is not None:
        alg.label = label
    return alg
