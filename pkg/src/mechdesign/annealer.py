"""Simulated annealing over a mechanism design box.

Each step perturbs the design, solves the induced game, scores the
equilibrium and accepts by the Metropolis rule. Constraints are handled
feasibility-first: a feasible point always beats an infeasible one, and
among infeasible points the one with the smaller violation is preferred.
Constraints in penalty mode instead subtract ``penalty_weight * violation``
from the score. Penalties only steer the walk: the reported design is the
best visited one that satisfies every constraint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .design import DesignPoint, DesignSpace
from .game import LinearStrategy
from .equilibrium import EquilibriumResult, SolverError, fixed_strategy_result, solve_equilibrium
from .evaluation import ConstraintSpec, ObjectiveSpec, Verdict, check_constraint, estimate_objective


SOLVER_FAILURE_BASE = 100.0


class AllInfeasible(RuntimeError):
    """No visited design satisfied every constraint. ``result`` holds the best attempt."""

    def __init__(self, result: "OptimizationResult"):
        super().__init__("no feasible design was visited")
        self.result = result


@dataclass
class EvalReport:
    theta: DesignPoint
    objective_kind: str
    objective_estimate: float
    objective_stderr: float
    verdicts: list[Verdict]
    equilibrium: Optional[EquilibriumResult]
    seed: int
    error: Optional[str] = None
    error_violation: float = 0.0

    @property
    def feasible(self) -> bool:
        return self.error is None and all(v.passed for v in self.verdicts)


def evaluate_candidate(
    space: DesignSpace,
    theta: DesignPoint,
    objective: ObjectiveSpec,
    constraints: Sequence[ConstraintSpec] = (),
    solver_options: Optional[dict] = None,
    strategy: Optional[LinearStrategy] = None,
) -> EvalReport:
    """Build, solve and score one design.

    With ``strategy`` the solver is skipped and the design is scored at that
    strategy instead. Solver failures are returned as an infeasible report
    rather than raised.
    """
    mech = space.build(theta)
    try:
        if strategy is None:
            result = solve_equilibrium(mech.game, **(solver_options or {}))
        else:
            result = fixed_strategy_result(mech.game, strategy)
    except SolverError as exc:
        verdicts = [Verdict(c.kind, False, -exc.violation, {"error": str(exc)}) for c in constraints]
        return EvalReport(
            theta, objective.kind, math.nan, math.nan, verdicts, None, objective.seed, str(exc), exc.violation
        )
    value, se = estimate_objective(objective, mech, result.strategy)
    verdicts = [check_constraint(c, mech, result) for c in constraints]
    return EvalReport(theta, objective.kind, value, se, verdicts, result, objective.seed)


@dataclass(frozen=True)
class AnnealConfig:
    steps: int = 500
    initial_temperature: float = 0.1
    cooling_rate: float = 0.99
    proposal_stddev: Union[float, tuple[float, ...]] = 0.05
    restarts: int = 5
    constraint_mode: str = "auto"  # "auto" | "reject" | "penalty"
    penalty_weight: float = 10.0
    seed: int = 0
    solver_options: dict = field(default_factory=dict, hash=False)

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not 0 < self.cooling_rate < 1:
            raise ValueError("cooling_rate must lie in (0, 1)")
        if self.initial_temperature <= 0:
            raise ValueError("initial_temperature must be positive")
        if np.any(np.asarray(self.proposal_stddev) <= 0):
            raise ValueError("proposal_stddev must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.constraint_mode not in ("auto", "reject", "penalty"):
            raise ValueError("constraint_mode must be auto, reject or penalty")


@dataclass
class TraceEntry:
    chain: int
    step: int
    theta: tuple[float, ...]
    objective: float
    score: float
    feasible: bool
    accepted: bool
    best_score: float


@dataclass
class OptimizationResult:
    best_theta: DesignPoint
    best_report: EvalReport
    trace: list[TraceEntry]
    restarts_used: int
    chain_seeds: list[int]

    @property
    def feasible(self) -> bool:
        return self.best_report.feasible


@dataclass
class _Scored:
    report: EvalReport
    hard_ok: bool
    score: float  # penalized, oriented for maximization
    violation: float  # hard-constraint violation, 0 when hard_ok

    def key(self):
        # penalty-mode constraints are soft: they only enter through the score
        if self.hard_ok:
            return (True, self.score)
        return (False, -self.violation)

    def feasible_key(self, sign: float) -> float:
        return sign * self.report.objective_estimate if self.report.feasible else -math.inf


def _score(report: EvalReport, constraints: Sequence[ConstraintSpec], objective: ObjectiveSpec, config: AnnealConfig) -> _Scored:
    if report.error is not None:
        # any solvable design beats an unsolvable one
        return _Scored(report, False, -math.inf, SOLVER_FAILURE_BASE + report.error_violation)
    sign = 1.0 if objective.maximize else -1.0
    score = sign * report.objective_estimate
    hard = 0.0
    for spec, verdict in zip(constraints, report.verdicts):
        mode = spec.default_mode if config.constraint_mode == "auto" else config.constraint_mode
        if mode == "penalty":
            score -= config.penalty_weight * verdict.violation
        else:
            hard += verdict.violation
            if not verdict.passed and verdict.violation == 0.0:
                hard += 1e-9
    return _Scored(report, hard == 0.0, score, hard)


def _accept(cur: _Scored, cand: _Scored, temperature: float, u: float) -> bool:
    if cand.hard_ok and not cur.hard_ok:
        return True
    if cur.hard_ok and not cand.hard_ok:
        return False
    if cand.hard_ok:
        delta = cand.score - cur.score
    else:
        delta = cur.violation - cand.violation
    return delta >= 0 or u < math.exp(delta / temperature)


def _run_chain(
    chain: int,
    space: DesignSpace,
    objective: ObjectiveSpec,
    constraints: Sequence[ConstraintSpec],
    config: AnnealConfig,
    start: Optional[DesignPoint],
    rng: np.random.Generator,
    trace: list[TraceEntry],
) -> tuple[_Scored, Optional[_Scored]]:
    """Returns the best point by search key and the best fully feasible point."""
    sign = 1.0 if objective.maximize else -1.0

    def evaluate(theta: DesignPoint) -> _Scored:
        report = evaluate_candidate(space, theta, objective, constraints, config.solver_options)
        return _score(report, constraints, objective, config)

    sd = np.broadcast_to(np.asarray(config.proposal_stddev, dtype=float), (space.dim,))
    theta = start if start is not None else space.random_point(rng)
    cur = evaluate(theta)
    best = cur
    best_feasible = cur if cur.report.feasible else None
    trace.append(_entry(chain, 0, cur, True, best))
    temperature = config.initial_temperature
    for step in range(1, config.steps + 1):
        x = space.clip(cur.report.theta.as_array() + rng.normal(0.0, sd))
        cand = evaluate(space.point(x))
        accepted = _accept(cur, cand, temperature, rng.random())
        if accepted:
            cur = cand
        if cand.key() > best.key():
            best = cand
        if cand.report.feasible and (best_feasible is None or cand.feasible_key(sign) > best_feasible.feasible_key(sign)):
            best_feasible = cand
        trace.append(_entry(chain, step, cand, accepted, best))
        temperature *= config.cooling_rate
    return best, best_feasible


def _entry(chain: int, step: int, s: _Scored, accepted: bool, best: _Scored) -> TraceEntry:
    return TraceEntry(
        chain,
        step,
        s.report.theta.values,
        s.report.objective_estimate,
        s.score,
        s.report.feasible,
        accepted,
        best.score,
    )


def optimize(
    space: DesignSpace,
    objective: ObjectiveSpec,
    constraints: Sequence[ConstraintSpec] = (),
    config: AnnealConfig = AnnealConfig(),
    start: Union[DesignPoint, Sequence[float], str, None] = "random",
) -> OptimizationResult:
    """Anneal from ``start`` (one chain) or from ``config.restarts`` random points.

    The result is the best visited design that passes every constraint.
    Raises :class:`AllInfeasible` if there is none; the exception then
    carries the best attempt by search score.
    """
    if isinstance(start, str):
        if start != "random":
            raise ValueError("start must be a design point or 'random'")
        start = None
    elif start is not None and not isinstance(start, DesignPoint):
        start = space.point(start)
    if start is not None and not space.contains(start):
        raise ValueError("start lies outside the design box")

    n_chains = 1 if start is not None else config.restarts
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(config.seed).spawn(n_chains)]
    trace: list[TraceEntry] = []
    sign = 1.0 if objective.maximize else -1.0
    best: Optional[_Scored] = None
    best_feasible: Optional[_Scored] = None
    for chain, chain_seed in enumerate(seeds):
        rng = np.random.default_rng(chain_seed)
        b, bf = _run_chain(chain, space, objective, constraints, config, start, rng, trace)
        if best is None or b.key() > best.key():
            best = b
        if bf is not None and (best_feasible is None or bf.feasible_key(sign) > best_feasible.feasible_key(sign)):
            best_feasible = bf
    if best_feasible is None:
        raise AllInfeasible(OptimizationResult(best.report.theta, best.report, trace, n_chains, seeds))
    return OptimizationResult(best_feasible.report.theta, best_feasible.report, trace, n_chains, seeds)
