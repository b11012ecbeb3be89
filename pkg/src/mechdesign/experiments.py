"""Pinned-seed design experiments compared against published values.

Each experiment returns a list of :class:`Comparison` rows; ``scale``
multiplies every Monte Carlo sample count (use < 1 for smoke runs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from .annealer import AllInfeasible, AnnealConfig, OptimizationResult, evaluate_candidate, optimize
from .design import DesignSpace
from .domains import VICIOUS_L, myerson_space, sga_objective_oracles, sga_space, vicious_space
from .equilibrium import solve_equilibrium
from .evaluation import (
    ConstraintSpec,
    ObjectiveSpec,
    check_ex_interim_ir,
    ir_repair,
    ir_shortfall,
    revenue,
    welfare,
)
from .game import TypeSampler


@dataclass
class Comparison:
    experiment: str
    metric: str
    achieved: float
    reference: Optional[float]  # published value, when there is one
    criterion: str
    passed: bool
    details: dict = field(default_factory=dict)


def _n(base: int, scale: float) -> int:
    return max(100, int(round(base * scale)))


def _best(result: OptimizationResult) -> tuple[float, tuple[float, ...]]:
    return result.best_report.objective_estimate, result.best_theta.values


def run_search(
    space: DesignSpace,
    objective: ObjectiveSpec,
    constraints,
    config: AnnealConfig,
    start="random",
    polish: bool = False,
) -> OptimizationResult:
    """Anneal, optionally re-running one chain from the best design found.

    Returns the infeasible best attempt instead of raising.
    """
    try:
        result = optimize(space, objective, constraints, config, start)
    except AllInfeasible as exc:
        return exc.result
    if polish:
        try:
            again = optimize(space, objective, constraints, config, result.best_theta)
        except AllInfeasible:
            return result
        sign = 1.0 if objective.maximize else -1.0
        if sign * again.best_report.objective_estimate > sign * result.best_report.objective_estimate:
            return again
    return result


def _sga_constraints():
    return [ConstraintSpec("convergence", tol=1e-3)]


def table1(seed: int = 0, scale: float = 1.0) -> list[Comparison]:
    space = sga_space()
    obj = ObjectiveSpec("fairness_gap", samples=_n(10_000, scale), seed=seed)
    config = AnnealConfig(steps=300, seed=seed)
    rows = []
    for label, start in (("fixed start (0.5, 0)", (0.5, 0.0)), ("5 random restarts", "random")):
        res = run_search(space, obj, _sga_constraints(), config, start)
        value, theta = _best(res)
        rows.append(
            Comparison(
                "table1",
                f"fairness gap, {label}",
                value,
                1 / 9,
                "<= 0.12 and h <= 0.05",
                res.feasible and value <= 0.12 and theta[0] <= 0.05,
                {"theta": list(theta)},
            )
        )
    return rows


def table2(seed: int = 0, scale: float = 1.0) -> list[Comparison]:
    space = sga_space()
    obj = ObjectiveSpec("exante_gap", samples=_n(10_000, scale), seed=seed)
    config = AnnealConfig(steps=300, seed=seed)
    rows = []
    for label, start in (("fixed start (0.5, 0)", (0.5, 0.0)), ("5 random restarts", "random")):
        res = run_search(space, obj, _sga_constraints(), config, start)
        value, theta = _best(res)
        rows.append(
            Comparison("table2", f"ex ante gap, {label}", value, 0.176, "<= 0.185",
                       res.feasible and value <= 0.185, {"theta": list(theta)})
        )
    truthful = evaluate_candidate(space, space.point((1 / 3, 0.0)), ObjectiveSpec("exante_gap", samples=_n(100_000, scale), seed=seed))
    rows.append(
        Comparison("table2", "ex ante gap, truthful SGA(1/3, 0)", truthful.objective_estimate, 0.22,
                   "0.22 +- 0.01", abs(truthful.objective_estimate - 0.22) <= 0.01)
    )
    return rows


def table3(seed: int = 0, scale: float = 1.0) -> list[Comparison]:
    space = sga_space()
    obj = ObjectiveSpec("winner_utility", samples=_n(10_000, scale), seed=seed)
    config = AnnealConfig(steps=300, seed=seed)
    rows = []
    for label, start in (("fixed start (0.5, 0)", (0.5, 0.0)), ("5 random restarts", "random")):
        res = run_search(space, obj, _sga_constraints(), config, start)
        value, (h, k) = _best(res)
        closed = sga_objective_oracles(h, k)[1] if h + k > 0 else math.nan
        ok = value >= 0.43 and (k <= 0.05 or abs(closed - value) <= 0.015)
        rows.append(
            Comparison("table3", f"winner utility, {label}", value, 4 / 9, ">= 0.43 (k <= 0.05 or closed form within 0.015)",
                       res.feasible and ok, {"theta": [h, k], "closed_form": closed})
        )
    return rows


def _design_constraints(ir_mode=None):
    return [ConstraintSpec("convergence", tol=1e-3), ConstraintSpec("ex_interim_ir", mode=ir_mode)]


def myerson_revenue(seed: int = 0, scale: float = 1.0) -> list[Comparison]:
    space = myerson_space()
    rows = []
    truthful = space.point((1, 0.5, 0, 0, 0, 0, 0))
    mech = space.build(truthful)
    eq = solve_equilibrium(mech.game).strategy
    rev = revenue(mech, eq, TypeSampler(seed), _n(100_000, scale))
    rows.append(Comparison("myerson_revenue", "revenue, truthful (q=1, k1=0.5)", rev, 1 / 3,
                           "1/3 +- 0.01", abs(rev - 1 / 3) <= 0.01))
    obj = ObjectiveSpec("revenue", samples=_n(10_000, scale), seed=seed)
    res = run_search(space, obj, _design_constraints(), AnnealConfig(steps=500, seed=seed), polish=True)
    value, theta = _best(res)
    rows.append(Comparison("myerson_revenue", "revenue, annealed with IR + convergence", value, 0.3,
                           ">= 0.28", res.feasible and value >= 0.28, _design_details(res)))
    return rows


def myerson_welfare(seed: int = 0, scale: float = 1.0, revenue_floor: float = 0.1) -> list[Comparison]:
    space = myerson_space()
    rows = []
    # second price: q = 1 with an increasing equilibrium
    mech = space.build(space.point((1, 0, 1, 0, 0, 0, 0)))
    eq = solve_equilibrium(mech.game).strategy
    w = welfare(mech, eq, TypeSampler(seed), _n(100_000, scale))
    rows.append(Comparison("myerson_welfare", "welfare, second price (q=1)", w, 2 / 3, "2/3 +- 0.01",
                           abs(w - 2 / 3) <= 0.01 and eq.m > 0))
    obj = ObjectiveSpec("welfare", samples=_n(10_000, scale), seed=seed)
    constraints = _design_constraints() + [ConstraintSpec("min_revenue", floor=revenue_floor, samples=_n(10_000, scale))]
    res = run_search(space, obj, constraints, AnnealConfig(steps=500, seed=seed), polish=True)
    value, theta = _best(res)
    eq = res.best_report.equilibrium
    increasing = eq is not None and eq.strategy.m > 0
    rows.append(Comparison("myerson_welfare", "welfare, annealed with IR + convergence + min revenue",
                           value, 2 / 3, "q >= 0.95 with increasing equilibrium",
                           res.feasible and theta[0] >= 0.95 and increasing, _design_details(res)))
    return rows


def vicious(seed: int = 0, scale: float = 1.0) -> list[Comparison]:
    space = vicious_space(VICIOUS_L)
    rows = []
    vv = space.point((1, 0, 1, 0, 0, 0, 0))
    mech = space.build(vv)
    eq = solve_equilibrium(mech.game).strategy
    err = max(abs(eq.m - 7 / 9), abs(eq.b - 2 / 9))
    rows.append(Comparison("vicious", "Vicious Vickrey equilibrium, max coefficient error vs (7/9)t + 2/9",
                           err, 0.0, "<= 1e-3", err <= 1e-3, {"m": eq.m, "b": eq.b}))
    rev = revenue(mech, eq, TypeSampler(seed), _n(100_000, scale))
    rows.append(Comparison("vicious", "Vicious Vickrey revenue", rev, 0.48, "0.48 +- 0.01", abs(rev - 0.48) <= 0.01))

    before = check_ex_interim_ir(mech, eq, seed=seed)
    repaired = ir_repair(space, vv, eq)
    after_mech = space.build(repaired)
    after_eq = solve_equilibrium(after_mech.game).strategy
    after = check_ex_interim_ir(after_mech, after_eq, seed=seed + 1)
    rebate = ir_shortfall(mech, eq)
    rows.append(Comparison("vicious", "IR repair rebate for Vicious Vickrey", rebate, None,
                           "IR fails before repair, passes after, equilibrium unchanged",
                           (not before.passed) and after.passed
                           and max(abs(after_eq.m - eq.m), abs(after_eq.b - eq.b)) <= 1e-6))

    # spite splits the IR-feasible set into small pockets that reject-mode
    # chains cannot cross, so IR is a penalty here; the reported design still
    # passes it
    obj = ObjectiveSpec("revenue", samples=_n(10_000, scale), seed=seed)
    res = run_search(space, obj, _design_constraints("penalty"), AnnealConfig(steps=500, restarts=20, seed=seed), polish=True)
    value, theta = _best(res)
    rows.append(Comparison("vicious", "revenue, annealed with IR + convergence", value, 0.44,
                           ">= 0.42", res.feasible and value >= 0.42, _design_details(res)))
    return rows


def _design_details(res: OptimizationResult) -> dict:
    eq = res.best_report.equilibrium
    return {
        "theta": list(res.best_theta.values),
        "feasible": res.feasible,
        "m": None if eq is None else eq.strategy.m,
        "b": None if eq is None else eq.strategy.b,
    }


EXPERIMENTS: dict[str, Callable[..., list[Comparison]]] = {
    "table1": table1,
    "table2": table2,
    "table3": table3,
    "myerson_revenue": myerson_revenue,
    "myerson_welfare": myerson_welfare,
    "vicious": vicious,
}
