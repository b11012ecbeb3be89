"""Monte Carlo objectives and probabilistic constraint checks at an equilibrium."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .design import DesignPoint, DesignSpace, Mechanism
from .equilibrium import EquilibriumResult, convergence_violation, expected_utility
from .game import LinearStrategy, TypeSampler, WinnerTakeGame, payoff, sample_type_profiles

DEFAULT_SAMPLES = 10_000
DEFAULT_ALPHA = 0.05
DEFAULT_P = 0.06
DEFAULT_IR_TOL = 0.01

OBJECTIVE_KINDS = ("fairness_gap", "exante_gap", "winner_utility", "revenue", "welfare", "weighted")
MINIMIZED = frozenset({"fairness_gap", "exante_gap"})
CONSTRAINT_KINDS = ("convergence", "ex_interim_ir", "min_revenue")

GameLike = Union[WinnerTakeGame, Mechanism]


def zero_cost(t):
    return np.zeros_like(np.asarray(t, dtype=float))


def samples_required(alpha: float, p: float) -> int:
    """Type samples needed to certify, with confidence ``1 - alpha``, that a
    constraint fails on at most a ``p`` share of types (uniform prior on the
    failure measure)."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    return max(0, math.ceil(math.log(alpha) / math.log(1.0 - p) - 1.0))


def default_constraint_samples(alpha: float = DEFAULT_ALPHA, p: float = DEFAULT_P) -> int:
    # bound rounded up to a multiple of 10 (48 -> 50 at the defaults)
    return max(10, 10 * math.ceil(samples_required(alpha, p) / 10))


def _split(g: GameLike) -> tuple[WinnerTakeGame, Optional[Mechanism]]:
    if isinstance(g, Mechanism):
        return g.game, g
    return g, None


@dataclass
class Play:
    """Outcome of symmetric play on a batch of type profiles, by role."""

    t_w: np.ndarray
    t_l: np.ndarray
    a_w: np.ndarray
    a_l: np.ndarray
    u_w: np.ndarray
    u_l: np.ndarray

    @property
    def n(self) -> int:
        return self.t_w.size


def play_profiles(game: WinnerTakeGame, strategy: LinearStrategy, profiles: np.ndarray) -> Play:
    """Realized payoffs when both players follow ``strategy``.

    On a tie the first player is labelled the winner; both then receive the
    branch average, so the labels do not affect any role statistic's mean.
    """
    t, tp = profiles[:, 0], profiles[:, 1]
    a, ap = strategy(t), strategy(tp)
    first_wins = a >= ap
    t_w = np.where(first_wins, t, tp)
    t_l = np.where(first_wins, tp, t)
    a_w = np.where(first_wins, a, ap)
    a_l = np.where(first_wins, ap, a)
    u_w = payoff(game, t_w, a_w, t_l, a_l)
    u_l = payoff(game, t_l, a_l, t_w, a_w)
    return Play(t_w, t_l, a_w, a_l, np.asarray(u_w), np.asarray(u_l))


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    n = x.size
    se = float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
    return float(np.mean(x)), se


def _draw(game: WinnerTakeGame, strategy: LinearStrategy, sampler: Optional[TypeSampler], n: int) -> Play:
    if n < 1:
        raise ValueError("n must be >= 1")
    if sampler is None:
        sampler = TypeSampler.for_game(game)
    return play_profiles(game, strategy, sample_type_profiles(sampler, n))


# per-role statistics on an already played batch; each returns (value, stderr)


def fairness_stat(play: Play, mech: Optional[Mechanism] = None) -> tuple[float, float]:
    m, se = _mean_se(play.u_w - play.u_l)
    return abs(m), se


def exante_stat(play: Play, mech: Optional[Mechanism] = None) -> tuple[float, float]:
    return _mean_se(np.abs(play.u_w - play.u_l))


def winner_stat(play: Play, mech: Optional[Mechanism] = None) -> tuple[float, float]:
    return _mean_se(play.u_w)


def revenue_stat(play: Play, mech: Optional[Mechanism]) -> tuple[float, float]:
    if mech is None or mech.revenue.is_zero:
        return 0.0, 0.0
    return _mean_se(np.broadcast_to(mech.revenue(play.a_w, play.a_l), play.a_w.shape))


def welfare_stat(play: Play, mech: Optional[Mechanism], kind: str = "allocation") -> tuple[float, float]:
    if kind == "allocation":
        q = 1.0 if mech is None else mech.allocation
        return _mean_se(q * play.t_w + (1.0 - q) * play.t_l)
    if kind == "surplus":
        rev = 0.0 if mech is None else mech.revenue(play.a_w, play.a_l)
        return _mean_se(play.u_w + play.u_l + rev)
    raise ValueError(f"unknown welfare kind {kind!r}")


STATS: dict[str, Callable] = {
    "fairness_gap": fairness_stat,
    "exante_gap": exante_stat,
    "winner_utility": winner_stat,
    "revenue": revenue_stat,
    "welfare": welfare_stat,
}


def fairness_gap(game: GameLike, eq: LinearStrategy, sampler: Optional[TypeSampler] = None, n: int = DEFAULT_SAMPLES) -> float:
    """``|E[winner payoff] - E[loser payoff]|``."""
    g, _ = _split(game)
    return fairness_stat(_draw(g, eq, sampler, n))[0]


def exante_gap(game: GameLike, eq: LinearStrategy, sampler: Optional[TypeSampler] = None, n: int = DEFAULT_SAMPLES) -> float:
    """``E|winner payoff - loser payoff|``."""
    g, _ = _split(game)
    return exante_stat(_draw(g, eq, sampler, n))[0]


def winner_utility(game: GameLike, eq: LinearStrategy, sampler: Optional[TypeSampler] = None, n: int = DEFAULT_SAMPLES) -> float:
    g, _ = _split(game)
    return winner_stat(_draw(g, eq, sampler, n))[0]


def revenue(mech: GameLike, eq: LinearStrategy, sampler: Optional[TypeSampler] = None, n: int = DEFAULT_SAMPLES) -> float:
    """Mean payment to the designer; identically zero for a bare game."""
    g, m = _split(mech)
    return revenue_stat(_draw(g, eq, sampler, n), m)[0]


def welfare(
    mech: GameLike,
    eq: LinearStrategy,
    sampler: Optional[TypeSampler] = None,
    n: int = DEFAULT_SAMPLES,
    kind: str = "allocation",
) -> float:
    """Expected welfare.

    ``allocation``: value of the good to whoever receives it, i.e.
    ``q*t_high_bidder + (1-q)*t_low_bidder``. ``surplus``: realized utilities
    of both players plus designer revenue.
    """
    g, m = _split(mech)
    return welfare_stat(_draw(g, eq, sampler, n), m, kind)[0]


@dataclass(frozen=True)
class ObjectiveSpec:
    kind: str = "revenue"
    samples: int = DEFAULT_SAMPLES
    seed: int = 0
    weights: tuple[tuple[str, float], ...] = ()
    welfare_kind: str = "allocation"

    def __post_init__(self):
        if self.kind not in OBJECTIVE_KINDS:
            raise ValueError(f"unknown objective {self.kind!r}")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        object.__setattr__(self, "weights", tuple((k, float(w)) for k, w in self.weights))
        if self.kind == "weighted":
            if not self.weights:
                raise ValueError("weighted objective needs at least one (kind, weight)")
            for k, w in self.weights:
                if k not in STATS:
                    raise ValueError(f"unknown weighted component {k!r}")
                if not math.isfinite(w):
                    raise ValueError("weights must be finite")

    @property
    def maximize(self) -> bool:
        return self.kind not in MINIMIZED


def estimate_objective(spec: ObjectiveSpec, mech: GameLike, eq: LinearStrategy) -> tuple[float, float]:
    """``(estimate, stderr)`` of the objective on ``spec.samples`` profiles.

    Every call with the same spec reuses the same type draws, so differences
    across mechanisms are not inflated by sampling noise.
    """
    g, m = _split(mech)
    play = _draw(g, eq, TypeSampler.for_game(g, spec.seed), spec.samples)
    if spec.kind != "weighted":
        return _stat(spec.kind, play, m, spec.welfare_kind)
    total, var = 0.0, 0.0
    for kind, w in spec.weights:
        v, se = _stat(kind, play, m, spec.welfare_kind)
        total += w * v
        var += (w * se) ** 2
    return total, math.sqrt(var)


def _stat(kind: str, play: Play, mech, welfare_kind: str):
    if kind == "welfare":
        return welfare_stat(play, mech, welfare_kind)
    return STATS[kind](play, mech)


# constraints


@dataclass
class Verdict:
    kind: str
    passed: bool
    margin: float  # >= 0 passes; negative is the size of the violation
    evidence: dict = field(default_factory=dict)

    @property
    def violation(self) -> float:
        return max(0.0, -self.margin) if self.margin == self.margin else math.inf


@dataclass(frozen=True)
class ConstraintSpec:
    kind: str
    tol: float = DEFAULT_IR_TOL
    p: float = DEFAULT_P
    alpha: float = DEFAULT_ALPHA
    floor: float = 0.0
    samples: Optional[int] = None
    seed: int = 0
    opportunity_cost: Callable = zero_cost
    mode: Optional[str] = None  # "reject" | "penalty"; None picks by kind

    def __post_init__(self):
        if self.kind not in CONSTRAINT_KINDS:
            raise ValueError(f"unknown constraint {self.kind!r}")
        if self.kind != "min_revenue":
            if not 0 < self.p < 1 or not 0 < self.alpha < 1:
                raise ValueError("p and alpha must lie in (0, 1)")
        if self.mode not in (None, "reject", "penalty"):
            raise ValueError("mode must be 'reject' or 'penalty'")
        if self.samples is not None and self.kind == "ex_interim_ir":
            if self.samples < samples_required(self.alpha, self.p):
                raise ValueError("samples below the count needed for the requested confidence")

    @property
    def n_samples(self) -> int:
        if self.samples is not None:
            return self.samples
        if self.kind == "min_revenue":
            return DEFAULT_SAMPLES
        return default_constraint_samples(self.alpha, self.p)

    @property
    def default_mode(self) -> str:
        if self.mode is not None:
            return self.mode
        return "penalty" if self.kind == "min_revenue" else "reject"


def interim_margins(game: WinnerTakeGame, eq: LinearStrategy, types, opportunity_cost: Callable = zero_cost) -> np.ndarray:
    """Exact interim utility minus opportunity cost at each type."""
    types = np.asarray(types, dtype=float)
    eu = expected_utility(game, eq, types, eq(types))
    return np.asarray(eu - opportunity_cost(types), dtype=float)


def check_ex_interim_ir(
    game: GameLike,
    eq: LinearStrategy,
    opportunity_cost: Callable = zero_cost,
    tol: float = DEFAULT_IR_TOL,
    p: float = DEFAULT_P,
    alpha: float = DEFAULT_ALPHA,
    n: Optional[int] = None,
    seed: int = 0,
) -> Verdict:
    """Probabilistic ex-interim IR on ``n`` sampled own types.

    Passes iff no sampled type's interim utility falls below its opportunity
    cost minus ``tol``.
    """
    g, _ = _split(game)
    need = samples_required(alpha, p)
    if n is None:
        n = default_constraint_samples(alpha, p)
    if n < need:
        raise ValueError(f"{n} samples cannot certify p={p} at alpha={alpha}; need {need}")
    types = TypeSampler.for_game(g, seed).types(max(n, 1))
    margins = interim_margins(g, eq, types, opportunity_cost) + tol
    i = int(np.argmin(margins))
    margin = float(margins[i])
    return Verdict(
        "ex_interim_ir",
        margin >= 0.0,
        margin,
        {"worst_type": float(types[i]), "samples": int(n), "required": need, "tol": tol},
    )


def check_min_revenue(
    mech: GameLike,
    eq: LinearStrategy,
    sampler: Optional[TypeSampler] = None,
    n: int = DEFAULT_SAMPLES,
    C: float = 0.0,
    use_stderr: bool = False,
) -> Verdict:
    g, m = _split(mech)
    value, se = revenue_stat(_draw(g, eq, sampler, n), m)
    est = value - se if use_stderr else value
    return Verdict("min_revenue", est >= C, est - C, {"revenue": value, "stderr": se, "floor": C})


def check_convergence_constraint(result: EquilibriumResult, tol: float, p: float) -> Verdict:
    """Last two solver iterates agree within ``tol`` on all but a ``p`` share of types."""
    prev, curr = result.last_pair
    bad = convergence_violation(prev, curr, tol)
    margin = p - bad
    passed = result.converged and margin >= -1e-12
    if not result.converged:
        margin = min(margin, -1e-6)
    return Verdict(
        "convergence",
        passed,
        margin,
        {"violating_share": bad, "iterations": result.iterations, "tol": tol},
    )


def check_constraint(spec: ConstraintSpec, mech: Mechanism, result: EquilibriumResult) -> Verdict:
    eq = result.strategy
    if spec.kind == "convergence":
        return check_convergence_constraint(result, spec.tol, spec.p)
    if spec.kind == "ex_interim_ir":
        return check_ex_interim_ir(
            mech, eq, spec.opportunity_cost, spec.tol, spec.p, spec.alpha, spec.n_samples, spec.seed
        )
    return check_min_revenue(mech, eq, TypeSampler.for_game(mech.game, spec.seed), spec.n_samples, spec.floor)


# IR repair


def ir_shortfall(game: GameLike, eq: LinearStrategy, opportunity_cost: Callable = zero_cost, grid: int = 1001) -> float:
    """Expected loss of the least fortunate type on a grid (0 when IR holds)."""
    g, _ = _split(game)
    types = np.linspace(g.type_low, g.type_high, grid)
    return max(0.0, -float(np.min(interim_margins(g, eq, types, opportunity_cost))))


def ir_repair(
    space: DesignSpace,
    theta: DesignPoint,
    eq: LinearStrategy,
    opportunity_cost: Callable = zero_cost,
    grid: int = 1001,
) -> DesignPoint:
    """Pay every agent the worst type's shortfall by lowering both flat payments.

    A flat transfer moves every payoff by the same amount, so the
    equilibrium is unchanged. The result may leave the design box.
    """
    if len(space.constant_params) != 2:
        raise ValueError(f"domain {space.name!r} has no constant-payment parameters")
    shift = ir_shortfall(space.build(theta).game, eq, opportunity_cost, grid)
    if shift == 0.0:
        return theta
    k_win, k_lose = space.constant_params
    return theta.replace(**{k_win: theta[k_win] - shift, k_lose: theta[k_lose] - shift})
