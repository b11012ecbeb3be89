"""Closed-form best response and iterated symmetric Bayes-Nash equilibrium.

All computations assume the opponent plays a linear strategy and both
types are uniform on the game's type interval. Against such an opponent the
win probability is affine in the bid, so expected utility is an exact
quadratic in the bid on the opponent's bid range.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .game import LinearStrategy, WinnerTakeGame

SLOPE_FLOOR = 1e-6
DEFAULT_TOL = 1e-3
DEFAULT_MAX_ITERS = 200
DEFAULT_CONV_P = 0.01
DEFAULT_CONV_ALPHA = 0.05
FIT_GRID = 201
STATIONARY_STALL = 1e-3


class SolverError(RuntimeError):
    """Base class for failures to compute a best response or equilibrium.

    ``violation`` is a nonnegative measure of how far the design is from one
    the solver can handle; search code uses it to steer out of bad regions.
    """

    def __init__(self, message: str, violation: float = 1.0):
        super().__init__(message)
        self.violation = float(violation)


class DegenerateOpponent(SolverError):
    """Opponent slope below the floor; win probability is a step function."""


class UnboundedBestResponse(SolverError):
    """Expected utility grows without bound as the bid goes to +-infinity."""


class NonConcaveGame(SolverError):
    """Expected utility is not strictly concave in the bid, so best responses jump."""


class DomainMismatch(ValueError):
    pass


@dataclass
class BestResponseFit:
    strategy: LinearStrategy
    exact: bool  # True when the strategy is the analytic vertex, not a fit
    concave: bool
    fit_rmse: float = 0.0
    quad_coef: float = 0.0


@dataclass
class EquilibriumResult:
    strategy: LinearStrategy
    iterations: int
    converged: bool
    residual: float
    history: list[LinearStrategy] = field(default_factory=list)
    regret: float = float("nan")

    @property
    def last_pair(self) -> tuple[LinearStrategy, LinearStrategy]:
        if len(self.history) < 2:
            return self.history[-1], self.history[-1]
        return self.history[-2], self.history[-1]


def _check_opponent(game: WinnerTakeGame, opp: LinearStrategy):
    if (opp.type_low, opp.type_high) != (game.type_low, game.type_high):
        raise DomainMismatch("opponent strategy domain differs from the game's type interval")
    if abs(opp.m) < SLOPE_FLOOR:
        raise DegenerateOpponent(
            f"degenerate opponent: slope {opp.m:.3g} below floor {SLOPE_FLOOR:g}",
            violation=SLOPE_FLOOR - abs(opp.m) + 1.0,
        )


def _segment_integral(const, slope, lo, hi):
    # integral over t' in [lo, hi] of const + slope * t'
    return const * (hi - lo) + 0.5 * slope * (hi * hi - lo * lo)


def expected_utility(game: WinnerTakeGame, opp: LinearStrategy, t, a):
    """Exact expected payoff of type ``t`` bidding ``a`` against ``opp``.

    The expectation is over the opponent's type ``t' ~ U[A, B]``. ``t`` and
    ``a`` broadcast against each other.
    """
    _check_opponent(game, opp)
    A, B = game.type_low, game.type_high
    t = np.asarray(t, dtype=float)
    a = np.asarray(a, dtype=float)
    m, b = opp.m, opp.b
    w, l = game.win, game.lose

    # threshold opponent type where bids tie
    tau = np.clip((a - b) / m, A, B)
    if m > 0:
        win_lo, win_hi, lose_lo, lose_hi = A, tau, tau, B
    else:
        win_lo, win_hi, lose_lo, lose_hi = tau, B, A, tau

    win_const = w.c_t * t + w.c_a * a + w.c_ap * b + w.c_0
    lose_const = l.c_t * t + l.c_a * a + l.c_ap * b + l.c_0
    win_slope = w.c_tp + w.c_ap * m
    lose_slope = l.c_tp + l.c_ap * m

    total = _segment_integral(win_const, win_slope, win_lo, win_hi)
    total = total + _segment_integral(lose_const, lose_slope, lose_lo, lose_hi)
    out = total / (B - A)
    if out.ndim == 0:
        return float(out)
    return out


def interior_quadratic(game: WinnerTakeGame, opp: LinearStrategy, t):
    """Coefficients ``(q2, q1, q0)`` of expected utility on the interior bid range.

    Obtained by exact three-point interpolation; ``q1`` and ``q0`` broadcast
    with ``t`` while ``q2`` does not depend on the type.
    """
    lo, hi = opp.bid_range
    c = 0.5 * (lo + hi)
    h = 0.5 * (hi - lo)
    t = np.asarray(t, dtype=float)
    f_lo = expected_utility(game, opp, t, lo)
    f_c = expected_utility(game, opp, t, c)
    f_hi = expected_utility(game, opp, t, hi)
    q2 = (f_hi - 2.0 * f_c + f_lo) / (2.0 * h * h)
    q2 = float(np.mean(q2))
    q1 = (f_hi - f_lo) / (2.0 * h) - 2.0 * q2 * c
    q0 = f_c - q2 * c * c - q1 * c
    return q2, q1, q0


def _check_bounded(game: WinnerTakeGame):
    # Outside the opponent's bid range the payoff is one branch and moves
    # with the own bid at rate c_a. Bidding below everyone pays off without
    # bound if the losing payoff falls with the bid, and symmetrically above.
    below = max(0.0, -game.lose.c_a)
    above = max(0.0, game.win.c_a)
    if below > 1e-12 or above > 1e-12:
        raise UnboundedBestResponse(
            "no best response: utility unbounded "
            + ("as bid -> -inf" if below > 1e-12 else "as bid -> +inf"),
            violation=below + above,
        )


def _vertex_line(q2: float, q1: np.ndarray, A: float, B: float) -> LinearStrategy:
    vertex = -q1 / (2.0 * q2)
    slope = (vertex[1] - vertex[0]) / (B - A)
    return LinearStrategy(float(slope), float(vertex[0] - slope * A), A, B)


def best_response_fit(game: WinnerTakeGame, opp: LinearStrategy, grid: int = FIT_GRID) -> BestResponseFit:
    """Best linear response to ``opp`` with diagnostics.

    Returns the analytic vertex line when expected utility is strictly
    concave with its vertex inside the opponent's bid range at both ends of
    the type interval. Otherwise computes the pointwise maximizer on a type
    grid and returns its least-squares line.
    """
    _check_opponent(game, opp)
    _check_bounded(game)
    A, B = game.type_low, game.type_high
    lo, hi = opp.bid_range
    q2, q1, _ = interior_quadratic(game, opp, np.array([A, B]))
    scale = max(1.0, abs(q1).max())
    concave = q2 < -1e-12 * scale
    pad = 1e-9 * max(1.0, hi - lo)

    if concave:
        vertex = -q1 / (2.0 * q2)
        if np.all((vertex >= lo - pad) & (vertex <= hi + pad)):
            return BestResponseFit(_vertex_line(q2, q1, A, B), True, True, 0.0, q2)

    types = np.linspace(A, B, grid)
    best = pointwise_best_bids(game, opp, types)
    slope, intercept = np.polyfit(types, best, 1)
    rmse = float(np.sqrt(np.mean((slope * types + intercept - best) ** 2)))
    return BestResponseFit(
        LinearStrategy(float(slope), float(intercept), A, B), False, bool(concave), rmse, q2
    )


def pointwise_best_bids(game: WinnerTakeGame, opp: LinearStrategy, types) -> np.ndarray:
    """Utility-maximizing bid for each type in ``types`` (no linearity imposed)."""
    _check_opponent(game, opp)
    _check_bounded(game)
    types = np.asarray(types, dtype=float)
    lo, hi = opp.bid_range
    q2, q1, _ = interior_quadratic(game, opp, types)
    candidates = [np.full_like(types, lo), np.full_like(types, hi)]
    if q2 < 0:
        candidates.append(np.clip(-q1 / (2.0 * q2), lo, hi))
    cand = np.stack(candidates)
    values = expected_utility(game, opp, types[None, :], cand)
    return cand[np.argmax(values, axis=0), np.arange(types.size)]


def regret(game: WinnerTakeGame, strategy: LinearStrategy, grid: int = FIT_GRID) -> float:
    """Largest interim gain any type could get by deviating when both play ``strategy``."""
    types = np.linspace(game.type_low, game.type_high, grid)
    best = pointwise_best_bids(game, strategy, types)
    gain = expected_utility(game, strategy, types, best) - expected_utility(
        game, strategy, types, strategy(types)
    )
    return float(max(0.0, gain.max()))


def stationary_response(game: WinnerTakeGame, opp: LinearStrategy) -> LinearStrategy | None:
    """Vertex line of the interior quadratic, ignoring the bid-range clamp.

    Its fixed points whose vertex lies inside the bid range are exactly the
    linear equilibria, and unlike the clamped response it never collapses
    toward a flat bid. ``None`` when the quadratic is not strictly concave.
    """
    _check_opponent(game, opp)
    _check_bounded(game)
    A, B = game.type_low, game.type_high
    q2, q1, _ = interior_quadratic(game, opp, np.array([A, B]))
    if not q2 < -1e-12 * max(1.0, abs(q1).max()):
        return None
    return _vertex_line(q2, q1, A, B)


def best_response(game: WinnerTakeGame, opp: LinearStrategy) -> LinearStrategy:
    return best_response_fit(game, opp).strategy


def convergence_violation(prev: LinearStrategy, curr: LinearStrategy, tol: float) -> float:
    """Fraction of the type interval where ``|curr(t) - prev(t)| >= tol``."""
    if not prev.same_domain(curr):
        raise DomainMismatch("strategies are defined on different type intervals")
    A, B = curr.type_low, curr.type_high
    dm = curr.m - prev.m
    db = curr.b - prev.b
    if dm == 0.0:
        return 0.0 if abs(db) < tol else 1.0
    x1 = (-tol - db) / dm
    x2 = (tol - db) / dm
    lo, hi = min(x1, x2), max(x1, x2)
    good = max(0.0, min(hi, B) - max(lo, A))
    return max(0.0, 1.0 - good / (B - A))


def check_convergence(prev: LinearStrategy, curr: LinearStrategy, tol: float, p: float) -> bool:
    """True when the two strategies differ by less than ``tol`` on all but a ``p`` share of types."""
    return convergence_violation(prev, curr, tol) <= p + 1e-12


def max_change(prev: LinearStrategy, curr: LinearStrategy) -> float:
    # the difference is affine, so its sup is at an endpoint
    return max(
        abs(curr(curr.type_low) - prev(curr.type_low)),
        abs(curr(curr.type_high) - prev(curr.type_high)),
    )


def solve_equilibrium(
    game: WinnerTakeGame,
    init: LinearStrategy | None = None,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
    conv_p: float = DEFAULT_CONV_P,
    conv_alpha: float = DEFAULT_CONV_ALPHA,
    damping: float = 1.0,
) -> EquilibriumResult:
    """Iterate symmetric best response from ``init`` (truthful by default).

    While the expected utility is concave the step is the stationary
    response, which equals the exact best response whenever the vertex is in
    range. Stops once two consecutive iterates pass :func:`check_convergence`
    and the final step was an exact best response. If the stationary
    iteration settles on a point that is not an exact best response, the
    remaining iterations use the fitted best response.

    ``conv_alpha`` is accepted for symmetry with the convergence constraint;
    linear strategies are compared exactly, so no sampling confidence is
    involved. When the iteration limit is hit the iterate with the smallest
    step is returned with ``converged=False``.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if not (0 < conv_p < 1 and 0 < conv_alpha < 1):
        raise ValueError("conv_p and conv_alpha must lie in (0, 1)")
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    if init is None:
        init = LinearStrategy.truthful(game.type_low, game.type_high)

    curr = init
    history = [init]
    best_idx, best_res = 0, np.inf
    use_stationary = True
    for it in range(1, max_iters + 1):
        fit = best_response_fit(game, curr)
        if not fit.concave and not fit.exact:
            raise NonConcaveGame(
                "degenerate design: expected utility is not concave in the bid, "
                "best response is not linear",
                violation=1.0 + max(0.0, fit.quad_coef),
            )
        step, exact = fit.strategy, fit.exact
        if use_stationary and not exact:
            stationary = stationary_response(game, curr)
            if stationary is not None:
                # a best response to within tol if the clamp moves no bid by more
                step, exact = stationary, clamp_gap(stationary, curr) < tol
        if damping < 1.0:
            step = LinearStrategy(
                damping * step.m + (1 - damping) * curr.m,
                damping * step.b + (1 - damping) * curr.b,
                step.type_low,
                step.type_high,
            )
        res = max_change(curr, step)
        history.append(step)
        if res < best_res:
            best_idx, best_res = it, res
        if check_convergence(curr, step, tol, conv_p):
            if exact or not use_stationary:
                if abs(step.m) < SLOPE_FLOOR:
                    raise DegenerateOpponent(
                        "degenerate design: equilibrium bid does not depend on type"
                    )
                return EquilibriumResult(step, it, True, res, history, regret(game, step))
            if res < STATIONARY_STALL * tol:
                use_stationary = False
        curr = step
    final = history[best_idx]
    return EquilibriumResult(final, max_iters, False, best_res, history, regret(game, final))


def fixed_strategy_result(
    game: WinnerTakeGame, strategy: LinearStrategy, tol: float = DEFAULT_TOL, conv_p: float = DEFAULT_CONV_P
) -> EquilibriumResult:
    """Wrap an imposed strategy as a result, judged by one best-response step.

    ``converged`` says whether ``strategy`` is a fixed point of the best
    response to within ``tol``; the history is ``[strategy, response]``.
    """
    br = best_response(game, strategy)
    converged = check_convergence(strategy, br, tol, conv_p)
    return EquilibriumResult(strategy, 0, converged, max_change(strategy, br), [strategy, br], regret(game, strategy))


def clamp_gap(strategy: LinearStrategy, opp: LinearStrategy) -> float:
    """Largest distance from a bid of ``strategy`` to the bid range of ``opp``."""
    lo, hi = opp.bid_range
    ends = np.array([strategy(strategy.type_low), strategy(strategy.type_high)])
    return float(np.max(np.maximum(0.0, np.maximum(lo - ends, ends - hi))))


def is_bnic(game: WinnerTakeGame, tol: float = 1e-2) -> bool:
    """Whether truthful bidding is a best response to itself (up to ``tol``)."""
    truthful = LinearStrategy.truthful(game.type_low, game.type_high)
    br = best_response(game, truthful)
    return abs(br.m - 1.0) <= tol and abs(br.b) <= tol
