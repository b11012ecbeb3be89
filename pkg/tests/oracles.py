"""Brute-force reference computations that share no code with the solver."""

import numpy as np

from mechdesign.game import LinearStrategy, payoff


def quad_expected_utility(game, opp, t, bids, nodes=20001):
    """Midpoint-rule average of ``payoff`` over opponent types, for each bid."""
    A, B = opp.type_low, opp.type_high
    tp = A + (np.arange(nodes) + 0.5) * (B - A) / nodes
    ap = opp(tp)
    bids = np.atleast_1d(np.asarray(bids, dtype=float))
    return np.array([payoff(game, t, a, tp, ap).mean() for a in bids])


def mc_expected_utility(game, opp, t, a, n, seed):
    rng = np.random.default_rng(seed)
    tp = rng.uniform(opp.type_low, opp.type_high, n)
    u = payoff(game, t, a, tp, opp(tp))
    return u.mean(), u.std(ddof=1) / np.sqrt(n)


def grid_best_bids(eu, opp, types, step=1e-4):
    """Max over a bid grid covering the opponent range padded by one width."""
    lo, hi = opp.bid_range
    w = max(hi - lo, 1e-3)
    bids = np.arange(lo - w, hi + w + step, step)
    best_a, best_u = [], []
    for t in types:
        u = eu(t, bids)
        i = int(np.argmax(u))
        best_a.append(bids[i])
        best_u.append(u[i])
    return np.array(best_a), np.array(best_u)


def iterated_grid_equilibrium(game, iters=30, types=np.linspace(0, 1, 21), step=1e-3, nodes=4001):
    """Iterate grid-search best responses, fitting a line after each round."""
    s = LinearStrategy.truthful()
    for _ in range(iters):
        eu = lambda t, bids: quad_expected_utility(game, s, t, bids, nodes)
        bids, _ = grid_best_bids(eu, s, types, step)
        m, b = np.polyfit(types, bids, 1)
        s = LinearStrategy(float(m), float(b))
    return s
