"""Walk through the shared-good auction: equilibria, objectives, and a fairness search.

Run: python demos/shared_good_auction.py
"""

import numpy as np

from mechdesign import AnnealConfig, ConstraintSpec, ObjectiveSpec, get_space, optimize, solve_equilibrium
from mechdesign.domains import SgaParams, sga_equilibrium_oracle, sga_game, sga_objective_oracles
from mechdesign.equilibrium import is_bnic
from mechdesign.evaluation import fairness_gap, winner_utility


def main():
    print("Equilibria found by iterated best response, against the closed form:")
    for h, k in [(0.5, 0.0), (1 / 3, 0.0), (0.0, 1.0), (0.4, 0.1)]:
        r = solve_equilibrium(sga_game(SgaParams(h, k)))
        want = sga_equilibrium_oracle(h, k)
        print(f"  h={h:.3f} k={k:.3f}: s(t) = {r.strategy.m:.4f} t {r.strategy.b:+.4f}"
              f"  (closed form {want.m:.4f} t {want.b:+.4f}, {r.iterations} iterations)")

    print("\nOnly h=1/3, k=0 makes truthful bidding an equilibrium:")
    for h, k in [(1 / 3, 0.0), (0.5, 0.0), (0.4, 0.1)]:
        print(f"  SGA({h:.3f}, {k:.3f}) truthful: {is_bnic(sga_game(SgaParams(h, k)))}")

    print("\nMonte Carlo objectives against their closed forms (n = 100000):")
    for h, k in [(0.2, 0.6), (0.7, 0.1)]:
        g, eq = sga_game(SgaParams(h, k)), sga_equilibrium_oracle(h, k)
        fair, win = sga_objective_oracles(h, k)
        print(f"  h={h} k={k}: fairness gap {fairness_gap(g, eq, n=100_000):.4f} (exact {fair:.4f}),"
              f" winner utility {winner_utility(g, eq, n=100_000):.4f} (exact {win:.4f})")

    print("\nAnnealing for the smallest fairness gap from (0.5, 0):")
    space = get_space("sga")
    res = optimize(
        space,
        ObjectiveSpec("fairness_gap", samples=5000, seed=1),
        [ConstraintSpec("convergence")],
        AnnealConfig(steps=300, seed=0),
        start=space.point((0.5, 0.0)),
    )
    theta = res.best_theta.as_dict()
    print(f"  best design h={theta['h']:.3f} k={theta['k']:.3f},"
          f" fairness gap {res.best_report.objective_estimate:.4f} (limit 1/9 = {1 / 9:.4f})")
    best_by_step = np.maximum.accumulate([-e.objective for e in res.trace])
    print(f"  trace has {len(res.trace)} steps; best gap after 50/150/300: "
          + ", ".join(f"{-best_by_step[i]:.4f}" for i in (49, 149, 299)))


if __name__ == "__main__":
    main()
