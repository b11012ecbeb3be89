"""Revenue, welfare and spite in the seven-parameter auction family.

Run: python demos/auction_designs.py
"""

from mechdesign import get_space, solve_equilibrium
from mechdesign.domains import VICIOUS_L
from mechdesign.evaluation import check_ex_interim_ir, ir_repair, ir_shortfall, revenue, welfare


def report(space, values, label):
    theta = space.point(values)
    mech = space.build(theta)
    eq = solve_equilibrium(mech.game).strategy
    ir = check_ex_interim_ir(mech, eq)
    print(f"  {label}: s(t) = {eq.m:.3f} t {eq.b:+.3f}, revenue {revenue(mech, eq, n=100_000):.4f},"
          f" welfare {welfare(mech, eq, n=100_000):.4f}, IR {'holds' if ir.passed else 'fails'}")
    return theta, mech, eq


def main():
    myerson = get_space("myerson")
    print("Designs in the (q, k1, k2, K1, k3, k4, K2) family:")
    report(myerson, (1, 0.5, 0, 0, 0, 0, 0), "first price at half the bid (truthful)")
    report(myerson, (1, 0, 1, 0, 0, 0, 0), "second price")
    report(myerson, (1, 0.6, 0.92, 0.418, 0, 0.57, 0), "winner pays, loser refunded")
    print("  any q=1 design with an increasing equilibrium gives welfare 2/3;"
          " revenue depends on who pays what")

    vicious = get_space("vicious")
    print(f"\nSpiteful bidders (l = {VICIOUS_L:.4f}):")
    theta, mech, eq = report(vicious, (1, 0, 1, 0, 0, 0, 0), "second price")
    shift = ir_shortfall(mech, eq)
    fixed = ir_repair(vicious, theta, eq)
    after = vicious.build(fixed)
    eq2 = solve_equilibrium(after.game).strategy
    print(f"  paying every bidder {shift:.4f} restores IR: {check_ex_interim_ir(after, eq2).passed};"
          f" equilibrium stays {eq2.m:.3f} t {eq2.b:+.3f}")


if __name__ == "__main__":
    main()
