"""Mechanism families: shared-good auctions, constrained Myerson and vicious auctions.

Each family has a parameter record, a game factory, and a :class:`DesignSpace`
over the unit box. Closed-form results for the shared-good auction are kept
here as test oracles.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .design import DesignPoint, DesignSpace, Mechanism, RevenueRule
from .game import AffineBranch, LinearStrategy, WinnerTakeGame

VICIOUS_L = 2.0 / 7.0


@dataclass(frozen=True)
class SgaParams:
    h: float
    k: float


@dataclass(frozen=True)
class MyersonParams:
    q: float = 0.0
    k1: float = 0.0
    k2: float = 0.0
    K1: float = 0.0
    k3: float = 0.0
    k4: float = 0.0
    K2: float = 0.0


@dataclass(frozen=True)
class ViciousParams(MyersonParams):
    l: float = VICIOUS_L

    def __post_init__(self):
        if not 0.0 <= self.l < 1.0:
            raise ValueError("spite parameter l must lie in [0, 1)")


MYERSON_NAMES = tuple(f.name for f in fields(MyersonParams))


def sga_game(p: SgaParams, type_low: float = 0.0, type_high: float = 1.0) -> WinnerTakeGame:
    """Higher bidder takes the good and pays ``h*own + k*other`` to the loser."""
    win = AffineBranch(c_t=1.0, c_a=-p.h, c_ap=-p.k)
    lose = AffineBranch(c_a=p.k, c_ap=p.h)
    return WinnerTakeGame(win, lose, type_low, type_high)


def myerson_game(p: MyersonParams) -> WinnerTakeGame:
    win = AffineBranch(c_t=p.q, c_a=-p.k1, c_ap=-p.k2, c_0=-p.K1)
    lose = AffineBranch(c_t=1.0 - p.q, c_a=-p.k3, c_ap=-p.k4, c_0=-p.K2)
    return WinnerTakeGame(win, lose)


def vicious_game(p: ViciousParams) -> WinnerTakeGame:
    """Myerson payments with spite: each agent loses ``l`` times the rival's gain."""
    q, l = p.q, p.l
    win_scale = q * (1 - l) + (1 - q)
    lose_scale = (1 - q) * (1 - l) + q
    win = AffineBranch(
        c_t=q * (1 - l),
        c_a=-(p.k1 * win_scale - (1 - q) * l),
        c_tp=-(1 - q) * l,
        c_ap=-p.k2 * win_scale,
        c_0=-p.K1,
    )
    lose = AffineBranch(
        c_t=(1 - q) * (1 - l),
        c_a=-(p.k3 * lose_scale - q * l),
        c_tp=-q * l,
        c_ap=-p.k4 * lose_scale,
        c_0=-p.K2,
    )
    return WinnerTakeGame(win, lose)


def myerson_revenue(p: MyersonParams) -> RevenueRule:
    # winner pays k1*a_w + k2*a_l + K1, loser pays k3*a_l + k4*a_w + K2
    return RevenueRule(winner_bid=p.k1 + p.k4, loser_bid=p.k2 + p.k3, const=p.K1 + p.K2)


def sga_mechanism(theta: DesignPoint) -> Mechanism:
    return Mechanism(sga_game(SgaParams(theta["h"], theta["k"])), RevenueRule(), 1.0)


def myerson_mechanism(theta: DesignPoint) -> Mechanism:
    p = MyersonParams(*(theta[n] for n in MYERSON_NAMES))
    return Mechanism(myerson_game(p), myerson_revenue(p), p.q)


def vicious_factory(l: float = VICIOUS_L):
    def build(theta: DesignPoint) -> Mechanism:
        p = ViciousParams(*(theta[n] for n in MYERSON_NAMES), l=l)
        return Mechanism(vicious_game(p), myerson_revenue(p), p.q)

    return build


def sga_space() -> DesignSpace:
    return DesignSpace("sga", ("h", "k"), (0.0, 0.0), (1.0, 1.0), sga_mechanism)


def myerson_space() -> DesignSpace:
    return DesignSpace(
        "myerson", MYERSON_NAMES, (0.0,) * 7, (1.0,) * 7, myerson_mechanism, ("K1", "K2")
    )


def vicious_space(l: float = VICIOUS_L) -> DesignSpace:
    return DesignSpace(
        "vicious", MYERSON_NAMES, (0.0,) * 7, (1.0,) * 7, vicious_factory(l), ("K1", "K2")
    )


DOMAINS = {"sga": sga_space, "myerson": myerson_space, "vicious": vicious_space}


def get_space(name: str, **kwargs) -> DesignSpace:
    try:
        make = DOMAINS[name]
    except KeyError:
        raise KeyError(f"unknown domain {name!r}; choose from {sorted(DOMAINS)}") from None
    return make(**kwargs)


# closed forms for SGA(h, k) under uniform types


def sga_equilibrium_oracle(h: float, k: float, A: float = 0.0, B: float = 1.0) -> LinearStrategy:
    """Known symmetric equilibrium ``t/(3(h+k)) + (hA+kB)/(6(h+k)^2)``."""
    if h < 0 or k < 0:
        raise ValueError("h and k must be nonnegative")
    s = h + k
    if s <= 0:
        raise ValueError("h + k must be positive")
    return LinearStrategy(1.0 / (3 * s), (h * A + k * B) / (6 * s * s), A, B)


def sga_objective_oracles(h: float, k: float) -> tuple[float, float]:
    """``(fairness gap, winner utility)`` at the equilibrium above, types U[0,1]."""
    s = h + k
    if s <= 0:
        raise ValueError("h + k must be positive")
    return (2 * h + k) / (9 * s), 4.0 / 9.0 - k / (18 * s)
