"""Two-branch games with affine payoffs, linear strategies and type samplers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np


class SamplingError(RuntimeError):
    """An external type sampler failed or returned malformed draws."""


@dataclass(frozen=True)
class AffineBranch:
    """Payoff ``c_t*t + c_a*a + c_tp*t' + c_ap*a' + c_0``.

    ``t, a`` are the player's own type and bid, ``t', a'`` the opponent's.
    """

    c_t: float = 0.0
    c_a: float = 0.0
    c_tp: float = 0.0
    c_ap: float = 0.0
    c_0: float = 0.0

    def __post_init__(self):
        for name in ("c_t", "c_a", "c_tp", "c_ap", "c_0"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)

    def __call__(self, t, a, tp, ap):
        return self.c_t * t + self.c_a * a + self.c_tp * tp + self.c_ap * ap + self.c_0

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.c_t, self.c_a, self.c_tp, self.c_ap, self.c_0)

    def shifted(self, delta: float) -> "AffineBranch":
        return replace(self, c_0=self.c_0 + delta)


@dataclass(frozen=True)
class WinnerTakeGame:
    """Symmetric two-player game: ``win`` if own bid is higher, ``lose`` if lower.

    Ties pay the average of the two branches. Both players draw types
    i.i.d. from ``U[type_low, type_high]``.
    """

    win: AffineBranch
    lose: AffineBranch
    type_low: float = 0.0
    type_high: float = 1.0

    def __post_init__(self):
        if not self.type_low < self.type_high:
            raise ValueError("type_low must be strictly below type_high")

    def payoff(self, t, a, tp, ap):
        return payoff(self, t, a, tp, ap)

    def shifted(self, delta: float) -> "WinnerTakeGame":
        """Add ``delta`` to the constant of both branches."""
        return replace(self, win=self.win.shifted(delta), lose=self.lose.shifted(delta))


def payoff(game: WinnerTakeGame, t, a, tp, ap):
    """Realized payoff of a player with type ``t`` bidding ``a``.

    Accepts scalars or broadcastable arrays.
    """
    w = game.win(t, a, tp, ap)
    l = game.lose(t, a, tp, ap)
    out = np.where(a > ap, w, np.where(a < ap, l, 0.5 * (w + l)))
    if np.ndim(out) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class LinearStrategy:
    """Bid function ``s(t) = m*t + b`` on ``[type_low, type_high]``."""

    m: float
    b: float
    type_low: float = 0.0
    type_high: float = 1.0

    def __call__(self, t):
        return self.m * t + self.b

    @property
    def bid_range(self) -> tuple[float, float]:
        lo = self.m * self.type_low + self.b
        hi = self.m * self.type_high + self.b
        return (lo, hi) if lo <= hi else (hi, lo)

    def same_domain(self, other) -> bool:
        return (self.type_low, self.type_high) == (other.type_low, other.type_high)

    @classmethod
    def truthful(cls, type_low: float = 0.0, type_high: float = 1.0) -> "LinearStrategy":
        return cls(1.0, 0.0, type_low, type_high)


@dataclass
class TypeSampler:
    """Seeded source of i.i.d. types.

    With ``draw=None`` types are ``U[low, high]``. Otherwise ``draw(rng, size)``
    must return an array of ``size`` types; it is treated as a black box.
    The sampler is stateful: successive calls continue the same stream.
    """

    seed: int = 0
    low: float = 0.0
    high: float = 1.0
    draw: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self.rng = np.random.default_rng(self.seed)

    @classmethod
    def for_game(cls, game: WinnerTakeGame, seed: int = 0) -> "TypeSampler":
        return cls(seed=seed, low=game.type_low, high=game.type_high)

    def types(self, n: int) -> np.ndarray:
        if n < 1:
            raise ValueError("n must be >= 1")
        if self.draw is None:
            return self.rng.uniform(self.low, self.high, size=n)
        try:
            out = np.asarray(self.draw(self.rng, n), dtype=float)
        except Exception as exc:
            raise SamplingError(f"type sampler failed: {exc}") from exc
        if out.shape != (n,) or not np.all(np.isfinite(out)):
            raise SamplingError(f"type sampler returned shape {out.shape} or non-finite values")
        return out


def sample_type_profiles(sampler: TypeSampler, n: int) -> np.ndarray:
    """Draw ``n`` independent type profiles as an ``(n, 2)`` array of ``(t, t')``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    draws = sampler.types(2 * n)
    return draws.reshape(n, 2)
