"""Design points, boxes and the mechanism record a factory produces."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .game import WinnerTakeGame


@dataclass(frozen=True)
class RevenueRule:
    """Designer revenue per profile: ``winner_bid*a_w + loser_bid*a_l + const``."""

    winner_bid: float = 0.0
    loser_bid: float = 0.0
    const: float = 0.0

    def __call__(self, a_w, a_l):
        return self.winner_bid * a_w + self.loser_bid * a_l + self.const

    @property
    def is_zero(self) -> bool:
        return self.winner_bid == 0.0 and self.loser_bid == 0.0 and self.const == 0.0


@dataclass(frozen=True)
class Mechanism:
    """A game plus what the designer needs to score it.

    ``allocation`` is the probability that the higher bidder receives the good.
    """

    game: WinnerTakeGame
    revenue: RevenueRule = field(default_factory=RevenueRule)
    allocation: float = 1.0


@dataclass(frozen=True)
class DesignPoint:
    names: tuple[str, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.names) != len(self.values):
            raise ValueError("names and values differ in length")

    def __getitem__(self, name: str) -> float:
        return self.values[self.names.index(name)]

    def as_array(self) -> np.ndarray:
        return np.array(self.values)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values))

    def replace(self, **updates: float) -> "DesignPoint":
        d = self.as_dict()
        for k, v in updates.items():
            if k not in d:
                raise KeyError(k)
            d[k] = float(v)
        return DesignPoint(self.names, tuple(d[n] for n in self.names))


@dataclass(frozen=True)
class DesignSpace:
    """A box of mechanism parameters and a factory turning points into mechanisms.

    ``constant_params`` names the parameters that are flat payments charged to
    the winner and the loser respectively; IR repair shifts them.
    """

    name: str
    names: tuple[str, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    factory: Callable[[DesignPoint], Mechanism]
    constant_params: tuple[str, ...] = ()

    def __post_init__(self):
        if not (len(self.names) == len(self.lower) == len(self.upper)):
            raise ValueError("names, lower and upper must have equal length")
        if any(lo > hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def dim(self) -> int:
        return len(self.names)

    def point(self, values: Sequence[float]) -> DesignPoint:
        if len(values) != self.dim:
            raise ValueError(f"{self.name} expects {self.dim} parameters, got {len(values)}")
        return DesignPoint(self.names, tuple(values))

    def contains(self, theta: DesignPoint, atol: float = 0.0) -> bool:
        x = theta.as_array()
        return bool(np.all(x >= np.array(self.lower) - atol) and np.all(x <= np.array(self.upper) + atol))

    def clip(self, values) -> np.ndarray:
        return np.clip(np.asarray(values, dtype=float), self.lower, self.upper)

    def random_point(self, rng: np.random.Generator) -> DesignPoint:
        return self.point(rng.uniform(self.lower, self.upper))

    def build(self, theta: DesignPoint) -> Mechanism:
        return self.factory(theta)
