"""Per-site coin angle tables."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import CoinSpec, Frame, wrap_angle


@dataclass(frozen=True, eq=False)
class CoinField:
    """Coin angles resolved on sites ``-L..L``.

    Build with :meth:`homogeneous`, :meth:`two_region` or :meth:`explicit`;
    ``layout`` and ``params`` record how the table was produced.
    """

    theta1: np.ndarray
    theta2: np.ndarray
    layout: str = "explicit"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        t1 = np.asarray(wrap_angle(np.asarray(self.theta1, dtype=float)), dtype=float)
        t2 = np.asarray(wrap_angle(np.asarray(self.theta2, dtype=float)), dtype=float)
        if t1.ndim != 1 or t1.shape != t2.shape or t1.size % 2 == 0:
            raise ValueError("angle tables must be 1-D with equal odd length 2L+1")
        t1.setflags(write=False)
        t2.setflags(write=False)
        object.__setattr__(self, "theta1", t1)
        object.__setattr__(self, "theta2", t2)

    @classmethod
    def homogeneous(cls, coin: CoinSpec, half_width: int) -> "CoinField":
        n = 2 * half_width + 1
        return cls(
            np.full(n, coin.theta1),
            np.full(n, coin.theta2),
            layout="homogeneous",
            params={"theta1": coin.theta1, "theta2": coin.theta2},
        )

    @classmethod
    def two_region(cls, inner: CoinSpec, outer: CoinSpec, x0: int, half_width: int) -> "CoinField":
        """Inner angles on ``|x| <= x0``, outer angles elsewhere."""
        x = np.arange(-half_width, half_width + 1)
        is_inner = np.abs(x) <= x0
        return cls(
            np.where(is_inner, inner.theta1, outer.theta1),
            np.where(is_inner, inner.theta2, outer.theta2),
            layout="two_region",
            params={
                "inner": [inner.theta1, inner.theta2],
                "outer": [outer.theta1, outer.theta2],
                "x0": int(x0),
            },
        )

    @classmethod
    def explicit(cls, theta1, theta2) -> "CoinField":
        return cls(theta1, theta2, layout="explicit")

    @property
    def half_width(self) -> int:
        return (self.theta1.size - 1) // 2

    @property
    def positions(self) -> np.ndarray:
        L = self.half_width
        return np.arange(-L, L + 1)

    def angles_at(self, x: int) -> CoinSpec:
        i = x + self.half_width
        return CoinSpec(self.theta1[i], self.theta2[i])

    def frame_angles(self, frame) -> tuple[np.ndarray, np.ndarray]:
        """(outer, middle) per-site angle tables for ``frame``."""
        if Frame.parse(frame) is Frame.PRIME:
            return self.theta1, self.theta2
        return self.theta2, self.theta1

    def trig_tables(self, frame):
        """cos/sin of the half outer angle and of the middle angle."""
        a, b = self.frame_angles(frame)
        return np.cos(a / 2), np.sin(a / 2), np.cos(b), np.sin(b)

    def describe(self) -> dict:
        return {"layout": self.layout, "half_width": self.half_width, **self.params}
