"""States, coin/shift/loss operators and the single lossy Floquet step.

Conventions
-----------
* Coin basis: component 0 is ``|0>``, component 1 is ``|1>``;
  ``|+-> = (|0> +- |1>) / sqrt(2)``.
* ``R(theta) = exp(-i theta sigma_y) = [[cos, -sin], [sin, cos]]``.
* The shift moves component 0 one site left and component 1 one site right.
* Loss is the Kraus pair ``M = |+><+| + sqrt(1-p)|-><-|`` (walker survives)
  and ``M_e = sqrt(p)|-><-|`` (walker detected).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import BoundaryOverflow

PLUS = np.array([1.0, 1.0]) / math.sqrt(2.0)
MINUS = np.array([1.0, -1.0]) / math.sqrt(2.0)

TWO_PI = 2.0 * math.pi


def wrap_angle(theta):
    """Map angles into (-pi, pi]; values already inside are returned untouched."""
    theta = np.asarray(theta, dtype=float)
    inside = (theta > -math.pi) & (theta <= math.pi)
    wrapped = math.pi - np.mod(math.pi - theta, TWO_PI)
    out = np.where(inside, theta, wrapped)
    return float(out) if out.ndim == 0 else out


class Frame(enum.Enum):
    """Time frame of the Floquet operator.

    ``PRIME`` is ``M R(t1/2) S R(t2) S R(t1/2)``; ``DOUBLE_PRIME`` swaps the
    roles of the two angles.
    """

    PRIME = "prime"
    DOUBLE_PRIME = "double_prime"

    @classmethod
    def parse(cls, value) -> "Frame":
        if isinstance(value, Frame):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"prime": cls.PRIME, "'": cls.PRIME, "double_prime": cls.DOUBLE_PRIME, "''": cls.DOUBLE_PRIME}
        if key not in aliases:
            raise ValueError(f"unknown frame {value!r}")
        return aliases[key]


@dataclass(frozen=True)
class CoinSpec:
    """Homogeneous coin angles (radians), stored wrapped into (-pi, pi]."""

    theta1: float
    theta2: float

    def __post_init__(self):
        object.__setattr__(self, "theta1", wrap_angle(self.theta1))
        object.__setattr__(self, "theta2", wrap_angle(self.theta2))

    def frame_angles(self, frame: Frame) -> tuple[float, float]:
        """(outer, middle) rotation angles for ``frame``."""
        if Frame.parse(frame) is Frame.PRIME:
            return self.theta1, self.theta2
        return self.theta2, self.theta1


def check_loss(p, allow_zero=True) -> float:
    p = float(p)
    lo_ok = p >= 0.0 if allow_zero else p > 0.0
    if not (lo_ok and p <= 1.0) or math.isnan(p):
        raise ValueError(f"loss parameter must lie in {'[0' if allow_zero else '(0'}, 1], got {p}")
    return p


@dataclass(frozen=True, eq=False)
class WalkerState:
    """Two-component amplitudes on sites ``-L..L``; ``amplitudes[i]`` is site ``i - L``."""

    amplitudes: np.ndarray
    t: int = 0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 2 or amps.shape[1] != 2 or amps.shape[0] % 2 == 0:
            raise ValueError(f"amplitudes must have shape (2L+1, 2), got {amps.shape}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def localized(cls, half_width: int, x: int = 0, coin=PLUS) -> "WalkerState":
        if abs(x) > half_width:
            raise ValueError(f"site {x} outside lattice of half-width {half_width}")
        amps = np.zeros((2 * half_width + 1, 2), dtype=np.complex128)
        amps[x + half_width] = np.asarray(coin, dtype=np.complex128)
        return cls(amps)

    @property
    def half_width(self) -> int:
        return (self.amplitudes.shape[0] - 1) // 2

    @property
    def positions(self) -> np.ndarray:
        L = self.half_width
        return np.arange(-L, L + 1)

    @property
    def norm2(self) -> float:
        a = self.amplitudes
        return float(np.sum(a.real**2 + a.imag**2))

    def at(self, x: int) -> np.ndarray:
        return self.amplitudes[x + self.half_width]

    def support(self) -> tuple[int, int] | None:
        idx = np.flatnonzero(np.any(self.amplitudes != 0, axis=1))
        if idx.size == 0:
            return None
        L = self.half_width
        return int(idx[0]) - L, int(idx[-1]) - L


def coin_rotation(theta: float) -> np.ndarray:
    """``exp(-i theta sigma_y)`` as a real 2x2 matrix."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def loss_operator(p: float) -> np.ndarray:
    """Survival Kraus operator ``M`` on the coin space."""
    return np.outer(PLUS, PLUS) + math.sqrt(1.0 - p) * np.outer(MINUS, MINUS)


def detection_operator(p: float) -> np.ndarray:
    """Detection Kraus operator ``M_e`` on the coin space."""
    return math.sqrt(p) * np.outer(MINUS, MINUS)


def rotate(state: WalkerState, theta) -> WalkerState:
    """Apply ``R(theta(x))`` at every site; ``theta`` may be a scalar or per-site array."""
    theta = np.broadcast_to(np.asarray(theta, dtype=float), state.amplitudes.shape[:1])
    c, s = np.cos(theta), np.sin(theta)
    a = state.amplitudes
    out = np.empty_like(a)
    out[:, 0] = c * a[:, 0] - s * a[:, 1]
    out[:, 1] = s * a[:, 0] + c * a[:, 1]
    return WalkerState(out, state.t)


def shift_apply(state: WalkerState) -> WalkerState:
    a = state.amplitudes
    if a[0, 0] != 0 or a[-1, 1] != 0:
        raise BoundaryOverflow(
            f"amplitude at the lattice edge would leave [-{state.half_width}, {state.half_width}]"
        )
    out = np.zeros_like(a)
    out[:-1, 0] = a[1:, 0]
    out[1:, 1] = a[:-1, 1]
    return WalkerState(out, state.t)


def _minus_component(a: np.ndarray) -> np.ndarray:
    return (a[:, 0] - a[:, 1]) / math.sqrt(2.0)


def loss_map_apply(state: WalkerState, p: float) -> WalkerState:
    """Keep ``|+>`` and scale ``|->`` by ``sqrt(1-p)`` at every site."""
    p = check_loss(p)
    a = state.amplitudes
    plus = (a[:, 0] + a[:, 1]) / math.sqrt(2.0)
    minus = _minus_component(a) * math.sqrt(1.0 - p)
    out = np.stack([plus + minus, plus - minus], axis=1) / math.sqrt(2.0)
    return WalkerState(out, state.t)


def detection_probabilities(state_after_u: WalkerState, p: float) -> np.ndarray:
    """Per-site loss probability ``p |<-|psi(x)>|^2`` of the pre-``M`` state."""
    p = check_loss(p)
    minus = _minus_component(state_after_u.amplitudes)
    return p * (minus.real**2 + minus.imag**2)


def floquet_step(state: WalkerState, field, p: float, frame: Frame = Frame.PRIME):
    """Advance one lossy step; returns ``(new_state, detection_row)``.

    ``field`` is a :class:`~nuqw.field.CoinField` on the same lattice; the
    rotation applied at site ``x`` always uses the angles stored at ``x``.
    """
    p = check_loss(p)
    ca, sa, cb, sb = field.trig_tables(frame)
    if ca.shape[0] != state.amplitudes.shape[0]:
        raise ValueError("coin field and state live on different lattices")
    out, prob, overflow = kernels.floquet_step_kernel(state.amplitudes, ca, sa, cb, sb, p)
    if overflow:
        raise BoundaryOverflow(
            f"step {state.t + 1} pushes amplitude off the lattice of half-width {state.half_width}"
        )
    return WalkerState(out, state.t + 1), prob
