"""Multi-step evolution, loss-weighted observables, disorder and trajectory sampling."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import PLUS, Frame, WalkerState, check_loss, floquet_step
from .errors import BoundaryOverflow, ZeroNorm
from .field import CoinField

DEFAULT_EPS = 1e-8
DEFAULT_T_MAX = 500


@dataclass(frozen=True)
class FixedSteps:
    steps: int

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")

    @property
    def t_max(self) -> int:
        return self.steps


@dataclass(frozen=True)
class SurvivalBelow:
    """Run until the survival probability drops below ``eps`` (or ``t_max`` steps)."""

    eps: float = DEFAULT_EPS
    t_max: int = DEFAULT_T_MAX


def lattice_half_width(steps: int, start: int = 0) -> int:
    """Smallest safe lattice for ``steps`` Floquet steps from ``start`` (2 sites per step)."""
    return 2 * steps + 2 + abs(start)


@dataclass(eq=False)
class DetectionRecord:
    """Loss-detection probabilities ``P[t-1, i]`` for steps ``t = 1..T`` and sites ``positions[i]``.

    ``survival[t]`` is the squared norm left after ``t`` steps (``survival[0]``
    is the initial norm).  ``states`` is filled only when requested.
    """

    positions: np.ndarray
    P: np.ndarray
    survival: np.ndarray
    frame: Frame
    p: float
    t_max: int
    eps: float
    converged: bool
    field_info: dict = field(default_factory=dict)
    initial_info: dict = field(default_factory=dict)
    states: list | None = None

    @property
    def steps(self) -> int:
        return self.P.shape[0]

    @property
    def final_survival(self) -> float:
        return float(self.survival[-1])

    def bookkeeping_residual(self) -> float:
        """``|sum P + rho_T - rho_0|``; zero up to rounding for a lossless bookkeeping."""
        return abs(float(self.P.sum()) + self.final_survival - float(self.survival[0]))


@dataclass(frozen=True)
class Observables:
    value: float
    tail_bound: float
    converged: bool
    steps_used: int
    decay_rate: float


def evolve(
    initial: WalkerState,
    field: CoinField,
    p: float,
    frame: Frame = Frame.PRIME,
    stop=SurvivalBelow(),
    keep_states: bool = False,
) -> DetectionRecord:
    p = check_loss(p)
    frame = Frame.parse(frame)
    if isinstance(stop, FixedSteps):
        t_max, eps = stop.steps, DEFAULT_EPS
        early_exit = False
    else:
        t_max, eps = stop.t_max, stop.eps
        early_exit = True
    if field.half_width != initial.half_width:
        raise ValueError("coin field and initial state live on different lattices")

    rows = []
    survival = [initial.norm2]
    states = [initial] if keep_states else None
    state = initial
    for _ in range(t_max):
        state, row = floquet_step(state, field, p, frame)
        rows.append(row)
        survival.append(state.norm2)
        if keep_states:
            states.append(state)
        if early_exit and survival[-1] < eps:
            break
    survival = np.array(survival)
    return DetectionRecord(
        positions=initial.positions,
        P=np.array(rows),
        survival=survival,
        frame=frame,
        p=p,
        t_max=t_max,
        eps=eps,
        converged=bool(survival[-1] < eps),
        field_info=field.describe(),
        initial_info={"support": initial.support(), "norm2": float(survival[0])},
        states=states,
    )


def run_walk(
    coin,
    p: float,
    frame: Frame = Frame.PRIME,
    stop=SurvivalBelow(),
    start: int = 0,
    half_width: int | None = None,
    keep_states: bool = False,
) -> DetectionRecord:
    """Evolve ``|start> (x) |+>`` with a homogeneous coin or a prepared field."""
    L = half_width if half_width is not None else lattice_half_width(stop.t_max, start)
    if isinstance(coin, CoinField):
        field_ = coin
        if field_.half_width != L:
            raise ValueError("field half-width does not match the requested lattice")
    else:
        field_ = CoinField.homogeneous(coin, L)
    return evolve(WalkerState.localized(L, start, PLUS), field_, p, frame, stop, keep_states)


def _decay_rate(survival: np.ndarray) -> float:
    """Exponential decay rate per step fitted to the last quartile of ``survival``."""
    rho = survival[1:]
    n = rho.size
    tail = rho[n - max(2, n // 4) :] if n >= 2 else rho
    if tail.size < 2 or np.any(tail <= 0):
        return 0.0
    t = np.arange(tail.size, dtype=float)
    slope = np.polyfit(t, np.log(tail), 1)[0]
    # rounding noise on a flat tail must not pass for a (tiny) decay rate
    return float(-slope) if -slope > 1e-9 else 0.0


def _weighted_sum(rec: DetectionRecord, weights: np.ndarray, reach: float) -> Observables:
    value = float(np.sum(weights * rec.P))
    rho = rec.final_survival
    gamma = _decay_rate(rec.survival)
    T = rec.steps
    if rho == 0.0:
        bound = 0.0
    elif gamma > 0.0:
        bound = rho * (reach * T + 2.0 / gamma)
    else:
        bound = rho * reach * rec.t_max
    return Observables(value, bound, rec.converged, T, gamma)


def average_displacement(rec: DetectionRecord) -> Observables:
    """``sum_x sum_t x P(x, t)`` over the recorded steps with a tail bound.

    The walker moves at most two sites per step, so the unrecorded remainder
    is bounded by ``rho_T (2 T + 2 / gamma)`` for a geometric decay rate
    ``gamma`` fitted to the survival tail.
    """
    return _weighted_sum(rec, rec.positions[None, :].astype(float), 2.0)


def dwell_time(rec: DetectionRecord) -> Observables:
    """``sum_x sum_t t P(x, t)``; remainder bounded by ``rho_T (T + 2 / gamma)``."""
    t = np.arange(1, rec.steps + 1, dtype=float)[:, None]
    return _weighted_sum(rec, t, 1.0)


def survivor_distribution(state: WalkerState) -> np.ndarray:
    """Coin-summed position distribution of the surviving walker, normalised."""
    a = state.amplitudes
    w = np.sum(a.real**2 + a.imag**2, axis=1)
    total = w.sum()
    if not total > 0.0:
        raise ZeroNorm("walker state has fully decayed")
    return w / total


# ------------------------------------------------------------------- disorder


@dataclass(frozen=True)
class DisorderSpec:
    """Static uniform coin-angle disorder.

    Offsets for realization ``member`` of sweep point ``stream`` come from a
    PCG64 generator on ``SeedSequence(seed, spawn_key=(stream, member))``,
    so no two (stream, member) pairs share draws.  Within a stream, sites are
    visited in the order ``0, -1, 1, -2, 2, ...`` and each site consumes two
    doubles ``(d_theta1, d_theta2)``, so a site's offsets do not depend on
    the lattice size.
    """

    amplitude: float = math.pi / 20
    seed: int = 0
    ensemble_size: int = 10

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("disorder amplitude must be non-negative")
        if self.ensemble_size < 1:
            raise ValueError("ensemble_size must be >= 1")

    def member_seed(self, member: int, stream: int = 0) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.seed, spawn_key=(stream, member))


def _zigzag_index(x: np.ndarray) -> np.ndarray:
    return np.where(x >= 0, 2 * x, -2 * x - 1)


def disorder_offsets(spec: DisorderSpec, member: int, half_width: int, stream: int = 0) -> np.ndarray:
    """Array ``(2L+1, 2)`` of offsets in ``[-amplitude, amplitude]``."""
    n = 2 * half_width + 1
    rng = np.random.Generator(np.random.PCG64(spec.member_seed(member, stream)))
    draws = rng.random((n, 2))
    x = np.arange(-half_width, half_width + 1)
    return spec.amplitude * (2.0 * draws[_zigzag_index(x)] - 1.0)


def sample_disorder(base: CoinField, spec: DisorderSpec, member: int = 0, stream: int = 0) -> CoinField:
    if spec.amplitude == 0:
        return base
    off = disorder_offsets(spec, member, base.half_width, stream)
    return CoinField(
        base.theta1 + off[:, 0],
        base.theta2 + off[:, 1],
        layout=f"disordered_{base.layout}",
        params={**base.params, "amplitude": spec.amplitude, "seed": spec.seed, "stream": stream, "member": member},
    )


# ---------------------------------------------------------------- Monte Carlo


@dataclass(frozen=True, eq=False)
class MonteCarloResult:
    positions: np.ndarray
    counts: np.ndarray
    survivors: int
    trials: int
    seed: int

    @property
    def P_hat(self) -> np.ndarray:
        return self.counts / self.trials

    @property
    def stderr(self) -> np.ndarray:
        q = self.P_hat
        return np.sqrt(q * (1.0 - q) / self.trials)

    @property
    def surviving_fraction(self) -> float:
        return self.survivors / self.trials


def monte_carlo_oracle(
    initial: WalkerState,
    field: CoinField,
    p: float,
    frame: Frame,
    steps: int,
    trials: int,
    seed: int = 0,
) -> MonteCarloResult:
    """Sample single-walker trajectories with projective loss detection.

    Each step applies the unitary part, then detects the walker at site ``x``
    with probability ``p |<-|psi(x)>|^2 / <psi|psi>`` or keeps the
    renormalised post-``M`` state.  The uniforms come from PCG64 seeded with
    ``seed`` and are drawn as one ``(trials, steps)`` block, so results do
    not depend on the kernel backend.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p = check_loss(p)
    norm = math.sqrt(initial.norm2)
    if norm == 0:
        raise ZeroNorm("initial state is zero")
    ca, sa, cb, sb = field.trig_tables(frame)
    uniforms = np.random.Generator(np.random.PCG64(seed)).random((trials, steps))
    try:
        counts, survivors = kernels.monte_carlo_kernel(
            initial.amplitudes / norm, ca, sa, cb, sb, p, uniforms
        )
    except OverflowError as exc:
        raise BoundaryOverflow(str(exc)) from None
    return MonteCarloResult(initial.positions, counts, survivors, trials, seed)
