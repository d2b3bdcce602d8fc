"""Momentum-space Floquet matrices, quasienergies and winding numbers.

Fourier convention: ``|k> = sum_x exp(i k x) |x>``, so the shift becomes
``S(k) = diag(exp(ik), exp(-ik))`` and component 0 is the left mover.

Each Bloch matrix is written ``U(k) = d0 + d . sigma`` with
``d0 = cos E`` and ``n = i d / sin E``.  The winding number counts turns of
``(Re n_z, Re n_y)`` around the x axis, with the angle measured from the z
axis toward the y axis; with this orientation the winding equals the
quantized loss-weighted displacement of the real-space walk.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .core import CoinSpec, Frame, check_loss, loss_operator
from .errors import DegenerateBand

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

GAP_TOL = 1e-4
DEFAULT_GRID = 256


def _rotations(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def bloch_matrices(ks, coin: CoinSpec, p: float, frame=Frame.PRIME) -> np.ndarray:
    """Stack of ``U(k)`` for every ``k`` in ``ks``; shape ``(len(ks), 2, 2)``."""
    ks = np.asarray(ks, dtype=float)
    a, b = coin.frame_angles(frame)
    half, mid = _rotations(a / 2), _rotations(b)
    shift = np.zeros(ks.shape + (2, 2), dtype=complex)
    shift[..., 0, 0] = np.exp(1j * ks)
    shift[..., 1, 1] = np.exp(-1j * ks)
    u = half @ shift @ mid @ shift @ half
    return loss_operator(p) @ u


@dataclass(frozen=True, eq=False)
class BlochMatrix:
    k: float
    matrix: np.ndarray
    frame: Frame
    coin: CoinSpec
    p: float


def bloch_floquet(k: float, coin: CoinSpec, p: float, frame=Frame.PRIME) -> BlochMatrix:
    p = check_loss(p)
    frame = Frame.parse(frame)
    return BlochMatrix(float(k), bloch_matrices([k], coin, p, frame)[0], frame, coin, p)


@dataclass(frozen=True, eq=False)
class BandDecomposition:
    d0: complex
    d: np.ndarray
    energy: complex
    n: np.ndarray
    valid: bool


def _pauli_coefficients(us):
    d0 = 0.5 * (us[..., 0, 0] + us[..., 1, 1])
    d = 0.5 * np.einsum("iab,...ba->...i", PAULI, us)
    return d0, d


def decompose(u, energy=None, tol: float = GAP_TOL) -> BandDecomposition:
    """Traceless decomposition of a 2x2 matrix.

    ``energy`` selects a branch of ``arccos(d0)``; by default the principal
    branch (real part in ``[0, pi]``) is used.
    """
    m = u.matrix if isinstance(u, BlochMatrix) else np.asarray(u, dtype=complex)
    d0, d = _pauli_coefficients(m)
    e = np.arccos(complex(d0)) if energy is None else complex(energy)
    s = np.sin(e)
    valid = bool(abs(s) >= tol)
    n = 1j * d / s if abs(s) > 0 else np.full(3, np.nan + 0j)
    return BandDecomposition(complex(d0), d, e, n, valid)


def _direction(us, e_prev=None):
    """Branch-tracked energies and spinor directions for a k-ordered stack."""
    d0, d = _pauli_coefficients(us)
    principal = np.arccos(d0.astype(complex))
    if e_prev is not None:
        principal = np.concatenate([[e_prev], principal])
        energy = kernels.track_branch(principal)[1:]
    else:
        energy = kernels.track_branch(principal)
    s = np.sin(energy)
    with np.errstate(divide="ignore", invalid="ignore"):
        n = 1j * d / s[:, None]
    return energy, s, n


@dataclass(frozen=True)
class Winding:
    """Winding of ``Re n`` over one Brillouin-zone loop.

    ``valid`` is False when refinement could not resolve every angle step or
    the tracked branch failed to close the loop.
    """

    value: int
    angle_sum: float
    valid: bool
    n_points: int
    branch_consistent: bool


def _loop_angles(ks, coin, p, frame):
    us = bloch_matrices(ks, coin, p, frame)
    energy, s, n = _direction(us)
    v = n[:, 2].real + 1j * n[:, 1].real
    return energy, s, v


def _winding_from_samples(v):
    dphi = np.angle(v[1:] / v[:-1])
    return dphi


def winding_number(
    coin: CoinSpec,
    p: float,
    frame=Frame.PRIME,
    grid: int = DEFAULT_GRID,
    tol: float = GAP_TOL,
    max_refine: int = 14,
) -> Winding:
    """Count turns of ``(Re n_z, Re n_y)`` as ``k`` runs once over (-pi, pi].

    Intervals whose angle step exceeds pi/2, or whose endpoints have
    ``|v| < tol`` or ``|sin E| < tol``, are bisected up to ``max_refine``
    times.  Raises :class:`DegenerateBand` when the winding vector or the
    band gap still vanishes after refinement.
    """
    if grid < 64:
        raise ValueError("grid must be >= 64")
    p = check_loss(p)
    frame = Frame.parse(frame)
    ks = np.linspace(-np.pi, np.pi, grid + 1)
    for _ in range(max_refine + 1):
        energy, s, v = _loop_angles(ks, coin, p, frame)
        small = (np.abs(s) < tol) | ~(np.abs(v) >= tol)
        with np.errstate(divide="ignore", invalid="ignore"):
            dphi = _winding_from_samples(v)
        bad = ~(np.abs(dphi) <= np.pi / 2) | small[1:] | small[:-1]
        if not bad.any():
            break
        mids = 0.5 * (ks[:-1] + ks[1:])[bad]
        ks = np.sort(np.concatenate([ks, mids]))
    else:
        if small.any():
            worst = ks[np.argmin(np.minimum(np.abs(s), np.nan_to_num(np.abs(v))))]
            raise DegenerateBand(
                f"gap or winding vector vanishes near k={worst:.6g} "
                f"for {coin} p={p} frame={frame.value}"
            )
        return Winding(0, float("nan"), False, ks.size, False)

    # the tracked branch must close the loop: v(pi) equal to v(-pi)
    closes = bool(abs(v[-1] - v[0]) <= 1e-6 * max(abs(v[0]), 1.0))
    v_loop = v.copy()
    if closes:
        v_loop[-1] = v_loop[0]
    total = float(np.sum(np.angle(v_loop[1:] / v_loop[:-1])))
    value = int(np.rint(total / (2 * np.pi)))
    valid = closes and abs(total - 2 * np.pi * value) <= 1e-6 * 2 * np.pi

    # cross-check against the un-tracked principal branch
    us = bloch_matrices(ks, coin, p, frame)
    d0, d = _pauli_coefficients(us)
    e_p = np.arccos(d0.astype(complex))
    with np.errstate(divide="ignore", invalid="ignore"):
        n_p = 1j * d / np.sin(e_p)[:, None]
    v_p = n_p[:, 2].real + 1j * n_p[:, 1].real
    v_p[-1] = v_p[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        alt = np.sum(np.angle(v_p[1:] / v_p[:-1]))
    branch_consistent = bool(np.isfinite(alt) and int(np.rint(alt / (2 * np.pi))) == value)
    return Winding(value, total, valid, ks.size, branch_consistent)


@dataclass(frozen=True, eq=False)
class QuasienergyBands:
    k: np.ndarray
    energy: np.ndarray
    gap0_ok: bool
    gappi_ok: bool

    @property
    def bands(self) -> np.ndarray:
        """``(+E_k, -E_k)`` per k, shape ``(N, 2)``."""
        return np.stack([self.energy, -self.energy], axis=1)


def _distance_mod_2pi(e, center):
    z = e - center
    return np.abs(z - 2 * np.pi * np.round(z.real / (2 * np.pi)))


def quasienergy_bands(
    coin: CoinSpec, p: float, frame=Frame.PRIME, grid: int = DEFAULT_GRID, tol: float = GAP_TOL
) -> QuasienergyBands:
    if grid < 2:
        raise ValueError("grid must be >= 2")
    p = check_loss(p)
    ks = np.linspace(-np.pi, np.pi, grid, endpoint=False) + 2 * np.pi / grid
    energy, _, _ = _direction(bloch_matrices(ks, coin, p, frame))
    gap0 = float(np.min(np.minimum(_distance_mod_2pi(energy, 0.0), _distance_mod_2pi(-energy, 0.0))))
    gappi = float(np.min(_distance_mod_2pi(energy, np.pi)))
    return QuasienergyBands(ks, energy, gap0 > tol, gappi > tol)


@dataclass(frozen=True)
class WindingResult:
    coin: CoinSpec
    p: float
    nu_prime: int | None
    nu_dprime: int | None
    valid_prime: bool
    valid_dprime: bool
    gap0_ok: bool
    gappi_ok: bool
    k_grid_size: int

    @property
    def valid(self) -> bool:
        return self.valid_prime and self.valid_dprime

    @property
    def nu_0(self) -> Fraction | None:
        if not self.valid:
            return None
        return Fraction(self.nu_prime + self.nu_dprime, 2)

    @property
    def nu_pi(self) -> Fraction | None:
        if not self.valid:
            return None
        return Fraction(self.nu_prime - self.nu_dprime, 2)

    @property
    def anomalous(self) -> bool:
        """True for half-integer ``(nu_0, nu_pi)``, which no quoted phase has."""
        return self.valid and (self.nu_prime - self.nu_dprime) % 2 != 0

    def pair(self) -> tuple[int, int] | None:
        if not self.valid or self.anomalous:
            return None
        return int(self.nu_0), int(self.nu_pi)


def _safe_winding(coin, p, frame, grid, tol):
    try:
        w = winding_number(coin, p, frame, grid, tol)
    except DegenerateBand:
        return None, False, 0
    return (w.value if w.valid else None), w.valid, w.n_points


def invariant_pair(coin: CoinSpec, p: float, grid: int = DEFAULT_GRID, tol: float = GAP_TOL) -> WindingResult:
    p = check_loss(p)
    nu1, ok1, n1 = _safe_winding(coin, p, Frame.PRIME, grid, tol)
    nu2, ok2, n2 = _safe_winding(coin, p, Frame.DOUBLE_PRIME, grid, tol)
    bands = [quasienergy_bands(coin, p, f, grid, tol) for f in Frame]
    return WindingResult(
        coin=coin,
        p=p,
        nu_prime=nu1,
        nu_dprime=nu2,
        valid_prime=ok1,
        valid_dprime=ok2,
        gap0_ok=all(b.gap0_ok for b in bands),
        gappi_ok=all(b.gappi_ok for b in bands),
        k_grid_size=max(n1, n2, grid + 1),
    )


@dataclass(frozen=True, eq=False)
class PhaseDiagram:
    theta1: np.ndarray
    theta2: np.ndarray
    p: float
    cells: list  # cells[i][j] is the WindingResult at (theta1[i], theta2[j])

    def rows(self):
        for i, t1 in enumerate(self.theta1):
            for j, t2 in enumerate(self.theta2):
                r = self.cells[i][j]
                yield {
                    "theta1": float(t1),
                    "theta2": float(t2),
                    "nu_prime": r.nu_prime,
                    "nu_dprime": r.nu_dprime,
                    "nu_0": None if r.nu_0 is None else str(r.nu_0),
                    "nu_pi": None if r.nu_pi is None else str(r.nu_pi),
                    "valid": r.valid and not r.anomalous,
                }


def phase_diagram(
    theta1_range,
    theta2_range,
    resolution,
    p: float,
    grid: int = DEFAULT_GRID,
    workers: int = 1,
) -> PhaseDiagram:
    """Evaluate :func:`invariant_pair` on an inclusive ``theta1 x theta2`` grid."""
    n1, n2 = (resolution, resolution) if np.isscalar(resolution) else resolution
    if n1 < 2 or n2 < 2:
        raise ValueError("resolution must be >= 2 per axis")
    t1 = np.linspace(*theta1_range, int(n1))
    t2 = np.linspace(*theta2_range, int(n2))
    # keep the raw grid values; CoinSpec wraps them for the computation only
    points = [(a, b) for a in t1 for b in t2]

    def cell(ab):
        return invariant_pair(CoinSpec(*ab), p, grid)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            flat = list(pool.map(cell, points))
    else:
        flat = [cell(ab) for ab in points]
    cells = [flat[i * len(t2) : (i + 1) * len(t2)] for i in range(len(t1))]
    return PhaseDiagram(t1, t2, p, cells)


def locate_transition(theta2: float, lo: float, hi: float, p: float, frame=Frame.PRIME, grid: int = DEFAULT_GRID, width: float = 1e-9):
    """Bisect ``theta1`` in ``[lo, hi]`` (fixed ``theta2``) for a winding jump.

    Returns the first ``theta1`` at which :class:`DegenerateBand` is raised,
    ``None`` when both ends carry the same winding, or the bracket midpoint
    if the bracket shrinks below ``width`` without the gap closing.
    """

    def value(t1):
        return winding_number(CoinSpec(t1, theta2), p, frame, grid).value

    try:
        left, right = value(lo), value(hi)
    except DegenerateBand:
        return lo
    if left == right:
        return None
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        try:
            v = value(mid)
        except DegenerateBand:
            return mid
        if v == left:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
