"""Hot numeric kernels in two interchangeable flavours.

Every kernel exists as a loop-based numba function (``*_numba``) and a
vectorised numpy function (``*_numpy``).  The module-level aliases
(``floquet_step_kernel``, ``monte_carlo_kernel``, ``track_branch``) point at
whichever flavour ``NUQW_BACKEND`` selected; both are always importable so
they can be benchmarked and cross-checked against each other.

Amplitude arrays have shape ``(n_sites, 2)`` with the coin index last.  One
Floquet step takes per-site cos/sin tables for the outer half-rotation
``(ca, sa)`` and for the middle rotation ``(cb, sb)`` and performs

    rotate(a/2) -> shift -> rotate(b) -> shift -> rotate(a/2)
    -> record p |<-|psi(x)>|^2 -> apply the survival map M.
"""
import numpy as np

from ._backend import HAS_NUMBA, USE_NUMBA, njit

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


# ---------------------------------------------------------------- numpy path


def _rotate_np(psi, c, s):
    out = np.empty_like(psi)
    out[..., 0] = c * psi[..., 0] - s * psi[..., 1]
    out[..., 1] = s * psi[..., 0] + c * psi[..., 1]
    return out


def _shift_np(psi):
    overflow = bool(np.any(psi[..., 0, 0] != 0) or np.any(psi[..., -1, 1] != 0))
    out = np.zeros_like(psi)
    out[..., :-1, 0] = psi[..., 1:, 0]
    out[..., 1:, 1] = psi[..., :-1, 1]
    return out, overflow


def _unitary_np(psi, ca, sa, cb, sb):
    psi = _rotate_np(psi, ca, sa)
    psi, o1 = _shift_np(psi)
    psi = _rotate_np(psi, cb, sb)
    psi, o2 = _shift_np(psi)
    psi = _rotate_np(psi, ca, sa)
    return psi, o1 or o2


def step_numpy(psi, ca, sa, cb, sb, p):
    """One lossy Floquet step; returns ``(psi_after_M, P_row, overflow)``.

    Leading batch axes on ``psi`` are allowed.
    """
    psi, overflow = _unitary_np(psi, ca, sa, cb, sb)
    plus = (psi[..., 0] + psi[..., 1]) * _INV_SQRT2
    minus = (psi[..., 0] - psi[..., 1]) * _INV_SQRT2
    prob = p * (minus.real**2 + minus.imag**2)
    minus = minus * np.sqrt(1.0 - p)
    out = np.empty_like(psi)
    out[..., 0] = (plus + minus) * _INV_SQRT2
    out[..., 1] = (plus - minus) * _INV_SQRT2
    return out, prob, overflow


def monte_carlo_numpy(psi0, ca, sa, cb, sb, p, uniforms, block=4096):
    """Sample detection events for ``uniforms.shape[0]`` independent walkers.

    ``uniforms[i, t]`` decides the outcome of step ``t`` for trajectory ``i``.
    Returns ``(counts[t, x], survivors)``.
    """
    trials, steps = uniforms.shape
    n = psi0.shape[0]
    counts = np.zeros((steps, n), dtype=np.int64)
    survivors = 0
    for start in range(0, trials, block):
        u_block = uniforms[start : start + block]
        psi = np.broadcast_to(psi0, (u_block.shape[0],) + psi0.shape).copy()
        alive = np.arange(u_block.shape[0])
        for t in range(steps):
            if alive.size == 0:
                break
            norm2 = np.sum(psi.real**2 + psi.imag**2, axis=(1, 2))
            after, prob, overflow = step_numpy(psi, ca, sa, cb, sb, p)
            if overflow:
                raise OverflowError("walker left the lattice")
            cdf = np.cumsum(prob, axis=1)
            u = u_block[alive, t] * norm2
            hit = u < cdf[:, -1]
            if np.any(hit):
                sites = np.argmax(cdf[hit] > u[hit, None], axis=1)
                np.add.at(counts[t], sites, 1)
            keep = ~hit
            after = after[keep]
            left = np.sum(after.real**2 + after.imag**2, axis=(1, 2))
            psi = after / np.sqrt(left)[:, None, None]
            alive = alive[keep]
        survivors += alive.size
    return counts, survivors


def track_branch_numpy(e_principal):
    """Continue ``arccos`` values along a sweep by picking the nearest branch.

    Candidates at each point are ``+-E + 2 pi m``; the one closest to the
    previous tracked value wins.
    """
    out = np.empty_like(e_principal)
    if e_principal.size == 0:
        return out
    out[0] = e_principal[0]
    two_pi = 2.0 * np.pi
    for j in range(1, e_principal.size):
        prev = out[j - 1]
        best = e_principal[j]
        best_dist = np.inf
        for sign in (1.0, -1.0):
            cand = sign * e_principal[j]
            m = np.round((prev - cand).real / two_pi)
            cand = cand + two_pi * m
            dist = abs(cand - prev)
            if dist < best_dist:
                best, best_dist = cand, dist
        out[j] = best
    return out


# ---------------------------------------------------------------- numba path


@njit
def _unitary_nb(psi, ca, sa, cb, sb, tmp):
    n = psi.shape[0]
    overflow = False
    # rotate(a/2) then shift into tmp
    for x in range(n):
        tmp[x, 0] = 0.0
        tmp[x, 1] = 0.0
    for x in range(n):
        u0 = ca[x] * psi[x, 0] - sa[x] * psi[x, 1]
        u1 = sa[x] * psi[x, 0] + ca[x] * psi[x, 1]
        if x == 0:
            if u0 != 0:
                overflow = True
        else:
            tmp[x - 1, 0] = u0
        if x == n - 1:
            if u1 != 0:
                overflow = True
        else:
            tmp[x + 1, 1] = u1
    # rotate(b) then shift back into psi
    for x in range(n):
        psi[x, 0] = 0.0
        psi[x, 1] = 0.0
    for x in range(n):
        u0 = cb[x] * tmp[x, 0] - sb[x] * tmp[x, 1]
        u1 = sb[x] * tmp[x, 0] + cb[x] * tmp[x, 1]
        if x == 0:
            if u0 != 0:
                overflow = True
        else:
            psi[x - 1, 0] = u0
        if x == n - 1:
            if u1 != 0:
                overflow = True
        else:
            psi[x + 1, 1] = u1
    for x in range(n):
        u0 = ca[x] * psi[x, 0] - sa[x] * psi[x, 1]
        u1 = sa[x] * psi[x, 0] + ca[x] * psi[x, 1]
        psi[x, 0] = u0
        psi[x, 1] = u1
    return overflow


@njit
def _loss_nb(psi, p, prob):
    """Fill ``prob`` with detection probabilities and apply M in place."""
    r = np.sqrt(2.0) * 0.5
    keep = np.sqrt(1.0 - p)
    for x in range(psi.shape[0]):
        plus = (psi[x, 0] + psi[x, 1]) * r
        minus = (psi[x, 0] - psi[x, 1]) * r
        prob[x] = p * (minus.real * minus.real + minus.imag * minus.imag)
        minus = minus * keep
        psi[x, 0] = (plus + minus) * r
        psi[x, 1] = (plus - minus) * r


@njit
def _step_nb(psi, ca, sa, cb, sb, p, out, prob):
    tmp = np.empty_like(psi)
    out[:, :] = psi
    overflow = _unitary_nb(out, ca, sa, cb, sb, tmp)
    _loss_nb(out, p, prob)
    return overflow


@njit
def _monte_carlo_nb(psi0, ca, sa, cb, sb, p, uniforms, counts):
    trials, steps = uniforms.shape
    n = psi0.shape[0]
    psi = np.empty_like(psi0)
    tmp = np.empty_like(psi0)
    prob = np.empty(n)
    survivors = 0
    overflow = False
    for i in range(trials):
        psi[:, :] = psi0
        detected = False
        for t in range(steps):
            norm2 = 0.0
            for x in range(n):
                for c in range(2):
                    norm2 += psi[x, c].real ** 2 + psi[x, c].imag ** 2
            if _unitary_nb(psi, ca, sa, cb, sb, tmp):
                overflow = True
            _loss_nb(psi, p, prob)
            u = uniforms[i, t] * norm2
            acc = 0.0
            site = -1
            for x in range(n):
                acc += prob[x]
                if u < acc:
                    site = x
                    break
            if site >= 0:
                counts[t, site] += 1
                detected = True
                break
            left = 0.0
            for x in range(n):
                for c in range(2):
                    left += psi[x, c].real ** 2 + psi[x, c].imag ** 2
            scale = 1.0 / np.sqrt(left)
            for x in range(n):
                psi[x, 0] *= scale
                psi[x, 1] *= scale
        if not detected:
            survivors += 1
    return survivors, overflow


@njit
def _track_branch_nb(e_principal, out):
    two_pi = 2.0 * np.pi
    out[0] = e_principal[0]
    for j in range(1, e_principal.shape[0]):
        prev = out[j - 1]
        best = e_principal[j]
        best_dist = np.inf
        for k in range(2):
            cand = e_principal[j] if k == 0 else -e_principal[j]
            m = np.round((prev - cand).real / two_pi)
            cand = cand + two_pi * m
            dist = abs(cand - prev)
            if dist < best_dist:
                best = cand
                best_dist = dist
        out[j] = best


def step_numba(psi, ca, sa, cb, sb, p):
    psi = np.ascontiguousarray(psi, dtype=np.complex128)
    out = np.empty_like(psi)
    prob = np.empty(psi.shape[0])
    overflow = _step_nb(psi, ca, sa, cb, sb, float(p), out, prob)
    return out, prob, bool(overflow)


def monte_carlo_numba(psi0, ca, sa, cb, sb, p, uniforms):
    psi0 = np.ascontiguousarray(psi0, dtype=np.complex128)
    counts = np.zeros((uniforms.shape[1], psi0.shape[0]), dtype=np.int64)
    survivors, overflow = _monte_carlo_nb(psi0, ca, sa, cb, sb, float(p), uniforms, counts)
    if overflow:
        raise OverflowError("walker left the lattice")
    return counts, int(survivors)


def track_branch_numba(e_principal):
    e_principal = np.ascontiguousarray(e_principal, dtype=np.complex128)
    out = np.empty_like(e_principal)
    if e_principal.size:
        _track_branch_nb(e_principal, out)
    return out


if not HAS_NUMBA:  # pragma: no cover
    step_numba, monte_carlo_numba, track_branch_numba = step_numpy, monte_carlo_numpy, track_branch_numpy

if USE_NUMBA:
    floquet_step_kernel = step_numba
    monte_carlo_kernel = monte_carlo_numba
    track_branch = track_branch_numba
else:
    floquet_step_kernel = step_numpy
    monte_carlo_kernel = monte_carlo_numpy
    track_branch = track_branch_numpy
