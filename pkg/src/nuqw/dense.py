"""Dense-matrix reference simulator.

Builds the full ``2(2L+1)``-dimensional operators straight from their
ket-bra definitions and multiplies them out.  It shares nothing with the
kernels beyond the basis ordering (index ``2 (x + L) + c``), so it serves as
an independent oracle for small lattices.
"""
import numpy as np

from .core import Frame


def _ket(n, i):
    v = np.zeros(n)
    v[i] = 1.0
    return v


def position_projector(half_width, x):
    n = 2 * half_width + 1
    return np.outer(_ket(n, x + half_width), _ket(n, x + half_width))


def rotation_operator(thetas):
    """``sum_x |x><x| (x) exp(-i theta(x) sigma_y)``."""
    sigma_y = np.array([[0, -1j], [1j, 0]])
    n = len(thetas)
    op = np.zeros((2 * n, 2 * n), dtype=complex)
    for i, th in enumerate(thetas):
        # matrix exponential of a Pauli: cos(th) 1 - i sin(th) sigma_y
        block = np.cos(th) * np.eye(2) - 1j * np.sin(th) * sigma_y
        op += np.kron(np.outer(_ket(n, i), _ket(n, i)), block)
    return op


def shift_operator(half_width):
    """``sum_x |x-1><x| (x) |0><0| + |x+1><x| (x) |1><1|`` truncated to the lattice."""
    n = 2 * half_width + 1
    up, down = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    op = np.zeros((2 * n, 2 * n))
    for i in range(n):
        if i - 1 >= 0:
            op += np.kron(np.outer(_ket(n, i - 1), _ket(n, i)), up)
        if i + 1 < n:
            op += np.kron(np.outer(_ket(n, i + 1), _ket(n, i)), down)
    return op


def kraus_pair(half_width, p):
    n = 2 * half_width + 1
    plus = np.array([1.0, 1.0]) / np.sqrt(2)
    minus = np.array([1.0, -1.0]) / np.sqrt(2)
    m = np.outer(plus, plus) + np.sqrt(1 - p) * np.outer(minus, minus)
    me = np.sqrt(p) * np.outer(minus, minus)
    eye = np.eye(n)
    return np.kron(eye, m), np.kron(eye, me)


def unitary_part(theta1, theta2, frame=Frame.PRIME):
    """``R(a/2) S R(b) S R(a/2)`` with per-site angle arrays."""
    theta1, theta2 = np.asarray(theta1, float), np.asarray(theta2, float)
    a, b = (theta1, theta2) if Frame.parse(frame) is Frame.PRIME else (theta2, theta1)
    L = (len(a) - 1) // 2
    half = rotation_operator(a / 2)
    s = shift_operator(L)
    return half @ s @ rotation_operator(b) @ s @ half


def dense_evolve(psi0, theta1, theta2, p, frame, steps):
    """Return ``(states, rows)``: states after each step and detection rows.

    ``psi0`` is an ``(n_sites, 2)`` amplitude array.
    """
    psi = np.asarray(psi0, dtype=complex).reshape(-1)
    n = psi.size // 2
    L = (n - 1) // 2
    u = unitary_part(theta1, theta2, frame)
    m, me = kraus_pair(L, p)
    projectors = [np.kron(position_projector(L, x), np.eye(2)) for x in range(-L, L + 1)]
    states, rows = [], []
    for _ in range(steps):
        detected = me @ u @ psi
        rows.append(np.array([np.vdot(detected, proj @ detected).real for proj in projectors]))
        psi = m @ u @ psi
        states.append(psi.reshape(n, 2).copy())
    return states, np.array(rows)
