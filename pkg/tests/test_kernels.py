import os
import subprocess
import sys

import numpy as np
import pytest

from nuqw import kernels
from nuqw._backend import HAS_NUMBA

from .conftest import random_field, random_frame, random_state

needs_numba = pytest.mark.skipif(not HAS_NUMBA, reason="numba not installed")


@needs_numba
def test_step_backends_agree(rng):
    L = 10
    for _ in range(20):
        field = random_field(rng, L)
        tables = field.trig_tables(random_frame(rng))
        psi = random_state(rng, L, support=4).amplitudes
        p = rng.uniform()
        a, pa, oa = kernels.step_numpy(psi, *tables, p)
        b, pb, ob = kernels.step_numba(psi, *tables, p)
        assert oa == ob is False
        assert np.allclose(a, b, atol=1e-15, rtol=0)
        assert np.allclose(pa, pb, atol=1e-15, rtol=0)


@needs_numba
def test_step_backends_agree_on_overflow(rng):
    L = 3
    psi = np.zeros((7, 2), complex)
    psi[-1] = [0, 1]
    tables = random_field(rng, L).trig_tables("prime")
    assert kernels.step_numpy(psi, *tables, 0.5)[2]
    assert kernels.step_numba(psi, *tables, 0.5)[2]


def test_numpy_step_supports_batches(rng):
    L = 6
    field = random_field(rng, L)
    tables = field.trig_tables("prime")
    batch = np.stack([random_state(rng, L).amplitudes for _ in range(3)])
    out, prob, _ = kernels.step_numpy(batch, *tables, 0.4)
    for i in range(3):
        single, ps, _ = kernels.step_numpy(batch[i], *tables, 0.4)
        assert np.array_equal(out[i], single) and np.array_equal(prob[i], ps)


@needs_numba
def test_monte_carlo_backends_give_identical_counts(rng):
    L = 10
    field = random_field(rng, L)
    tables = field.trig_tables("double_prime")
    psi = np.zeros((2 * L + 1, 2), complex)
    psi[L] = [1 / np.sqrt(2), 1 / np.sqrt(2)]
    u = np.random.Generator(np.random.PCG64(3)).random((5000, 4))
    ca, sa = kernels.monte_carlo_numpy(psi, *tables, 0.6, u)
    cb, sb = kernels.monte_carlo_numba(psi, *tables, 0.6, u)
    assert np.array_equal(ca, cb) and sa == sb
    assert ca.sum() + sa == 5000


@needs_numba
def test_branch_tracking_backends_agree(rng):
    e = np.arccos((rng.uniform(-1.2, 1.2, 200) + 0.3j * rng.normal(size=200)).astype(complex))
    assert np.allclose(kernels.track_branch_numpy(e), kernels.track_branch_numba(e), atol=1e-14)


def test_branch_tracking_is_continuous():
    ks = np.linspace(0, 2 * np.pi, 400)
    principal = np.arccos(np.cos(ks).astype(complex))  # folds back at pi
    tracked = kernels.track_branch_numpy(principal)
    assert np.max(np.abs(np.diff(tracked))) < 0.05
    assert np.allclose(np.cos(tracked), np.cos(ks))


def _backend_in_subprocess(value):
    env = {**os.environ, "NUQW_BACKEND": value}
    return subprocess.run(
        [sys.executable, "-c", "import nuqw, nuqw.kernels as k; print(nuqw.BACKEND, k.floquet_step_kernel.__name__)"],
        env=env,
        capture_output=True,
        text=True,
    )


def test_env_flag_selects_numpy_backend():
    r = _backend_in_subprocess("numpy")
    assert r.returncode == 0, r.stderr
    assert r.stdout.split() == ["numpy", "step_numpy"]


@needs_numba
def test_env_flag_default_is_numba():
    r = _backend_in_subprocess("numba")
    assert r.stdout.split() == ["numba", "step_numba"]


def test_env_flag_rejects_unknown_backend():
    r = _backend_in_subprocess("cuda")
    assert r.returncode != 0
    assert "NUQW_BACKEND" in r.stderr
