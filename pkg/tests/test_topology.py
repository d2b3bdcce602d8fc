import numpy as np
import pytest

from nuqw import CoinSpec, Frame, bloch_floquet, decompose, invariant_pair, phase_diagram, quasienergy_bands, winding_number
from nuqw.errors import DegenerateBand
from nuqw.topology import bloch_matrices, locate_transition

from .conftest import PI


def test_bloch_matrix_is_unitary_at_zero_loss(rng):
    for _ in range(10):
        coin = CoinSpec(*rng.uniform(-PI, PI, 2))
        for frame in Frame:
            u = bloch_floquet(rng.uniform(-PI, PI), coin, 0.0, frame).matrix
            assert np.allclose(u.conj().T @ u, np.eye(2), atol=1e-13)


def test_bloch_matrix_determinant_tracks_loss(rng):
    for p in (0.2, 2 / 3, 1.0):
        us = bloch_matrices(rng.uniform(-PI, PI, 20), CoinSpec(0.4, -1.3), p, Frame.DOUBLE_PRIME)
        assert np.allclose(np.linalg.det(us), np.sqrt(1 - p), atol=1e-13)


def test_bloch_matrix_is_fourier_transform_of_real_space_step():
    """Apply one real-space step to a plane wave and read off U(k)."""
    from nuqw import CoinField, WalkerState, floquet_step

    L, k, p = 30, 0.7, 0.4
    coin = CoinSpec(0.9, -0.35)
    x = np.arange(-L, L + 1)
    field = CoinField.homogeneous(coin, L)
    u = bloch_floquet(k, coin, p, Frame.PRIME).matrix
    for c in range(2):
        amp = np.zeros((2 * L + 1, 2), complex)
        amp[3:-3, c] = np.exp(1j * k * x[3:-3])
        out, _ = floquet_step(WalkerState(amp), field, p, Frame.PRIME)
        inner = slice(10, -10)
        expected = np.exp(1j * k * x[inner])[:, None] * u[:, c][None, :]
        assert np.allclose(out.amplitudes[inner], expected, atol=1e-12)


def test_decomposition_reconstructs_matrix_at_zero_loss(rng):
    paulis = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]])
    for _ in range(10):
        bm = bloch_floquet(rng.uniform(-PI, PI), CoinSpec(*rng.uniform(-PI, PI, 2)), 0.0)
        dec = decompose(bm)
        if not dec.valid:
            continue
        n_sigma = np.einsum("i,iab->ab", dec.n, paulis)
        rebuilt = np.cos(dec.energy) * np.eye(2) - 1j * np.sin(dec.energy) * n_sigma
        assert np.allclose(rebuilt, bm.matrix, atol=1e-12)
        assert np.dot(dec.n, dec.n) == pytest.approx(1.0, abs=1e-10)
        ev = np.linalg.eigvals(bm.matrix)
        for lam in np.exp([-1j * dec.energy, 1j * dec.energy]):
            assert np.min(np.abs(ev - lam)) < 1e-10


def test_decomposition_identities_with_loss(rng):
    """With loss det U = sqrt(1-p), so n.n sin^2 E = det - d0^2 replaces n.n = 1."""
    for p in (0.3, 2 / 3, 1.0):
        for _ in range(5):
            bm = bloch_floquet(rng.uniform(-PI, PI), CoinSpec(*rng.uniform(-PI, PI, 2)), p)
            dec = decompose(bm)
            det = np.linalg.det(bm.matrix)
            assert np.dot(dec.d, dec.d) == pytest.approx(dec.d0**2 - det, abs=1e-12)
            root = np.sqrt(dec.d0**2 - det + 0j)
            ev = np.linalg.eigvals(bm.matrix)
            for lam in (dec.d0 + root, dec.d0 - root):
                assert np.min(np.abs(ev - lam)) < 1e-8


def test_decompose_flags_gap_closing():
    assert not decompose(np.eye(2)).valid
    assert decompose(np.diag([1j, -1j])).valid


def test_frames_are_isospectral_without_loss(rng):
    for _ in range(5):
        coin = CoinSpec(*rng.uniform(-PI, PI, 2))
        ks = rng.uniform(-PI, PI, 8)
        a = np.linalg.eigvals(bloch_matrices(ks, coin, 0.0, Frame.PRIME))
        b = np.linalg.eigvals(bloch_matrices(ks, coin, 0.0, Frame.DOUBLE_PRIME))
        for ea, eb in zip(a, b):
            assert np.max(np.min(np.abs(ea[:, None] - eb[None, :]), axis=1)) < 1e-10


@pytest.mark.parametrize(
    "coin,pair",
    [
        (CoinSpec(PI / 8, 3 * PI / 16), (1, -1)),
        (CoinSpec(PI / 16, PI / 8), (1, -1)),
        (CoinSpec(-7 * PI / 16, -3 * PI / 8), (-1, -1)),
        (CoinSpec(-5 * PI / 8, -9 * PI / 16), (-1, 1)),
    ],
)
def test_invariant_pairs_of_reference_points(coin, pair):
    res = invariant_pair(coin, 2 / 3)
    assert res.valid and not res.anomalous
    assert res.pair() == pair
    assert res.gap0_ok and res.gappi_ok


def test_winding_is_independent_of_loss_strength():
    coin = CoinSpec(-3 * PI / 7, PI / 4)
    values = {winding_number(coin, p, f).value for p in (0.0, 0.36, 2 / 3, 1.0) for f in [Frame.PRIME]}
    assert values == {-2}


def test_winding_values_are_even_and_frames_differ_across_the_sweep():
    for t1 in (-3 * PI / 7, 0.0, 3 * PI / 7):
        w1 = winding_number(CoinSpec(t1, PI / 4), 2 / 3, Frame.PRIME)
        w2 = winding_number(CoinSpec(t1, PI / 4), 2 / 3, Frame.DOUBLE_PRIME)
        assert w1.valid and w2.valid and w1.branch_consistent
        assert w1.value % 2 == 0 and w2.value % 2 == 0
    assert winding_number(CoinSpec(0.0, PI / 4), 2 / 3, Frame.PRIME).value == 0
    assert winding_number(CoinSpec(0.0, PI / 4), 2 / 3, Frame.DOUBLE_PRIME).value == 2


def test_gap_closing_raises():
    with pytest.raises(DegenerateBand):
        winding_number(CoinSpec(PI / 4, PI / 4), 2 / 3)


def test_winding_grid_validation():
    with pytest.raises(ValueError):
        winding_number(CoinSpec(0.1, 0.2), 0.5, grid=16)


def test_transition_sits_at_quarter_pi():
    # resolution is set by the gap tolerance, not the bisection width
    t = locate_transition(PI / 4, 0.1, 1.3, 2 / 3)
    assert t == pytest.approx(PI / 4, abs=1e-4)
    assert locate_transition(PI / 4, -0.3, 0.3, 2 / 3) is None


def test_quasienergy_bands_shape_and_sign():
    bands = quasienergy_bands(CoinSpec(PI / 8, 3 * PI / 16), 2 / 3, grid=64)
    assert bands.bands.shape == (64, 2)
    assert np.allclose(bands.bands[:, 0], -bands.bands[:, 1])
    assert np.all(bands.energy.imag <= 1e-12)  # loss damps, never amplifies
    # without loss the quasienergy gap at pi closes on the transition line
    closed = quasienergy_bands(CoinSpec(PI / 4, PI / 4), 0.0, grid=64)
    assert closed.gap0_ok and not closed.gappi_ok


def test_phase_diagram_rows_and_threads():
    pd = phase_diagram((-PI / 2, PI / 2), (PI / 4, PI / 3), (3, 2), 2 / 3, grid=64, workers=2)
    rows = list(pd.rows())
    assert len(rows) == 6
    assert set(rows[0]) == {"theta1", "theta2", "nu_prime", "nu_dprime", "nu_0", "nu_pi", "valid"}
    seq = phase_diagram((-PI / 2, PI / 2), (PI / 4, PI / 3), (3, 2), 2 / 3, grid=64)
    assert rows == list(seq.rows())
    with pytest.raises(ValueError):
        phase_diagram((0, 1), (0, 1), 1, 0.5)
