import numpy as np
import pytest

from t1rho_inr import phantom
from t1rho_inr.encoding import apply_mask, e, e_adj, e_full, e_full_adj, fft2c, ifft2c
from t1rho_inr.sampling import make_mask


def rand_c(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def rel_adjoint_gap(Ax, y, x, Aty):
    lhs = np.vdot(y, Ax)
    rhs = np.vdot(Aty, x)
    return abs(lhs - rhs) / (np.linalg.norm(Ax) * np.linalg.norm(y))


def test_impulse_to_constant():
    img = np.zeros((8, 8), dtype=complex)
    img[4, 4] = 1.0
    F = fft2c(img)
    assert np.allclose(F, 1.0 / 8.0, atol=1e-14)


def test_unitarity_random():
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = rand_c(rng, (16, 12))
        assert abs(np.linalg.norm(fft2c(x)) - np.linalg.norm(x)) < 1e-10
        assert np.abs(ifft2c(fft2c(x)) - x).max() < 1e-12


def test_sinusoid_two_conjugate_peaks():
    """Real sinusoid at an integer frequency -> two conjugate k-space bins;
    expected spectrum computed by a direct DFT double sum."""
    n = 8
    gx = np.arange(n)
    img = np.cos(2 * np.pi * 2 * gx / n)[:, None] * np.ones((1, n))
    img = img.astype(complex)
    # direct centered DFT sum oracle
    direct = np.zeros((n, n), dtype=complex)
    ks = np.arange(n) - n // 2
    for i, kx in enumerate(ks):
        for j, ky in enumerate(ks):
            direct[i, j] = np.sum(
                img * np.exp(-2j * np.pi * (kx * (gx[:, None] - n // 2)
                                            + ky * (gx[None, :] - n // 2)) / n)
            ) / n
    F = fft2c(img)
    assert np.abs(F - direct).max() < 1e-10
    mags = np.abs(F)
    peaks = np.argwhere(mags > 1e-9)
    assert {tuple(p) for p in peaks} == {(4 - 2, 4), (4 + 2, 4)}
    assert F[2, 4] == pytest.approx(np.conj(F[6, 4]))


def test_e_full_unit_coil_is_fft():
    rng = np.random.default_rng(1)
    x = rand_c(rng, (8, 8, 3))
    coils = np.ones((8, 8, 1), dtype=complex)
    kt = e_full(x, coils)
    assert np.abs(kt[:, :, 0, :] - fft2c(x)).max() < 1e-13


def test_e_full_isometry_normalized_coils():
    rng = np.random.default_rng(2)
    coils = phantom.make_coil_maps(12, 12, 4, seed=0)
    x = rand_c(rng, (12, 12, 2))
    kt = e_full(x, coils)
    assert abs(np.linalg.norm(kt) - np.linalg.norm(x)) < 1e-10
    assert np.abs(e_full_adj(kt, coils) - x).max() < 1e-10


def test_e_full_adjoint_probes():
    rng = np.random.default_rng(3)
    coils = phantom.make_coil_maps(10, 12, 3, seed=1)
    for _ in range(20):
        x = rand_c(rng, (10, 12, 2))
        y = rand_c(rng, (10, 12, 3, 2))
        assert rel_adjoint_gap(e_full(x, coils), y, x, e_full_adj(y, coils)) < 1e-10


def test_e_full_adj_zero():
    coils = phantom.make_coil_maps(8, 8, 2, seed=2)
    assert np.all(e_full_adj(np.zeros((8, 8, 2, 3)), coils) == 0)


def test_mask_projection_properties():
    rng = np.random.default_rng(4)
    mask = make_mask(12, 2, 2, 3, seed=5)
    y = rand_c(rng, (8, 12, 2, 3))
    ones = make_mask(12, 1, 2, 3, seed=5)
    assert np.array_equal(apply_mask(y, ones), y)
    my = apply_mask(y, mask)
    assert np.array_equal(apply_mask(my, mask), my)
    assert np.linalg.norm(my) <= np.linalg.norm(y)
    # self-adjoint: <My, z> = <y, Mz>
    z = rand_c(rng, (8, 12, 2, 3))
    assert rel_adjoint_gap(my, z, y, apply_mask(z, mask)) < 1e-10


def test_masked_encoder_and_adjoint():
    rng = np.random.default_rng(5)
    coils = phantom.make_coil_maps(8, 8, 3, seed=3)
    mask = make_mask(8, 2, 2, 2, seed=6)
    ones = make_mask(8, 1, 2, 2, seed=6)
    x = rand_c(rng, (8, 8, 2))
    assert np.array_equal(e(x, coils, ones), e_full(x, coils))
    assert np.all(e(np.zeros((8, 8, 2)), coils, mask) == 0)
    for _ in range(20):
        x = rand_c(rng, (8, 8, 2))
        y = rand_c(rng, (8, 8, 3, 2))
        gap = rel_adjoint_gap(e(x, coils, mask), y, x, e_adj(y, coils, mask))
        assert gap < 1e-10


def test_shape_mismatch_raises():
    coils = phantom.make_coil_maps(8, 8, 2, seed=0)
    with pytest.raises(ValueError):
        e_full(np.zeros((6, 8, 2), dtype=complex), coils)
    with pytest.raises(ValueError):
        e_full_adj(np.zeros((8, 8, 3, 2), dtype=complex), coils)
