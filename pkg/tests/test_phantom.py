import numpy as np
import pytest

from t1rho_inr import phantom
from t1rho_inr.config import EllipseRegion, default_phantom_regions
from t1rho_inr.encoding import e_full_adj


def circle(r, m0=1.0, t1=50.0):
    return EllipseRegion((0.0, 0.0), (r, r), 0.0, m0, t1)


def test_single_circle_maps():
    m0, t1, sup = phantom.make_phantom([circle(0.5)], 64, 64)
    gx, gy = phantom.pixel_grid(64, 64)
    inside = gx**2 + gy**2 <= 0.25
    assert np.array_equal(sup, inside)
    assert np.all(t1[inside] == 50.0)
    assert np.all(t1[~inside] == 0.0)
    assert np.all(m0[inside] == 1.0)


def test_overlap_overwrites():
    a = EllipseRegion((-0.2, 0.0), (0.4, 0.4), 0.0, 1.0, 50.0)
    b = EllipseRegion((0.2, 0.0), (0.4, 0.4), 0.0, 1.0, 80.0)
    _, t1, _ = phantom.make_phantom([a, b], 64, 64)
    overlap = phantom.ellipse_mask(64, 64, a) & phantom.ellipse_mask(64, 64, b)
    assert overlap.any()
    assert np.all(t1[overlap] == 80.0)


def test_empty_region_list_rejected():
    with pytest.raises(ValueError, match="at least one region"):
        phantom.make_phantom([], 16, 16)


def test_default_regions_area_oracle():
    """Pixel-count areas of each ellipse agree with pi*a*b within 2% at 64x64."""
    h = 2.0 / 63   # inclusive pixel-center spacing
    for region in default_phantom_regions():
        n_pixels = phantom.ellipse_mask(64, 64, region).sum()
        analytic = np.pi * region.axes[0] * region.axes[1]
        assert abs(n_pixels * h * h - analytic) / analytic < 0.02


def test_coil_maps_single_coil_unit_magnitude():
    maps = phantom.make_coil_maps(32, 32, 1, seed=0)
    assert np.allclose(np.abs(maps), 1.0, atol=1e-12)


@pytest.mark.parametrize("n_c", [2, 4, 7])
def test_coil_normalization(n_c):
    maps = phantom.make_coil_maps(24, 20, n_c, seed=3)
    ssq = np.sum(np.abs(maps) ** 2, axis=2)
    assert np.abs(ssq - 1.0).max() < 1e-10


def test_coil_maps_deterministic():
    a = phantom.make_coil_maps(16, 16, 4, seed=11)
    b = phantom.make_coil_maps(16, 16, 4, seed=11)
    assert np.array_equal(a, b)
    c = phantom.make_coil_maps(16, 16, 4, seed=12)
    assert not np.array_equal(a, c)


def test_relaxation_e_minus_one():
    m0 = np.array([[1.0]])
    t1 = np.array([[50.0]])
    series = phantom.simulate_weighted_images(m0, t1, [50.0], phase_map=False)
    assert series[0, 0, 0] == pytest.approx(np.exp(-1.0), abs=1e-12)
    assert series[0, 0, 0] == pytest.approx(0.367879, abs=1e-6)


def test_relaxation_tsl_zero_is_m0():
    m0 = np.array([[0.7, 0.0]])
    t1 = np.array([[40.0, 0.0]])
    series = phantom.simulate_weighted_images(m0, t1, [0.0, 30.0], phase_map=False)
    assert series[0, 0, 0] == 0.7
    assert np.all(series[0, 1, :] == 0.0)


def test_relaxation_geometric_ratio_oracle():
    """Uniform TSL spacing: the signal is geometric with ratio exp(-dt/T1rho);
    cross-check every frame against direct per-pixel evaluation."""
    rng = np.random.default_rng(4)
    m0 = rng.uniform(0.5, 1.5, (8, 8))
    t1 = rng.uniform(30.0, 120.0, (8, 8))
    tsl = [20.0, 40.0, 60.0, 80.0, 100.0]
    series = phantom.simulate_weighted_images(m0, t1, tsl, phase_map=False).real
    direct = np.empty_like(series)
    for i in range(8):
        for j in range(8):
            for k, t in enumerate(tsl):
                direct[i, j, k] = m0[i, j] * np.exp(-t / t1[i, j])
    assert np.allclose(series, direct, rtol=0, atol=1e-14)
    ratio = series[:, :, 1:] / series[:, :, :-1]
    assert np.allclose(ratio, np.exp(-20.0 / t1)[:, :, None], rtol=1e-12)


def test_relaxation_zero_t1rho_with_signal_rejected():
    with pytest.raises(ValueError, match="T1rho"):
        phantom.simulate_weighted_images(
            np.array([[1.0]]), np.array([[0.0]]), [10.0]
        )


def test_relaxation_monotone_decay():
    m0, t1, sup = phantom.make_phantom(default_phantom_regions(), 32, 32)
    series = np.abs(phantom.simulate_weighted_images(m0, t1, [1.0, 20.0, 40.0, 60.0]))
    diffs = np.diff(series[sup], axis=1)
    assert np.all(diffs < 0)


def test_kt_constant_image_single_peak():
    img = np.ones((16, 16, 1), dtype=complex)
    coils = np.ones((16, 16, 1), dtype=complex)
    kt = phantom.simulate_kt(img, coils, 0.0, seed=0)
    assert kt[8, 8, 0, 0] == pytest.approx(16.0)   # sqrt(N_x * N_y)
    off = kt.copy()
    off[8, 8, 0, 0] = 0
    assert np.abs(off).max() < 1e-12


def test_kt_noiseless_adjoint_roundtrip():
    m0, t1, _ = phantom.make_phantom(default_phantom_regions(), 24, 24)
    coils = phantom.make_coil_maps(24, 24, 3, seed=1)
    imgs = phantom.simulate_weighted_images(m0, t1, [1.0, 40.0, 80.0])
    kt = phantom.simulate_kt(imgs, coils, 0.0, seed=1)
    assert np.abs(e_full_adj(kt, coils) - imgs).max() < 1e-10


def test_kt_noise_variance_oracle():
    """Sample variance of (noisy - clean) per component within 5% of sigma^2."""
    img = np.zeros((64, 64, 5), dtype=complex)
    coils = phantom.make_coil_maps(64, 64, 4, seed=2)
    clean = phantom.simulate_kt(img, coils, 0.0, seed=7)
    noisy = phantom.simulate_kt(img, coils, 0.01, seed=7)
    d = noisy - clean
    for comp in (d.real, d.imag):
        assert abs(comp.var() - 1e-4) / 1e-4 < 0.05


def test_kt_noise_deterministic_per_stream():
    img = np.ones((8, 8, 2), dtype=complex)
    coils = phantom.make_coil_maps(8, 8, 2, seed=3)
    a = phantom.simulate_kt(img, coils, 0.5, seed=9)
    b = phantom.simulate_kt(img, coils, 0.5, seed=9)
    assert np.array_equal(a, b)
