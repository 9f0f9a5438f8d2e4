"""Synthetic phantom: ground-truth maps, coil sensitivities, weighted image
series via the mono-exponential relaxation model, and noisy multi-coil k-space.
"""

import numpy as np

from .encoding import fft2c


def pixel_grid(N_x, N_y):
    """Pixel-center coordinates, each axis an inclusive linspace over [-1, 1]."""
    vx = np.linspace(-1.0, 1.0, N_x)
    vy = np.linspace(-1.0, 1.0, N_y)
    return np.meshgrid(vx, vy, indexing="ij")


def ellipse_mask(N_x, N_y, region):
    """Boolean mask of pixels inside one (possibly rotated) ellipse."""
    gx, gy = pixel_grid(N_x, N_y)
    dx = gx - region.center[0]
    dy = gy - region.center[1]
    th = np.deg2rad(region.angle_deg)
    u = np.cos(th) * dx + np.sin(th) * dy
    w = -np.sin(th) * dx + np.cos(th) * dy
    a, b = region.axes
    return (u / a) ** 2 + (w / b) ** 2 <= 1.0


def make_phantom(regions, N_x, N_y):
    """Rasterize ellipse regions into (M0 map, T1rho map, support mask).

    Later regions overwrite earlier ones where they overlap; background is 0.
    """
    if not regions:
        raise ValueError("phantom needs at least one region")
    m0 = np.zeros((N_x, N_y))
    t1rho = np.zeros((N_x, N_y))
    support = np.zeros((N_x, N_y), dtype=bool)
    for region in regions:
        inside = ellipse_mask(N_x, N_y, region)
        m0[inside] = region.m0
        t1rho[inside] = region.t1rho_ms
        support |= inside
    return m0, t1rho, support


def make_coil_maps(N_x, N_y, N_c, seed):
    """Smooth complex coil maps normalized so sum_c |c|^2 = 1 at every pixel.

    Gaussian magnitude bumps centered on N_c points equally spaced on a circle
    just outside the FOV; per-coil linear phase ramps drawn from the seed.
    """
    if N_c < 1:
        raise ValueError(f"N_c must be >= 1, got {N_c}")
    rng = np.random.default_rng([int(seed), 0xC011])
    gx, gy = pixel_grid(N_x, N_y)
    maps = np.empty((N_x, N_y, N_c), dtype=np.complex128)
    width = 1.25
    radius = 1.3
    for c in range(N_c):
        ang = 2.0 * np.pi * c / N_c
        cx, cy = radius * np.cos(ang), radius * np.sin(ang)
        mag = np.exp(-((gx - cx) ** 2 + (gy - cy) ** 2) / (2.0 * width**2))
        slope = rng.uniform(-0.5 * np.pi, 0.5 * np.pi, size=2)
        offset = rng.uniform(-np.pi, np.pi)
        maps[:, :, c] = mag * np.exp(1j * (slope[0] * gx + slope[1] * gy + offset))
    norm = np.sqrt(np.sum(np.abs(maps) ** 2, axis=2, keepdims=True))
    return maps / norm


def smooth_phase(N_x, N_y):
    """Fixed smooth quadratic phase map used to make the series complex-valued."""
    gx, gy = pixel_grid(N_x, N_y)
    return 0.5 * np.pi * (0.6 * gx**2 + 0.35 * gy**2) + 0.3 * gx - 0.2 * gy


def simulate_weighted_images(m0, t1rho, tsl_ms, phase_map=True):
    """Mono-exponential decay M_k = M0 exp(-TSL_k / T1rho), one frame per TSL.

    Pixels with M0 = 0 are 0 at every TSL. Output shape (N_x, N_y, N_TSL),
    complex; when phase_map is set, a fixed smooth quadratic phase multiplies
    every frame.
    """
    m0 = np.asarray(m0, dtype=np.float64)
    t1rho = np.asarray(t1rho, dtype=np.float64)
    if m0.shape != t1rho.shape:
        raise ValueError(f"map shape mismatch: {m0.shape} vs {t1rho.shape}")
    live = m0 != 0
    if np.any(live & (t1rho <= 0)):
        raise ValueError("T1rho must be > 0 wherever M0 > 0")
    tsl = np.asarray(tsl_ms, dtype=np.float64)
    rate = np.zeros_like(t1rho)
    rate[live] = 1.0 / t1rho[live]
    series = m0[:, :, None] * np.exp(-tsl[None, None, :] * rate[:, :, None])
    series[~live] = 0.0
    series = series.astype(np.complex128)
    if phase_map:
        series *= np.exp(1j * smooth_phase(*m0.shape))[:, :, None]
    return series


def simulate_kt(images, coils, noise_sigma, seed):
    """Fully sampled multi-coil k-space of an image series, plus complex noise.

    Per coil c and TSL t: fft2c(coils[..., c] * images[..., t]) + n, with n
    i.i.d. complex Gaussian, std noise_sigma per real/imag component. The
    noise stream is split per (coil, TSL) so any evaluation order gives
    identical output.
    """
    N_x, N_y, N_TSL = images.shape
    N_c = coils.shape[2]
    if coils.shape[:2] != (N_x, N_y):
        raise ValueError(f"coil map shape {coils.shape} does not match images {images.shape}")
    kt = fft2c(coils[:, :, :, None] * images[:, :, None, :])
    if noise_sigma > 0:
        for c in range(N_c):
            for t in range(N_TSL):
                rng = np.random.default_rng([int(seed), 0x2015E, c, t])
                kt[:, :, c, t] += noise_sigma * (
                    rng.standard_normal((N_x, N_y))
                    + 1j * rng.standard_normal((N_x, N_y))
                )
    return kt
