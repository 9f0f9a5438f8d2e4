"""Image quality metrics: NRMSE, PSNR, SSIM (on magnitude images)."""

import numpy as np

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def nrmse(x, ref):
    """||x - ref||_F / ||ref||_F."""
    x = np.asarray(x)
    ref = np.asarray(ref)
    if x.shape != ref.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {ref.shape}")
    denom = np.linalg.norm(ref)
    if denom == 0:
        raise ValueError("zero reference")
    return float(np.linalg.norm(x - ref) / denom)


def psnr(x, ref):
    """10 log10(peak^2 / MSE) on magnitudes, peak taken from the reference.

    Identical images report +inf.
    """
    a = np.abs(np.asarray(x))
    r = np.abs(np.asarray(ref))
    if a.shape != r.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {r.shape}")
    mse = float(np.mean((a - r) ** 2))
    if mse == 0.0:
        return float("inf")
    peak = float(r.max())
    return 10.0 * np.log10(peak**2 / mse)


def _gaussian_taps(n=SSIM_WINDOW, sigma=SSIM_SIGMA):
    d = np.arange(n) - (n - 1) / 2
    g = np.exp(-(d**2) / (2.0 * sigma**2))
    return g / g.sum()


def _filt1(x, taps, axis):
    n = x.shape[axis]
    k = len(taps)
    h = k // 2
    pad = [(0, 0)] * x.ndim
    pad[axis] = (h, h)
    xp = np.pad(x, pad)
    out = np.zeros(x.shape, dtype=np.float64)
    sl = [slice(None)] * x.ndim
    for i in range(k):
        sl[axis] = slice(i, i + n)
        out += taps[i] * xp[tuple(sl)]
    return out


def _local_mean(x, taps, weight_norm):
    return _filt1(_filt1(x, taps, 0), taps, 1) / weight_norm


def ssim(x, ref):
    """Mean local SSIM, 11x11 Gaussian window (sigma 1.5), K1/K2 canonical,
    dynamic range max(|ref|); borders use truncated, renormalized windows."""
    a = np.abs(np.asarray(x, dtype=np.complex128)).astype(np.float64)
    r = np.abs(np.asarray(ref, dtype=np.complex128)).astype(np.float64)
    if a.shape != r.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {r.shape}")
    if a.ndim != 2:
        raise ValueError(f"ssim expects 2-D images, got ndim {a.ndim}")
    L = float(r.max())
    if L == 0:
        return 1.0 if np.array_equal(a, r) else 0.0
    taps = _gaussian_taps()
    wnorm = _filt1(_filt1(np.ones_like(a), taps, 0), taps, 1)
    mu_a = _local_mean(a, taps, wnorm)
    mu_r = _local_mean(r, taps, wnorm)
    var_a = _local_mean(a * a, taps, wnorm) - mu_a**2
    var_r = _local_mean(r * r, taps, wnorm) - mu_r**2
    cov = _local_mean(a * r, taps, wnorm) - mu_a * mu_r
    c1 = (SSIM_K1 * L) ** 2
    c2 = (SSIM_K2 * L) ** 2
    num = (2 * mu_a * mu_r + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_r**2 + c1) * (var_a + var_r + c2)
    return float(np.mean(num / den))


def series_metrics(x, ref):
    """Per-TSL and aggregate PSNR/SSIM/NRMSE for two (N_x, N_y, N_TSL) series."""
    x = np.asarray(x)
    ref = np.asarray(ref)
    if x.shape != ref.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {ref.shape}")
    per_tsl = []
    for t in range(x.shape[2]):
        per_tsl.append({
            "psnr_db": psnr(x[:, :, t], ref[:, :, t]),
            "ssim": ssim(x[:, :, t], ref[:, :, t]),
            "nrmse": nrmse(np.abs(x[:, :, t]), np.abs(ref[:, :, t])),
        })
    aggregate = {
        "psnr_db": psnr(x, ref),
        "ssim": float(np.mean([m["ssim"] for m in per_tsl])),
        "nrmse": nrmse(np.abs(x), np.abs(ref)),
    }
    return {"per_tsl": per_tsl, "aggregate": aggregate}
