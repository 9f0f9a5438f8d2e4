"""Per-pixel mono-exponential fitting of M0 and T1rho from the magnitude
series: M_k = M0 * exp(-TSL_k / T1rho)."""

from dataclasses import dataclass

import numpy as np

DEFAULT_BOUNDS_MS = (1.0, 500.0)
MAX_GN_ITERS = 100
STEP_TOL = 1e-10


@dataclass
class QuantMaps:
    m0: np.ndarray
    t1rho_ms: np.ndarray
    residual_rms: np.ndarray
    fit_mask: np.ndarray   # True where a valid in-bounds fit converged


def _loglinear_init(mags, tsl, lo, hi):
    """Linear regression of log(signal) vs TSL per pixel; exact on clean data.

    Pixels need >= 2 positive samples; others are reported unusable.
    """
    pos = mags > 0
    n_pos = pos.sum(axis=1)
    usable = n_pos >= 2
    logm = np.where(pos, np.log(np.where(pos, mags, 1.0)), 0.0)
    w = pos.astype(np.float64)
    sw = w.sum(axis=1)
    sw = np.where(sw > 0, sw, 1.0)
    st = (w * tsl).sum(axis=1)
    sy = (w * logm).sum(axis=1)
    stt = (w * tsl * tsl).sum(axis=1)
    sty = (w * tsl * logm).sum(axis=1)
    denom = sw * stt - st * st
    ok = usable & (denom > 0)
    slope = np.where(ok, (sw * sty - st * sy) / np.where(denom > 0, denom, 1.0), 0.0)
    intercept = np.where(ok, (sy - slope * st) / sw, 0.0)
    m0 = np.exp(intercept)
    t = np.full(mags.shape[0], hi)
    decaying = slope < 0
    t[decaying] = -1.0 / slope[decaying]
    return m0, np.clip(t, lo, hi), usable


def _model_and_rss(m0, t, mags, tsl):
    model = m0[:, None] * np.exp(-tsl[None, :] / t[:, None])
    r = model - mags
    return model, r, (r * r).sum(axis=1)


def fit_t1rho(series_mag, tsl_ms, mask=None, bounds=DEFAULT_BOUNDS_MS,
              method="gauss-newton", adam_iters=50000, adam_lr=1e-2):
    """Fit (M0, T1rho) per pixel by damped Gauss-Newton from a log-linear
    start (default), or by a long Adam run on the squared residual.

    T1rho is clamped to bounds; pixels that are all-zero, fail the log-linear
    start, or end pinned at a bound are flagged False in the fit mask.
    """
    mags = np.asarray(series_mag, dtype=np.float64)
    if mags.ndim != 3:
        raise ValueError(f"series must be (N_x, N_y, N_TSL), got {mags.shape}")
    if np.any(mags < 0):
        raise ValueError("magnitude series must be nonnegative")
    N_x, N_y, n_tsl = mags.shape
    tsl = np.asarray(tsl_ms, dtype=np.float64)
    if len(tsl) != n_tsl or n_tsl < 2:
        raise ValueError(f"need >= 2 TSLs matching the series, got {len(tsl)}")
    lo, hi = bounds
    if mask is None:
        mask = mags.max(axis=2) > 0
    mask = np.asarray(mask, dtype=bool)
    flat = mags.reshape(-1, n_tsl)
    sel = mask.reshape(-1)
    pix = flat[sel]
    m0, t, usable = _loglinear_init(pix, tsl, lo, hi)
    if method == "adam":
        m0, t = _adam_fit(m0, t, pix, tsl, lo, hi, adam_iters, adam_lr)
    elif method == "gauss-newton":
        m0, t = _gauss_newton(m0, t, pix, tsl, lo, hi)
    else:
        raise ValueError(f"unknown fit method {method!r}")
    _, r, rss = _model_and_rss(m0, t, pix, tsl)
    ok = usable & (t > lo * (1 + 1e-9)) & (t < hi * (1 - 1e-9))
    out_m0 = np.zeros(N_x * N_y)
    out_t = np.zeros(N_x * N_y)
    out_res = np.zeros(N_x * N_y)
    out_ok = np.zeros(N_x * N_y, dtype=bool)
    out_m0[sel] = np.where(usable, m0, 0.0)
    out_t[sel] = np.where(usable, t, 0.0)
    out_res[sel] = np.sqrt(rss / n_tsl)
    out_ok[sel] = ok
    return QuantMaps(
        m0=out_m0.reshape(N_x, N_y),
        t1rho_ms=out_t.reshape(N_x, N_y),
        residual_rms=out_res.reshape(N_x, N_y),
        fit_mask=out_ok.reshape(N_x, N_y),
    )


def _gauss_newton(m0, t, pix, tsl, lo, hi):
    m0 = m0.copy()
    t = t.copy()
    n = len(m0)
    if n == 0:
        return m0, t
    active = np.ones(n, dtype=bool)
    _, r, rss = _model_and_rss(m0, t, pix, tsl)
    for _ in range(MAX_GN_ITERS):
        if not active.any():
            break
        am0, at, apix, ar = m0[active], t[active], pix[active], r[active]
        decay = np.exp(-tsl[None, :] / at[:, None])
        j0 = decay                                        # d model / d M0
        j1 = am0[:, None] * tsl[None, :] / at[:, None] ** 2 * decay
        g0 = (j0 * ar).sum(axis=1)
        g1 = (j1 * ar).sum(axis=1)
        h00 = (j0 * j0).sum(axis=1)
        h01 = (j0 * j1).sum(axis=1)
        h11 = (j1 * j1).sum(axis=1)
        det = h00 * h11 - h01 * h01
        det = np.where(np.abs(det) > 1e-300, det, 1e-300)
        d_m0 = -(h11 * g0 - h01 * g1) / det
        d_t = -(h00 * g1 - h01 * g0) / det
        # damp: halve the step wherever it would increase the residual
        scale = np.ones(len(am0))
        rss_a = rss[active]
        new_m0, new_t, new_rss = am0, at, rss_a
        for _ in range(30):
            trial_m0 = am0 + scale * d_m0
            trial_t = np.clip(at + scale * d_t, lo, hi)
            _, _, trial_rss = _model_and_rss(trial_m0, trial_t, apix, tsl)
            worse = trial_rss > rss_a * (1 + 1e-15)
            new_m0 = np.where(worse, new_m0, trial_m0)
            new_t = np.where(worse, new_t, trial_t)
            new_rss = np.where(worse, new_rss, trial_rss)
            if not worse.any():
                break
            scale = np.where(worse, scale * 0.5, scale)
        rel_step = np.maximum(
            np.abs(new_m0 - am0) / np.maximum(np.abs(am0), 1e-30),
            np.abs(new_t - at) / np.maximum(np.abs(at), 1e-30),
        )
        m0[active] = new_m0
        t[active] = new_t
        rss[active] = new_rss
        _, r_new, _ = _model_and_rss(m0, t, pix, tsl)
        r = r_new
        still = rel_step >= STEP_TOL
        idx = np.flatnonzero(active)
        active[idx[~still]] = False
    return m0, t


def _adam_fit(m0, t, pix, tsl, lo, hi, iters, lr):
    """First-order least-squares fit (long-run parity option)."""
    m0 = m0.copy()
    t = t.copy()
    if len(m0) == 0:
        return m0, t
    mm = np.zeros((2, len(m0)))
    vv = np.zeros((2, len(m0)))
    b1, b2, eps = 0.9, 0.999, 1e-8
    for k in range(1, iters + 1):
        decay = np.exp(-tsl[None, :] / t[:, None])
        r = m0[:, None] * decay - pix
        g0 = 2.0 * (decay * r).sum(axis=1)
        g1 = 2.0 * (m0[:, None] * tsl[None, :] / t[:, None] ** 2 * decay * r).sum(axis=1)
        for i, g in enumerate((g0, g1)):
            mm[i] = b1 * mm[i] + (1 - b1) * g
            vv[i] = b2 * vv[i] + (1 - b2) * g * g
        mh = mm / (1 - b1**k)
        vh = vv / (1 - b2**k)
        m0 -= lr * mh[0] / (np.sqrt(vh[0]) + eps)
        t -= lr * mh[1] / (np.sqrt(vh[1]) + eps)
        np.clip(t, lo, hi, out=t)
    return m0, t
