"""The two explicit physics priors.

Relaxation prior: per-voxel temporal Hankel matrices, whose nuclear norm
penalizes deviations from low-rank (sums of decaying exponentials are
low-rank in this structure).

Self-consistency prior: every k-t point is a weighted sum of its neighbors
across all coils, a spatial window and adjacent TSLs. The interpolation
weights are calibrated from the fully sampled ACS center by ridge-regularized
least squares, one kernel per (target coil, TSL), with the target's own
center tap constrained to zero.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

# ---------------------------------------------------------------------------
# Hankel relaxation prior


@dataclass
class HankelConfig:
    k: int   # columns
    r: int   # rows, r + k - 1 = N_TSL

    @property
    def n_tsl(self):
        return self.r + self.k - 1


def hankel_config(n_tsl):
    """As-square-as-possible Hankel shape: k = ceil(N_TSL / 2)."""
    k = (n_tsl + 1) // 2
    return HankelConfig(k=k, r=n_tsl - k + 1)


def hankel_build(signal, cfg):
    """H[i, j] = signal[i + j], the anti-diagonal-constant r x k matrix."""
    signal = np.asarray(signal)
    if signal.shape[-1] != cfg.n_tsl:
        raise ValueError(f"signal length {signal.shape[-1]} != {cfg.n_tsl}")
    idx = np.arange(cfg.r)[:, None] + np.arange(cfg.k)[None, :]
    return signal[..., idx]


def hankel_adjoint(G, cfg):
    """Anti-diagonal sums, the adjoint of hankel_build as a linear map."""
    G = np.asarray(G)
    if G.shape[-2:] != (cfg.r, cfg.k):
        raise ValueError(f"matrix shape {G.shape[-2:]} != ({cfg.r}, {cfg.k})")
    out = np.zeros(G.shape[:-2] + (cfg.n_tsl,), dtype=G.dtype)
    for i in range(cfg.r):
        out[..., i:i + cfg.k] += G[..., i, :]
    return out


RANK_EPS = 1e-12


def nuclear_norm_and_subgrad(H):
    """Sum of singular values and the U V^H subgradient.

    Singular directions below RANK_EPS * sigma_max are dropped from the
    subgradient so noise-level directions are not divided out.
    """
    U, s, Vh = np.linalg.svd(H, full_matrices=False)
    value = float(s.sum())
    keep = s > RANK_EPS * s[0] if s[0] > 0 else np.zeros_like(s, dtype=bool)
    sub = (U[:, keep] @ Vh[keep, :]) if keep.any() else np.zeros_like(H)
    return value, sub


def loss_hk(images, cfg=None):
    """Mean over voxels of the nuclear norm of each temporal Hankel matrix.

    Returns (value, gradient w.r.t. images); gradient entries encode
    dL/d(re) + i dL/d(im).
    """
    N_x, N_y, n_tsl = images.shape
    if cfg is None:
        cfg = hankel_config(n_tsl)
    n_v = N_x * N_y
    s = images.reshape(n_v, n_tsl)
    H = hankel_build(s, cfg)                       # (N_v, r, k)
    U, sig, Vh = np.linalg.svd(H, full_matrices=False)
    value = float(sig.sum(axis=1).mean())
    keep = sig > RANK_EPS * sig[:, :1]             # sigma_max = sig[:, 0]
    W = (U * keep[:, None, :]) @ Vh
    grad = hankel_adjoint(W, cfg).reshape(N_x, N_y, n_tsl) / n_v
    return value, grad


# ---------------------------------------------------------------------------
# k-t self-consistency prior


@dataclass
class SpiritKernel:
    """Per-(coil, TSL) interpolation weights over a w_x x w_y x N_c x 3 window.

    packed[c, t, dx, dy, cc, s] weights the neighbor at spatial offset
    (dx - w_x//2, dy - w_y//2), source coil cc, TSL t + s - 1. Temporal slots
    falling outside the sequence are zero, as is the target's own center tap.
    """
    packed: np.ndarray     # (N_c, N_TSL, w_x, w_y, N_c, 3) complex
    window: tuple          # (w_x, w_y)
    tau: float

    @property
    def n_coils(self):
        return self.packed.shape[0]

    @property
    def n_tsl(self):
        return self.packed.shape[1]


class CalibrationError(ValueError):
    """ACS region too small for the requested kernel geometry."""


def calibrate_spirit(acs, window, tau, n_tsl_taps=3):
    """Fit per-target interpolation weights on the fully sampled ACS block.

    acs: (N_x, acs_lines, N_c, N_TSL). For each target (c, t), solves
    min_g ||A g - b||^2 + ridge ||g||^2 over neighborhoods sliding inside the
    block, self-tap excluded, ridge = tau * trace(A^H A) / n_unknowns.
    """
    if n_tsl_taps != 3:
        raise ValueError("temporal window is fixed to the adjacent-TSL triple")
    acs = np.asarray(acs, dtype=np.complex128)
    N_x, n_lines, N_c, N_TSL = acs.shape
    w_x, w_y = window
    if w_x % 2 == 0 or w_y % 2 == 0:
        raise ValueError(f"window dims must be odd, got {window}")
    hx, hy = w_x // 2, w_y // 2
    n_px, n_py = N_x - w_x + 1, n_lines - w_y + 1
    if n_px < 1 or n_py < 1:
        raise CalibrationError(
            f"ACS block {N_x}x{n_lines} smaller than the {w_x}x{w_y} window"
        )
    n_rows = n_px * n_py
    # windows[i, j, c, t, dx, dy] = acs[i + dx, j + dy, c, t]
    windows = sliding_window_view(acs, (w_x, w_y), axis=(0, 1))
    packed = np.zeros((N_c, N_TSL, w_x, w_y, N_c, 3), dtype=np.complex128)
    for t in range(N_TSL):
        slots = [s for s in range(3) if 0 <= t + s - 1 < N_TSL]
        times = [t + s - 1 for s in slots]
        nb = windows[:, :, :, times].transpose(0, 1, 4, 5, 2, 3)
        A_all = nb.reshape(n_rows, w_x * w_y * N_c * len(slots))
        n_unknowns = A_all.shape[1] - 1
        if n_rows < n_unknowns:
            need = w_y - 1 + int(np.ceil(n_unknowns / n_px))
            raise CalibrationError(
                f"underdetermined calibration for TSL {t}: {n_rows} rows < "
                f"{n_unknowns} unknowns; need at least {need} ACS lines "
                f"(have {n_lines}) or a smaller window"
            )
        for c in range(N_c):
            self_col = np.ravel_multi_index(
                (hx, hy, c, slots.index(1)), (w_x, w_y, N_c, len(slots))
            )
            cols = np.delete(np.arange(A_all.shape[1]), self_col)
            A = A_all[:, cols]
            b = acs[hx:hx + n_px, hy:hy + n_py, c, t].reshape(-1)
            AHA = A.conj().T @ A
            ridge = tau * float(np.trace(AHA).real) / n_unknowns
            g = np.linalg.solve(AHA + ridge * np.eye(n_unknowns), A.conj().T @ b)
            g_full = np.zeros(A_all.shape[1], dtype=np.complex128)
            g_full[cols] = g
            g_win = g_full.reshape(w_x, w_y, N_c, len(slots))
            for s, slot in enumerate(slots):
                packed[c, t, :, :, :, slot] = g_win[:, :, :, s]
    return SpiritKernel(packed=packed, window=(w_x, w_y), tau=float(tau))


def calibration_residual(kernel, acs):
    """Relative residual ||A g - b|| / ||b|| over all targets, on ACS data."""
    pred = apply_g(kernel, acs)
    w_x, w_y = kernel.window
    hx, hy = w_x // 2, w_y // 2
    interior = (slice(hx, acs.shape[0] - hx), slice(hy, acs.shape[1] - hy))
    diff = (pred - acs)[interior]
    ref = acs[interior]
    return float(np.linalg.norm(diff) / np.linalg.norm(ref))


def _check_geometry(kernel, kt):
    N_c, N_TSL = kt.shape[2], kt.shape[3]
    if kernel.n_coils != N_c or kernel.n_tsl != N_TSL:
        raise ValueError(
            f"kernel geometry ({kernel.n_coils} coils, {kernel.n_tsl} TSLs) "
            f"does not match data ({N_c} coils, {N_TSL} TSLs)"
        )


def _tap_matrix(packed, t):
    """Weights for TSL t as an (n_taps, N_c) matrix, taps ordered
    (dx, dy, source coil, slot)."""
    n_c = packed.shape[0]
    w_x, w_y = packed.shape[2], packed.shape[3]
    return packed[:, t].transpose(1, 2, 3, 4, 0).reshape(w_x * w_y * n_c * 3, n_c)


def apply_g(kernel, kt):
    """Predict every k-t point from its neighborhood (zero-padded borders).

    One gathered neighborhoods-by-taps GEMM per TSL.
    """
    _check_geometry(kernel, kt)
    N_x, N_y, N_c, N_TSL = kt.shape
    w_x, w_y = kernel.window
    hx, hy = w_x // 2, w_y // 2
    pad = np.pad(kt, ((hx, hx), (hy, hy), (0, 0), (1, 1)))
    # windows[x, y, a, tp, dx, dy] = pad[x + dx, y + dy, a, tp]
    windows = sliding_window_view(pad, (w_x, w_y), axis=(0, 1))
    n_taps = w_x * w_y * N_c * 3
    out = np.empty_like(kt)
    for t in range(N_TSL):
        X = windows[:, :, :, t:t + 3].transpose(0, 1, 4, 5, 2, 3)
        X = X.reshape(N_x * N_y, n_taps)
        out[:, :, :, t] = (X @ _tap_matrix(kernel.packed, t)).reshape(N_x, N_y, N_c)
    return out


def apply_g_adj(kernel, y):
    """Adjoint of apply_g: the exact transpose of the gather, conjugated."""
    _check_geometry(kernel, y)
    N_x, N_y, N_c, N_TSL = y.shape
    w_x, w_y = kernel.window
    hx, hy = w_x // 2, w_y // 2
    acc = np.zeros((N_x + 2 * hx, N_y + 2 * hy, N_c, N_TSL + 2), dtype=np.complex128)
    for t in range(N_TSL):
        Gt = _tap_matrix(kernel.packed, t)
        C = (y[:, :, :, t].reshape(N_x * N_y, N_c) @ Gt.conj().T)
        C = C.reshape(N_x, N_y, w_x, w_y, N_c, 3)
        for dx in range(w_x):
            for dy in range(w_y):
                acc[dx:dx + N_x, dy:dy + N_y, :, t:t + 3] += C[:, :, dx, dy]
    return acc[hx:hx + N_x, hy:hy + N_y, :, 1:1 + N_TSL]


def loss_sc(kernel, kt):
    """(1/N) || (G - I) kt ||_2^2 and its gradient w.r.t. kt."""
    r = apply_g(kernel, kt) - kt
    n = kt.size
    value = float(np.sum(np.abs(r) ** 2)) / n
    grad = (2.0 / n) * (apply_g_adj(kernel, r) - r)
    return value, grad
