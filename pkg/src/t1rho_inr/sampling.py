"""Golden-ratio Cartesian variable-density line sampling with a fully
sampled ACS center, one mask column per TSL."""

from dataclasses import dataclass

import numpy as np

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass
class SamplingMask:
    lines: np.ndarray   # (N_y, N_TSL) float64 in {0, 1}
    acs: int
    nominal_R: float


def acs_range(N_y, acs):
    start = N_y // 2 - acs // 2
    return start, start + acs


def make_mask(N_y, R, acs, N_TSL, seed):
    """Per TSL: budget round(N_y/R) lines; the acs center lines always on,
    the rest picked by iterating u <- frac(u + golden ratio) from a per-TSL
    seeded start, mapping u to round(u * (N_y - 1)) and skipping collisions.
    """
    if R < 1:
        raise ValueError(f"R must be >= 1, got {R}")
    budget = int(round(N_y / R))
    if acs > budget:
        raise ValueError(f"ACS exceeds budget: acs={acs} > round(N_y/R)={budget}")
    lines = np.zeros((N_y, N_TSL))
    lo, hi = acs_range(N_y, acs)
    for t in range(N_TSL):
        col = lines[:, t]
        col[lo:hi] = 1.0
        u = np.random.default_rng([int(seed), 0x5A11, t]).random()
        filled = int(col.sum())
        guard = 0
        while filled < budget:
            u = (u + GOLDEN) % 1.0
            idx = int(round(u * (N_y - 1)))
            if col[idx] == 0.0:
                col[idx] = 1.0
                filled += 1
            guard += 1
            if guard > 1000 * N_y:
                raise RuntimeError("line selection failed to meet budget")
    return SamplingMask(lines=lines, acs=acs, nominal_R=float(R))


def net_acceleration(mask):
    """(N_y * N_TSL) / total sampled lines."""
    total = mask.lines.sum()
    if total == 0:
        raise ValueError("all-zero mask")
    return mask.lines.size / total


def expand_mask(mask, N_x, N_c):
    """Broadcast the line mask over readout and coil dims:
    (N_x, N_y, N_c, N_TSL)."""
    N_y, N_TSL = mask.lines.shape
    return np.broadcast_to(
        mask.lines[None, :, None, :], (N_x, N_y, N_c, N_TSL)
    ).copy()
