"""Forward-model linear operators: centered unitary 2-D DFT, coil
multiplication, k-space line masking, their compositions and adjoints.

Array conventions, fixed project-wide: images (N_x, N_y, N_TSL), coil maps
(N_x, N_y, N_c), k-space (N_x, N_y, N_c, N_TSL); the DFT acts on the first
two axes with DC at the grid center and orthonormal scaling.
"""

import numpy as np


def fft2c(x, axes=(0, 1)):
    """Centered orthonormal 2-D DFT over the given axes."""
    return np.fft.fftshift(
        np.fft.fft2(np.fft.ifftshift(x, axes=axes), axes=axes, norm="ortho"), axes=axes
    )


def ifft2c(x, axes=(0, 1)):
    """Inverse of fft2c."""
    return np.fft.fftshift(
        np.fft.ifft2(np.fft.ifftshift(x, axes=axes), axes=axes, norm="ortho"), axes=axes
    )


def e_full(x, coils):
    """Unmasked encoder: per coil and TSL, fft2c(coil * image frame)."""
    if x.shape[:2] != coils.shape[:2]:
        raise ValueError(f"image grid {x.shape[:2]} != coil grid {coils.shape[:2]}")
    return fft2c(coils[:, :, :, None] * x[:, :, None, :])


def e_full_adj(y, coils):
    """Adjoint of e_full: sum_c conj(coil) * ifft2c(y) per TSL."""
    if y.shape[:2] != coils.shape[:2] or y.shape[2] != coils.shape[2]:
        raise ValueError(f"k-space shape {y.shape} does not match coils {coils.shape}")
    return np.sum(np.conj(coils)[:, :, :, None] * ifft2c(y), axis=2)


def apply_mask(y, mask):
    """Zero out unsampled phase-encode lines; idempotent projection."""
    return y * mask.lines[None, :, None, :]


def e(x, coils, mask):
    """Masked encoder M . F . C, the acquisition operator."""
    return apply_mask(e_full(x, coils), mask)


def e_adj(y, coils, mask):
    """Adjoint of the masked encoder."""
    return e_full_adj(apply_mask(y, mask), coils)
