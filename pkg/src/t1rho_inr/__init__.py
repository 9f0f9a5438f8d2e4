"""Subject-specific unsupervised reconstruction of quantitative T1rho-weighted
MR image series from undersampled multi-coil k-space, using a sine-activated
coordinate network constrained by a per-voxel temporal Hankel low-rank prior
and a k-t self-consistency prior, with T1rho map fitting and evaluation.

Heavy submodules import numpy; keep this module import light so the CLI can
configure thread caps first.
"""

__version__ = "0.1.0"
