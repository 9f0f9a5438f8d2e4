"""Fourier-feature coordinate embedding and the 9-layer sine-activated MLP
that represents the complex image series, with exact reverse-mode gradients
of all parameters.

The network maps an embedded (x, y, TSL) coordinate to (re, im). Hidden
layers apply z -> sin(omega0 * (W z + b)); the embedding is concatenated to
the outputs of layers 3, 5 and 7, so layers 4, 6 and 8 take hidden + 2*n_e
inputs. Everything is float64.
"""

import json
import os
from dataclasses import dataclass

import numpy as np

from . import tensorio

N_LAYERS = 9
# 0-based indices of layers whose input is [previous output, embedding].
SKIP_INPUT_LAYERS = (3, 5, 7)
N_COORD_DIMS = 3
N_OUT = 2

CHECKPOINT_VERSION = 1


@dataclass
class MlpParams:
    weights: list          # (n_in, n_out) float64, one per layer
    biases: list           # (n_out,) float64
    b_embed: np.ndarray    # (3, n_e), frozen Fourier embedding matrix
    omega0: float

    @property
    def n_e(self):
        return self.b_embed.shape[1]

    @property
    def hidden(self):
        return self.weights[0].shape[1]

    @property
    def n_layers(self):
        return len(self.weights)

    @property
    def skips(self):
        return _skips(self.n_layers)


def _skips(n_layers):
    return tuple(l for l in SKIP_INPUT_LAYERS if l < n_layers - 1)


def layer_sizes(n_e, hidden, n_layers=N_LAYERS):
    """(n_in, n_out) per layer; skip layers widen by the embedding size."""
    skips = _skips(n_layers)
    sizes = []
    for l in range(n_layers):
        n_in = 2 * n_e if l == 0 else hidden
        if l in skips:
            n_in = hidden + 2 * n_e
        n_out = N_OUT if l == n_layers - 1 else hidden
        sizes.append((n_in, n_out))
    return sizes


def make_embedding(n_e, sigma, seed):
    """Frozen Gaussian embedding matrix B, entries ~ N(0, sigma^2), (3, n_e)."""
    rng = np.random.default_rng([int(seed), 0xE4B])
    return sigma * rng.standard_normal((N_COORD_DIMS, n_e))


def embed(b_embed, v):
    """[cos(2 pi B^T v); sin(2 pi B^T v)] for one coordinate or a batch."""
    phase = 2.0 * np.pi * (np.asarray(v, dtype=np.float64) @ b_embed)
    return np.concatenate([np.cos(phase), np.sin(phase)], axis=-1)


def init_mlp(n_e, hidden, omega0, seed, sigma=1.0, paper_literal_init=False,
             n_layers=N_LAYERS):
    """Seeded parameter init.

    Layer 1 weights are uniform in +-1/(2 n_e) (the +-1/n_in rule over its
    2*n_e inputs); deeper layers uniform in +-sqrt(6/n_in)/omega0, the usual
    sine-network scale. paper_literal_init multiplies that bound by omega0^2
    (i.e. uses +-omega0*sqrt(6/n_in)); it reproduces a published variant and
    is kept behind a flag because it starts far outside the stable regime.
    Biases are zero.
    """
    rng = np.random.default_rng([int(seed), 0x515E])
    b_embed = make_embedding(n_e, sigma, seed)
    weights, biases = [], []
    for l, (n_in, n_out) in enumerate(layer_sizes(n_e, hidden, n_layers)):
        if l == 0:
            bound = 1.0 / n_in
        else:
            bound = np.sqrt(6.0 / n_in)
            bound = bound * omega0 if paper_literal_init else bound / omega0
        weights.append(rng.uniform(-bound, bound, size=(n_in, n_out)))
        biases.append(np.zeros(n_out))
    return MlpParams(weights=weights, biases=biases, b_embed=b_embed, omega0=float(omega0))


def forward(params, emb, want_cache=False):
    """Evaluate the network on a batch of embedded coordinates.

    Returns complex values (one per row); with want_cache, also the
    per-layer (input, scaled pre-activation) pairs needed by backward.
    omega0 is folded into the (small) weight matrices so the scaled
    pre-activation omega0*(Wz + b) is formed in one GEMM.
    """
    w0 = params.omega0
    n_layers = params.n_layers
    skips = params.skips
    a = emb
    cache = [] if want_cache else None
    for l in range(n_layers):
        if l in skips:
            a = np.concatenate([a, emb], axis=1)
        if l == n_layers - 1:
            z = a @ params.weights[l] + params.biases[l]
        else:
            z = a @ (w0 * params.weights[l]) + w0 * params.biases[l]
        if want_cache:
            cache.append((a, z))
        a = z if l == n_layers - 1 else np.sin(z)
    if not np.all(np.isfinite(a)):
        raise FloatingPointError("non-finite network activation (training diverged)")
    out = a[:, 0] + 1j * a[:, 1]
    if want_cache:
        return out, cache
    return out


def backward(params, cache, upstream):
    """Exact gradients of a real scalar loss w.r.t. all weights and biases.

    upstream is complex, one entry per batch row, encoding dL/d(re) + i*dL/d(im)
    of the network output. Returns (weight grads, bias grads) shaped like the
    parameters.
    """
    if len(upstream) != cache[0][0].shape[0]:
        raise ValueError(
            f"upstream length {len(upstream)} != batch size {cache[0][0].shape[0]}"
        )
    w0 = params.omega0
    hidden = params.hidden
    n_layers = params.n_layers
    skips = params.skips
    gw = [None] * n_layers
    gb = [None] * n_layers
    d = np.stack([np.real(upstream), np.imag(upstream)], axis=1)
    for l in reversed(range(n_layers)):
        a, z = cache[l]
        if l == n_layers - 1:
            gw[l] = a.T @ d
            gb[l] = d.sum(axis=0)
            d = d @ params.weights[l].T
        else:
            # z caches omega0*(Wa + b); the chain factor is omega0*cos(z),
            # with the scalar applied to the small results, not the batch
            dz = d * np.cos(z)
            gw[l] = w0 * (a.T @ dz)
            gb[l] = w0 * dz.sum(axis=0)
            if l == 0:
                break
            d = dz @ (w0 * params.weights[l]).T
        if l in skips:
            d = d[:, :hidden]
    return gw, gb


def coord_grid(N_x, N_y, tsl_ms):
    """All (v_x, v_y, v_TSL) triples, each normalized to [-1, 1], x fastest.

    The temporal coordinate is the actual spin-lock time mapped linearly from
    [min TSL, max TSL], so non-uniform TSL spacing is preserved.
    """
    vx = np.linspace(-1.0, 1.0, N_x) if N_x > 1 else np.zeros(1)
    vy = np.linspace(-1.0, 1.0, N_y) if N_y > 1 else np.zeros(1)
    tsl = np.asarray(tsl_ms, dtype=np.float64)
    span = tsl[-1] - tsl[0]
    vt = -1.0 + 2.0 * (tsl - tsl[0]) / span if span > 0 else np.zeros_like(tsl)
    n_tsl = len(tsl)
    coords = np.empty((N_x * N_y * n_tsl, 3))
    coords[:, 0] = np.tile(vx, N_y * n_tsl)
    coords[:, 1] = np.tile(np.repeat(vy, N_x), n_tsl)
    coords[:, 2] = np.repeat(vt, N_x * N_y)
    return coords


def flat_to_series(values, N_x, N_y, N_TSL):
    """Reorder grid-ordered flat outputs into an (N_x, N_y, N_TSL) series."""
    return values.reshape(N_TSL, N_y, N_x).transpose(2, 1, 0)


def series_to_flat(series):
    """Inverse of flat_to_series."""
    return series.transpose(2, 1, 0).reshape(-1)


def save_params(params, path):
    """Checkpoint: one float64 tensor file per parameter plus a JSON sidecar.

    Round-trips bit-exactly through load_params.
    """
    base = os.path.basename(path)
    names = {}
    for l in range(params.n_layers):
        names[f"w{l}"] = f"{base}.w{l:02d}"
        names[f"b{l}"] = f"{base}.b{l:02d}"
    names["embed"] = f"{base}.emb"
    meta = {
        "version": CHECKPOINT_VERSION,
        "n_e": params.n_e,
        "hidden": params.hidden,
        "n_layers": params.n_layers,
        "omega0": params.omega0,
        "layer_sizes": layer_sizes(params.n_e, params.hidden, params.n_layers),
        "tensors": names,
    }
    d = os.path.dirname(path)
    for l in range(params.n_layers):
        tensorio.write_tensor(os.path.join(d, names[f"w{l}"]), params.weights[l], float64=True)
        # tensor files are >= 1-D; biases are stored as vectors
        tensorio.write_tensor(os.path.join(d, names[f"b{l}"]), params.biases[l], float64=True)
    tensorio.write_tensor(os.path.join(d, names["embed"]), params.b_embed, float64=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2)
        f.write("\n")
    return [path] + [os.path.join(d, n) for n in names.values()]


def load_params(path, n_e=None, hidden=None):
    """Load a checkpoint; optionally require an architecture (n_e, hidden)."""
    with open(path, "r", encoding="utf-8") as f:
        meta = json.load(f)
    if meta.get("version") != CHECKPOINT_VERSION:
        raise ValueError(
            f"checkpoint version mismatch: {meta.get('version')} != {CHECKPOINT_VERSION}"
        )
    if n_e is not None and meta["n_e"] != n_e:
        raise ValueError(f"embedding size mismatch: checkpoint n_e={meta['n_e']}, expected {n_e}")
    d = os.path.dirname(path)
    names = meta["tensors"]
    n_layers = meta.get("n_layers", N_LAYERS)
    expected = layer_sizes(meta["n_e"], meta["hidden"], n_layers)
    if hidden is not None and meta["hidden"] != hidden:
        want = layer_sizes(meta["n_e"] if n_e is None else n_e, hidden, n_layers)
        for l, (got, need) in enumerate(zip(expected, want)):
            if got != need:
                raise ValueError(
                    f"architecture mismatch at layer {l + 1}: checkpoint {got}, expected {need}"
                )
    weights, biases = [], []
    for l in range(n_layers):
        w = tensorio.read_tensor(os.path.join(d, names[f"w{l}"]))
        b = tensorio.read_tensor(os.path.join(d, names[f"b{l}"]))
        if w.shape != tuple(expected[l]):
            raise ValueError(
                f"architecture mismatch at layer {l + 1}: tensor {w.shape}, "
                f"metadata {tuple(expected[l])}"
            )
        weights.append(w)
        biases.append(b)
    b_embed = tensorio.read_tensor(os.path.join(d, names["embed"]))
    return MlpParams(weights=weights, biases=biases, b_embed=b_embed,
                     omega0=float(meta["omega0"]))
