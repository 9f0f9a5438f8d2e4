"""Loss assembly, Adam with the halving schedule, the training loop for the
four loss modes, and the hard data-consistency projection."""

import time
from dataclasses import dataclass, field

import numpy as np

from . import inr
from .encoding import apply_mask, e_full, e_full_adj
from .priors import hankel_config, loss_hk, loss_sc

MODES = ("DC", "SC", "HK", "FULL")

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8

LR_MAIN = 3.5e-4
LR_PRETRAIN = 1e-4


@dataclass
class LossWeights:
    lambda1: float   # Hankel term
    lambda2: float   # self-consistency term

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("loss weights must be nonnegative")


class TrainingDiverged(RuntimeError):
    def __init__(self, msg, params=None, report=None):
        super().__init__(msg)
        self.params = params
        self.report = report


def loss_dc(pred_masked, y, live_denominator=False):
    """Normalized complex L1 data term: ||pred - y||_1 / ||pred||_1.

    |z|_1 is |re| + |im| per entry, over the sampled entries. By default the
    denominator is treated as a constant of the current iterate when forming
    the gradient (a live denominator rewards inflating prediction energy);
    live_denominator enables the full quotient rule.
    """
    if pred_masked.shape != y.shape:
        raise ValueError(f"shape mismatch: {pred_masked.shape} vs {y.shape}")
    r = pred_masked - y
    num = float(np.abs(r.real).sum() + np.abs(r.imag).sum())
    den = float(np.abs(pred_masked.real).sum() + np.abs(pred_masked.imag).sum())
    if den == 0.0:
        raise ValueError("degenerate prediction: zero L1 norm")
    value = num / den
    grad = (np.sign(r.real) + 1j * np.sign(r.imag)) / den
    if live_denominator:
        grad = grad - (num / den**2) * (np.sign(pred_masked.real) + 1j * np.sign(pred_masked.imag))
    return value, grad


@dataclass
class TrainingProblem:
    """Everything total_loss needs besides the network parameters."""
    emb: np.ndarray          # embedded coordinate grid, (N_pts, 2 n_e)
    y: np.ndarray            # acquired (masked) k-space
    mask: object             # SamplingMask
    coils: np.ndarray
    shape: tuple             # (N_x, N_y, N_TSL)
    weights: LossWeights
    mode: str = "FULL"
    kernel: object = None
    live_denominator: bool = False
    chunk_rows: int = 0      # bound forward/backward memory; 0 = single pass

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode in ("SC", "FULL") and self.kernel is None:
            raise ValueError(f"mode {self.mode} needs a calibrated kernel")
        self.hankel = hankel_config(self.shape[2])


def _image_space_gradient(x, problem):
    """Loss values and the gradient w.r.t. the image series for the mode."""
    lam1, lam2 = problem.weights.lambda1, problem.weights.lambda2
    kt_full = e_full(x, problem.coils)
    pred_masked = apply_mask(kt_full, problem.mask)
    l_dc, g_dc = loss_dc(pred_masked, problem.y, problem.live_denominator)
    g_kt = apply_mask(g_dc, problem.mask)
    comps = {"l_dc": l_dc, "l_hk": None, "l_sc": None}
    total = l_dc
    if problem.mode in ("HK", "FULL"):
        l_hk, g_hk = loss_hk(x, problem.hankel)
        comps["l_hk"] = l_hk
        total += lam1 * l_hk
    if problem.mode in ("SC", "FULL"):
        l_sc, g_sc_kt = loss_sc(problem.kernel, kt_full)
        comps["l_sc"] = l_sc
        total += lam2 * l_sc
        g_kt = g_kt + lam2 * g_sc_kt
    g_x = e_full_adj(g_kt, problem.coils)
    if problem.mode in ("HK", "FULL"):
        g_x = g_x + lam1 * g_hk
    comps["total"] = total
    return comps, g_x


def _forward_series(params, problem):
    emb = problem.emb
    n = emb.shape[0]
    chunk = problem.chunk_rows
    if chunk and chunk < n:
        out = np.empty(n, dtype=np.complex128)
        for lo in range(0, n, chunk):
            out[lo:lo + chunk] = inr.forward(params, emb[lo:lo + chunk])
    else:
        out = inr.forward(params, emb)
    return inr.flat_to_series(out, *problem.shape)


def evaluate_loss(params, problem):
    """Loss components at the current parameters, no gradients."""
    comps, _ = _image_space_gradient(_forward_series(params, problem), problem)
    return comps


def total_loss(params, problem):
    """Total loss for the mode plus exact parameter gradients.

    Image-space and k-space loss gradients are pulled back through the
    encoder adjoints and then through the network.
    """
    emb = problem.emb
    n = emb.shape[0]
    chunk = problem.chunk_rows
    if not chunk or chunk >= n:
        out, cache = inr.forward(params, emb, want_cache=True)
        x = inr.flat_to_series(out, *problem.shape)
        comps, g_x = _image_space_gradient(x, problem)
        gw, gb = inr.backward(params, cache, inr.series_to_flat(g_x))
        return comps, gw, gb
    # two-pass chunked variant: forward once for the losses, then re-forward
    # per chunk with caches to accumulate parameter gradients
    x = _forward_series(params, problem)
    comps, g_x = _image_space_gradient(x, problem)
    upstream = inr.series_to_flat(g_x)
    gw = [np.zeros_like(w) for w in params.weights]
    gb = [np.zeros_like(b) for b in params.biases]
    for lo in range(0, n, chunk):
        _, cache = inr.forward(params, emb[lo:lo + chunk], want_cache=True)
        cw, cb = inr.backward(params, cache, upstream[lo:lo + chunk])
        for acc, g in zip(gw, cw):
            acc += g
        for acc, g in zip(gb, cb):
            acc += g
    return comps, gw, gb


@dataclass
class AdamState:
    m: list
    v: list
    step: int = 0

    @classmethod
    def for_params(cls, arrays):
        return cls(m=[np.zeros_like(a) for a in arrays],
                   v=[np.zeros_like(a) for a in arrays])


def adam_step(state, arrays, grads, lr):
    """Bias-corrected Adam update, in place."""
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise TrainingDiverged("non-finite gradient in Adam step")
    state.step += 1
    t = state.step
    c1 = 1.0 - BETA1**t
    c2 = 1.0 - BETA2**t
    for a, g, m, v in zip(arrays, grads, state.m, state.v):
        m *= BETA1
        m += (1.0 - BETA1) * g
        v *= BETA2
        v += (1.0 - BETA2) * g * g
        a -= lr * (m / c1) / (np.sqrt(v / c2) + EPS)
    return arrays, state


def lr_schedule(iteration, base=LR_MAIN, decay=0.5, every=700):
    """base * decay^(iteration // every)."""
    if iteration < 0:
        raise ValueError("iteration must be >= 0")
    return base * decay ** (iteration // every)


@dataclass
class TrainReport:
    records: list = field(default_factory=list)
    final: dict = field(default_factory=dict)

    def save_jsonl(self, path, include_wall=False):
        """One JSON record per iteration. Wall-clock stays out of the file by
        default so identical runs produce identical bytes."""
        import json

        with open(path, "w", encoding="utf-8") as f:
            for rec in self.records:
                if not include_wall:
                    rec = {k: v for k, v in rec.items() if k != "wall_s"}
                f.write(json.dumps(rec) + "\n")
            if self.final:
                f.write(json.dumps({"final": True, **self.final}) + "\n")

    def loss_trace(self):
        return [rec["total"] for rec in self.records]


def dc_replace_kspace(pred, y, mask, coils):
    """Predicted k-space with acquired samples substituted on the mask."""
    kt = e_full(pred, coils)
    return kt - apply_mask(kt, mask) + y


def dc_projection(pred, y, mask, coils):
    """Hard data consistency: x = E_full^*((I - M) E_full(pred) + y)."""
    return e_full_adj(dc_replace_kspace(pred, y, mask, coils), coils)


def _flatten_params(params):
    return params.weights + params.biases


def reconstruct(config, y, mask, coils, kernel=None, warm_start=None,
                iters=None, progress=None):
    """Train the coordinate network against the acquired k-space, then apply
    the data-consistency projection.

    Deterministic given the config seeds. Returns (image series, TrainReport).
    """
    mode = config.mode
    if mode in ("SC", "FULL") and kernel is None:
        raise ValueError(f"mode {mode} requires a calibrated kernel")
    n_iters = config.iters if iters is None else iters
    N_x, N_y = config.N_x, config.N_y
    n_tsl = len(config.tsl_ms)
    if warm_start is not None:
        params = warm_start
    else:
        params = inr.init_mlp(config.n_e, config.hidden, config.omega0,
                              seed=config.seed, sigma=config.sigma,
                              paper_literal_init=config.paper_literal_init)
    grid = inr.coord_grid(N_x, N_y, config.tsl_ms)
    problem = TrainingProblem(
        emb=inr.embed(params.b_embed, grid),
        y=y, mask=mask, coils=coils,
        shape=(N_x, N_y, n_tsl),
        weights=LossWeights(config.lambda1, config.lambda2),
        mode=mode, kernel=kernel,
        live_denominator=config.live_denominator,
        chunk_rows=config.batch_coords,
    )
    base_lr = LR_PRETRAIN if config.pretrain else config.lr
    state = AdamState.for_params(_flatten_params(params))
    report = TrainReport()
    for it in range(n_iters):
        lr = lr_schedule(it, base=base_lr, decay=config.lr_decay,
                         every=config.lr_decay_every)
        t0 = time.perf_counter()
        try:
            comps, gw, gb = total_loss(params, problem)
        except FloatingPointError as e:
            raise TrainingDiverged(f"iteration {it}: {e}", params=params,
                                   report=report) from e
        adam_step(state, _flatten_params(params), gw + gb, lr)
        rec = {"iter": it, "lr": lr, "wall_s": time.perf_counter() - t0, **comps}
        report.records.append(rec)
        if progress is not None:
            progress(rec)
    report.final = {"iter": n_iters, **evaluate_loss(params, problem)}
    pred = _forward_series(params, problem)
    images = dc_projection(pred, y, mask, coils)
    return images, report, params
