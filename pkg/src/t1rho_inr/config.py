"""Experiment configuration: JSON schema, validation, defaults."""

import json
from dataclasses import dataclass, field, asdict

ABLATION_MODES = ("DC", "SC", "HK", "FULL")

# (lambda1, lambda2) defaults keyed by nominal acceleration.
LAMBDA_DEFAULTS = {6: (15.8, 1277.0), 10: (10.7, 1480.0), 14: (13.8, 1538.0)}


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the offending field."""


@dataclass
class EllipseRegion:
    center: tuple  # (cx, cy), normalized [-1, 1] coords
    axes: tuple    # (a, b) semi-axes, normalized units
    angle_deg: float
    m0: float
    t1rho_ms: float


def default_phantom_regions():
    """Brain-like 5-ellipse phantom; later regions overwrite earlier ones."""
    return [
        EllipseRegion((0.0, 0.0), (0.78, 0.905), 0.0, 1.0, 80.0),
        EllipseRegion((0.0, -0.05), (0.615, 0.735), 0.0, 0.95, 65.0),
        EllipseRegion((-0.265, 0.205), (0.185, 0.325), 20.0, 0.9, 55.0),
        EllipseRegion((0.265, 0.205), (0.185, 0.325), -20.0, 0.85, 40.0),
        EllipseRegion((0.005, -0.425), (0.32, 0.195), 0.0, 1.05, 100.0),
    ]


@dataclass
class ExperimentConfig:
    N_x: int = 64
    N_y: int = 64
    N_c: int = 4
    tsl_ms: list = field(default_factory=lambda: [1.0, 20.0, 40.0, 60.0, 80.0])
    R: float = 6.0
    acs: int = 4                   # default N_y // 16
    lambda1: float = 15.8
    lambda2: float = 1277.0
    n_e: int = 32
    sigma: float = 1.0             # stddev of the Fourier embedding matrix
    omega0: float = 30.0
    hidden: int = 48
    iters: int = 3500
    lr: float = 3.5e-4
    lr_decay: float = 0.5
    lr_decay_every: int = 700
    pretrain: bool = False         # pretrain mode uses lr 1e-4
    seed: int = 1234
    mode: str = "FULL"
    noise_sigma: float = 0.002
    phase_map: bool = True
    phantom_regions: list = field(default_factory=default_phantom_regions)
    kernel_window: tuple = (5, 5)
    kernel_tikhonov: float = 1e-2
    fit_method: str = "gauss-newton"   # or "adam"
    fit_iters: int = 50000
    fit_bounds_ms: tuple = (1.0, 500.0)
    paper_literal_init: bool = False
    live_denominator: bool = False
    warm_start: str = ""
    batch_coords: int = 0          # 0 = full coordinate grid per iteration

    def to_json_dict(self):
        d = asdict(self)
        d["phantom_regions"] = [asdict(r) for r in self.phantom_regions]
        return d


_SCHEMA_KEYS = set(ExperimentConfig.__dataclass_fields__)


def lambda_defaults_for(R):
    """(lambda1, lambda2) for the nearest tabulated acceleration factor."""
    best = min(LAMBDA_DEFAULTS, key=lambda r: (abs(r - R), r))
    return LAMBDA_DEFAULTS[best]


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def validate_config(cfg):
    for name in ("N_x", "N_y", "N_c", "acs", "n_e", "hidden", "iters",
                 "lr_decay_every"):
        v = getattr(cfg, name)
        _require(isinstance(v, int) and v > 0, f"{name} must be a positive integer, got {v!r}")
    tsl = cfg.tsl_ms
    _require(isinstance(tsl, list) and len(tsl) >= 2, f"tsl_ms must list at least 2 TSLs, got {tsl!r}")
    _require(all(isinstance(t, (int, float)) and t >= 0 for t in tsl),
             "tsl_ms entries must be nonnegative numbers")
    _require(all(b > a for a, b in zip(tsl, tsl[1:])), "tsl_ms must be strictly increasing")
    _require(cfg.R >= 1, f"R must be >= 1, got {cfg.R!r}")
    _require(cfg.lambda1 >= 0, f"lambda1 must be >= 0, got {cfg.lambda1!r}")
    _require(cfg.lambda2 >= 0, f"lambda2 must be >= 0, got {cfg.lambda2!r}")
    _require(cfg.sigma > 0, f"sigma must be > 0, got {cfg.sigma!r}")
    _require(cfg.omega0 > 0, f"omega0 must be > 0, got {cfg.omega0!r}")
    _require(cfg.lr > 0, f"lr must be > 0, got {cfg.lr!r}")
    _require(0 < cfg.lr_decay <= 1, f"lr_decay must be in (0, 1], got {cfg.lr_decay!r}")
    _require(cfg.mode in ABLATION_MODES,
             f"mode must be one of {'|'.join(ABLATION_MODES)}, got {cfg.mode!r}")
    _require(cfg.noise_sigma >= 0, f"noise_sigma must be >= 0, got {cfg.noise_sigma!r}")
    _require(len(cfg.kernel_window) == 2
             and all(isinstance(w, int) and w >= 1 and w % 2 == 1 for w in cfg.kernel_window),
             f"kernel_window must be two odd positive ints, got {cfg.kernel_window!r}")
    _require(cfg.kernel_tikhonov >= 0,
             f"kernel_tikhonov must be >= 0, got {cfg.kernel_tikhonov!r}")
    _require(cfg.fit_method in ("gauss-newton", "adam"),
             f"fit_method must be gauss-newton|adam, got {cfg.fit_method!r}")
    _require(len(cfg.fit_bounds_ms) == 2 and 0 < cfg.fit_bounds_ms[0] < cfg.fit_bounds_ms[1],
             f"fit_bounds_ms must be (lo, hi) with 0 < lo < hi, got {cfg.fit_bounds_ms!r}")
    _require(isinstance(cfg.seed, int) and cfg.seed >= 0,
             f"seed must be a nonnegative integer, got {cfg.seed!r}")
    _require(isinstance(cfg.batch_coords, int) and cfg.batch_coords >= 0,
             f"batch_coords must be >= 0, got {cfg.batch_coords!r}")
    regions = cfg.phantom_regions
    _require(len(regions) >= 1, "phantom_regions must not be empty")
    for i, r in enumerate(regions):
        _require(r.t1rho_ms > 0, f"phantom_regions[{i}].t1rho_ms must be > 0, got {r.t1rho_ms!r}")
        _require(len(r.center) == 2 and len(r.axes) == 2,
                 f"phantom_regions[{i}] center/axes must be pairs")
        _require(all(a > 0 for a in r.axes),
                 f"phantom_regions[{i}].axes must be positive, got {r.axes!r}")
        _require(all(abs(c) + max(r.axes) <= 1.0 + 1e-12 for c in r.center),
                 f"phantom_regions[{i}] does not fit inside the field of view")
    return cfg


def config_from_dict(raw):
    """Build a validated config from a JSON-style dict, filling defaults.

    lambda1/lambda2 default from the R-keyed table when absent; acs defaults
    to N_y // 16 (minimum 4).
    """
    unknown = set(raw) - _SCHEMA_KEYS
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
    kwargs = dict(raw)
    if "mode" in kwargs and isinstance(kwargs["mode"], str):
        kwargs["mode"] = kwargs["mode"].upper()
    if "tsl_ms" in kwargs:
        kwargs["tsl_ms"] = [float(t) for t in kwargs["tsl_ms"]]
    if "kernel_window" in kwargs:
        kwargs["kernel_window"] = tuple(int(w) for w in kwargs["kernel_window"])
    if "fit_bounds_ms" in kwargs:
        kwargs["fit_bounds_ms"] = tuple(float(b) for b in kwargs["fit_bounds_ms"])
    if "phantom_regions" in kwargs:
        regions = []
        for i, r in enumerate(kwargs["phantom_regions"]):
            try:
                regions.append(EllipseRegion(
                    center=tuple(float(c) for c in r["center"]),
                    axes=tuple(float(a) for a in r["axes"]),
                    angle_deg=float(r.get("angle_deg", 0.0)),
                    m0=float(r["m0"]),
                    t1rho_ms=float(r["t1rho_ms"]),
                ))
            except (KeyError, TypeError) as e:
                raise ConfigError(f"phantom_regions[{i}] is malformed: {e}") from e
        kwargs["phantom_regions"] = regions
    if "R" in kwargs:
        kwargs["R"] = float(kwargs["R"])
    lam1, lam2 = lambda_defaults_for(float(kwargs.get("R", ExperimentConfig.R)))
    kwargs.setdefault("lambda1", lam1)
    kwargs.setdefault("lambda2", lam2)
    if "acs" not in kwargs:
        n_y = kwargs.get("N_y", ExperimentConfig.N_y)
        if isinstance(n_y, int) and n_y > 0:
            kwargs["acs"] = max(4, n_y // 16)
    try:
        cfg = ExperimentConfig(**kwargs)
    except TypeError as e:
        raise ConfigError(str(e)) from e
    return validate_config(cfg)


def load_config(path):
    """Load and validate a JSON experiment config file."""
    with open(path, "r", encoding="utf-8") as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON in {path}: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return config_from_dict(raw)


def save_config(cfg, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(cfg.to_json_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
