"""Subcommand front end: phantom -> undersample -> calibrate -> reconstruct
-> fit -> metrics, plus ablate (all four loss modes) and repro (whole chain).

Every command reads/writes tensor files under --out with conventional names
(overridable by flags) and records a manifest with content hashes, so a rerun
with the same config and seeds is checkable bit-for-bit.
"""

import argparse
import dataclasses
import json
import os
import sys


def _cap_threads():
    cap = os.environ.get("LINEAR_THREADS")
    if cap:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
            os.environ.setdefault(var, cap)


_cap_threads()   # before numpy is first imported

import numpy as np

from . import config as cfgmod
from . import fitting, inr, metrics, phantom, priors, sampling, tensorio, trainer
from .manifest import ManifestWriter, sha256_file


def _load_cfg(args):
    cfg = cfgmod.load_config(args.config)
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "mode", None) is not None:
        updates["mode"] = args.mode.upper()
    if getattr(args, "iters", None) is not None:
        updates["iters"] = args.iters
    if updates:
        cfg = cfgmod.validate_config(dataclasses.replace(cfg, **updates))
    return cfg


def _out(args, name):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _write_outputs(man, pairs):
    for path, tensor in pairs:
        tensorio.write_tensor(path, tensor)
        man.add_output(path)


def cmd_phantom(args):
    cfg = _load_cfg(args)
    man = ManifestWriter("phantom", cfg)
    m0, t1rho, _support = phantom.make_phantom(cfg.phantom_regions, cfg.N_x, cfg.N_y)
    coils = phantom.make_coil_maps(cfg.N_x, cfg.N_y, cfg.N_c, seed=cfg.seed)
    images = phantom.simulate_weighted_images(m0, t1rho, cfg.tsl_ms, cfg.phase_map)
    kt_full = phantom.simulate_kt(images, coils, cfg.noise_sigma, seed=cfg.seed)
    _write_outputs(man, [
        (_out(args, "m0.qkt"), m0),
        (_out(args, "t1rho.qkt"), t1rho),
        (_out(args, "coils.qkt"), coils),
        (_out(args, "images.qkt"), images),
        (_out(args, "kt_full.qkt"), kt_full),
    ])
    man.write(_out(args, "manifest_phantom.json"))
    return 0


def cmd_undersample(args):
    cfg = _load_cfg(args)
    man = ManifestWriter("undersample", cfg)
    man.add_input(args.kt_full)
    kt_full = tensorio.read_tensor(args.kt_full)
    n_tsl = kt_full.shape[3]
    mask = sampling.make_mask(cfg.N_y, cfg.R, cfg.acs, n_tsl, seed=cfg.seed)
    kt_under = kt_full * mask.lines[None, :, None, :]
    man.add_note("net_acceleration", sampling.net_acceleration(mask))
    _write_outputs(man, [
        (_out(args, "kt_under.qkt"), kt_under),
        (_out(args, "mask.qkt"), mask.lines),
    ])
    man.write(_out(args, "manifest_undersample.json"))
    return 0


def _load_mask(path, cfg):
    lines = tensorio.read_tensor(path)
    return sampling.SamplingMask(lines=lines, acs=cfg.acs, nominal_R=cfg.R)


def save_kernel(kernel, tensor_path, meta_path):
    n_c, n_tsl, w_x, w_y = kernel.packed.shape[:4]
    tensorio.write_tensor(
        tensor_path, kernel.packed.reshape(n_c * n_tsl, w_x * w_y, n_c, 3), float64=True
    )
    with open(meta_path, "w", encoding="utf-8") as f:
        json.dump({"window": [w_x, w_y], "tau": kernel.tau,
                   "n_coils": n_c, "n_tsl": n_tsl}, f, indent=2, sort_keys=True)
        f.write("\n")


def load_kernel(tensor_path, meta_path):
    with open(meta_path, "r", encoding="utf-8") as f:
        meta = json.load(f)
    w_x, w_y = meta["window"]
    packed = tensorio.read_tensor(tensor_path).reshape(
        meta["n_coils"], meta["n_tsl"], w_x, w_y, meta["n_coils"], 3
    )
    return priors.SpiritKernel(packed=packed, window=(w_x, w_y), tau=meta["tau"])


def cmd_calibrate(args):
    cfg = _load_cfg(args)
    man = ManifestWriter("calibrate", cfg)
    man.add_input(args.kt_under)
    kt = tensorio.read_tensor(args.kt_under)
    lo, hi = sampling.acs_range(cfg.N_y, cfg.acs)
    acs = kt[:, lo:hi, :, :]
    kernel = priors.calibrate_spirit(acs, cfg.kernel_window, cfg.kernel_tikhonov)
    man.add_note("calibration", {
        "window": list(cfg.kernel_window),
        "tau": cfg.kernel_tikhonov,
        "acs_lines": cfg.acs,
        "residual": priors.calibration_residual(kernel, acs),
    })
    kpath, mpath = _out(args, "kernel.qkt"), _out(args, "kernel.json")
    save_kernel(kernel, kpath, mpath)
    man.add_output(kpath)
    man.add_output(mpath)
    man.write(_out(args, "manifest_calibrate.json"))
    return 0


def cmd_reconstruct(args):
    cfg = _load_cfg(args)
    man = ManifestWriter("reconstruct", cfg)
    for p in (args.kt_under, args.mask, args.coils):
        man.add_input(p)
    y = tensorio.read_tensor(args.kt_under)
    mask = _load_mask(args.mask, cfg)
    coils = tensorio.read_tensor(args.coils)
    kernel = None
    if cfg.mode in ("SC", "FULL"):
        man.add_input(args.kernel)
        kernel = load_kernel(args.kernel, args.kernel_meta)
    warm = None
    warm_path = args.warm_start or cfg.warm_start
    if warm_path:
        man.add_input(warm_path)
        warm = inr.load_params(warm_path, n_e=cfg.n_e, hidden=cfg.hidden)
    images, report, params = trainer.reconstruct(
        cfg, y, mask, coils, kernel=kernel, warm_start=warm
    )
    recon_path = _out(args, f"recon_{cfg.mode.lower()}.qkt" if args.mode_suffix else "recon.qkt")
    tensorio.write_tensor(recon_path, images)
    man.add_output(recon_path)
    report_path = recon_path.replace(".qkt", "_report.jsonl")
    report.save_jsonl(report_path)
    man.add_output(report_path)
    if args.save_ckpt:
        for p in inr.save_params(params, args.save_ckpt):
            man.add_output(p)
    man.write(_out(args, f"manifest_reconstruct_{cfg.mode.lower()}.json"))
    return 0


def cmd_fit(args):
    cfg = _load_cfg(args)
    man = ManifestWriter("fit", cfg)
    man.add_input(args.images)
    series = tensorio.read_tensor(args.images)
    mask = None
    if args.mask:
        man.add_input(args.mask)
        mask = tensorio.read_tensor(args.mask) > 0.5
    maps = fitting.fit_t1rho(
        np.abs(series), cfg.tsl_ms, mask=mask, bounds=cfg.fit_bounds_ms,
        method=cfg.fit_method, adam_iters=cfg.fit_iters,
    )
    _write_outputs(man, [
        (_out(args, "m0_fit.qkt"), maps.m0),
        (_out(args, "t1rho_fit.qkt"), maps.t1rho_ms),
        (_out(args, "fit_residual.qkt"), maps.residual_rms),
        (_out(args, "fit_mask.qkt"), maps.fit_mask.astype(np.float64)),
    ])
    for name, img in (("m0_fit.pgm", maps.m0), ("t1rho_fit.pgm", maps.t1rho_ms)):
        p = _out(args, name)
        tensorio.export_preview(img, p)
        man.add_output(p)
    man.write(_out(args, "manifest_fit.json"))
    return 0


def cmd_metrics(args):
    cfg = _load_cfg(args)
    man = ManifestWriter("metrics", cfg)
    man.add_input(args.images)
    man.add_input(args.reference)
    x = tensorio.read_tensor(args.images)
    ref = tensorio.read_tensor(args.reference)
    report = metrics.series_metrics(x, ref)
    report["reference"] = {
        "name": os.path.basename(args.reference),
        "sha256": sha256_file(args.reference),
    }
    mpath = _out(args, "metrics.json")
    with open(mpath, "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    man.add_output(mpath)
    for t in range(x.shape[2]):
        p = _out(args, f"preview_tsl{t}.pgm")
        tensorio.export_preview(np.abs(x[:, :, t]), p)
        man.add_output(p)
    man.write(_out(args, "manifest_metrics.json"))
    return 0


def _ablation_table(rows):
    header = f"{'mode':<6} {'PSNR(dB)':>9} {'SSIM':>7} {'NRMSE':>8}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(
            f"{r['mode']:<6} {r['psnr_db']:>9.2f} {r['ssim']:>7.4f} {r['nrmse']:>8.4f}"
        )
    return "\n".join(lines) + "\n"


def cmd_ablate(args):
    cfg = _load_cfg(args)
    man = ManifestWriter("ablate", cfg)
    for p in (args.kt_under, args.mask, args.coils, args.reference):
        man.add_input(p)
    man.add_input(args.kernel)
    y = tensorio.read_tensor(args.kt_under)
    mask = _load_mask(args.mask, cfg)
    coils = tensorio.read_tensor(args.coils)
    kernel = load_kernel(args.kernel, args.kernel_meta)
    ref = tensorio.read_tensor(args.reference)
    rows = []
    for mode in ("DC", "SC", "HK", "FULL"):
        mode_cfg = cfgmod.validate_config(dataclasses.replace(cfg, mode=mode))
        images, _report, _params = trainer.reconstruct(
            mode_cfg, y, mask, coils, kernel=kernel
        )
        rpath = _out(args, f"recon_{mode.lower()}.qkt")
        tensorio.write_tensor(rpath, images)
        man.add_output(rpath)
        agg = metrics.series_metrics(images, ref)["aggregate"]
        rows.append({"mode": mode, **agg})
    jpath = _out(args, "ablation.json")
    with open(jpath, "w", encoding="utf-8") as f:
        json.dump(rows, f, indent=2, sort_keys=True)
        f.write("\n")
    tpath = _out(args, "ablation.txt")
    with open(tpath, "w", encoding="utf-8") as f:
        f.write(_ablation_table(rows))
    man.add_output(jpath)
    man.add_output(tpath)
    man.write(_out(args, "manifest_ablate.json"))
    return 0


def cmd_repro(args):
    """Chain every stage for one config into one output directory."""
    ns = argparse.Namespace(**vars(args))
    cmd_phantom(ns)
    ns.kt_full = _out(args, "kt_full.qkt")
    cmd_undersample(ns)
    ns.kt_under = _out(args, "kt_under.qkt")
    cmd_calibrate(ns)
    ns.mask = _out(args, "mask.qkt")
    ns.coils = _out(args, "coils.qkt")
    ns.kernel = _out(args, "kernel.qkt")
    ns.kernel_meta = _out(args, "kernel.json")
    ns.warm_start = None
    ns.save_ckpt = None
    ns.mode_suffix = False
    cmd_reconstruct(ns)
    ns.images = _out(args, "recon.qkt")
    ns.mask = None   # fit mask: none -> positive-magnitude support
    cmd_fit(ns)
    ns.reference = _out(args, "images.qkt")
    cmd_metrics(ns)
    cfg = _load_cfg(args)
    man = ManifestWriter("repro", cfg)
    for name in sorted(os.listdir(args.out)):
        if name.endswith((".qkt", ".jsonl", ".pgm")) or name in ("metrics.json", "kernel.json"):
            man.add_output(os.path.join(args.out, name))
    man.write(_out(args, "manifest_repro.json"))
    return 0


def _add_common(p):
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override config seed")
    p.add_argument("--iters", type=int, help="override iteration count")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="t1rho-inr",
        description="Quantitative T1rho series reconstruction pipeline on synthetic phantoms",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="ground-truth maps, coils, images, full k-space")
    _add_common(p)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("undersample", help="golden-ratio line masks and undersampled k-space")
    _add_common(p)
    p.add_argument("--kt-full", dest="kt_full", help="full k-space tensor")
    p.set_defaults(func=cmd_undersample)

    p = sub.add_parser("calibrate", help="fit the k-t interpolation kernel on the ACS")
    _add_common(p)
    p.add_argument("--kt-under", dest="kt_under", help="undersampled k-space tensor")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("reconstruct", help="train the coordinate network and project")
    _add_common(p)
    p.add_argument("--kt-under", dest="kt_under")
    p.add_argument("--mask")
    p.add_argument("--coils")
    p.add_argument("--kernel")
    p.add_argument("--kernel-meta", dest="kernel_meta")
    p.add_argument("--mode", choices=["dc", "sc", "hk", "full"], help="override loss mode")
    p.add_argument("--warm-start", dest="warm_start", help="checkpoint to initialize from")
    p.add_argument("--save-ckpt", dest="save_ckpt", help="write final parameters here")
    p.add_argument("--mode-suffix", dest="mode_suffix", action="store_true",
                   help="name the output recon_<mode>.qkt")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("fit", help="per-pixel M0/T1rho fit of a reconstructed series")
    _add_common(p)
    p.add_argument("--images", help="reconstructed series tensor")
    p.add_argument("--mask", help="optional {0,1} fit-support tensor")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("metrics", help="PSNR/SSIM/NRMSE against a reference series")
    _add_common(p)
    p.add_argument("--images")
    p.add_argument("--reference")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("ablate", help="run all four loss modes and tabulate metrics")
    _add_common(p)
    p.add_argument("--kt-under", dest="kt_under")
    p.add_argument("--mask")
    p.add_argument("--coils")
    p.add_argument("--kernel")
    p.add_argument("--kernel-meta", dest="kernel_meta")
    p.add_argument("--reference")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("repro", help="run the whole pipeline for one config")
    _add_common(p)
    p.add_argument("--mode", choices=["dc", "sc", "hk", "full"])
    p.set_defaults(func=cmd_repro)

    return parser


def _fill_conventional_paths(args):
    """Default input paths to the conventional names under --out."""
    conventional = {
        "kt_full": "kt_full.qkt",
        "kt_under": "kt_under.qkt",
        "mask": "mask.qkt",
        "coils": "coils.qkt",
        "kernel": "kernel.qkt",
        "kernel_meta": "kernel.json",
        "images": "recon.qkt",
        "reference": "images.qkt",
    }
    if args.command == "fit":
        del conventional["mask"]   # the fit-support mask is opt-in
    for attr, name in conventional.items():
        if hasattr(args, attr) and getattr(args, attr) is None:
            setattr(args, attr, os.path.join(args.out, name))
    for attr in ("warm_start", "save_ckpt"):
        if not hasattr(args, attr):
            setattr(args, attr, None)
    if not hasattr(args, "mode_suffix"):
        args.mode_suffix = False


def main(argv=None):
    args = build_parser().parse_args(argv)
    _fill_conventional_paths(args)
    try:
        return args.func(args)
    except Exception as e:   # machine-readable failure contract
        err = {"error": {"type": type(e).__name__, "message": str(e)}}
        print(json.dumps(err), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
