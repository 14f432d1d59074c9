"""Command-line entry point ``offgrid``.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import pipeline
from .edges import edge_mask, pseudospectrum, write_png
from .errors import ConfigError, InvalidArgumentError, NumericalError, OffgridError, StageError
from .forward import apply, read_mask, write_mask
from .framebank import read_bank, write_bank
from .grid import SpectralImage, make_grid, read_spc, write_spc
from .learn import learn, write_trace as write_learn_trace
from .metrics import evaluate, write_metrics
from .phantoms import add_noise, scene_fourier
from .restore import lslp, pixel_values, split_bregman
from .restore import write_trace as write_restore_trace

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _overrides(pairs: list[str] | None) -> dict[str, str]:
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def _config(args) -> pipeline.ExperimentConfig:
    """Config file (optional) plus ``--set`` overrides."""
    over = _overrides(getattr(args, "set", None))
    if getattr(args, "config", None):
        return pipeline.load_config(args.config, over)
    return pipeline.parse_config("", over)


def cmd_phantom(args) -> None:
    cfg = _config(args)
    truth = scene_fourier(pipeline.load_scene(cfg.scene), make_grid(cfg.n))
    write_spc(args.out, truth)
    if args.png:
        write_png(args.png, pixel_values(truth))


def cmd_measure(args) -> None:
    cfg = _config(args)
    truth = read_spc(args.truth)
    if truth.grid.shape != (cfg.n, cfg.n):
        raise ConfigError(f"truth is {truth.grid.shape}, config says n={cfg.n}")
    op = pipeline.build_operator(cfg)
    sigma = cfg.noise_sigma + cfg.noise_rel * float(np.max(np.abs(apply(op, truth).values)))
    write_mask(args.mask, op)
    write_spc(args.out, apply(op, add_noise(truth, sigma, cfg.seed)))


def cmd_learn(args) -> None:
    cfg = _config(args)
    f = read_spc(args.measured)
    op = read_mask(args.mask)
    sub = make_grid(cfg.low_n)
    res = learn(f.restrict(sub), op.restrict(sub), cfg.learn_config())
    write_bank(args.bank, res.bank)
    if args.samples:
        write_spc(args.samples, res.v)
    if args.trace:
        if not cfg.record_timing:
            for row in res.trace:
                row.wall_ms = 0.0
        write_learn_trace(args.trace, res.trace)
    print(f"iterations={res.iters} converged={res.converged} rank={res.rank}")


def cmd_edges(args) -> None:
    cfg = _config(args)
    bank = read_bank(args.bank, make_grid(cfg.low_n))
    emap = pseudospectrum(bank, args.rank, (cfg.edge_resolution, cfg.edge_resolution))
    if args.out:
        write_spc(args.out, emap.values)
    if args.png:
        write_png(args.png, emap.values)
    if args.mask_png:
        write_png(args.mask_png, edge_mask(emap, cfg.edge_quantile).astype(float))


def cmd_restore(args) -> None:
    cfg = _config(args)
    f = read_spc(args.measured)
    op = read_mask(args.mask)
    if args.method == "ifft":
        v = SpectralImage(f.grid, np.where(op.mask, f.values, 0))
    else:
        if not args.bank:
            raise ConfigError(f"method {args.method} needs --bank")
        bank = read_bank(args.bank, f.grid)
        if args.method == "proposed":
            res = split_bregman(f, op, bank, cfg.restore_config())
            v = res.v
            if args.trace:
                if not cfg.record_timing:
                    for row in res.trace:
                        row.wall_ms = 0.0
                write_restore_trace(args.trace, res.trace)
        else:
            res_l = lslp(f, op, bank, bank.rank, cfg.lslp_gamma, cfg.cg_tol, cfg.cg_max)
            if not res_l.converged:
                print(f"warning: CG stopped with relative residual {res_l.residual:.3e}", file=sys.stderr)
            v = res_l.v
    write_spc(args.out, v)
    if args.png:
        write_png(args.png, pixel_values(v))


def cmd_metrics(args) -> None:
    cfg = _config(args)
    ref = pixel_values(read_spc(args.truth))
    reports = []
    for path in args.restored:
        img = pixel_values(read_spc(path))
        reports.append(evaluate(ref, img, cfg.scene, cfg.task, Path(path).stem, 0.0, cfg.seed))
    if args.out:
        write_metrics(args.out, reports)
    for r in reports:
        print(f"{r.method}: snr={r.snr:.3f} dB hfen={r.hfen:.4f} ssim={r.ssim:.4f}")


def cmd_pipeline(args) -> None:
    cfg = _config(args)
    if args.output:
        cfg.output = args.output
    result = pipeline.run_pipeline(cfg)
    for r in result.reports:
        print(f"{r.task} {r.method}: snr={r.snr:.3f} dB hfen={r.hfen:.4f} ssim={r.ssim:.4f}")
    print(f"artifacts in {cfg.output}")


def cmd_check(args) -> None:
    cfg = _config(args)
    low_n = args.low_n if args.low_n is not None else cfg.low_n
    k = args.filter_size if args.filter_size is not None else cfg.filter_size
    report = pipeline.check_conditions(low_n, k, args.minimal)
    for line in report.messages:
        print(line)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="offgrid", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        p.set_defaults(func=func)
        return p

    p = add("phantom", cmd_phantom, "sample a scene's Fourier transform")
    p.add_argument("--out", required=True)
    p.add_argument("--png")

    p = add("measure", cmd_measure, "degrade full samples with the configured task and noise")
    p.add_argument("--truth", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--out", required=True)

    p = add("learn", cmd_learn, "stage 1: restore low frequencies and learn the filter bank")
    p.add_argument("--measured", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--bank", required=True)
    p.add_argument("--samples")
    p.add_argument("--trace")

    p = add("edges", cmd_edges, "edge pseudospectrum of a learned bank")
    p.add_argument("--bank", required=True)
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--out")
    p.add_argument("--png")
    p.add_argument("--mask-png")

    p = add("restore", cmd_restore, "stage 2: restore the full spectrum")
    p.add_argument("--measured", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--bank")
    p.add_argument("--method", choices=pipeline.METHODS, default="proposed")
    p.add_argument("--out", required=True)
    p.add_argument("--png")
    p.add_argument("--trace")

    p = add("metrics", cmd_metrics, "SNR, HFEN and SSIM against the truth")
    p.add_argument("--truth", required=True)
    p.add_argument("restored", nargs="+")
    p.add_argument("--out")

    p = add("pipeline", cmd_pipeline, "run every stage and write artifacts")
    p.add_argument("--output")

    p = add("check", cmd_check, "sampling condition and rank bound")
    p.add_argument("--low-n", type=int)
    p.add_argument("--filter-size", type=int)
    p.add_argument("--minimal", type=int, default=3)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL if isinstance(exc.cause, (NumericalError, np.linalg.LinAlgError)) else EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InvalidArgumentError, OffgridError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
