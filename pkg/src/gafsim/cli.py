"""Command line entry points.

    gafsim run <config.json> [--threads N] [--out DIR]
    gafsim validate <config.json>
    gafsim diag kernel <config.json> [--threads N] [--out DIR]

Reports are deterministic: the same config and seed produce byte-identical
JSON, whatever the thread count. GAFSIM_SEED overrides the master seed.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from .config import load_config
from .errors import ConfigError, GafsimError, NotLocallyFlat
from .experiments import build_model, run_experiment, \
    kernel_diagnostics_experiment
from .measure import flatness_band, mu_disc
from .pointprocess import sample_basis_gaf, sample_frame_gaf
from .zeros import locate_zeros


def _apply_seed_override(config):
    env = os.environ.get("GAFSIM_SEED")
    if env is not None:
        config.master_seed = int(env)
        config.raw.setdefault("seeds", {})
        config.raw["seeds"]["master"] = int(env)
    return config


def _write_reports(report, out_dir, config):
    os.makedirs(out_dir, exist_ok=True)
    base = os.path.join(out_dir, report.experiment)
    report.write_json(base + "_report.json")
    report.write_csv(base + "_summary.csv")
    if report.experiment == "hole":
        report.write_hole_fit_csv(base + "_fit.csv")
    return base + "_report.json"


def cmd_run(args):
    config = _apply_seed_override(load_config(args.config))
    threads = args.threads or os.cpu_count() or 1
    t0 = time.time()
    report = run_experiment(config, threads=threads)
    path = _write_reports(report, args.out, config)
    for line in report.summary_lines():
        print(line)
    print("report: %s   (%.1fs, %d threads)" % (path, time.time() - t0,
                                                threads))
    return 0


def _estimate_runtime(config):
    trial_L = config.L_grid[min(1, len(config.L_grid) - 1)]
    li = config.L_grid.index(trial_L)
    model = build_model(config, trial_L)
    t0 = time.time()
    n_probe = 3
    for t in range(n_probe):
        from .pointprocess import combine_seed
        seed = combine_seed(config.master_seed, config.trial_offset + t)
        s = sample_frame_gaf(model, seed, experiment_region=config.region) \
            if model.is_frame else sample_basis_gaf(model, seed)
        locate_zeros(s, config.psi.support_disc)
    per_trial = (time.time() - t0) / n_probe
    return per_trial * config.trials * len(config.L_grid)


def cmd_validate(args):
    try:
        config = _apply_seed_override(load_config(args.config))
    except ConfigError as exc:
        print("invalid: %s" % exc)
        return 2
    warnings = []
    if config.experiment == "normality":
        try:
            band = flatness_band(config.weight, config.region, grid_n=3,
                                 rel_tol=1e-7)
            if band > 1.5:
                warnings.append(
                    "flatness band %.3g > 1.5: the normality experiment "
                    "will refuse this weight (the normal limit needs a "
                    "locally flat density)" % band)
        except GafsimError as exc:
            warnings.append("flatness scan failed: %s" % exc)
    if config.experiment == "hole":
        d = config.hole_disc
        mu_d = mu_disc(config.weight, d.center, d.radius)
        if config.weight.is_radial and abs(d.center) < 1e-12:
            a = config.weight.alpha
            c_sharp = a * np.e**2 / 8.0 * d.radius ** (2 * a)
            log_p_top = -c_sharp * config.L_grid[-1] ** 2
            if log_p_top < np.log(1e-7):
                warnings.append(
                    "insufficient trial budget: predicted hole probability "
                    "~exp(%.1f) at L=%g is below 1e-7" %
                    (log_p_top, config.L_grid[-1]))
    runtime = None
    if config.experiment in ("mean_variance", "normality", "large_deviation"):
        runtime = _estimate_runtime(config)
    print("ok: %s experiment, weight %s, %d scaling points, %d trials each"
          % (config.experiment, config.weight.name, len(config.L_grid),
             config.trials))
    if runtime is not None:
        print("estimated runtime: %.0fs single-threaded" % runtime)
    for w in warnings:
        print("warning: %s" % w)
    return 0


def cmd_diag_kernel(args):
    config = _apply_seed_override(load_config(args.config))
    threads = args.threads or os.cpu_count() or 1
    report = kernel_diagnostics_experiment(config, threads=threads)
    path = _write_reports(report, args.out, config)
    for line in report.summary_lines():
        print(line)
    print("report: %s" % path)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="gafsim", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment config")
    run_p.add_argument("config")
    run_p.add_argument("--threads", type=int, default=None)
    run_p.add_argument("--out", default="out")
    run_p.set_defaults(func=cmd_run)

    val_p = sub.add_parser("validate", help="check a config without running")
    val_p.add_argument("config")
    val_p.set_defaults(func=cmd_validate)

    diag_p = sub.add_parser("diag", help="diagnostics")
    diag_sub = diag_p.add_subparsers(dest="diag_kind", required=True)
    dk = diag_sub.add_parser("kernel", help="kernel size/decay diagnostics")
    dk.add_argument("config")
    dk.add_argument("--threads", type=int, default=None)
    dk.add_argument("--out", default="out")
    dk.set_defaults(func=cmd_diag_kernel)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    except NotLocallyFlat as exc:
        print("refused: %s" % exc, file=sys.stderr)
        return 3
    except GafsimError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
