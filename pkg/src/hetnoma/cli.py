"""Command-line interface.

Subcommands:
    analytic       closed-form coverage report for a scenario
    sim            Monte Carlo estimates at the scenario point -> CSV
    sweep          analytic vs simulated coverage over a grid -> CSV
    optimize-beta  power-allocation search per tier and scheme

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
All commands honor --seed and are bit-reproducible: identical config and
seed produce byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace

from .config import KERNEL_MODES, ConfigError, load_config
from .coverage import (
    KernelDivergenceError,
    cell_load_model,
    coverage_coop,
    coverage_noncoop,
    decoding_thresholds,
    optimize_beta,
)
from .kernels import KernelEvaluator, QuadratureError
from .simulate import ROLES, estimates_from_totals, run_trials
from .sweeps import ComparisonRow, SweepSpec, analytic_pairs, run_beta_scan, run_sweep

CSV_HEADER = ("sweep_value", "tier", "role", "scheme", "analytic",
              "simulated", "ci_halfwidth", "n_samples", "flags")


def _apply_overrides(cfg, args):
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "trials", None) is not None:
        cfg = replace(cfg, n_trials=args.trials)
    if getattr(args, "kernel_mode", None) is not None:
        cfg = replace(cfg, kernel_mode=args.kernel_mode)
    if getattr(args, "out", None) is not None:
        cfg = replace(cfg, output=args.out)
    return cfg


def _write_rows(rows, path, out):
    """Write comparison rows as CSV to `path` (or stdout when absent)."""

    def emit(fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in rows:
            writer.writerow(
                [repr(float(r.sweep_value)), int(r.tier), r.role, r.scheme,
                 repr(float(r.analytic)), repr(float(r.simulated)),
                 repr(float(r.ci_halfwidth)), int(r.n_samples), r.flags]
            )

    if path is None:
        emit(out)
    else:
        try:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                emit(fh)
        except OSError as exc:
            raise RuntimeError(f"cannot write output file {path}: {exc}") from exc
        print(f"wrote {len(rows)} rows to {path}", file=out)


def cmd_analytic(cfg, out):
    params = cfg.params
    load = cell_load_model(params)
    theta = params.sir_threshold
    ev = KernelEvaluator.from_params(params)
    print(f"cell load L = {load.cell_load:.6f} users/BS", file=out)
    print(f"non-void probability q = {load.nonvoid_prob:.6f}", file=out)
    for tier in range(params.n_tiers):
        t = params.tiers[tier]
        beta = params.beta[tier]
        print(f"tier {tier + 1}: power {t.power_watts:g} W, intensity {t.intensity:g} /m^2, "
              f"beta {beta:g}", file=out)
        thr = decoding_thresholds(theta, beta)
        if not thr.valid:
            print(f"  invalid power allocation: beta <= theta/(1+theta) "
                  f"(beta={beta:g}, theta={theta:g}); coverage is zero", file=out)
            continue
        near_txt = "inf" if thr.near_threshold == float("inf") else f"{thr.near_threshold:.6f}"
        print(f"  thresholds: near {near_txt}, far {thr.far_threshold:.6f} (valid)", file=out)
        non = coverage_noncoop(params, tier, evaluator=ev)
        print(f"  noncoop        : near {non.near:.6f}  far {non.far:.6f}", file=out)
        coop = coverage_coop(params, tier, cfg.kernel_mode, evaluator=ev)
        note = "  [extrapolated below (1+theta)/(2+theta)]" if coop.extrapolated else ""
        print(f"  coop[{cfg.kernel_mode}] : near {coop.near:.6f}  far {coop.far:.6f}{note}",
              file=out)
    return 0


def cmd_sim(cfg, out):
    """Monte Carlo estimates at the configured scenario point."""
    params = cfg.params
    totals = run_trials(
        params, cfg.window, cfg.n_trials, seed=cfg.seed,
        max_cells_per_tier=cfg.max_cells_per_tier, n_jobs=cfg.n_jobs,
    )
    pairs = analytic_pairs(params, cfg.schemes, cfg.kernel_mode)
    estimates = {(e.tier, e.scheme, e.role): e
                 for e in estimates_from_totals(totals, cfg.schemes)}
    rows = []
    for tier in range(params.n_tiers):
        for role in ROLES:
            for scheme in cfg.schemes:
                pair = pairs[(tier, scheme)]
                est = estimates[(tier, scheme, role)]
                flags = []
                if est.low_samples:
                    flags.append("low_samples")
                if pair.extrapolated:
                    flags.append("extrapolated_beta")
                rows.append(ComparisonRow(
                    sweep_value=params.user_intensity, tier=tier + 1, role=role,
                    scheme=scheme, analytic=getattr(pair, role), simulated=est.p_hat,
                    ci_halfwidth=est.ci_halfwidth, n_samples=est.n_samples,
                    flags=";".join(flags),
                ))
    _write_rows(rows, cfg.output, out)
    return 0


def cmd_sweep(cfg, out):
    spec = SweepSpec(
        params=cfg.params, variable=cfg.sweep_variable, grid=cfg.sweep_grid,
        schemes=cfg.schemes, n_trials=cfg.n_trials, seed=cfg.seed,
        window=cfg.window, kernel_mode=cfg.kernel_mode,
        max_cells_per_tier=cfg.max_cells_per_tier, n_jobs=cfg.n_jobs,
    )
    rows = run_sweep(spec)
    _write_rows(rows, cfg.output, out)
    print(f"max |analytic - simulated| over sweep: "
          f"{max(r.abs_gap for r in rows):.6f}", file=out)
    return 0


def cmd_optimize_beta(cfg, out):
    params = cfg.params
    theta = params.sir_threshold
    lo = theta / (1.0 + theta)
    grid = [lo + (1.0 - lo) * i / 32 for i in range(1, 33)]
    scan_rows = []
    for tier in range(params.n_tiers):
        for scheme in cfg.schemes:
            scan = run_beta_scan(params, tier, scheme, grid, cfg.kernel_mode)
            opt = scan.optimum
            boundary = "  [maximizer at beta = 1 boundary]" if opt.at_boundary else ""
            print(f"tier {tier + 1} {scheme}: beta* = {opt.beta_star:.4f}, "
                  f"average coverage = {opt.value:.6f}{boundary}", file=out)
            scan_rows.append((tier, scheme, scan))
    print("beta scan (plot data):", file=out)
    print("beta,tier,scheme,avg_coverage", file=out)
    for tier, scheme, scan in scan_rows:
        for b, v in zip(scan.grid, scan.averages):
            print(f"{b!r},{tier + 1},{scheme},{v!r}", file=out)
    if cfg.output is not None:
        try:
            with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(("beta", "tier", "scheme", "avg_coverage"))
                for tier, scheme, scan in scan_rows:
                    for b, v in zip(scan.grid, scan.averages):
                        writer.writerow([repr(b), tier + 1, scheme, repr(v)])
        except OSError as exc:
            raise RuntimeError(f"cannot write output file {cfg.output}: {exc}") from exc
        print(f"wrote beta scan to {cfg.output}", file=out)
    return 0


_COMMANDS = {
    "analytic": cmd_analytic,
    "sim": cmd_sim,
    "sweep": cmd_sweep,
    "optimize-beta": cmd_optimize_beta,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hetnoma",
        description="Two-user NOMA downlink coverage in a multi-tier Poisson network: "
                    "closed forms, Monte Carlo validation, power-allocation search.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("analytic", "closed-form coverage report"),
        ("sim", "Monte Carlo coverage estimates (CSV)"),
        ("sweep", "analytic vs simulated coverage over a grid (CSV)"),
        ("optimize-beta", "coverage-maximizing power allocation per tier/scheme"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="scenario config (JSON)")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--trials", type=int, default=None, help="override config n_trials")
        p.add_argument("--kernel-mode", choices=KERNEL_MODES, default=None,
                       dest="kernel_mode", help="cooperative kernel combination form")
        p.add_argument("--out", default=None, help="override config output path")
    return parser


def main(argv=None, out=None):
    out = out if out is not None else sys.stdout
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        return _COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (KernelDivergenceError, QuadratureError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
