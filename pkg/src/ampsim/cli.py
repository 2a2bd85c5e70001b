"""Command-line entry point.

    ampsim run      --config configs/trajectory_mmse_n3000.cfg --out out/trajectory_mmse --plots
    ampsim sweep-n  --config configs/scaling_mmse.cfg
    ampsim qq       --config configs/qq_mmse_n3000.cfg --iterations 5
    ampsim se-only  --config configs/trajectory_mmse_n3000.cfg
    ampsim verify

Exit codes: 0 ok, 2 config error, 3 too many diverged trials, 4 I/O error,
5 verification failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from ampsim import experiment
from ampsim.amp import CorrectionMode, TauSource
from ampsim.config import load_config
from ampsim.errors import ConfigError, ExperimentError
from ampsim.oracles import run_verification

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO, EXIT_VERIFY = 0, 2, 3, 4, 5

log = logging.getLogger("ampsim")


def _common(parser):
    parser.add_argument("--config", required=True, help="experiment config file")
    parser.add_argument("--seed", type=int, help="master seed (overrides config)")
    parser.add_argument("--threads", type=int, help="worker threads (default: CPU count)")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--plots", action="store_true", help="also write SVG charts")
    parser.add_argument("--tau-source", choices=[s.value for s in TauSource])
    parser.add_argument("--mode", choices=[m.value for m in CorrectionMode])


def build_parser():
    parser = argparse.ArgumentParser(prog="ampsim", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("run", help="run one experiment"))
    _common(sub.add_parser("sweep-n", help="repeat an experiment over sweep_n and tabulate std*sqrt(n)"))
    qq = sub.add_parser("qq", help="QQ series of the standardized denoiser input error")
    _common(qq)
    qq.add_argument("--iterations", help="comma-separated iterations (overrides record_input_error)")
    _common(sub.add_parser("se-only", help="state evolution under the prior (no trials)"))
    verify = sub.add_parser("verify", help="run the small oracle suite")
    verify.add_argument("--samples", type=int, default=200_000, help="Monte-Carlo samples per check")
    return parser


def _load(args):
    cfg = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["output_dir"] = args.out
    if args.tau_source is not None:
        changes["tau_source"] = TauSource(args.tau_source)
    if args.mode is not None:
        changes["mode"] = CorrectionMode(args.mode)
    if getattr(args, "iterations", None):
        changes["record_input_error"] = tuple(int(t) for t in args.iterations.split(","))
    return cfg.replace(**changes) if changes else cfg


def _cmd_run(args, cfg):
    report = experiment.run_experiment(cfg, args.threads)
    experiment.write_outputs(report, cfg.output_dir, args.plots)
    agg = report.aggregate
    print(f"n={cfg.n} trials={agg.trial_count} diverged={len(report.diverged_trials)} "
          f"final mse={agg.mse_mean[-1]:.6g} (SE {report.state_evolution.mse[-1]:.6g})")


def _cmd_sweep(args, cfg):
    reports, rows = experiment.run_sweep(cfg, args.threads)
    experiment.write_sweep_outputs(reports, rows, cfg.output_dir, args.plots)
    for row in rows:
        print(f"n={row.n} T={row.trial_count} std(mse)*sqrt(n)={row.std_mse_sqrtn:.4g} "
              f"std(tau_r)*sqrt(n)={row.std_taur_sqrtn:.4g} at t={row.iteration}")


def _cmd_qq(args, cfg):
    if not cfg.record_input_error:
        raise ConfigError("no iterations requested; set record_input_error or --iterations")
    report = experiment.run_experiment(cfg, args.threads)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    from ampsim import plots

    for t, series in sorted(report.qq.items()):
        (out / f"qq_t{t}.csv").write_text(experiment.qq_csv(series), encoding="utf-8")
        if args.plots:
            (out / f"qq_t{t}.svg").write_text(plots.qq_svg(series, f"QQ, iteration {t}"), encoding="utf-8")
        ks = np.array(report.ks[t])
        print(f"t={t}: KS first trial {series.ks:.4f}, median over {ks.size} trials {np.median(ks):.4f}")


def _cmd_se(args, cfg):
    se = experiment.analytic_state_evolution(cfg)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "se.csv").write_text(experiment.se_csv(se), encoding="utf-8")
    print(f"final SE mse={se.mse[-1]:.6g} tau_r={se.taur[-1]:.6g}")


def _cmd_verify(args):
    checks = run_verification(mc_samples=args.samples)
    for check in checks:
        print(f"[{'PASS' if check.passed else 'FAIL'}] {check.name}: {check.detail}")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VERIFY


COMMANDS = {"run": _cmd_run, "sweep-n": _cmd_sweep, "qq": _cmd_qq, "se-only": _cmd_se}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "verify":
        return _cmd_verify(args)
    try:
        cfg = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ExperimentError as exc:
        print(f"experiment failed: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
