"""Run the trajectory and QQ experiments from configs/ and write CSV + SVG.

    python3 scripts/reproduce_figures.py                # desk-scale set
    python3 scripts/reproduce_figures.py --all          # include n = 30000 and T = 10000
    python3 scripts/reproduce_figures.py --trials 20    # quick look
"""

import argparse
import time
from pathlib import Path

from ampsim import experiment
from ampsim.config import load_config

ROOT = Path(__file__).resolve().parent.parent
# n = 30000 needs ~3.6 GB per matrix; T = 10000 takes hours on one core
LARGE = {
    "trajectory_mmse_n300.cfg",
    "trajectory_mmse_n30000.cfg",
    "trajectory_soft_n300.cfg",
    "trajectory_soft_n30000.cfg",
}


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--all", action="store_true", help="also run the large configs")
    parser.add_argument("--trials", type=int, help="override T in every config")
    parser.add_argument("--threads", type=int)
    parser.add_argument("--out", default=str(ROOT / "out"))
    args = parser.parse_args()

    configs = ROOT / "configs"
    for path in sorted([*configs.glob("trajectory_*.cfg"), *configs.glob("qq_*.cfg")]):
        if path.name in LARGE and not args.all:
            print(f"skip {path.name} (use --all)")
            continue
        cfg = load_config(path)
        if args.trials:
            cfg = cfg.replace(trials=args.trials)
        start = time.perf_counter()
        report = experiment.run_experiment(cfg, args.threads)
        out = Path(args.out) / path.stem
        experiment.write_outputs(report, out, plots=True)
        agg, se = report.aggregate, report.state_evolution
        print(f"{path.name}: T={agg.trial_count} final mse {agg.mse_mean[-1]:.5f} "
              f"(SE {se.mse[-1]:.5f}) -> {out} [{time.perf_counter() - start:.0f} s]")


if __name__ == "__main__":
    main()
