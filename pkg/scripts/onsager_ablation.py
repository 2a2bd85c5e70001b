"""Paired AMP vs IST comparison of the standardized input error at one iteration.

Same matrices for both modes; prints per-denoiser KS summaries and writes QQ
series for the first trial of each.

    python3 scripts/onsager_ablation.py --trials 50 --iteration 5
"""

import argparse
from pathlib import Path

import numpy as np

from ampsim import experiment, plots
from ampsim.amp import CorrectionMode
from ampsim.config import load_config

ROOT = Path(__file__).resolve().parent.parent


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--trials", type=int, default=50)
    parser.add_argument("--iteration", type=int, default=5)
    parser.add_argument("--threads", type=int)
    parser.add_argument("--out", default=str(ROOT / "out" / "ablation"))
    args = parser.parse_args()

    t = args.iteration
    for name in ("qq_mmse_n3000.cfg", "qq_soft_n3000.cfg"):
        base = load_config(ROOT / "configs" / name).replace(trials=args.trials, record_input_error=(t,))
        ks = {}
        for mode in (CorrectionMode.ONSAGER, CorrectionMode.IST):
            report = experiment.run_experiment(base.replace(mode=mode), args.threads)
            out = Path(args.out) / f"{base.denoiser}_{mode.value}"
            out.mkdir(parents=True, exist_ok=True)
            series = report.qq[t]
            (out / f"qq_t{t}.csv").write_text(experiment.qq_csv(series))
            (out / f"qq_t{t}.svg").write_text(plots.qq_svg(series, f"{base.denoiser}, {mode.value}, t={t}"))
            ks[mode] = np.array(report.ks[t])
            print(f"{base.denoiser:>5} {mode.value:>4}: median KS {np.median(ks[mode]):.4f}, "
                  f"KS <= 0.03 in {np.mean(ks[mode] <= 0.03):.0%} of {ks[mode].size} trials")
        if ks[CorrectionMode.ONSAGER].size == ks[CorrectionMode.IST].size:
            wins = np.mean(ks[CorrectionMode.IST] > ks[CorrectionMode.ONSAGER])
            print(f"{base.denoiser:>5}: IST KS above AMP KS in {wins:.0%} of paired trials")


if __name__ == "__main__":
    main()
