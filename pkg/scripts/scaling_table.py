"""std(E_n) * sqrt(n) and std(tau_r) * sqrt(n) at t = 29 for both denoisers.

    python3 scripts/scaling_table.py                 # n = 1000, 3000; T = 300
    python3 scripts/scaling_table.py --n 1000 3000 10000 --trials 100
"""

import argparse
from pathlib import Path

from ampsim import experiment
from ampsim.config import load_config

ROOT = Path(__file__).resolve().parent.parent


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--n", type=int, nargs="+", help="signal lengths (default: from config)")
    parser.add_argument("--trials", type=int)
    parser.add_argument("--threads", type=int)
    parser.add_argument("--out", default=str(ROOT / "out" / "scaling"))
    args = parser.parse_args()

    print(f"{'denoiser':<10}{'n':>8}{'T':>6}{'std(E)*sqrt(n)':>18}{'std(tau)*sqrt(n)':>19}")
    for kind in ("mmse", "soft"):
        cfg = load_config(ROOT / "configs" / f"scaling_{kind}.cfg")
        if args.n:
            cfg = cfg.replace(sweep_n=tuple(args.n))
        if args.trials:
            cfg = cfg.replace(trials=args.trials)
        reports, rows = experiment.run_sweep(cfg, args.threads)
        experiment.write_sweep_outputs(reports, rows, Path(args.out) / kind)
        for row in rows:
            print(f"{kind:<10}{row.n:>8}{row.trial_count:>6}{row.std_mse_sqrtn:>18.5f}{row.std_taur_sqrtn:>19.5f}")


if __name__ == "__main__":
    main()
