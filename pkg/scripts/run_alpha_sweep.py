"""Sweep the power-mean exponent of the global scoring rule.

Chains with stochastic sampling at a 99.9% pruning rate, one row per 1/alpha
in {1, 1.5, 2.5, 7, 10, 20, 50}.
"""

import argparse
import sys

sys.path.insert(0, "src")

from tcprune.harness import ExperimentConfig, run_alpha_sweep

INV_ALPHAS = (1.0, 1.5, 2.5, 7.0, 10.0, 20.0, 50.0)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/alpha_sweep")
    parser.add_argument("--rate", type=float, default=0.999)
    parser.add_argument("--seeds", default="0,1,2")
    parser.add_argument("--epochs", type=int, default=300)
    args = parser.parse_args()

    cfg = ExperimentConfig(
        rates=(args.rate,),
        alphas=tuple(1.0 / x for x in INV_ALPHAS),
        seeds=tuple(int(s) for s in args.seeds.split(",")),
        epochs=args.epochs,
        output=args.out,
    )
    rows = run_alpha_sweep(cfg)
    for row in rows:
        acc = "NA" if row.accuracy_mean is None else f"{row.accuracy_mean:.4f}"
        print(f"1/alpha={1.0 / row.alpha:<5g} kept={row.kept_params} acc={acc}")
    print(f"artifacts in {args.out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
