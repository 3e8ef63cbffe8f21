"""Run the desk-scale pruning ablation grid and write the result tables.

Trains one baseline per seed on the synthetic skeleton task, prunes it under
every (rate, variant) combination, fine-tunes the survivors, and emits a CSV
with kept counts, consistency percentages, and accuracies.
"""

import argparse
import sys

sys.path.insert(0, "src")

from tcprune.harness import ExperimentConfig, run_ablation


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/ablation")
    parser.add_argument("--rates", default="0,0.5,0.75,0.9,0.99,0.999")
    parser.add_argument("--seeds", default="0,1,2")
    parser.add_argument("--epochs", type=int, default=300)
    parser.add_argument("--quick", action="store_true", help="tiny run for a smoke check")
    args = parser.parse_args()

    cfg = ExperimentConfig(
        rates=tuple(float(r) for r in args.rates.split(",")),
        seeds=tuple(int(s) for s in args.seeds.split(",")),
        epochs=30 if args.quick else args.epochs,
        output=args.out,
    )
    rows = run_ablation(cfg)
    for row in rows:
        ac = "NA" if row.ac_percentage is None else f"{row.ac_percentage:6.2f}"
        acc = "NA" if row.accuracy_mean is None else f"{row.accuracy_mean:.4f}"
        print(
            f"rate={row.rate:<6g} tc={int(row.tc)} stoch={int(row.stochastic)} "
            f"kept={row.kept_params} ac%={ac} acc={acc}"
        )
    print(f"artifacts in {args.out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
