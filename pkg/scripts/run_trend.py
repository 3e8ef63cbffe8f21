"""Head-to-head at extreme pruning rates: consistent chains vs plain magnitude.

For each seed: train a baseline, prune at 99% and 99.9% with both methods,
fine-tune the survivors, and report test accuracy. Plain magnitude masks
whose consistent core is empty are marked disconnected.
"""

import argparse
import dataclasses
import sys

import numpy as np

sys.path.insert(0, "src")

from tcprune.gcn import TrainConfig, as_layered, evaluate, init_model, train
from tcprune.harness import ExperimentConfig, _load_split, _shape_for
from tcprune.pruner import PruneSpec, standard_mp, tc_mp
from tcprune.topology import trim_to_consistent


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", default="0,1,2,3,4")
    parser.add_argument("--epochs", type=int, default=300)
    parser.add_argument("--rates", default="0.99,0.999")
    args = parser.parse_args()

    cfg = ExperimentConfig(rates=(0.99,), epochs=args.epochs)
    train_set, test_set = _load_split(cfg)
    shape = _shape_for(cfg, train_set)
    base_cfg = TrainConfig(epochs=cfg.epochs)
    rates = tuple(float(r) for r in args.rates.split(","))
    seeds = tuple(int(s) for s in args.seeds.split(","))

    table = {rate: {"plain": [], "chains": []} for rate in rates}
    for seed in seeds:
        baseline, _ = train(
            init_model(shape, seed, cfg.model.head_scale),
            train_set,
            dataclasses.replace(base_cfg, seed=seed),
        )
        view, _ = as_layered(baseline)
        for rate in rates:
            masks = {
                "plain": standard_mp(view, rate),
                "chains": tc_mp(view, PruneSpec(rate=rate, tc=True, seed=seed)),
            }
            for name, mask in masks.items():
                if trim_to_consistent(mask).kept_count == 0:
                    table[rate][name].append(None)
                    continue
                tuned, _ = train(
                    baseline,
                    train_set,
                    dataclasses.replace(base_cfg, epochs=cfg.finetune_budget, seed=seed),
                    mask,
                )
                table[rate][name].append(evaluate(tuned, test_set, mask))

    for rate in rates:
        print(f"rate {rate:g}:")
        for name in ("plain", "chains"):
            cells = [
                "disconnected" if a is None else f"{a:.3f}" for a in table[rate][name]
            ]
            avail = [a for a in table[rate][name] if a is not None]
            mean = f"{np.mean(avail):.3f}" if avail else "NA"
            print(f"  {name:7s} per-seed {cells}  mean {mean}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
