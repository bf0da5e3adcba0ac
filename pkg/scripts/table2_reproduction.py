"""Train on the 5-class oscillator corpus and print the recognition distance matrix.

    python3 scripts/table2_reproduction.py --epochs 2000 --hidden 100 --seed 7
"""

import argparse
import time

import numpy as np

from rnnpb.evaluate import distance_matrix, matrix_to_csv, own_closer_than_mean, regen_error_table
from rnnpb.learning import TrainerConfig, train
from rnnpb.network import NetworkTopology
from rnnpb.recognition import RecognitionConfig
from rnnpb.seqdata import SynthSpec, apply_normalizer, fit_normalizer, synth_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--classes", type=int, default=5)
    ap.add_argument("--seed", type=int, default=7, help="corpus seed")
    ap.add_argument("--init-seed", type=int, default=0)
    ap.add_argument("--epochs", type=int, default=2000)
    ap.add_argument("--hidden", type=int, default=100)
    ap.add_argument("--published-rates", action="store_true", help="use the default (published) rates")
    args = ap.parse_args()

    raw = synth_corpus(SynthSpec(classes=args.classes, dim=9, length=200, seed=args.seed))
    data = apply_normalizer(raw, fit_normalizer(raw))
    cfg = (TrainerConfig(epochs=args.epochs, seed=args.init_seed) if args.published_rates
           else TrainerConfig.desk(epochs=args.epochs, seed=args.init_seed))
    t0 = time.perf_counter()
    snap, report = train(data, NetworkTopology(9, args.hidden, 2), cfg)
    print(f"trained {report.epochs_run} epochs in {time.perf_counter() - t0:.1f} s, final mse {report.final_mse:.3e}")
    for label in snap.labels:
        print(f"  {label}: PB activation {np.round(snap.pb_table[label].activation(), 4)}")

    matrix = distance_matrix(snap, data, RecognitionConfig())
    print("\ndistance matrix (rows trained, columns recognized)")
    print(matrix_to_csv(matrix.labels, matrix.matrix), end="")
    print(f"diagonal-minimal rows: {matrix.diagonal_min_rows}/{len(matrix.labels)}")
    print(f"own PB closer than mean of others: {own_closer_than_mean(matrix.matrix)}/{len(matrix.labels)}")

    regen = regen_error_table(snap, data, 50)
    print("\nclosed-loop 50-step MSE / final training MSE")
    for label, mse in regen.items():
        print(f"  {label}: {mse:.3e} ({mse / report.final_mse:.1f}x)")


if __name__ == "__main__":
    main()
