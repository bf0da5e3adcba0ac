"""Break a closed-loop rollout's error into the start-up transient and the later drift.

Trains the 5-class model, then for each label prints the regeneration MSE over
steps 1-10, 11-50 and 51-200 next to the teacher-forced one-step MSE.

    python3 scripts/regen_transient.py --epochs 2000
"""

import argparse

import numpy as np

from rnnpb.generation import rollout
from rnnpb.learning import TrainerConfig, bptt_gradients, train
from rnnpb.network import NetworkTopology
from rnnpb.seqdata import SynthSpec, apply_normalizer, fit_normalizer, synth_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--epochs", type=int, default=2000)
    ap.add_argument("--hidden", type=int, default=100)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    raw = synth_corpus(SynthSpec(classes=5, dim=9, length=200, seed=args.seed))
    data = apply_normalizer(raw, fit_normalizer(raw))
    snap, report = train(data, NetworkTopology(9, args.hidden, 2), TrainerConfig.desk(epochs=args.epochs, seed=0))
    print(f"final training mse {report.final_mse:.3e}")
    print("label,one_step,closed_1_10,closed_11_50,closed_51_199")
    for seq in data:
        _, _, one_step = bptt_gradients(snap.weights, seq.values, report.final_pb[seq.id])
        gen = rollout(snap, snap.pb_table[seq.label], seq.values[0], seq.length - 1)
        err = np.mean((gen - seq.values) ** 2, axis=1)
        print(f"{seq.label},{one_step:.2e},{err[1:11].mean():.2e},{err[11:51].mean():.2e},{err[51:].mean():.2e}")


if __name__ == "__main__":
    main()
