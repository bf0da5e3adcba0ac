"""Sweep PB interpolation between two trained classes and report the amplitude of one dimension.

    python3 scripts/interpolation_sweep.py --seeds 0 1 2 3 4 5
"""

import argparse

import numpy as np

from rnnpb.generation import generate, interpolate_pb
from rnnpb.learning import TrainerConfig, train
from rnnpb.network import NetworkTopology
from rnnpb.seqdata import SynthSpec, apply_normalizer, fit_normalizer, synth_corpus

ALPHAS = (0.0, 0.25, 0.5, 0.75, 1.0)


def sweep(seed, hidden, epochs, steps):
    raw = synth_corpus(SynthSpec(classes=2, dim=9, length=200, seed=seed))
    data = apply_normalizer(raw, fit_normalizer(raw))
    snap, _ = train(data, NetworkTopology(9, hidden, 2), TrainerConfig.desk(epochs=epochs, seed=0))
    per_class = np.array([s.values.std(axis=0) for s in data])
    dim = int(np.argmax(np.abs(per_class[0] - per_class[1])))
    a, b = snap.labels
    stats = [float(generate(snap, interpolate_pb(snap, a, b, al), snap.seed_frames[a], steps,
                            denormalize=False).values[1:, dim].std()) for al in ALPHAS]
    return dim, stats


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[2])
    ap.add_argument("--hidden", type=int, default=100)
    ap.add_argument("--epochs", type=int, default=2000)
    ap.add_argument("--steps", type=int, default=200)
    args = ap.parse_args()
    print("seed,dim," + ",".join(f"alpha={a}" for a in ALPHAS) + ",monotone")
    for seed in args.seeds:
        dim, stats = sweep(seed, args.hidden, args.epochs, args.steps)
        d = np.diff(stats)
        mono = bool(np.all(d >= 0) or np.all(d <= 0))
        print(f"{seed},{dim}," + ",".join(f"{s:.4f}" for s in stats) + f",{mono}", flush=True)


if __name__ == "__main__":
    main()
