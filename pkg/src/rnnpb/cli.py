"""Command-line interface: ``rnnpb synth|train|recognize|stream|generate|eval``.

Exit status: 0 success, 2 bad arguments or config, 3 data/format errors,
4 numeric failures. Failures print one ``error code=<n> kind=<Class> msg=<json string>``
line on standard error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, build, check_keys, read_config
from .errors import DataFormatError, NumericError
from .evaluate import distance_matrix, emit_report, regen_error_table
from .generation import generate, generate_by_label, interpolate_pb
from .learning import TrainerConfig, train
from .network import NetworkTopology, load_model, save_model
from .recognition import RecognitionConfig, recognize, recognize_stream
from .seqdata import (
    SequenceSet,
    SynthSpec,
    add_noise,
    apply_normalizer,
    fit_normalizer,
    load_sequences,
    format_sequence,
    save_sequences,
    synth_corpus,
)

log = logging.getLogger("rnnpb")

TOPOLOGY_KEYS = ("hidden_dim", "pb_dim")
NORM_KEYS = ("target_low", "target_high")


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}")


def _file_config(args) -> dict:
    if getattr(args, "config", None) is None:
        return {}
    values = read_config(args.config)
    check_keys(values, TrainerConfig, RecognitionConfig, extra=TOPOLOGY_KEYS + NORM_KEYS)
    return values


def _recognition_config(args, values) -> RecognitionConfig:
    return build(RecognitionConfig, values, eta_r=args.eta_r, window=args.window,
                 stop_threshold=args.stop_threshold, stop_patience=args.stop_patience,
                 max_iters=args.max_iters, iters_per_frame=getattr(args, "iters_per_frame", None))


def _normalized(model, seqset: SequenceSet) -> SequenceSet:
    if model.normalization is None:
        return seqset
    return apply_normalizer(seqset, model.normalization)


def _out(args, text: str):
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_synth(args) -> int:
    spec = SynthSpec(classes=args.classes, dim=args.dims, length=args.len,
                     seed=0 if args.seed is None else args.seed, period=args.period or float(args.len))
    corpus = synth_corpus(spec)
    out = Path(args.out or "corpus")
    paths = save_sequences(corpus, out)
    log.info("wrote %d sequences to %s", len(paths), out)
    return 0


def cmd_train(args) -> int:
    values = _file_config(args)
    data = load_sequences(args.data)
    hidden = args.hidden if args.hidden is not None else int(values.get("hidden_dim", NetworkTopology.__dataclass_fields__["hidden_dim"].default))
    pb_dim = args.pb if args.pb is not None else int(values.get("pb_dim", NetworkTopology.__dataclass_fields__["pb_dim"].default))
    topology = NetworkTopology(input_dim=data.dim, hidden_dim=hidden, pb_dim=pb_dim)
    config = build(TrainerConfig, values, eta_init=args.eta_init, eta_min=args.eta_min, eta_max=args.eta_max,
                   xi_plus=args.xi_plus, xi_minus=args.xi_minus, M_gamma=args.m_gamma, epochs=args.epochs,
                   convergence_mse=args.convergence_mse, seed=args.seed, input_noise=args.input_noise,
                   log_every=args.log_every)
    low = args.target_low if args.target_low is not None else float(values.get("target_low", 0.1))
    high = args.target_high if args.target_high is not None else float(values.get("target_high", 0.9))
    stats = fit_normalizer(data, low, high)
    snapshot, report = train(apply_normalizer(data, stats), topology, config)
    snapshot.metadata["topology"] = dataclasses.asdict(topology)
    snapshot.metadata["normalization_band"] = [low, high]
    snapshot.metadata["data"] = [s.id for s in data]
    out = Path(args.out or "model.rnnpb")
    save_model(snapshot, out)
    if args.history:
        lines = ["epoch,mean_mse," + ",".join(report.sequence_ids)]
        for e, mse in enumerate(report.mse_history):
            lines.append(f"{e},{float(np.mean(mse))!r}," + ",".join(repr(float(v)) for v in mse))
        Path(args.history).write_text("\n".join(lines) + "\n")
    log.info("trained %d epochs, final mse %.3e -> %s", report.epochs_run, report.final_mse, out)
    return 0


def cmd_recognize(args) -> int:
    values = _file_config(args)
    config = _recognition_config(args, values)
    model = load_model(args.model)
    seqs = _normalized(model, load_sequences(args.seq))
    records = []
    for seq in seqs:
        result = recognize(model, seq, config)
        records.append({
            "id": seq.id,
            "label": seq.label,
            "nearest_label": result.nearest_label,
            "pb_activation": [float(v) for v in result.pb.activation()],
            "pb_rho": [float(v) for v in result.pb.rho],
            "iterations": result.iterations,
            "converged": result.converged,
            "distance_to_labels": result.distance_to_labels,
            "config": dataclasses.asdict(config),
        })
    _out(args, "".join(json.dumps(r) + "\n" for r in records))
    return 0


def _read_frames(stream):
    seen_row = False
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            frame = [float(v) for v in line.split(",")]
        except ValueError:
            if not seen_row:
                # column header
                seen_row = True
                continue
            raise DataFormatError(f"line {lineno}: non-numeric frame {line!r}")
        seen_row = True
        yield frame


def cmd_stream(args) -> int:
    values = _file_config(args)
    config = _recognition_config(args, values)
    model = load_model(args.model)
    source = sys.stdin if args.input in (None, "-") else open(args.input)
    sink = sys.stdout if args.out in (None, "-") else open(args.out, "w")
    norm = model.normalization
    try:
        frames = _read_frames(source)
        if norm is not None:
            frames = (norm.transform(np.asarray(f)) if len(f) == norm.dim else f for f in frames)
        for t, pb, label in recognize_stream(model, frames, config):
            act = pb.activation()
            dist = float(np.sqrt(np.sum((model.pb_table[label].activation() - act) ** 2)))
            sink.write(",".join([str(t)] + [repr(float(v)) for v in act] + [label, repr(dist)]) + "\n")
            sink.flush()
    finally:
        if source is not sys.stdin:
            source.close()
        if sink is not sys.stdout:
            sink.close()
    return 0


def cmd_generate(args) -> int:
    model = load_model(args.model)
    chosen = sum(x is not None for x in (args.label, args.pb, args.between))
    if chosen != 1:
        raise UsageError("give exactly one of --label, --pb, --between")
    if args.label is not None:
        seq = generate_by_label(model, args.label, args.steps)
        seq = seq.with_values(seq.values, id=f"gen:{args.label}")
    else:
        if args.pb is not None:
            activation = _floats(args.pb)
            desc = "pb=" + ";".join(repr(v) for v in activation)
        else:
            pair = args.between.split(",")
            if len(pair) != 2:
                raise UsageError("--between needs two labels separated by a comma")
            alpha = 0.5 if args.alpha is None else args.alpha
            activation = interpolate_pb(model, pair[0], pair[1], alpha)
            desc = f"{pair[0]}~{pair[1]}@{alpha!r}"
        seed_label = args.seed_label or model.labels[0]
        if seed_label not in model.seed_frames:
            raise UsageError(f"no stored seed frame for label {seed_label!r}")
        seq = generate(model, activation, model.seed_frames[seed_label], args.steps, label=f"gen:{desc}")
    _out(args, format_sequence(seq))
    return 0


def cmd_eval(args) -> int:
    values = _file_config(args)
    config = _recognition_config(args, values)
    model_path = Path(args.model)
    model = load_model(model_path)
    data = load_sequences(args.data)
    if args.noise:
        data = add_noise(data, args.noise, 0 if args.seed is None else args.seed)
    data = _normalized(model, data)
    report = distance_matrix(model, data, config)
    report.metadata = {"recognition": dataclasses.asdict(config), "noise": args.noise or 0.0,
                       "model": model_path.name}
    regen = regen_error_table(model, data, args.steps)
    out = Path(args.out or model_path.parent)
    out.mkdir(parents=True, exist_ok=True)
    stem = model_path.stem
    ext = "csv" if args.format == "csv" else "jsonl"
    emit_report(report, out / f"{stem}_distance.{ext}", args.format)
    emit_report(regen, out / f"{stem}_regen.{ext}", args.format)
    log.info("diagonal-minimal rows: %d of %d", report.diagonal_min_rows, len(report.labels))
    return 0


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _common(p):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--quiet", action="store_true")


def _recognition_flags(p):
    p.add_argument("--eta-r", type=float)
    p.add_argument("--window", type=int)
    p.add_argument("--stop-threshold", type=float)
    p.add_argument("--stop-patience", type=int)
    p.add_argument("--max-iters", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rnnpb", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic oscillator corpus")
    _common(p)
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--dims", type=int, default=9)
    p.add_argument("--len", type=int, default=200)
    p.add_argument("--period", type=float)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a model on a corpus")
    _common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--epochs", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--pb", type=int)
    p.add_argument("--eta-init", type=float)
    p.add_argument("--eta-min", type=float)
    p.add_argument("--eta-max", type=float)
    p.add_argument("--xi-plus", type=float)
    p.add_argument("--xi-minus", type=float)
    p.add_argument("--m-gamma", type=float)
    p.add_argument("--convergence-mse", type=float)
    p.add_argument("--input-noise", type=float)
    p.add_argument("--target-low", type=float)
    p.add_argument("--target-high", type=float)
    p.add_argument("--log-every", type=int)
    p.add_argument("--history", help="write the per-epoch MSE trace as CSV")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("recognize", help="infer PB values for sequence files")
    _common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--seq", required=True)
    _recognition_flags(p)
    p.set_defaults(func=cmd_recognize)

    p = sub.add_parser("stream", help="online recognition of frames from stdin or a file")
    _common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--input")
    p.add_argument("--iters-per-frame", type=int)
    _recognition_flags(p)
    p.set_defaults(func=cmd_stream)

    p = sub.add_parser("generate", help="closed-loop generation")
    _common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--label")
    p.add_argument("--pb", help="comma-separated PB activations")
    p.add_argument("--between", help="two labels, comma-separated")
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed-label", help="label whose first frame seeds --pb/--between rollouts")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("eval", help="distance matrix and regeneration errors")
    _common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--noise", type=float, default=0.0, help="std of Gaussian noise added to the test copies")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    _recognition_flags(p)
    p.set_defaults(func=cmd_eval)
    return parser


def _fail(code: int, exc: BaseException) -> int:
    print(f"error code={code} kind={type(exc).__name__} msg={json.dumps(str(exc))}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 1
    except (UsageError, ConfigError) as exc:
        return _fail(2, exc)
    except DataFormatError as exc:
        return _fail(3, exc)
    except (NumericError, FloatingPointError, OverflowError) as exc:
        return _fail(4, exc)
    except ValueError as exc:
        return _fail(2, exc)
    except OSError as exc:
        return _fail(3, exc)


if __name__ == "__main__":
    sys.exit(main())
