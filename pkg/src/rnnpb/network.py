"""RNNPB topology, parameters, forward passes and model files.

Wiring (Elman style, PB injected into the hidden layer)::

    h_t = tanh(W_in x_t + W_pb sigmoid(rho) + W_ctx c_t + b_h)
    y_t = sigmoid(W_out h_t + b_out)
    c_{t+1} = h_t

``y_t`` is the one-step prediction of ``x_{t+1}``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .defaults import PUBLISHED_DEFAULTS
from .errors import DimensionMismatchError, ModelFormatError, ModelVersionError, NumericError
from .seqdata import NormStats, Sequence

FORMAT_NAME = "rnnpb-model"
FORMAT_VERSION = 1

WEIGHT_NAMES = ("W_in", "W_pb", "W_ctx", "b_h", "W_out", "b_out")


def sigmoid(x):
    # tanh form is overflow-free for large |x|
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=float)))


def logit(p):
    p = np.asarray(p, dtype=float)
    return np.log(p) - np.log1p(-p)


@dataclass(frozen=True)
class NetworkTopology:
    input_dim: int
    hidden_dim: int = PUBLISHED_DEFAULTS["hidden_dim"]
    pb_dim: int = PUBLISHED_DEFAULTS["pb_dim"]

    def __post_init__(self):
        for name in ("input_dim", "hidden_dim", "pb_dim"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")

    @property
    def context_dim(self) -> int:
        return self.hidden_dim

    def shapes(self) -> dict:
        D, H, P = self.input_dim, self.hidden_dim, self.pb_dim
        return {
            "W_in": (H, D),
            "W_pb": (H, P),
            "W_ctx": (H, H),
            "b_h": (H,),
            "W_out": (D, H),
            "b_out": (D,),
        }

    @property
    def n_params(self) -> int:
        return sum(math.prod(s) for s in self.shapes().values())


@dataclass
class WeightMatrices:
    """Network parameters. Also used as a container for any per-weight quantity
    (gradients, learning rates) since those mirror the same shapes."""

    W_in: np.ndarray
    W_pb: np.ndarray
    W_ctx: np.ndarray
    b_h: np.ndarray
    W_out: np.ndarray
    b_out: np.ndarray

    @classmethod
    def zeros(cls, topology: NetworkTopology) -> "WeightMatrices":
        return cls(**{k: np.zeros(s) for k, s in topology.shapes().items()})

    @classmethod
    def full(cls, topology: NetworkTopology, value: float) -> "WeightMatrices":
        return cls(**{k: np.full(s, float(value)) for k, s in topology.shapes().items()})

    @property
    def topology(self) -> NetworkTopology:
        H, D = self.W_in.shape
        return NetworkTopology(input_dim=D, hidden_dim=H, pb_dim=self.W_pb.shape[1])

    def items(self):
        return ((name, getattr(self, name)) for name in WEIGHT_NAMES)

    def map(self, fn, *others) -> "WeightMatrices":
        return WeightMatrices(**{
            name: fn(arr, *(getattr(o, name) for o in others)) for name, arr in self.items()
        })

    def copy(self) -> "WeightMatrices":
        return self.map(np.array)

    def flat(self) -> np.ndarray:
        return np.concatenate([arr.ravel() for _, arr in self.items()])

    @classmethod
    def from_flat(cls, vector, topology: NetworkTopology) -> "WeightMatrices":
        vector = np.asarray(vector, dtype=float)
        out, pos = {}, 0
        for name, shape in topology.shapes().items():
            n = math.prod(shape)
            out[name] = vector[pos:pos + n].reshape(shape).copy()
            pos += n
        if pos != vector.size:
            raise DimensionMismatchError(f"expected {pos} parameters, got {vector.size}")
        return cls(**out)

    def checksum(self) -> str:
        digest = hashlib.sha256()
        for name, arr in self.items():
            digest.update(name.encode())
            digest.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
        return digest.hexdigest()

    def validate(self, topology: NetworkTopology | None = None):
        topology = topology or self.topology
        for name, shape in topology.shapes().items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise DimensionMismatchError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise NumericError(f"{name} contains non-finite entries")

    def equal(self, other: "WeightMatrices") -> bool:
        return all(np.array_equal(a, getattr(other, n)) for n, a in self.items())


@dataclass(frozen=True, eq=False)
class PBState:
    """Parametric bias of one sequence: unbounded internal value ``rho``."""

    rho: np.ndarray

    def __post_init__(self):
        rho = np.array(self.rho, dtype=float).reshape(-1)
        if not np.all(np.isfinite(rho)):
            raise NumericError("PB internal values must be finite")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def zeros(cls, pb_dim: int) -> "PBState":
        return cls(np.zeros(pb_dim))

    @classmethod
    def from_activation(cls, activation) -> "PBState":
        a = np.asarray(activation, dtype=float).reshape(-1)
        if np.any(~(a > 0.0) | ~(a < 1.0)):
            raise ValueError(f"PB activations must lie strictly in (0, 1), got {a.tolist()}")
        return cls(logit(a))

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def activation(self) -> np.ndarray:
        return sigmoid(self.rho)

    def __eq__(self, other):
        return isinstance(other, PBState) and np.array_equal(self.rho, other.rho)

    def __repr__(self):
        return f"PBState(rho={self.rho.tolist()})"


@dataclass(frozen=True, eq=False)
class StepState:
    context: np.ndarray
    last_output: np.ndarray | None = None

    @classmethod
    def initial(cls, topology: NetworkTopology) -> "StepState":
        return cls(np.zeros(topology.context_dim), np.zeros(topology.input_dim))


@dataclass(frozen=True, eq=False)
class StepCache:
    x: np.ndarray
    pb_act: np.ndarray
    context: np.ndarray
    hidden_pre: np.ndarray
    hidden: np.ndarray
    out_pre: np.ndarray
    y: np.ndarray


def init_network(topology: NetworkTopology, seed: int) -> WeightMatrices:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per matrix, zero biases."""
    rng = np.random.default_rng(seed)
    weights = WeightMatrices.zeros(topology)
    for name in ("W_in", "W_pb", "W_ctx", "W_out"):
        shape = topology.shapes()[name]
        r = 1.0 / math.sqrt(shape[1])
        setattr(weights, name, rng.uniform(-r, r, size=shape))
    return weights


def _check_finite(arr, what):
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"non-finite {what}")


def forward_step(weights: WeightMatrices, x_t, pb: PBState, state: StepState):
    x_t = np.asarray(x_t, dtype=float)
    _check_finite(x_t, "input frame")
    if x_t.shape != (weights.W_in.shape[1],):
        raise DimensionMismatchError(f"input frame has shape {x_t.shape}, expected ({weights.W_in.shape[1]},)")
    if pb.dim != weights.W_pb.shape[1]:
        raise DimensionMismatchError(f"PB dimension {pb.dim} != network PB dimension {weights.W_pb.shape[1]}")
    s = pb.activation()
    a = weights.W_in @ x_t + weights.W_pb @ s + weights.W_ctx @ state.context + weights.b_h
    h = np.tanh(a)
    z = weights.W_out @ h + weights.b_out
    y = sigmoid(z)
    cache = StepCache(x_t, s, state.context, a, h, z, y)
    return y, StepState(h, y), cache


def forward_sequence(weights, seq, pb: PBState, mode: str = "open", init: StepState | None = None):
    """Run the network over a sequence.

    ``mode="open"`` feeds the recorded frames (teacher forcing), ``"closed"``
    feeds frame 0 and then the network's own predictions. Returns
    ``(predictions (T-1, D), final_state, caches)``.
    """
    values = seq.values if isinstance(seq, Sequence) else np.asarray(seq, dtype=float)
    if values.ndim != 2 or values.shape[0] < 2:
        raise DimensionMismatchError("forward_sequence needs a (T >= 2, D) array")
    if mode not in ("open", "closed", "open-loop", "closed-loop"):
        raise ValueError(f"unknown mode {mode!r}")
    closed = mode.startswith("closed")
    state = init if init is not None else StepState.initial(weights.topology)
    preds, caches = [], []
    x = values[0]
    for t in range(values.shape[0] - 1):
        y, state, cache = forward_step(weights, x, pb, state)
        preds.append(y)
        caches.append(cache)
        x = y if closed else values[t + 1]
    return np.array(preds), state, caches


def forward_batch(weights: WeightMatrices, X: np.ndarray, S: np.ndarray, context0=None):
    """Teacher-forced pass over a batch of equal-length sequences.

    X has shape (B, T, D) and S (B, P) holds PB activations. Returns hidden
    states ``H`` of shape (B, T, n_h), where ``H[:, 0]`` is the initial
    context, and predictions ``Y`` of shape (B, T-1, D).
    """
    B, T, _ = X.shape
    Hn = weights.W_in.shape[0]
    H = np.empty((B, T, Hn))
    H[:, 0] = 0.0 if context0 is None else context0
    # input and PB drives do not depend on the recurrence; compute them in one shot
    drive = X[:, :-1] @ weights.W_in.T + (S @ weights.W_pb.T + weights.b_h)[:, None, :]
    W_ctx_T = weights.W_ctx.T
    for t in range(T - 1):
        H[:, t + 1] = np.tanh(drive[:, t] + H[:, t] @ W_ctx_T)
    Y = sigmoid(H[:, 1:] @ weights.W_out.T + weights.b_out)
    return H, Y


# --------------------------------------------------------------------------
# Model snapshots
# --------------------------------------------------------------------------

@dataclass
class ModelSnapshot:
    topology: NetworkTopology
    weights: WeightMatrices
    pb_table: dict = field(default_factory=dict)       # label -> PBState
    normalization: NormStats | None = None
    seed_frames: dict = field(default_factory=dict)    # label -> normalized first frame
    metadata: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        self.weights.validate(self.topology)
        for label, pb in self.pb_table.items():
            if pb.dim != self.topology.pb_dim:
                raise DimensionMismatchError(f"PB for {label!r} has dimension {pb.dim}, expected {self.topology.pb_dim}")
        for label, frame in self.seed_frames.items():
            if np.shape(frame) != (self.topology.input_dim,):
                raise DimensionMismatchError(f"seed frame for {label!r} has the wrong dimension")
        if self.normalization is not None and self.normalization.dim != self.topology.input_dim:
            raise DimensionMismatchError("normalization dimension does not match the network input")

    @property
    def labels(self) -> list[str]:
        return list(self.pb_table)


def _encode_array(arr: np.ndarray) -> dict:
    arr = np.asarray(arr, dtype=float)
    return {"shape": list(arr.shape), "data": [float(v) for v in arr.ravel()]}


def _decode_array(obj, name) -> np.ndarray:
    try:
        shape = tuple(int(s) for s in obj["shape"])
        data = np.array(obj["data"], dtype=float)
        return data.reshape(shape)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"corrupt array {name!r}: {exc}") from exc


def snapshot_to_dict(snapshot: ModelSnapshot) -> dict:
    norm = snapshot.normalization
    return {
        "format": FORMAT_NAME,
        "format_version": snapshot.format_version,
        "topology": {
            "input_dim": snapshot.topology.input_dim,
            "hidden_dim": snapshot.topology.hidden_dim,
            "pb_dim": snapshot.topology.pb_dim,
        },
        "normalization": None if norm is None else {
            "min": [float(v) for v in norm.min],
            "max": [float(v) for v in norm.max],
            "target_low": norm.target_low,
            "target_high": norm.target_high,
        },
        "weights": {name: _encode_array(arr) for name, arr in snapshot.weights.items()},
        "pb_table": [
            {
                "label": label,
                "rho": [float(v) for v in pb.rho],
                "activation": [float(v) for v in pb.activation()],
                "seed_frame": (
                    [float(v) for v in snapshot.seed_frames[label]] if label in snapshot.seed_frames else None
                ),
            }
            for label, pb in snapshot.pb_table.items()
        ],
        "metadata": snapshot.metadata,
    }


def snapshot_from_dict(doc: dict) -> ModelSnapshot:
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise ModelFormatError("not an rnnpb model document")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelVersionError(f"unsupported format_version {version!r} (this build reads {FORMAT_VERSION})")
    try:
        topo = NetworkTopology(**doc["topology"])
        weights = WeightMatrices(**{n: _decode_array(doc["weights"][n], n) for n in WEIGHT_NAMES})
        norm_doc = doc.get("normalization")
        norm = None if norm_doc is None else NormStats(
            np.array(norm_doc["min"]), np.array(norm_doc["max"]),
            float(norm_doc["target_low"]), float(norm_doc["target_high"]),
        )
        pb_table, seed_frames = {}, {}
        for row in doc["pb_table"]:
            label = str(row["label"])
            if label in pb_table:
                raise ModelFormatError(f"duplicate PB label {label!r}")
            pb_table[label] = PBState(np.array(row["rho"], dtype=float))
            if row.get("seed_frame") is not None:
                seed_frames[label] = np.array(row["seed_frame"], dtype=float)
        metadata = doc.get("metadata") or {}
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(f"corrupt model document: {exc!r}") from exc
    try:
        return ModelSnapshot(topo, weights, pb_table, norm, seed_frames, metadata, version)
    except (DimensionMismatchError, NumericError) as exc:
        raise ModelFormatError(f"inconsistent model document: {exc}") from exc


def save_model(snapshot: ModelSnapshot, path) -> Path:
    path = Path(path)
    # json writes floats with repr(), which round-trips float64 exactly
    path.write_text(json.dumps(snapshot_to_dict(snapshot), indent=1) + "\n")
    return path


def load_model(path) -> ModelSnapshot:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ModelFormatError(f"{path}: cannot read model ({exc.strerror or exc})") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: corrupt model file ({exc.msg} at line {exc.lineno})") from exc
    return snapshot_from_dict(doc)
