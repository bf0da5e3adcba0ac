"""Recognition mode: infer PB values for an observed sequence with frozen weights."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import defaults
from .defaults import PUBLISHED_DEFAULTS
from .errors import DimensionMismatchError, NumericOverflowError, StreamError
from .network import ModelSnapshot, PBState, WeightMatrices, forward_batch, sigmoid
from .seqdata import Sequence


@dataclass(frozen=True)
class RecognitionConfig:
    """``window`` counts prediction steps, so an iteration looks at ``window + 1`` frames."""

    eta_r: float = PUBLISHED_DEFAULTS["eta_r"]
    window: int = defaults.DEFAULT_WINDOW
    stop_threshold: float = defaults.DEFAULT_STOP_THRESHOLD
    stop_patience: int = defaults.DEFAULT_STOP_PATIENCE
    max_iters: int = defaults.DEFAULT_MAX_ITERS
    iters_per_frame: int = 1

    def __post_init__(self):
        if self.eta_r < 0:
            raise ValueError("eta_r must be >= 0")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.stop_patience < 1:
            raise ValueError("stop_patience must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.iters_per_frame < 1:
            raise ValueError("iters_per_frame must be >= 1")
        if not self.stop_threshold > 0:
            raise ValueError("stop_threshold must be positive")

    @classmethod
    def case2(cls, **overrides) -> "RecognitionConfig":
        """Loose stopping rule of the original real-time demo (0.1 over 100 updates)."""
        return cls(**{"stop_threshold": 0.1, "stop_patience": 100, **overrides})


@dataclass
class RecognitionResult:
    pb: PBState
    iterations: int
    converged: bool
    pb_trajectory: np.ndarray            # (iterations, pb_dim) activations
    nearest_label: str | None
    distance_to_labels: dict = field(default_factory=dict)


def pb_distance(p, q) -> float:
    """Euclidean distance between two PB activation vectors."""
    a = p.activation() if isinstance(p, PBState) else np.asarray(p, dtype=float)
    b = q.activation() if isinstance(q, PBState) else np.asarray(q, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"PB dimensions differ: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def nearest(model: ModelSnapshot, pb: PBState):
    """Closest stored label (ties go to the lexicographically smallest) and all distances."""
    dists = {label: pb_distance(stored, pb) for label, stored in model.pb_table.items()}
    if not dists:
        return None, dists
    best = min(dists, key=lambda lab: (dists[lab], lab))
    return best, dists


def pb_descent(weights: WeightMatrices, frames: np.ndarray, rho: np.ndarray):
    """Error back-propagated to the PB values only, over ``frames`` (T, D).

    Starts from zero context. Returns the per-step descent signal (T-1, P)
    and the cost.
    """
    X = frames[None]
    S = sigmoid(rho)[None]
    H, Y = forward_batch(weights, X, S)
    err = Y - X[:, 1:]
    dH_out = (err * Y * (1.0 - Y)) @ weights.W_out
    T1 = dH_out.shape[1]
    dA = np.empty_like(dH_out)
    carry = np.zeros((1, H.shape[2]))
    for t in range(T1 - 1, -1, -1):
        h = H[:, t + 1]
        dA[:, t] = (dH_out[:, t] + carry) * (1.0 - h * h)
        carry = dA[:, t] @ weights.W_ctx
    s = S[0]
    delta = -(dA[0] @ weights.W_pb) * (s * (1.0 - s))
    return delta, 0.5 * float(np.sum(err * err))


def _check(model: ModelSnapshot, values: np.ndarray):
    if values.ndim != 2 or values.shape[1] != model.topology.input_dim:
        raise DimensionMismatchError(
            f"sequence dimension {values.shape[-1]} != model input dimension {model.topology.input_dim}"
        )


def recognize(model: ModelSnapshot, seq, config: RecognitionConfig | None = None) -> RecognitionResult:
    """Infer the PB vector that best explains the last ``window`` steps of ``seq``.

    ``seq`` must already be normalized with the model's statistics. PB starts
    at zero; each iteration is a teacher-forced pass over the window (zero
    initial context) followed by ``rho += eta_r * sum(delta)``. Stops once the
    last ``stop_patience`` updates all moved the activations by less than
    ``stop_threshold`` in max-norm and the activations stayed within a
    ``stop_threshold`` band over that stretch, or after ``max_iters``.
    """
    config = config or RecognitionConfig()
    values = seq.values if isinstance(seq, Sequence) else np.asarray(seq, dtype=float)
    _check(model, values)
    window = min(config.window, values.shape[0] - 1)
    frames = np.ascontiguousarray(values[-(window + 1):])
    weights = model.weights
    rho = np.zeros(model.topology.pb_dim)
    recent = deque([sigmoid(rho)], maxlen=config.stop_patience + 1)
    trajectory = []
    converged = False
    for it in range(config.max_iters):
        delta, _ = pb_descent(weights, frames, rho)
        rho = rho + config.eta_r * delta.sum(axis=0)
        if not np.all(np.isfinite(rho)):
            raise NumericOverflowError(f"PB diverged at recognition iteration {it}")
        act = sigmoid(rho)
        trajectory.append(act)
        recent.append(act)
        if len(recent) == recent.maxlen:
            band = np.ptp(np.array(recent), axis=0)
            if np.max(band) < config.stop_threshold:
                converged = True
                break
    pb = PBState(rho)
    label, dists = nearest(model, pb)
    return RecognitionResult(pb, len(trajectory), converged, np.array(trajectory), label, dists)


def recognize_stream(model: ModelSnapshot, feed, config: RecognitionConfig | None = None):
    """Online recognition over an iterable of normalized D-dimensional frames.

    Keeps the last ``window + 1`` frames; from frame index ``window`` on,
    every new frame triggers ``iters_per_frame`` PB updates (warm-started from
    the previous frame's PB) and yields ``(t, PBState, nearest_label)``.
    """
    config = config or RecognitionConfig()
    D = model.topology.input_dim
    buf = deque(maxlen=config.window + 1)
    rho = np.zeros(model.topology.pb_dim)
    for t, frame in enumerate(feed):
        frame = np.asarray(frame, dtype=float).reshape(-1)
        if frame.shape != (D,):
            raise StreamError(t, f"expected {D} values, got {frame.shape[0]}")
        if not np.all(np.isfinite(frame)):
            raise StreamError(t, "non-finite value")
        buf.append(frame)
        if len(buf) < buf.maxlen:
            continue
        frames = np.array(buf)
        for _ in range(config.iters_per_frame):
            delta, _ = pb_descent(model.weights, frames, rho)
            rho = rho + config.eta_r * delta.sum(axis=0)
        if not np.all(np.isfinite(rho)):
            raise NumericOverflowError(f"PB diverged at frame {t}")
        pb = PBState(rho)
        label, _ = nearest(model, pb)
        yield t, pb, label
