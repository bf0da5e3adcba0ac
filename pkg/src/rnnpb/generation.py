"""Generation mode: closed-loop rollouts with externally set PB values."""

from __future__ import annotations

import numpy as np

from .errors import NumericError, UnknownLabelError
from .network import ModelSnapshot, PBState, StepState, forward_step
from .seqdata import Sequence


def rollout(model: ModelSnapshot, pb: PBState, seed_frame, steps: int) -> np.ndarray:
    """Closed-loop rollout in normalized space; returns (steps + 1, D) including the seed."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    seed_frame = np.asarray(seed_frame, dtype=float).reshape(-1)
    state = StepState.initial(model.topology)
    out = np.empty((steps + 1, model.topology.input_dim))
    out[0] = seed_frame
    x = seed_frame
    for t in range(steps):
        x, state, _ = forward_step(model.weights, x, pb, state)
        out[t + 1] = x
    if not np.all(np.isfinite(out)):
        raise NumericError("generated frames are not finite")
    return out


def generate(model: ModelSnapshot, pb_activation, seed_frame, steps: int,
             label: str = "gen:custom", denormalize: bool = True) -> Sequence:
    """Generate ``steps`` frames after ``seed_frame`` (normalized) with PB fixed at ``pb_activation``."""
    pb = PBState.from_activation(pb_activation)
    if pb.dim != model.topology.pb_dim:
        raise ValueError(f"expected {model.topology.pb_dim} PB values, got {pb.dim}")
    values = rollout(model, pb, seed_frame, steps)
    if denormalize and model.normalization is not None:
        values = model.normalization.inverse(values)
    return Sequence(label, label, values)


def _lookup(model: ModelSnapshot, label: str) -> PBState:
    if label not in model.pb_table:
        raise UnknownLabelError(label, model.pb_table)
    return model.pb_table[label]


def generate_by_label(model: ModelSnapshot, label: str, steps: int, denormalize: bool = True) -> Sequence:
    pb = _lookup(model, label)
    if label not in model.seed_frames:
        raise UnknownLabelError(label, model.seed_frames)
    return generate(model, pb.activation(), model.seed_frames[label], steps,
                    label=f"gen:{label}", denormalize=denormalize)


def interpolate_pb(model: ModelSnapshot, label_a: str, label_b: str, alpha: float) -> np.ndarray:
    """Point ``(1 - alpha) * PB_a + alpha * PB_b`` in activation space."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    a = _lookup(model, label_a).activation()
    b = _lookup(model, label_b).activation()
    if alpha == 0.0:
        return a.copy()
    if alpha == 1.0:
        return b.copy()
    point = (1.0 - alpha) * a + alpha * b
    # rounding can step a hair outside the segment
    return np.clip(point, np.minimum(a, b), np.maximum(a, b))
