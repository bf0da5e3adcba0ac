"""Learning mode: BPTT, sign-adaptive per-weight learning rates and self-organizing PB values."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import defaults
from .defaults import PUBLISHED_DEFAULTS
from .errors import DimensionMismatchError, NumericOverflowError
from .network import (
    ModelSnapshot,
    NetworkTopology,
    PBState,
    WeightMatrices,
    forward_batch,
    init_network,
)
from .seqdata import Sequence, SequenceSet

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainerConfig:
    eta_init: float = PUBLISHED_DEFAULTS["eta_init"]
    eta_min: float = PUBLISHED_DEFAULTS["eta_min"]
    eta_max: float = PUBLISHED_DEFAULTS["eta_max"]
    xi_plus: float = PUBLISHED_DEFAULTS["xi_plus"]
    xi_minus: float = PUBLISHED_DEFAULTS["xi_minus"]
    M_gamma: float = PUBLISHED_DEFAULTS["M_gamma"]
    epochs: int = defaults.DEFAULT_EPOCHS
    convergence_mse: float = defaults.DEFAULT_CONVERGENCE_MSE
    seed: int = 0
    input_noise: float = 0.0
    log_every: int = 0

    def __post_init__(self):
        if not 0 < self.eta_min <= self.eta_init <= self.eta_max:
            raise ValueError("need 0 < eta_min <= eta_init <= eta_max")
        if not self.xi_minus < 1 < self.xi_plus:
            raise ValueError("need xi_minus < 1 < xi_plus")
        if self.xi_minus <= 0:
            raise ValueError("xi_minus must be positive")
        if not self.M_gamma > 0:
            raise ValueError("M_gamma must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.input_noise < 0:
            raise ValueError("input_noise must be >= 0")
        if self.convergence_mse < 0:
            raise ValueError("convergence_mse must be >= 0")

    @classmethod
    def desk(cls, **overrides) -> "TrainerConfig":
        """Faster rates for small synthetic corpora; see ``defaults.DESK_TRAINER``."""
        return cls(**{**defaults.DESK_TRAINER, **overrides})


@dataclass
class TrainerState:
    """Per-weight learning rates and the previous epoch's gradient."""

    eta: WeightMatrices
    prev_grad: WeightMatrices
    epoch: int = 0

    @classmethod
    def initial(cls, topology: NetworkTopology, config: TrainerConfig) -> "TrainerState":
        return cls(WeightMatrices.full(topology, config.eta_init), WeightMatrices.zeros(topology), 0)


@dataclass
class TrainReport:
    mse_history: list = field(default_factory=list)   # one array of per-sequence MSE per epoch
    final_pb: dict = field(default_factory=dict)      # sequence id -> PBState
    label_pb: dict = field(default_factory=dict)      # label -> PBState
    eta_stats: dict = field(default_factory=dict)
    epochs_run: int = 0
    sequence_ids: list = field(default_factory=list)

    @property
    def mean_mse(self) -> np.ndarray:
        return np.array([float(np.mean(m)) for m in self.mse_history])

    @property
    def final_mse(self) -> float:
        return float(np.mean(self.mse_history[-1])) if self.mse_history else float("nan")


# --------------------------------------------------------------------------
# Gradients
# --------------------------------------------------------------------------

def bptt_batch(weights: WeightMatrices, X: np.ndarray, rho: np.ndarray, err_steps: int | None = None,
               inputs: np.ndarray | None = None):
    """Full-unroll BPTT over a batch of equal-length sequences, zero initial context.

    X: (B, T, D) normalized frames, rho: (B, P) PB internal values.
    ``err_steps`` restricts the cost to the last ``err_steps`` predictions.
    ``inputs`` (same shape as X) replaces the frames fed to the network while
    X stays the prediction target.

    Returns ``(grad, delta_pb, sq_err)``: the weight gradient summed over the
    batch, the per-step PB descent signal (B, T-1, P) and the per-sequence
    sum of squared errors (B,) over the counted steps.
    """
    B, T, D = X.shape
    S = 0.5 * (1.0 + np.tanh(0.5 * rho))
    U = X if inputs is None else inputs
    H, Y = forward_batch(weights, U, S)
    err = Y - X[:, 1:]
    if err_steps is not None and err_steps < T - 1:
        err = err.copy()
        err[:, : T - 1 - err_steps] = 0.0
    sq_err = 0.5 * np.einsum("btd,btd->b", err, err)

    dZ = err * Y * (1.0 - Y)                        # (B, T-1, D)
    dH_out = dZ @ weights.W_out                     # (B, T-1, n_h)
    dA = np.empty_like(dH_out)
    W_ctx = weights.W_ctx
    carry = np.zeros((B, H.shape[2]))
    for t in range(T - 2, -1, -1):
        h = H[:, t + 1]
        dA[:, t] = (dH_out[:, t] + carry) * (1.0 - h * h)
        carry = dA[:, t] @ W_ctx

    Hf = H[:, 1:].reshape(-1, H.shape[2])
    Hp = H[:, :-1].reshape(-1, H.shape[2])
    dZf = dZ.reshape(-1, D)
    dAf = dA.reshape(-1, dA.shape[2])
    grad = WeightMatrices(
        W_in=dAf.T @ U[:, :-1].reshape(-1, D),
        W_pb=np.einsum("btj,bp->jp", dA, S),
        W_ctx=dAf.T @ Hp,
        b_h=dAf.sum(axis=0),
        W_out=dZf.T @ Hf,
        b_out=dZf.sum(axis=0),
    )
    dS = dA @ weights.W_pb                           # (B, T-1, P)
    delta_pb = -dS * (S * (1.0 - S))[:, None, :]
    return grad, delta_pb, sq_err


def _values(seq) -> np.ndarray:
    return seq.values if isinstance(seq, Sequence) else np.asarray(seq, dtype=float)


def bptt_gradients(weights: WeightMatrices, seq, pb: PBState):
    """Teacher-forced BPTT on one sequence.

    Cost is ``0.5 * sum_t ||y_t - x_{t+1}||^2``. Returns ``(grad_w,
    delta_pb_per_step, mse)`` where ``delta_pb_per_step[t] = -dC/drho`` at
    step ``t`` and ``mse`` is the cost divided by ``(T-1) * D``.
    """
    X = _values(seq)
    if X.shape[1] != weights.W_in.shape[1]:
        raise DimensionMismatchError(f"sequence dimension {X.shape[1]} != network input {weights.W_in.shape[1]}")
    grad, delta_pb, sq_err = bptt_batch(weights, X[None], pb.rho[None])
    T, D = X.shape
    return grad, delta_pb[0], float(sq_err[0]) / ((T - 1) * D)


def cost(weights: WeightMatrices, seq, pb: PBState) -> float:
    """Teacher-forced cost ``C`` for one sequence (no gradients)."""
    X = _values(seq)
    S = pb.activation()[None]
    _, Y = forward_batch(weights, X[None], S)
    err = Y[0] - X[1:]
    return 0.5 * float(np.sum(err * err))


# --------------------------------------------------------------------------
# Update rules
# --------------------------------------------------------------------------

def update_learning_rates(state: TrainerState, grad: WeightMatrices, config: TrainerConfig) -> TrainerState:
    """Grow a weight's rate when its gradient keeps sign across epochs, shrink it on a flip."""

    def rule(eta, prev, g):
        sigma = prev * g
        out = eta.copy()
        up = sigma > 0
        down = sigma < 0
        out[up] = np.minimum(eta[up] * config.xi_plus, config.eta_max)
        out[down] = np.maximum(eta[down] * config.xi_minus, config.eta_min)
        return out

    eta = state.eta.map(rule, state.prev_grad, grad)
    return TrainerState(eta=eta, prev_grad=grad.copy(), epoch=state.epoch + 1)


def apply_weight_update(weights: WeightMatrices, grad: WeightMatrices, state: TrainerState) -> WeightMatrices:
    return weights.map(lambda w, g, eta: w - eta * g, grad, state.eta)


def pb_rates(delta_pb_per_step: np.ndarray, M_gamma: float) -> np.ndarray:
    """Per-unit PB rate: ``M_gamma`` times the mean absolute back-propagated error."""
    return M_gamma * np.mean(np.abs(delta_pb_per_step), axis=0)


def update_pb_learning(pb: PBState, delta_pb_per_step: np.ndarray, M_gamma: float) -> PBState:
    delta = np.asarray(delta_pb_per_step, dtype=float)
    if delta.ndim != 2 or delta.shape[1] != pb.dim:
        raise DimensionMismatchError(f"delta_pb must have shape (steps, {pb.dim}), got {delta.shape}")
    gamma = pb_rates(delta, M_gamma)
    return PBState(pb.rho + gamma * delta.sum(axis=0))


# --------------------------------------------------------------------------
# Training loop
# --------------------------------------------------------------------------

def _groups_by_length(seqset: SequenceSet):
    groups = {}
    for i, s in enumerate(seqset.sequences):
        groups.setdefault(s.length, []).append(i)
    return [(idx, np.stack([seqset.sequences[i].values for i in idx])) for idx in groups.values()]


def label_pb_table(seqset: SequenceSet, pbs: list) -> dict:
    """Per-label PB: the sequence's own value, or the mean activation over a label's sequences."""
    table = {}
    for label in seqset.labels:
        members = [pbs[i] for i, s in enumerate(seqset.sequences) if s.label == label]
        if len(members) == 1:
            table[label] = members[0]
        else:
            table[label] = PBState.from_activation(np.mean([m.activation() for m in members], axis=0))
    return table


def _eta_stats(eta: WeightMatrices) -> dict:
    flat = eta.flat()
    return {"min": float(flat.min()), "max": float(flat.max()), "mean": float(flat.mean())}


def make_snapshot(seqset, topology, weights, pbs, metadata=None) -> ModelSnapshot:
    seed_frames = {}
    for label in seqset.labels:
        seed_frames[label] = np.array(seqset.by_label(label)[0].values[0])
    return ModelSnapshot(
        topology=topology,
        weights=weights,
        pb_table=label_pb_table(seqset, pbs),
        normalization=seqset.normalization,
        seed_frames=seed_frames,
        metadata=dict(metadata or {}),
    )


def train(seqset: SequenceSet, topology: NetworkTopology, config: TrainerConfig | None = None,
          callback=None):
    """Train weights and one PB vector per sequence.

    Each epoch runs teacher-forced BPTT on every sequence, sums the weight
    gradients in corpus order, adapts the per-weight rates and applies a
    single weight update. Each sequence's PB moves by its own accumulated
    error. Stops after ``config.epochs`` or once the mean MSE is at most
    ``config.convergence_mse``.

    Returns ``(snapshot, report)``. A non-finite gradient raises
    :class:`NumericOverflowError` carrying the partial report.
    """
    config = config or TrainerConfig()
    if seqset.dim != topology.input_dim:
        raise DimensionMismatchError(f"corpus dimension {seqset.dim} != topology input_dim {topology.input_dim}")
    weights = init_network(topology, config.seed)
    state = TrainerState.initial(topology, config)
    rho = np.zeros((len(seqset), topology.pb_dim))
    groups = _groups_by_length(seqset)
    report = TrainReport(sequence_ids=[s.id for s in seqset.sequences])
    denom = np.array([(s.length - 1) * s.dim for s in seqset.sequences], dtype=float)
    noise_rng = np.random.default_rng([config.seed, 1]) if config.input_noise > 0 else None

    for epoch in range(config.epochs):
        total = None
        sq_err = np.empty(len(seqset))
        new_rho = rho.copy()
        for idx, X in groups:
            inputs = None
            if noise_rng is not None:
                inputs = X + config.input_noise * noise_rng.standard_normal(X.shape)
            grad, delta_pb, err = bptt_batch(weights, X, rho[idx], inputs=inputs)
            total = grad if total is None else total.map(np.add, grad)
            sq_err[idx] = err
            gamma = config.M_gamma * np.mean(np.abs(delta_pb), axis=1)
            new_rho[idx] = rho[idx] + gamma * delta_pb.sum(axis=1)
        mse = sq_err / denom
        if not (np.all(np.isfinite(total.flat())) and np.all(np.isfinite(new_rho))):
            _finish_report(report, seqset, rho, state, epoch)
            raise NumericOverflowError("non-finite gradient", epoch=epoch, report=report)
        report.mse_history.append(mse)
        if config.convergence_mse > 0 and mse.mean() <= config.convergence_mse:
            break
        state = update_learning_rates(state, total, config)
        weights = apply_weight_update(weights, total, state)
        rho = new_rho
        if config.log_every and (epoch + 1) % config.log_every == 0:
            log.info("epoch %d mse %.3e eta mean %.3e", epoch + 1, mse.mean(), state.eta.flat().mean())
        if callback is not None:
            callback(epoch, mse, weights, rho)

    _finish_report(report, seqset, rho, state, len(report.mse_history))
    pbs = [PBState(r) for r in rho]
    snapshot = make_snapshot(seqset, topology, weights, pbs, metadata={
        "trainer": asdict(config),
        "epochs_run": report.epochs_run,
        "final_mse": report.final_mse if report.mse_history else None,
    })
    return snapshot, report


def _finish_report(report, seqset, rho, state, epochs_run):
    pbs = [PBState(r) for r in rho] if np.all(np.isfinite(rho)) else []
    report.final_pb = {s.id: pb for s, pb in zip(seqset.sequences, pbs)}
    report.label_pb = label_pb_table(seqset, pbs) if pbs else {}
    report.eta_stats = _eta_stats(state.eta)
    report.epochs_run = epochs_run
