"""Sequence corpora: containers, min/max normalization, CSV I/O and a synthetic oscillator corpus."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DataFormatError, DimensionMismatchError

__all__ = [
    "Sequence",
    "SequenceSet",
    "NormStats",
    "SynthSpec",
    "load_sequences",
    "load_sequence_file",
    "save_sequences",
    "save_sequence_file",
    "fit_normalizer",
    "apply_normalizer",
    "invert_normalizer",
    "synth_corpus",
]

CSV_SIG_DIGITS = 17


@dataclass(frozen=True, eq=False)
class Sequence:
    """A labeled multivariate time series, ``values`` has shape (T, D)."""

    id: str
    label: str
    values: np.ndarray
    sample_rate_hz: float = 120.0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise DataFormatError(f"sequence {self.id!r}: values must be 2-D (T, D), got shape {values.shape}")
        if values.shape[0] < 2:
            raise DataFormatError(f"sequence {self.id!r}: need at least 2 time steps, got {values.shape[0]}")
        if values.shape[1] < 1:
            raise DataFormatError(f"sequence {self.id!r}: feature dimension must be >= 1")
        if not np.all(np.isfinite(values)):
            raise DataFormatError(f"sequence {self.id!r}: non-finite values")
        if not self.sample_rate_hz > 0:
            raise DataFormatError(f"sequence {self.id!r}: sample rate must be positive")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def with_values(self, values: np.ndarray, **changes) -> "Sequence":
        return replace(self, values=values, **changes)


@dataclass(frozen=True)
class NormStats:
    """Per-dimension affine map from ``[min, max]`` onto ``[target_low, target_high]``."""

    min: np.ndarray
    max: np.ndarray
    target_low: float = 0.1
    target_high: float = 0.9

    def __post_init__(self):
        lo = np.array(self.min, dtype=float).reshape(-1)
        hi = np.array(self.max, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise DimensionMismatchError("min and max must have the same length")
        if np.any(lo > hi):
            raise ValueError("min must not exceed max in any dimension")
        if not self.target_low < self.target_high:
            raise ValueError("target_low must be below target_high")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @property
    def dim(self) -> int:
        return self.min.shape[0]

    @property
    def constant(self) -> np.ndarray:
        return self.max == self.min

    def __eq__(self, other):
        if not isinstance(other, NormStats):
            return NotImplemented
        return (
            np.array_equal(self.min, other.min)
            and np.array_equal(self.max, other.max)
            and self.target_low == other.target_low
            and self.target_high == other.target_high
        )

    def _scale(self):
        span = self.max - self.min
        const = span == 0
        safe_span = np.where(const, 1.0, span)
        scale = (self.target_high - self.target_low) / safe_span
        return scale, const

    def transform(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape[-1] != self.dim:
            raise DimensionMismatchError(f"expected dimension {self.dim}, got {values.shape[-1]}")
        if values.size == 0:
            raise DataFormatError("cannot normalize an empty array")
        scale, const = self._scale()
        out = self.target_low + (values - self.min) * scale
        mid = 0.5 * (self.target_low + self.target_high)
        return np.where(const, mid, out)

    def inverse(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape[-1] != self.dim:
            raise DimensionMismatchError(f"expected dimension {self.dim}, got {values.shape[-1]}")
        if values.size == 0:
            raise DataFormatError("cannot denormalize an empty array")
        scale, const = self._scale()
        out = self.min + (values - self.target_low) / scale
        # constant channels carry no information about the input; restore the recorded value
        return np.where(const, self.min, out)


@dataclass(frozen=True)
class SequenceSet:
    sequences: tuple
    normalization: NormStats | None = None

    def __post_init__(self):
        seqs = tuple(self.sequences)
        if not seqs:
            raise DataFormatError("a sequence set needs at least one sequence")
        dims = {s.dim for s in seqs}
        if len(dims) != 1:
            raise DimensionMismatchError(f"sequences disagree on dimension: {sorted(dims)}")
        ids = [s.id for s in seqs]
        if len(set(ids)) != len(ids):
            raise DataFormatError("sequence ids must be unique within a set")
        if self.normalization is not None and self.normalization.dim != seqs[0].dim:
            raise DimensionMismatchError("normalization dimension does not match sequences")
        object.__setattr__(self, "sequences", seqs)

    @property
    def dim(self) -> int:
        return self.sequences[0].dim

    @property
    def labels(self) -> list[str]:
        """Distinct labels in order of first appearance."""
        return list(dict.fromkeys(s.label for s in self.sequences))

    def __len__(self):
        return len(self.sequences)

    def __iter__(self):
        return iter(self.sequences)

    def __getitem__(self, i):
        return self.sequences[i]

    def by_label(self, label: str) -> list[Sequence]:
        return [s for s in self.sequences if s.label == label]


def fit_normalizer(seqset: SequenceSet, target_low: float = 0.1, target_high: float = 0.9) -> NormStats:
    stacked = np.concatenate([s.values for s in seqset.sequences], axis=0)
    return NormStats(stacked.min(axis=0), stacked.max(axis=0), target_low, target_high)


def apply_normalizer(seqset: SequenceSet, stats: NormStats) -> SequenceSet:
    if stats.dim != seqset.dim:
        raise DimensionMismatchError(f"stats dimension {stats.dim} != set dimension {seqset.dim}")
    seqs = tuple(s.with_values(stats.transform(s.values)) for s in seqset.sequences)
    return SequenceSet(seqs, normalization=stats)


def invert_normalizer(seq: Sequence, stats: NormStats) -> Sequence:
    if stats.dim != seq.dim:
        raise DimensionMismatchError(f"stats dimension {stats.dim} != sequence dimension {seq.dim}")
    return seq.with_values(stats.inverse(seq.values))


# --------------------------------------------------------------------------
# CSV I/O
# --------------------------------------------------------------------------

def _parse_meta(line: str, path: Path) -> dict:
    meta = {}
    for tok in line.lstrip("#").split():
        if "=" not in tok:
            raise DataFormatError(f"{path}:1: malformed metadata token {tok!r}")
        key, val = tok.split("=", 1)
        meta[key.strip()] = val.strip()
    return meta


def load_sequence_file(path, seq_id: str | None = None) -> Sequence:
    """Read one CSV sequence file.

    Layout: optional ``# label=<name> rate=<hz>`` line, a header row of column
    names, then one row of comma-separated decimals per time step. Without a
    metadata label the label is the file stem up to the first ``_``.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataFormatError(f"{path}: cannot read ({exc.strerror or exc})") from exc
    lines = text.splitlines()
    lineno = 0
    meta = {}
    if lines and lines[0].startswith("#"):
        meta = _parse_meta(lines[0], path)
        lineno = 1
    if lineno >= len(lines):
        raise DataFormatError(f"{path}: missing header row")
    header = next(csv.reader([lines[lineno]]))
    ncol = len(header)
    if ncol == 0 or all(not h.strip() for h in header):
        raise DataFormatError(f"{path}:{lineno + 1}: empty header row")
    rows = []
    for i, row in enumerate(csv.reader(lines[lineno + 1:]), start=lineno + 2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != ncol:
            raise DataFormatError(f"{path}:{i}: expected {ncol} columns, got {len(row)}")
        try:
            rows.append([float(c) for c in row])
        except ValueError as exc:
            raise DataFormatError(f"{path}:{i}: non-numeric cell ({exc})") from exc
    if len(rows) < 2:
        raise DataFormatError(f"{path}: need at least 2 data rows, got {len(rows)}")
    values = np.array(rows, dtype=float)
    if not np.all(np.isfinite(values)):
        raise DataFormatError(f"{path}: non-finite values")
    label = meta.get("label") or path.stem.split("_")[0]
    try:
        rate = float(meta.get("rate", 120.0))
    except ValueError as exc:
        raise DataFormatError(f"{path}:1: bad rate {meta.get('rate')!r}") from exc
    return Sequence(seq_id or path.stem, label, values, rate)


def load_sequences(path) -> SequenceSet:
    """Load a single CSV file or every ``*.csv`` in a directory (sorted by name)."""
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.csv"))
        if not files:
            raise DataFormatError(f"{path}: no .csv files found")
    elif path.exists():
        files = [path]
    else:
        raise DataFormatError(f"{path}: no such file or directory")
    seqs = [load_sequence_file(f) for f in files]
    dims = {s.dim for s in seqs}
    if len(dims) > 1:
        detail = ", ".join(f"{f.name}={s.dim}" for f, s in zip(files, seqs))
        raise DimensionMismatchError(f"inconsistent dimensions across files: {detail}")
    return SequenceSet(tuple(seqs))


def _fmt(x: float) -> str:
    return format(float(x), f".{CSV_SIG_DIGITS}g")


def format_sequence(seq: Sequence, columns: list[str] | None = None) -> str:
    """Text of a sequence file: metadata line, header row, one row per frame."""
    columns = columns or [f"x{d}" for d in range(seq.dim)]
    lines = [f"# label={seq.label} rate={_fmt(seq.sample_rate_hz)}", ",".join(columns)]
    lines += [",".join(_fmt(v) for v in row) for row in seq.values]
    return "\n".join(lines) + "\n"


def save_sequence_file(seq: Sequence, path, columns: list[str] | None = None) -> Path:
    path = Path(path)
    path.write_text(format_sequence(seq, columns))
    return path


def save_sequences(seqset: SequenceSet, directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return [save_sequence_file(s, directory / f"{s.id}.csv") for s in seqset.sequences]


# --------------------------------------------------------------------------
# Synthetic corpus
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SynthSpec:
    classes: int = 5
    dim: int = 9
    length: int = 200
    seed: int = 0
    period: float = 200.0
    sample_rate_hz: float = 120.0

    def __post_init__(self):
        if self.classes < 2:
            raise ValueError("synthetic corpus needs at least 2 classes")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.length < 20:
            raise ValueError("length must be >= 20")
        if not self.period > 0:
            raise ValueError("period must be positive")


def synth_params(spec: SynthSpec) -> dict:
    """Per-class (amplitude, cycles per period, offset), reproducible from the seed.

    Each parameter comes from an evenly spaced grid that is shuffled
    independently per parameter and jittered, so any two classes differ in all
    three of them.
    """
    rng = np.random.default_rng(spec.seed)
    k = spec.classes
    grid = np.arange(k, dtype=float)
    amp = 0.6 + 1.4 * rng.permutation(grid) / max(k - 1, 1) + rng.uniform(-0.05, 0.05, k)
    freq = 1.0 + 2.0 * rng.permutation(grid) / max(k - 1, 1) + rng.uniform(-0.05, 0.05, k)
    offset = -1.0 + 2.0 * rng.permutation(grid) / max(k - 1, 1) + rng.uniform(-0.05, 0.05, k)
    return {"amplitude": amp, "frequency": freq, "offset": offset}


def synth_corpus(spec: SynthSpec) -> SequenceSet:
    """One oscillator sequence per class: ``offset_k + A_k sin(2 pi f_k t / period + phi_d)``."""
    p = synth_params(spec)
    t = np.arange(spec.length, dtype=float)[:, None]
    phase = 2.0 * math.pi * np.arange(spec.dim, dtype=float)[None, :] / (spec.dim + 1)
    seqs = []
    for k in range(spec.classes):
        arg = 2.0 * math.pi * p["frequency"][k] * t / spec.period + phase
        values = p["offset"][k] + p["amplitude"][k] * np.sin(arg)
        seqs.append(Sequence(f"class{k}", f"class{k}", values, spec.sample_rate_hz))
    return SequenceSet(tuple(seqs))


def add_noise(seqset: SequenceSet, scale: float, seed: int) -> SequenceSet:
    """Copy of ``seqset`` with i.i.d. Gaussian noise of std ``scale`` added to every value."""
    rng = np.random.default_rng(seed)
    seqs = tuple(s.with_values(s.values + scale * rng.standard_normal(s.values.shape)) for s in seqset)
    return SequenceSet(seqs, normalization=seqset.normalization)
