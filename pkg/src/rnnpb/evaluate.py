"""Trained-vs-recognized PB distance matrices, regeneration errors and report files."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import UnknownLabelError
from .generation import rollout
from .network import ModelSnapshot
from .recognition import RecognitionConfig, pb_distance, recognize
from .seqdata import SequenceSet


@dataclass
class DistanceReport:
    """Rows are trained labels, columns the true label of the recognized input."""

    labels: list
    matrix: np.ndarray
    diagonal_min_rows: int
    iterations: list = field(default_factory=list)
    converged: list = field(default_factory=list)
    recognized: dict = field(default_factory=dict)    # column label -> activation
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        k = len(self.labels)
        if self.matrix.shape != (k, k):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match {k} labels")
        if np.any(self.matrix < 0):
            raise ValueError("distances must be non-negative")


def count_diagonal_minima(matrix) -> int:
    """Rows whose diagonal entry is the strict row minimum; a 1x1 matrix counts as 1."""
    m = np.asarray(matrix, dtype=float)
    count = 0
    for i in range(m.shape[0]):
        others = np.delete(m[i], i)
        if others.size == 0 or m[i, i] < others.min():
            count += 1
    return count


def own_closer_than_mean(matrix) -> int:
    """Columns whose own-label distance beats the mean distance to the other trained labels."""
    m = np.asarray(matrix, dtype=float)
    count = 0
    for j in range(m.shape[1]):
        others = np.delete(m[:, j], j)
        if others.size == 0 or m[j, j] < others.mean():
            count += 1
    return count


def _columns(model: ModelSnapshot, test_set: SequenceSet) -> list:
    missing = [lab for lab in test_set.labels if lab not in model.pb_table]
    if missing:
        raise UnknownLabelError(missing[0], model.pb_table)
    return [lab for lab in model.labels if lab in test_set.labels]


def distance_matrix(model: ModelSnapshot, test_set: SequenceSet,
                    config: RecognitionConfig | None = None) -> DistanceReport:
    """Recognize every test sequence and compare against each trained PB.

    ``test_set`` must be normalized with the model's statistics. Labels with
    several test sequences use the first one.
    """
    config = config or RecognitionConfig()
    labels = _columns(model, test_set)
    k = len(labels)
    matrix = np.zeros((k, k))
    iterations, converged, recognized = [], [], {}
    for j, lab in enumerate(labels):
        result = recognize(model, test_set.by_label(lab)[0], config)
        iterations.append(result.iterations)
        converged.append(result.converged)
        recognized[lab] = result.pb.activation()
        for i, row_label in enumerate(labels):
            matrix[i, j] = pb_distance(model.pb_table[row_label], result.pb)
    return DistanceReport(labels, matrix, count_diagonal_minima(matrix), iterations, converged, recognized)


def regen_error_table(model: ModelSnapshot, train_set: SequenceSet, steps: int) -> dict:
    """Per-label mean squared error of closed-loop regeneration in normalized space.

    Each label starts from the first frame of its first training sequence and
    is compared over ``min(steps, T - 1)`` generated frames.
    """
    _columns(model, train_set)
    out = {}
    for lab in train_set.labels:
        target = train_set.by_label(lab)[0].values
        n = min(steps, target.shape[0] - 1)
        gen = rollout(model, model.pb_table[lab], target[0], n)
        out[lab] = float(np.mean((gen[1:] - target[1:n + 1]) ** 2))
    return out


# --------------------------------------------------------------------------
# Report files
# --------------------------------------------------------------------------

def _num(x) -> str:
    return repr(float(x))


def matrix_to_csv(labels, matrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["train\\rec"] + list(labels))
    for lab, row in zip(labels, np.asarray(matrix)):
        w.writerow([lab] + [_num(v) for v in row])
    return buf.getvalue()


def matrix_from_csv(text: str):
    rows = list(csv.reader(io.StringIO(text)))
    labels = rows[0][1:]
    matrix = np.array([[float(v) for v in r[1:]] for r in rows[1:]], dtype=float)
    return labels, matrix


def _json_records(report: DistanceReport):
    yield {"type": "meta", "labels": list(report.labels), "diagonal_min_rows": report.diagonal_min_rows,
           "iterations": list(report.iterations), "converged": [bool(c) for c in report.converged],
           **report.metadata}
    for i, row_label in enumerate(report.labels):
        for j, col_label in enumerate(report.labels):
            yield {"type": "cell", "train": row_label, "rec": col_label, "distance": float(report.matrix[i, j])}


def emit_report(report, path, format: str = "csv") -> Path:
    """Write a :class:`DistanceReport` or a regeneration table (label -> MSE).

    ``format`` is ``"csv"`` or ``"jsonl"``.
    """
    path = Path(path)
    if format not in ("csv", "jsonl", "json-lines"):
        raise ValueError(f"unknown report format {format!r}")
    if isinstance(report, DistanceReport):
        if format == "csv":
            text = matrix_to_csv(report.labels, report.matrix)
        else:
            text = "".join(json.dumps(r) + "\n" for r in _json_records(report))
    else:
        if format == "csv":
            text = "label,mse\n" + "".join(f"{lab},{_num(v)}\n" for lab, v in report.items())
        else:
            text = "".join(json.dumps({"label": lab, "mse": float(v)}) + "\n" for lab, v in report.items())
    path.write_text(text)
    return path
