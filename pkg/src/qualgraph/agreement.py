"""Annotation agreement statistics over the four-level label set.

Confusion matrices are 4x4 with predictions on rows and ground truth on
columns. The kappa computation supports the per-ground-truth-level
column normalization variant as well as the standard unnormalized one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from qualgraph.errors import DomainError
from qualgraph.graph import Level

LEVELS = (Level.L1, Level.L2, Level.L3, Level.L4)
_LEVEL_POS = {lvl: i for i, lvl in enumerate(LEVELS)}


@dataclass(frozen=True)
class LabelVector:
    items: tuple[tuple[str, Level], ...]  # (item_id, label)

    def __post_init__(self):
        if not self.items:
            raise DomainError("label vector must be non-empty")
        ids = [i for i, _ in self.items]
        if len(set(ids)) != len(ids):
            raise DomainError("label vector item ids must be unique")

    def as_dict(self) -> dict[str, Level]:
        return dict(self.items)


def confusion(pred: LabelVector, gold: LabelVector) -> np.ndarray:
    """4x4 count matrix; rows predicted, columns ground truth."""
    p = pred.as_dict()
    g = gold.as_dict()
    if set(p) != set(g):
        raise DomainError("prediction and gold vectors must cover the same item ids")
    matrix = np.zeros((4, 4), dtype=np.int64)
    for item_id, label in p.items():
        matrix[_LEVEL_POS[label], _LEVEL_POS[g[item_id]]] += 1
    return matrix


def exact_match(pred: LabelVector, gold: LabelVector) -> float:
    matrix = confusion(pred, gold)
    return float(np.trace(matrix) / matrix.sum())


def normalize_per_gt_level(matrix: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Divide each column by its total; all-zero columns stay zero, flagged.

    Returns (normalized matrix, indices of zero columns).
    """
    matrix = np.asarray(matrix, dtype=float)
    totals = matrix.sum(axis=0)
    if not np.any(totals > 0):
        raise DomainError("matrix has no nonzero column totals")
    out = matrix.copy()
    zero_columns = []
    for j, total in enumerate(totals):
        if total > 0:
            out[:, j] = matrix[:, j] / total
        else:
            zero_columns.append(j)
    return out, zero_columns


def cohens_kappa(matrix: np.ndarray) -> float:
    """Cohen's kappa of a (possibly real-valued) confusion matrix.

    A degenerate expected agreement of 1 yields 1.0 when observed
    agreement is also 1, else NaN (flagged sentinel, never silent).
    """
    matrix = np.asarray(matrix, dtype=float)
    total = matrix.sum()
    if total <= 0:
        raise DomainError("confusion matrix total mass must be positive")
    p_o = np.trace(matrix) / total
    rows = matrix.sum(axis=1)
    cols = matrix.sum(axis=0)
    p_e = float(np.dot(rows, cols)) / (total * total)
    if math.isclose(p_e, 1.0, abs_tol=1e-15):
        return 1.0 if math.isclose(p_o, 1.0, abs_tol=1e-15) else float("nan")
    return float((p_o - p_e) / (1.0 - p_e))


def kappa_per_gt_normalized(matrix: np.ndarray) -> float:
    """Kappa over the column-normalized matrix (the reported variant)."""
    normalized, _flags = normalize_per_gt_level(matrix)
    return cohens_kappa(normalized)
