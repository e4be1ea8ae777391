"""Evaluation metrics for forecasting and imputation.

MAPE carries the x100 factor and MSPE does not; cells whose target is
exactly zero are excluded from both percentage metrics and counted
instead of being epsilon-floored.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import EmptySelection, ShapeMismatch


@dataclass(frozen=True)
class EvalReport:
    mse: float
    mae: float
    rmse: float
    mape: float
    mspe: float
    n: int
    n_zero_targets: int = 0

    def to_dict(self):
        return {
            "mse": self.mse,
            "mae": self.mae,
            "rmse": self.rmse,
            "mape": self.mape,
            "mspe": self.mspe,
            "n": self.n,
            "n_zero_targets": self.n_zero_targets,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)


def evaluate(pred, target, mask=None):
    """All five metrics over the selected cells.

    ``mask`` (same shape, 1 = contributing) restricts which cells count;
    rmse is derived from mse so the two stay exactly consistent.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"pred shape {pred.shape} != target shape {target.shape}")
    if mask is not None:
        mask = np.asarray(mask, dtype=np.float64)
        if mask.shape != pred.shape:
            raise ShapeMismatch(f"mask shape {mask.shape} != pred shape {pred.shape}")
        select = mask != 0.0
        if not np.any(select):
            raise EmptySelection("mask selects no cells")
        pred = pred[select]
        target = target[select]
    else:
        pred = pred.ravel()
        target = target.ravel()
    if pred.size == 0:
        raise EmptySelection("no cells to evaluate")
    err = target - pred
    mse = float(np.mean(err**2))
    mae = float(np.mean(np.abs(err)))
    rmse = float(np.sqrt(mse))
    nonzero = target != 0.0
    n_zero = int(np.count_nonzero(~nonzero))
    if np.any(nonzero):
        rel = err[nonzero] / target[nonzero]
        mape = float(np.mean(np.abs(rel)) * 100.0)
        mspe = float(np.mean(rel**2))
    else:
        mape = float("nan")
        mspe = float("nan")
    return EvalReport(
        mse=mse,
        mae=mae,
        rmse=rmse,
        mape=mape,
        mspe=mspe,
        n=int(pred.size),
        n_zero_targets=n_zero,
    )


def promotion(baseline, ours):
    """Percentage reduction of an error metric relative to a baseline."""
    if baseline == 0.0:
        return float("nan")
    return 100.0 * (baseline - ours) / baseline
