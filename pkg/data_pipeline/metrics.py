"""
Masked MAE / RMSE / MAPE: zeros in the ground truth mark missing readings
and are excluded from every metric.
"""

from typing import Optional, Tuple

import numpy as np
import pandas as pd

from errors import DimensionError, MetricError
from tensor_core import Array

METRIC_COLUMNS = ["mae", "rmse", "mape"]
REPORTED_HORIZONS = (3, 6, 12)


def missing_mask(y: Array) -> Array:
    return y != 0.0


def masked_metrics(y: Array, y_hat: Array, mask: Optional[Array] = None) -> Tuple[float, float, float]:
    """(MAE, RMSE, MAPE in percent) over the entries where ``y`` is nonzero."""
    y, y_hat = np.asarray(y, dtype=np.float64), np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape:
        raise DimensionError("masked_metrics", y.shape, y_hat.shape)
    mask = missing_mask(y) if mask is None else mask & missing_mask(y)
    count = int(mask.sum())
    if count == 0:
        raise MetricError("every entry is masked; metrics are undefined")
    err = (y_hat - y)[mask]
    mae = float(np.abs(err).sum() / count)
    rmse = float(np.sqrt((err ** 2).sum() / count))
    mape = float(np.abs(err / y[mask]).sum() / count * 100.0)
    return mae, rmse, mape


def horizon_metrics(y: Array, y_hat: Array) -> pd.DataFrame:
    """Per-horizon metrics for (B, Q, N, D) arrays plus a pooled ``average`` row.

    The average pools every unmasked entry over all horizons rather than
    averaging the per-horizon rows.
    """
    if y.shape != y_hat.shape or y.ndim != 4:
        raise DimensionError("horizon_metrics", y.shape, y_hat.shape)
    rows, index = [], []
    for h in range(y.shape[1]):
        rows.append(masked_metrics(y[:, h], y_hat[:, h]))
        index.append(str(h + 1))
    rows.append(masked_metrics(y, y_hat))
    index.append("average")
    frame = pd.DataFrame(rows, columns=METRIC_COLUMNS, index=pd.Index(index, name="horizon"))
    return frame


def summary_row(table: pd.DataFrame, horizons=REPORTED_HORIZONS) -> dict:
    """Flatten a horizon table into ``{metric}@{h}`` columns for the reported horizons and the average."""
    row = {}
    for h in horizons:
        if str(h) in table.index:
            for col in METRIC_COLUMNS:
                row[f"{col}@{h}"] = float(table.loc[str(h), col])
    for col in METRIC_COLUMNS:
        row[f"{col}@avg"] = float(table.loc["average", col])
    return row
