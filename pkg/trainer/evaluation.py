"""
Per-horizon evaluation in original units, for trained models, checkpoints
and baselines.
"""

from typing import Optional, Tuple

import numpy as np
import pandas as pd

from data_pipeline import DatasetSplits, WindowSet, horizon_metrics
from errors import CompatibilityError, ConfigurationError, ContractError
from graph_construct import AdjMatrix
from stgnn_models import Forecaster, ModelSpec, build_model, model_spec
from tensor_core import Array, load_checkpoint, restore_parameters
from trainer.baselines import HistoricalAverage, baseline_forecasts

EVAL_BATCH_SIZE = 64


def predict_windows(model: Forecaster, windows: WindowSet, scaler, batch_size: int = EVAL_BATCH_SIZE
                    ) -> Tuple[Array, Array]:
    """(ground truth, forecast) for every window, both in original units."""
    truths, preds = [], []
    for start in range(0, len(windows), batch_size):
        x, y = windows.batch(range(start, min(start + batch_size, len(windows))))
        preds.append(scaler.inverse(model.predict(x)))
        truths.append(y)
    return np.concatenate(truths), np.concatenate(preds)


def evaluate_model(model: Forecaster, data: DatasetSplits, split: str = "test") -> pd.DataFrame:
    windows = data.get(split)
    if (windows.nodes, windows.features) != (model.spec.nodes, model.spec.input_dim):
        raise ContractError(
            f"model expects {model.spec.nodes} nodes x {model.spec.input_dim} channels, "
            f"split has {windows.nodes} x {windows.features}"
        )
    y, y_hat = predict_windows(model, windows, data.scaler)
    return horizon_metrics(y, y_hat)


def load_model(checkpoint_stem, graph: Optional[AdjMatrix] = None,
               data: Optional[DatasetSplits] = None) -> Forecaster:
    """
    Rebuild a model from a checkpoint's embedded spec and restore its parameters.

    The embedded model spec is checked against ``data`` and ``graph`` before anything is built,
    so a checkpoint from another dataset fails with CompatibilityError.
    """
    values, metadata = load_checkpoint(checkpoint_stem)
    if "model" not in metadata:
        raise CompatibilityError(f"{checkpoint_stem}: checkpoint carries no model spec")
    try:
        spec = model_spec(**metadata["model"])
    except ConfigurationError as e:
        raise CompatibilityError(f"{checkpoint_stem}: invalid embedded model spec: {e}") from None
    if data is not None:
        check_compatible(spec, data)
    if graph is not None and graph.n != spec.nodes:
        raise CompatibilityError(f"checkpoint expects {spec.nodes} nodes, the graph has {graph.n}")
    model = build_model(spec, graph=graph)
    restore_parameters(model.parameters(), values)
    return model


def check_compatible(spec: ModelSpec, data: DatasetSplits) -> None:
    """A restored model must have been trained on data of the same shape and window lengths."""
    windows = data.test
    expected = (spec.nodes, spec.input_dim, spec.p, spec.q)
    found = (windows.nodes, windows.features, windows.p, windows.q)
    if expected != found:
        raise CompatibilityError(
            f"checkpoint expects nodes/channels/P/Q = {expected}, dataset provides {found}"
        )


def evaluate(checkpoint_stem, data: DatasetSplits, split: str = "test",
             graph: Optional[AdjMatrix] = None) -> pd.DataFrame:
    """Masked MAE/RMSE/MAPE per horizon 1..Q plus the pooled average, from a checkpoint."""
    model = load_model(checkpoint_stem, graph, data)
    return evaluate_model(model, data, split)


def evaluate_baseline(kind: str, data: DatasetSplits, q: int, split: str = "test",
                      history: Optional[HistoricalAverage] = None) -> pd.DataFrame:
    windows = data.get(split)
    if kind == "historical-average" and history is None:
        history = HistoricalAverage.fit(data.series, data.split)
    truths, preds = [], []
    for start in range(0, len(windows), EVAL_BATCH_SIZE):
        idx = range(start, min(start + EVAL_BATCH_SIZE, len(windows)))
        raw_inputs = windows.targets[np.asarray(idx)[:, None] + np.arange(windows.p)[None, :]]
        _, y = windows.batch(idx)
        preds.append(baseline_forecasts(kind, raw_inputs, q, starts=windows.starts(idx), history=history))
        truths.append(y)
    return horizon_metrics(np.concatenate(truths), np.concatenate(preds))
