"""
Training loop: masked MAE on scaled targets, optional curriculum over the
forecast horizon, early stopping on validation loss and best-epoch
checkpoints.
"""

import time
from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from data_pipeline import DatasetSplits, Scaler, WindowSet
from errors import DivergenceError, MetricError, NumericalError
from stgnn_models import Forecaster
from tensor_core import (
    Array, DiffTensor, OptimizerState, Tape, absolute, clip_gradient_norm, mul, optimizer_step,
    reduce_sum, save_checkpoint, take_slice,
)
from tensor_core.optim import DEFAULT_CLIP_NORM, DEFAULT_LEARNING_RATE
from tools.artifact_tools import PathLike
from tracing import RunTracer, get_tracer

DEFAULT_MAX_EPOCHS = 100
DEFAULT_PATIENCE = 15
DEFAULT_BATCH_SIZE = 32
DEFAULT_CURRICULUM_TAU = 300


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    max_epochs: int = Field(default=DEFAULT_MAX_EPOCHS, ge=1)
    patience: int = Field(default=DEFAULT_PATIENCE, ge=1)
    batch_size: int = Field(default=DEFAULT_BATCH_SIZE, ge=1)
    learning_rate: float = Field(default=DEFAULT_LEARNING_RATE, gt=0.0)
    curriculum: Optional[bool] = Field(default=None, description="None: on for the rnn archetype only")
    curriculum_tau: int = Field(default=DEFAULT_CURRICULUM_TAU, ge=1)
    loss: Literal["masked_mae"] = "masked_mae"
    seed: int = 0
    graph_reg_weight: float = Field(default=0.0, ge=0.0)
    clip_norm: float = Field(default=DEFAULT_CLIP_NORM, gt=0.0)

    def curriculum_for(self, archetype: str) -> bool:
        return self.curriculum if self.curriculum is not None else archetype == "rnn"


class EpochLog(BaseModel):
    epoch: int
    train_loss: float
    val_loss: float
    horizon: int
    seconds: float


class RunRecord(BaseModel):
    """One training run; ``metrics`` is filled in by evaluation."""
    run: str
    config: Dict[str, Any]
    model: Dict[str, Any]
    epochs: List[EpochLog] = Field(default_factory=list)
    best_epoch: int = 0
    best_val_loss: float = float("inf")
    stopped_early: bool = False
    steps: int = 0
    parameter_count: int = 0
    checkpoint: Optional[str] = None
    metrics: Optional[Dict[str, Dict[str, float]]] = None

    @property
    def seconds_per_epoch(self) -> float:
        return float(np.mean([e.seconds for e in self.epochs])) if self.epochs else 0.0

    def comparable(self) -> Dict[str, Any]:
        """The record without wall-clock fields, for determinism checks."""
        data = self.model_dump()
        for epoch in data["epochs"]:
            epoch.pop("seconds")
        return data


def curriculum_horizon(step: int, tau: int, q: int) -> int:
    """1 + floor(step / tau), capped at Q."""
    return min(q, 1 + step // tau)


def masked_mae_loss(prediction: DiffTensor, target: Array, mask: Array) -> DiffTensor:
    """Mean |prediction - target| over unmasked entries; masked targets never reach the value."""
    tape = prediction.tape
    weights = mask.astype(np.float64)
    count = float(weights.sum())
    diff = absolute(prediction - tape.constant(np.where(mask, target, 0.0)))
    total = reduce_sum(mul(diff, tape.constant(weights)))
    return mul(1.0 / count if count else 0.0, total)


def scaled_targets(scaler: Scaler, raw: Array):
    return scaler.transform(raw), raw != 0.0


def _prefix(prediction: DiffTensor, horizon: int) -> DiffTensor:
    if prediction.shape[1] == horizon:
        return prediction
    return take_slice(prediction, (slice(None), slice(0, horizon)))


def validation_loss(model: Forecaster, windows: WindowSet, scaler: Scaler, batch_size: int) -> float:
    """Masked MAE on scaled targets over the full horizon, pooled over the split."""
    total, count = 0.0, 0
    for start in range(0, len(windows), batch_size):
        x, y_raw = windows.batch(range(start, min(start + batch_size, len(windows))))
        y, mask = scaled_targets(scaler, y_raw)
        pred = model.predict(x)
        total += float(np.abs(pred - y)[mask].sum())
        count += int(mask.sum())
    if count == 0:
        raise MetricError("validation split has no observed targets")
    return total / count


def train(model: Forecaster, data: DatasetSplits, config: TrainConfig, run_name: str = "run",
          checkpoint_stem: Optional[PathLike] = None, tracer: Optional[RunTracer] = None,
          config_snapshot: Optional[Dict[str, Any]] = None) -> RunRecord:
    """Fit ``model`` on ``data.train``; the best-validation parameters are checkpointed and left in place."""
    tracer = tracer or get_tracer()
    rng = np.random.default_rng(config.seed)
    params = model.parameters()
    state = OptimizerState(learning_rate=config.learning_rate)
    curriculum = config.curriculum_for(model.archetype)
    q = model.spec.q
    record = RunRecord(
        run=run_name,
        config=config_snapshot if config_snapshot is not None else config.model_dump(),
        model=model.spec.model_dump(),
        parameter_count=model.count_parameters(),
    )
    best_values = [p.value.copy() for p in params]
    metadata = {"model": model.spec.model_dump(), "scaler": data.scaler.to_dict(), "run": run_name}

    step, since_best = 0, 0
    for epoch in range(1, config.max_epochs + 1):
        started = time.perf_counter()
        order = rng.permutation(len(data.train))
        batch_losses = []
        horizon = q
        for start in range(0, len(order), config.batch_size):
            x, y_raw = data.train.batch(order[start:start + config.batch_size])
            horizon = curriculum_horizon(step, config.curriculum_tau, q) if curriculum else q
            y, mask = scaled_targets(data.scaler, y_raw[:, :horizon])
            tape = Tape(f"{run_name}-step{step}")
            try:
                prediction = _prefix(model.forward(tape, x, training=True, horizon=horizon), horizon)
                loss = masked_mae_loss(prediction, y, mask)
                penalty = model.graph_penalty(config.graph_reg_weight)
                if penalty is not None:
                    loss = loss + penalty
            except NumericalError:
                tracer.log_error(run_name, f"non-finite values at epoch {epoch}, step {step}")
                raise DivergenceError(epoch, step) from None
            tape.backward(loss)
            clip_gradient_norm(params, config.clip_norm)
            optimizer_step(params, state)
            batch_losses.append(float(loss.value))
            step += 1

        val_loss = validation_loss(model, data.val, data.scaler, config.batch_size)
        seconds = time.perf_counter() - started
        train_loss = float(np.mean(batch_losses))
        record.epochs.append(EpochLog(epoch=epoch, train_loss=train_loss, val_loss=val_loss,
                                      horizon=horizon, seconds=seconds))
        tracer.log_epoch(run_name, epoch, train_loss, val_loss, seconds)

        if val_loss < record.best_val_loss:
            record.best_val_loss, record.best_epoch, since_best = val_loss, epoch, 0
            best_values = [p.value.copy() for p in params]
            if checkpoint_stem is not None:
                save_checkpoint(checkpoint_stem, params, {**metadata, "epoch": epoch})
                record.checkpoint = str(checkpoint_stem)
                tracer.log_checkpoint(run_name, str(checkpoint_stem), epoch)
        else:
            since_best += 1
            if since_best >= config.patience:
                record.stopped_early = True
                tracer.log_early_stop(run_name, epoch, record.best_epoch)
                break

    for param, value in zip(params, best_values):
        param.value = value
    record.steps = step
    return record
