"""Training loop, evaluation and baseline forecasters"""

from .loop import (
    DEFAULT_BATCH_SIZE, DEFAULT_CURRICULUM_TAU, DEFAULT_MAX_EPOCHS, DEFAULT_PATIENCE,
    EpochLog, RunRecord, TrainConfig, curriculum_horizon, masked_mae_loss, train, validation_loss,
)
from .baselines import BASELINES, HistoricalAverage, baseline_forecasts, persistence_forecast
from .evaluation import check_compatible, evaluate, evaluate_baseline, evaluate_model, load_model, predict_windows

__all__ = [
    # Training
    'DEFAULT_BATCH_SIZE',
    'DEFAULT_CURRICULUM_TAU',
    'DEFAULT_MAX_EPOCHS',
    'DEFAULT_PATIENCE',
    'EpochLog',
    'RunRecord',
    'TrainConfig',
    'curriculum_horizon',
    'masked_mae_loss',
    'train',
    'validation_loss',

    # Baselines
    'BASELINES',
    'HistoricalAverage',
    'baseline_forecasts',
    'persistence_forecast',

    # Evaluation
    'check_compatible',
    'evaluate',
    'evaluate_baseline',
    'evaluate_model',
    'load_model',
    'predict_windows',
]
