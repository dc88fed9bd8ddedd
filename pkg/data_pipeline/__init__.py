"""Dataset ingestion, scaling, windowing, masked metrics and synthetic data"""

from .series import MINUTES_PER_DAY, RawSeries, SeriesStats, compute_stats, ingest_csv
from .scaling import SPLIT_PRESETS, Scaler, SplitSpec, fit_scaler, zscore_fit_transform, zscore_inverse
from .windows import DatasetSplits, WindowedSample, WindowSet, make_windows, split_windows
from .metrics import METRIC_COLUMNS, REPORTED_HORIZONS, horizon_metrics, masked_metrics, missing_mask, summary_row
from .synthetic import SLOTS_PER_DAY, SyntheticDataset, synth_traffic

__all__ = [
    # Series
    'MINUTES_PER_DAY',
    'RawSeries',
    'SeriesStats',
    'compute_stats',
    'ingest_csv',

    # Scaling and splits
    'SPLIT_PRESETS',
    'Scaler',
    'SplitSpec',
    'fit_scaler',
    'zscore_fit_transform',
    'zscore_inverse',

    # Windows
    'DatasetSplits',
    'WindowedSample',
    'WindowSet',
    'make_windows',
    'split_windows',

    # Metrics
    'METRIC_COLUMNS',
    'REPORTED_HORIZONS',
    'horizon_metrics',
    'masked_metrics',
    'missing_mask',
    'summary_row',

    # Synthetic data
    'SLOTS_PER_DAY',
    'SyntheticDataset',
    'synth_traffic',
]
