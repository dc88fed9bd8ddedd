"""
Closed-form yardsticks: persistence and the time-of-day historical average.
"""

from typing import Optional, Sequence

import numpy as np

from data_pipeline import RawSeries, SplitSpec
from errors import InputError
from tensor_core import Array

BASELINES = ("persistence", "historical-average")


def persistence_forecast(window: Array, q: int) -> Array:
    """Repeat the last observation: (B, P, N, D) -> (B, Q, N, D)."""
    last = window[:, -1:]
    return np.repeat(last, q, axis=1)


class HistoricalAverage:
    """Training-set mean of every time-of-day slot, per node and channel (zeros excluded)."""

    def __init__(self, table: Array, start_slot: int):
        self.table = table
        self.slots = table.shape[0]
        self.start_slot = start_slot

    @classmethod
    def fit(cls, series: RawSeries, split: SplitSpec) -> "HistoricalAverage":
        slots = series.slots_per_day
        if slots is None:
            raise InputError(
                f"historical average needs an interval dividing one day, got {series.interval_minutes} minutes"
            )
        train_end, _ = split.boundaries(series.steps)
        values = series.values[:train_end]
        slot_of = (series.start_slot + np.arange(train_end)) % slots
        observed = values != 0.0
        fallback = np.where(observed.any(axis=0), values.sum(axis=0) / np.maximum(observed.sum(axis=0), 1), 0.0)
        table = np.empty((slots,) + values.shape[1:])
        for slot in range(slots):
            rows = slot_of == slot
            total = values[rows].sum(axis=0)
            count = observed[rows].sum(axis=0)
            table[slot] = np.where(count > 0, total / np.maximum(count, 1), fallback)
        return cls(table, series.start_slot)

    def forecast(self, starts: Sequence[int], p: int, q: int) -> Array:
        """Forecasts for windows whose inputs begin at absolute indices ``starts``."""
        starts = np.asarray(starts, dtype=np.int64)
        steps = starts[:, None] + p + np.arange(q)[None, :]
        return self.table[(self.start_slot + steps) % self.slots]


def baseline_forecasts(kind: str, window: Array, q: int, starts: Optional[Sequence[int]] = None,
                       history: Optional[HistoricalAverage] = None) -> Array:
    """(B, Q, N, D) baseline forecasts for a batch of raw windows."""
    if kind == "persistence":
        return persistence_forecast(window, q)
    if kind == "historical-average":
        if history is None or starts is None:
            raise InputError("historical-average needs a fitted table and the window start indices")
        return history.forecast(starts, window.shape[1], q)
    raise InputError(f"unknown baseline '{kind}', expected one of {BASELINES}")
