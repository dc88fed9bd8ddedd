"""
Chronological splits and Z-score scaling fitted on the training portion.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from errors import InputError
from tensor_core import Array

SPLIT_PRESETS = {
    "speed": (0.7, 0.1, 0.2),
    "flow": (0.6, 0.2, 0.2),
}


@dataclass(frozen=True)
class SplitSpec:
    train: float = 0.7
    val: float = 0.1
    test: float = 0.2

    def __post_init__(self):
        if min(self.train, self.val, self.test) <= 0.0:
            raise InputError(f"split fractions must be positive, got {self.train}/{self.val}/{self.test}")
        if abs(self.train + self.val + self.test - 1.0) > 1e-9:
            raise InputError(f"split fractions must sum to 1, got {self.train + self.val + self.test}")

    @classmethod
    def for_task(cls, task: str) -> "SplitSpec":
        try:
            return cls(*SPLIT_PRESETS[task])
        except KeyError:
            raise InputError(f"unknown task '{task}', expected one of {sorted(SPLIT_PRESETS)}") from None

    def boundaries(self, steps: int) -> Tuple[int, int]:
        """End indices (exclusive) of the training and validation segments."""
        train_end = int(round(steps * self.train))
        val_end = int(round(steps * (self.train + self.val)))
        return train_end, val_end


@dataclass(frozen=True)
class Scaler:
    """Per-channel mean and population standard deviation."""
    mean: Array
    std: Array

    def transform(self, x: Array) -> Array:
        return (x - self.mean) / self.std

    def inverse(self, x: Array) -> Array:
        return x * self.std + self.mean

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Scaler":
        return cls(np.asarray(data["mean"], dtype=np.float64), np.asarray(data["std"], dtype=np.float64))


def fit_scaler(values: Array, split: SplitSpec, channels=None) -> Scaler:
    train_end, _ = split.boundaries(values.shape[0])
    if train_end < 1:
        raise InputError("training split is empty")
    train = values[:train_end].reshape(-1, values.shape[-1])
    mean, std = train.mean(axis=0), train.std(axis=0)
    flat = np.flatnonzero(std <= 0.0)
    if flat.size:
        name = channels[flat[0]] if channels else int(flat[0])
        raise InputError(f"channel '{name}' has zero variance on the training split")
    return Scaler(mean, std)


def zscore_fit_transform(rs, split: SplitSpec) -> Tuple[Scaler, Array]:
    """Fit on the training portion of ``rs`` and transform the whole series."""
    scaler = fit_scaler(rs.values, split, rs.channels)
    return scaler, scaler.transform(rs.values)


def zscore_inverse(scaler: Scaler, x: Array) -> Array:
    return scaler.inverse(x)
