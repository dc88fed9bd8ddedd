"""
Sliding input/target windows, materialised lazily by index arithmetic.
"""

from collections import abc
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np

from data_pipeline.scaling import Scaler, SplitSpec
from data_pipeline.series import RawSeries
from errors import InputError
from tensor_core import Array


@dataclass
class WindowedSample:
    input: Array    # P x N x D
    target: Array   # Q x N x D
    start: int      # absolute index of the first input step


class WindowSet(abc.Sequence):
    """All stride-1 windows of one contiguous segment.

    ``inputs`` feeds the model (usually scaled), ``targets`` holds the values
    the forecasts are scored against (original units). Both are views of the
    same segment, so no window is ever copied until it is batched.
    """

    def __init__(self, inputs: Array, p: int, q: int, targets: Optional[Array] = None, offset: int = 0):
        if p < 1 or q < 1:
            raise InputError(f"window lengths must be >= 1, got P={p}, Q={q}")
        steps = inputs.shape[0]
        if steps < p + q:
            raise InputError(f"series of {steps} steps is shorter than P + Q = {p + q}")
        targets = inputs if targets is None else targets
        if targets.shape != inputs.shape:
            raise InputError(f"input/target series shapes differ: {inputs.shape} vs {targets.shape}")
        self.inputs = inputs
        self.targets = targets
        self.p = p
        self.q = q
        self.offset = offset

    def __len__(self) -> int:
        return self.inputs.shape[0] - self.p - self.q + 1

    def __getitem__(self, k):
        if isinstance(k, slice):
            return [self[i] for i in range(*k.indices(len(self)))]
        if k < 0:
            k += len(self)
        if not 0 <= k < len(self):
            raise IndexError(f"window {k} out of range for {len(self)} windows")
        return WindowedSample(
            input=self.inputs[k:k + self.p],
            target=self.targets[k + self.p:k + self.p + self.q],
            start=self.offset + k,
        )

    def __iter__(self) -> Iterator[WindowedSample]:
        for k in range(len(self)):
            yield self[k]

    @property
    def nodes(self) -> int:
        return self.inputs.shape[1]

    @property
    def features(self) -> int:
        return self.inputs.shape[2]

    def batch(self, indices: Sequence[int]) -> Tuple[Array, Array]:
        """Stack windows into (B, P, N, D) inputs and (B, Q, N, D) targets."""
        idx = np.asarray(indices, dtype=np.int64)
        in_steps = idx[:, None] + np.arange(self.p)[None, :]
        out_steps = idx[:, None] + self.p + np.arange(self.q)[None, :]
        return self.inputs[in_steps], self.targets[out_steps]

    def starts(self, indices: Sequence[int]) -> Array:
        return self.offset + np.asarray(indices, dtype=np.int64)


def make_windows(series: Array, p: int, q: int) -> WindowSet:
    """T - P - Q + 1 windows, sample k starting at index k."""
    return WindowSet(np.asarray(series, dtype=np.float64), p, q)


@dataclass
class DatasetSplits:
    """Windowed train/validation/test segments plus everything needed to score them."""
    train: WindowSet
    val: WindowSet
    test: WindowSet
    scaler: Scaler
    series: RawSeries
    split: SplitSpec

    def get(self, name: str) -> WindowSet:
        try:
            return {"train": self.train, "val": self.val, "test": self.test}[name]
        except KeyError:
            raise InputError(f"unknown split '{name}', expected train, val or test") from None


def split_windows(rs: RawSeries, split: SplitSpec, scaler: Scaler, p: int, q: int) -> DatasetSplits:
    """Cut the series chronologically and window each segment on its own."""
    train_end, val_end = split.boundaries(rs.steps)
    scaled = scaler.transform(rs.values)
    segments = {}
    for name, lo, hi in (("train", 0, train_end), ("val", train_end, val_end), ("test", val_end, rs.steps)):
        if hi - lo < p + q:
            raise InputError(f"{name} split has {hi - lo} steps, fewer than P + Q = {p + q}")
        segments[name] = WindowSet(scaled[lo:hi], p, q, targets=rs.values[lo:hi], offset=lo)
    return DatasetSplits(scaler=scaler, series=rs, split=split, **segments)
