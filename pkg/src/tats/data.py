"""Aligned multimodal dataset types, chronological splits, masks, windows.

All containers are immutable after construction (arrays carry a cleared
writeable flag), so they are safe to share across threads.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .errors import BadRatios, SegmentTooShort, ShapeMismatch, TooShort
from .validation import check_binary, check_matrix, check_vector, readonly

SPLIT_NAMES = ("train", "val", "test")


@dataclass(frozen=True)
class TimeSeries:
    """T x N matrix of observed values with optional timestamps."""

    values: np.ndarray
    timestamps: Optional[np.ndarray] = None

    def __post_init__(self):
        values = check_matrix(self.values, "values", min_rows=2, min_cols=1)
        object.__setattr__(self, "values", readonly(values))
        if self.timestamps is not None:
            ts = check_vector(self.timestamps, "timestamps", min_len=values.shape[0])
            if ts.size != values.shape[0]:
                raise ShapeMismatch(
                    f"timestamps length {ts.size} != T={values.shape[0]}"
                )
            if np.any(np.diff(ts) <= 0):
                raise ShapeMismatch("timestamps must be strictly increasing")
            object.__setattr__(self, "timestamps", readonly(ts))

    @property
    def n_steps(self):
        return self.values.shape[0]

    @property
    def n_variables(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class EmbeddingSequence:
    """T x d matrix of per-timestamp text embeddings."""

    vectors: np.ndarray

    def __post_init__(self):
        vectors = check_matrix(self.vectors, "vectors", min_rows=1, min_cols=1)
        object.__setattr__(self, "vectors", readonly(vectors))

    @property
    def n_steps(self):
        return self.vectors.shape[0]

    @property
    def dim(self):
        return self.vectors.shape[1]


@dataclass(frozen=True)
class BinaryMask:
    """T x N matrix over {0,1}; 1 marks an observed cell, 0 a missing one."""

    entries: np.ndarray

    def __post_init__(self):
        entries = check_binary(self.entries, "entries")
        entries = check_matrix(entries, "entries")
        object.__setattr__(self, "entries", readonly(entries))

    @property
    def observed_fraction(self):
        return float(self.entries.mean())


@dataclass(frozen=True)
class MultimodalDataset:
    """Aligned series + embeddings with chronological split boundaries."""

    series: TimeSeries
    embeddings: EmbeddingSequence
    split: Tuple[int, int]

    def __post_init__(self):
        if self.series.n_steps != self.embeddings.n_steps:
            raise ShapeMismatch(
                f"series has T={self.series.n_steps} rows but embeddings "
                f"has T={self.embeddings.n_steps}"
            )
        train_end, val_end = self.split
        t = self.series.n_steps
        if not (0 < train_end < val_end < t):
            raise ShapeMismatch(
                f"split ({train_end}, {val_end}) must satisfy 0 < train_end "
                f"< val_end < T={t}"
            )
        object.__setattr__(self, "split", (int(train_end), int(val_end)))

    @property
    def n_steps(self):
        return self.series.n_steps

    def segment_bounds(self, split):
        """(lo, hi) index range of the named split segment."""
        if split not in SPLIT_NAMES:
            raise ValueError(f"split must be one of {SPLIT_NAMES}, got {split!r}")
        train_end, val_end = self.split
        if split == "train":
            return 0, train_end
        if split == "val":
            return train_end, val_end
        return val_end, self.n_steps


@dataclass(frozen=True)
class WindowSample:
    """One training/evaluation window.

    Forecast windows carry ``target`` (H x N future values); imputation
    windows carry ``mask`` (L x N observedness) and use ``input_series``
    itself as the reconstruction target.
    """

    input_series: np.ndarray
    input_embeddings: np.ndarray
    target: Optional[np.ndarray] = None
    mask: Optional[np.ndarray] = None
    start: int = field(default=0)

    def __post_init__(self):
        if self.input_series.shape[0] != self.input_embeddings.shape[0]:
            raise ShapeMismatch("series and embedding windows disagree on length")
        if self.target is not None and self.mask is not None:
            raise ShapeMismatch("a window is either forecast- or imputation-shaped")


def chronological_split(t, ratios=(0.7, 0.1, 0.2)):
    """Boundary indices (train_end, val_end) for in-order ratios.

    Ratios must be positive and sum to one within 1e-9; no shuffling is
    ever applied.
    """
    train, val, test = (float(r) for r in ratios)
    if min(train, val, test) <= 0.0 or abs(train + val + test - 1.0) > 1e-9:
        raise BadRatios(f"ratios must be positive and sum to 1, got {ratios}")
    # epsilon guards against float artifacts like 10 * 0.8 == 7.999...
    train_end = math.floor(t * train + 1e-9)
    val_end = math.floor(t * (train + val) + 1e-9)
    return train_end, val_end


def generate_mask(shape, missing_ratio, seed):
    """Seeded i.i.d. Bernoulli mask; P(observed) = 1 - missing_ratio."""
    if not 0.0 < missing_ratio < 1.0:
        raise BadRatios(f"missing_ratio must lie in (0,1), got {missing_ratio}")
    rng = np.random.default_rng(seed)
    entries = (rng.random(shape) >= missing_ratio).astype(np.float64)
    return BinaryMask(entries)


def _window_starts(lo, hi, length):
    if hi - lo < length:
        raise SegmentTooShort(
            f"segment [{lo}, {hi}) holds {hi - lo} points; windows need {length}"
        )
    return range(lo, hi - length + 1)


def make_windows(ds, seq_len, pred_len, split):
    """Every stride-1 forecast window fully inside the split segment.

    Returns windows in chronological order; the count for a segment of
    length S is S - seq_len - pred_len + 1.
    """
    if seq_len < 1 or pred_len < 1:
        raise TooShort("seq_len and pred_len must be positive")
    lo, hi = ds.segment_bounds(split)
    values = ds.series.values
    emb = ds.embeddings.vectors
    samples = []
    for s in _window_starts(lo, hi, seq_len + pred_len):
        samples.append(
            WindowSample(
                input_series=values[s : s + seq_len],
                input_embeddings=emb[s : s + seq_len],
                target=values[s + seq_len : s + seq_len + pred_len],
                start=s,
            )
        )
    return samples


def make_imputation_windows(ds, mask, seq_len, split):
    """Stride-1 reconstruction windows pairing values with mask slices."""
    if seq_len < 1:
        raise TooShort("seq_len must be positive")
    entries = mask.entries
    if entries.shape != ds.series.values.shape:
        raise ShapeMismatch(
            f"mask shape {entries.shape} != series shape {ds.series.values.shape}"
        )
    lo, hi = ds.segment_bounds(split)
    values = ds.series.values
    emb = ds.embeddings.vectors
    samples = []
    for s in _window_starts(lo, hi, seq_len):
        samples.append(
            WindowSample(
                input_series=values[s : s + seq_len],
                input_embeddings=emb[s : s + seq_len],
                mask=entries[s : s + seq_len],
                start=s,
            )
        )
    return samples
