"""Frequency analysis: differencing, magnitude spectra, peak isolation,
embedding lag-similarity, and series/text periodicity comparison.

The pipeline for a numerical sequence is difference -> magnitude spectrum
-> non-maximum suppression; for an embedding sequence it is mean-center ->
lag-similarity curve -> difference -> magnitude spectrum. Differencing
removes trend while leaving each periodic component at its original
frequency, so peak locations survive both routes.
"""

import json
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .data import EmbeddingSequence, MultimodalDataset
from .errors import DegenerateEmbeddings, ShapeMismatch, TooShort
from .validation import check_vector, readonly


@dataclass(frozen=True)
class Spectrum:
    """One-sided magnitude spectrum; frequencies in cycles/sample."""

    frequencies: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        f = check_vector(self.frequencies, "frequencies")
        a = check_vector(self.amplitudes, "amplitudes", min_len=f.size)
        if a.size != f.size:
            raise ShapeMismatch("frequencies and amplitudes differ in length")
        if np.any(np.diff(f) <= 0):
            raise ShapeMismatch("frequencies must be strictly increasing")
        if np.any(a < 0):
            raise ShapeMismatch("amplitudes must be non-negative")
        object.__setattr__(self, "frequencies", readonly(f))
        object.__setattr__(self, "amplitudes", readonly(a))

    @property
    def bin_width(self):
        """Grid spacing; spectra here always use a uniform k/T grid."""
        return float(self.frequencies[0])


@dataclass(frozen=True)
class LagSimilarityCurve:
    """Mean cosine similarity of centered embeddings k steps apart, k=1..K."""

    values: np.ndarray

    def __post_init__(self):
        v = check_vector(self.values, "values")
        if np.any(np.abs(v) > 1.0 + 1e-9):
            raise ShapeMismatch("similarity values must lie in [-1, 1]")
        object.__setattr__(self, "values", readonly(v))

    @property
    def max_lag(self):
        return self.values.size


def difference(x):
    """First-order difference: out[t] = x[t+1] - x[t]."""
    x = check_vector(x, "x")
    if x.size < 2:
        raise TooShort("differencing needs at least 2 points")
    return np.diff(x)


def magnitude_spectrum(x):
    """One-sided DFT magnitudes at frequencies k/T, k = 1..floor(T/2).

    The DC bin is excluded: callers difference their input first, which
    already removes level, and a surviving DC term would pollute the
    amplitude normalization used downstream.
    """
    x = check_vector(x, "x")
    t = x.size
    if t < 2:
        raise TooShort("spectrum needs at least 2 points")
    coeffs = np.fft.rfft(x)
    k_max = t // 2
    frequencies = np.arange(1, k_max + 1, dtype=np.float64) / t
    amplitudes = np.abs(coeffs[1 : k_max + 1])
    return Spectrum(frequencies, amplitudes)


def nms(s, radius):
    """Suppress every bin that is not a strict local maximum.

    A bin survives only if its amplitude strictly exceeds every neighbor
    within ``radius`` bins; plateaus therefore vanish entirely.
    """
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    a = s.amplitudes
    n = a.size
    kept = np.zeros_like(a)
    for i in range(n):
        lo = max(0, i - radius)
        hi = min(n, i + radius + 1)
        neighborhood = np.concatenate([a[lo:i], a[i + 1 : hi]])
        if neighborhood.size == 0 or np.all(a[i] > neighborhood):
            kept[i] = a[i]
    return Spectrum(s.frequencies, kept)


def lag_similarity(embeddings, max_lag):
    """Average cosine similarity between centered rows k steps apart.

    Rows are shifted by the global mean embedding first; a pair where
    either centered row has zero norm contributes nothing and is dropped
    from that lag's denominator.
    """
    if isinstance(embeddings, EmbeddingSequence):
        vectors = embeddings.vectors
    else:
        vectors = np.asarray(embeddings, dtype=np.float64)
    t = vectors.shape[0]
    if not 1 <= max_lag <= t - 1:
        raise ShapeMismatch(f"max_lag must lie in [1, T-1]=[1, {t - 1}], got {max_lag}")
    centered = vectors - vectors.mean(axis=0, keepdims=True)
    norms = np.linalg.norm(centered, axis=1)
    valid = norms > 0.0
    if not np.any(valid):
        raise DegenerateEmbeddings("all centered embedding rows are zero")
    unit = np.zeros_like(centered)
    unit[valid] = centered[valid] / norms[valid, None]
    values = np.zeros(max_lag)
    for k in range(1, max_lag + 1):
        pair_valid = valid[:-k] & valid[k:]
        count = int(pair_valid.sum())
        if count == 0:
            values[k - 1] = 0.0
            continue
        sims = np.einsum("ij,ij->i", unit[:-k], unit[k:])
        values[k - 1] = float(sims[pair_valid].sum() / count)
    return LagSimilarityCurve(np.clip(values, -1.0, 1.0))


def text_spectrum(embeddings, max_lag):
    """Magnitude spectrum of the differenced lag-similarity curve."""
    if max_lag < 4:
        raise TooShort(f"max_lag must be >= 4, got {max_lag}")
    curve = lag_similarity(embeddings, max_lag)
    return magnitude_spectrum(difference(curve.values))


def top_frequencies(s, l):
    """The ``l`` largest-amplitude bins, ties broken toward lower frequency."""
    n = s.amplitudes.size
    if not 1 <= l <= n:
        raise ShapeMismatch(f"l must lie in [1, {n}], got {l}")
    order = np.lexsort((s.frequencies, -s.amplitudes))
    return [
        (float(s.frequencies[i]), float(s.amplitudes[i])) for i in order[:l]
    ]


@dataclass(frozen=True)
class CtrConfig:
    """Knobs for the periodicity comparison.

    ``min_peak_fraction`` keeps a suppressed spectrum's micro-maxima (pure
    noise floor) from counting as periodicity evidence: a surviving peak
    must reach that fraction of the variable's largest amplitude.
    """

    nms_radius: int = 2
    top_l: int = 4
    max_lag: Optional[int] = None
    min_peak_fraction: float = 0.1

    def resolved_max_lag(self, t):
        if self.max_lag is not None:
            return self.max_lag
        return min(t - 1, t // 2)


@dataclass(frozen=True)
class CtrReport:
    """Per-variable series spectra, the text spectrum, and peak matches."""

    series_spectra: List[Spectrum]
    series_nms_spectra: List[Spectrum]
    text_spectrum: Spectrum
    top_text_frequencies: List[Tuple[float, float]]
    matched: List[bool]

    @property
    def matched_count(self):
        return sum(self.matched)

    def to_dict(self):
        return {
            "series_spectra": [
                {
                    "frequencies": sp.frequencies.tolist(),
                    "amplitudes": sp.amplitudes.tolist(),
                }
                for sp in self.series_spectra
            ],
            "series_nms_spectra": [
                {
                    "frequencies": sp.frequencies.tolist(),
                    "amplitudes": sp.amplitudes.tolist(),
                }
                for sp in self.series_nms_spectra
            ],
            "text_spectrum": {
                "frequencies": self.text_spectrum.frequencies.tolist(),
                "amplitudes": self.text_spectrum.amplitudes.tolist(),
            },
            "top_text_frequencies": [
                {"frequency": f, "amplitude": a}
                for f, a in self.top_text_frequencies
            ],
            "matched": list(self.matched),
            "matched_count": self.matched_count,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)


def analyze_ctr(ds: MultimodalDataset, cfg: CtrConfig = CtrConfig()):
    """Compare dominant text frequencies with per-variable series peaks.

    Each top-l text frequency is flagged matched when it lands within one
    frequency bin (the coarser of the two grids) of a series peak that
    survives non-maximum suppression in any variable.
    """
    values = ds.series.values
    series_spectra = []
    series_nms_spectra = []
    for c in range(values.shape[1]):
        sp = magnitude_spectrum(difference(values[:, c]))
        series_spectra.append(sp)
        series_nms_spectra.append(nms(sp, cfg.nms_radius))
    max_lag = cfg.resolved_max_lag(ds.n_steps)
    text_sp = text_spectrum(ds.embeddings, max_lag)
    l = min(cfg.top_l, text_sp.amplitudes.size)
    top = top_frequencies(text_sp, l)
    tol = max(series_spectra[0].bin_width, text_sp.bin_width) + 1e-12
    peak_freqs = []
    for sp in series_nms_spectra:
        floor = cfg.min_peak_fraction * float(sp.amplitudes.max(initial=0.0))
        surviving = (sp.amplitudes > 0.0) & (sp.amplitudes >= floor)
        peak_freqs.extend(sp.frequencies[surviving].tolist())
    peak_freqs = np.asarray(peak_freqs)
    matched = []
    for f, _ in top:
        if peak_freqs.size == 0:
            matched.append(False)
        else:
            matched.append(bool(np.min(np.abs(peak_freqs - f)) <= tol))
    return CtrReport(
        series_spectra=series_spectra,
        series_nms_spectra=series_nms_spectra,
        text_spectrum=text_sp,
        top_text_frequencies=top,
        matched=matched,
    )
