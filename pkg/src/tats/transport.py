"""Alignment between text and series spectra via 1-D optimal transport.

``wasserstein_1d`` integrates |CDF_p - CDF_q| over the merged support,
which is the exact optimum for an absolute-difference ground cost. The
independent ``lp_oracle`` solves the same problem as an explicit linear
program and exists purely to cross-check the sweep.
"""

import json
from dataclasses import dataclass
import numpy as np
from scipy.optimize import linprog

from .errors import ShapeMismatch, TooLarge, ZeroSpectrum
from .spectral import CtrConfig, Spectrum, difference, magnitude_spectrum, text_spectrum
from .validation import readonly

NYQUIST = 0.5


@dataclass(frozen=True)
class NormalizedSpectrum:
    """Discrete distribution over [0, 1]: frequency/Nyquist vs unit mass."""

    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if support.shape != weights.shape or support.ndim != 1 or support.size == 0:
            raise ShapeMismatch("support and weights must be equal-length 1-D arrays")
        if np.any(np.diff(support) <= 0):
            raise ShapeMismatch("support must be strictly increasing")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
            raise ShapeMismatch("weights must be non-negative and sum to 1")
        object.__setattr__(self, "support", readonly(support))
        object.__setattr__(self, "weights", readonly(weights))


@dataclass(frozen=True)
class TransportPlan:
    """Coupling matrix whose marginals reproduce the two weight vectors."""

    gamma: np.ndarray

    def __post_init__(self):
        gamma = np.asarray(self.gamma, dtype=np.float64)
        if gamma.ndim != 2:
            raise ShapeMismatch("gamma must be a matrix")
        if np.any(gamma < -1e-12):
            raise ShapeMismatch("gamma must be non-negative")
        object.__setattr__(self, "gamma", readonly(np.clip(gamma, 0.0, None)))

    def check_marginals(self, p, q, tol=1e-7):
        row = self.gamma.sum(axis=1)
        col = self.gamma.sum(axis=0)
        return bool(
            np.all(np.abs(row - p.weights) <= tol)
            and np.all(np.abs(col - q.weights) <= tol)
        )


def normalize_spectrum(s: Spectrum):
    """Scale frequencies by the Nyquist rate and amplitudes to unit mass.

    Zero-amplitude bins carry no transportable mass and are dropped.
    """
    total = float(s.amplitudes.sum())
    if total <= 0.0:
        raise ZeroSpectrum("spectrum has zero total amplitude")
    keep = s.amplitudes > 0.0
    return NormalizedSpectrum(
        support=s.frequencies[keep] / NYQUIST,
        weights=s.amplitudes[keep] / total,
    )


def wasserstein_1d(p: NormalizedSpectrum, q: NormalizedSpectrum):
    """Exact 1-D transport cost: the area between the two CDFs."""
    grid = np.union1d(p.support, q.support)
    cdf_p = np.cumsum(p.weights)
    cdf_q = np.cumsum(q.weights)
    fp = cdf_p[np.searchsorted(p.support, grid, side="right") - 1]
    fp[grid < p.support[0]] = 0.0
    fq = cdf_q[np.searchsorted(q.support, grid, side="right") - 1]
    fq[grid < q.support[0]] = 0.0
    return float(np.sum(np.abs(fp[:-1] - fq[:-1]) * np.diff(grid)))


def lp_oracle(p: NormalizedSpectrum, q: NormalizedSpectrum, max_cells=64):
    """Solve the transport linear program exactly; test-scale only.

    Returns (optimal value, plan). Deliberately routed through a general
    LP solver so it shares no code path with ``wasserstein_1d``.
    """
    n, m = p.support.size, q.support.size
    if n * m > max_cells:
        raise TooLarge(f"lp_oracle caps at {max_cells} cells, got {n * m}")
    cost = np.abs(p.support[:, None] - q.support[None, :]).ravel()
    # equality constraints: row sums = p.weights, column sums = q.weights
    a_eq = np.zeros((n + m, n * m))
    for i in range(n):
        a_eq[i, i * m : (i + 1) * m] = 1.0
    for j in range(m):
        a_eq[n + j, j::m] = 1.0
    b_eq = np.concatenate([p.weights, q.weights])
    res = linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"transport LP failed: {res.message}")
    return float(res.fun), TransportPlan(res.x.reshape(n, m))


def _mean_series_spectrum(values):
    """Average of per-variable unit-mass magnitude spectra."""
    t, n = values.shape
    acc = None
    frequencies = None
    for c in range(n):
        sp = magnitude_spectrum(difference(values[:, c]))
        total = float(sp.amplitudes.sum())
        if total <= 0.0:
            raise ZeroSpectrum(f"variable {c} has a zero spectrum")
        unit = sp.amplitudes / total
        acc = unit if acc is None else acc + unit
        frequencies = sp.frequencies
    return Spectrum(frequencies, acc / n)


def tt_wasserstein(ds, cfg: CtrConfig = CtrConfig()):
    """Transport distance between the series and text spectra.

    Per-variable series spectra are normalized to unit mass before
    averaging so high-variance channels cannot dominate; raw spectra are
    used throughout (peak suppression is a display aid only).
    """
    series = normalize_spectrum(_mean_series_spectrum(ds.series.values))
    text = normalize_spectrum(
        text_spectrum(ds.embeddings, cfg.resolved_max_lag(ds.n_steps))
    )
    return wasserstein_1d(text, series)


def shuffle_ratio(ds, seeds, cfg: CtrConfig = CtrConfig()):
    """Alignment destroyed by shuffling rows of one modality at a time.

    For each seed the series rows (then, independently, the embedding
    rows) are permuted and the transport distance recomputed; the ratio
    reports the original distance against the mean of the two shuffled
    means, as a percentage.
    """
    from .data import EmbeddingSequence, MultimodalDataset, TimeSeries

    if len(seeds) < 1:
        raise ShapeMismatch("at least one shuffle seed is required")
    original = tt_wasserstein(ds, cfg)
    ts_vals = []
    text_vals = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        perm_series = rng.permutation(ds.n_steps)
        perm_text = rng.permutation(ds.n_steps)
        shuffled_series = MultimodalDataset(
            series=TimeSeries(ds.series.values[perm_series]),
            embeddings=ds.embeddings,
            split=ds.split,
        )
        ts_vals.append(tt_wasserstein(shuffled_series, cfg))
        shuffled_text = MultimodalDataset(
            series=ds.series,
            embeddings=EmbeddingSequence(ds.embeddings.vectors[perm_text]),
            split=ds.split,
        )
        text_vals.append(tt_wasserstein(shuffled_text, cfg))
    ts_mean = float(np.mean(ts_vals))
    text_mean = float(np.mean(text_vals))
    return ShuffleReport(
        original=original,
        ts_shuffled=ts_vals,
        text_shuffled=text_vals,
        ts_shuffled_mean=ts_mean,
        text_shuffled_mean=text_mean,
        ratio_percent=100.0 * original / ((ts_mean + text_mean) / 2.0),
    )


@dataclass(frozen=True)
class ShuffleReport:
    original: float
    ts_shuffled: list
    text_shuffled: list
    ts_shuffled_mean: float
    text_shuffled_mean: float
    ratio_percent: float

    def to_dict(self):
        return {
            "original": self.original,
            "ts_shuffled": list(self.ts_shuffled),
            "text_shuffled": list(self.text_shuffled),
            "ts_shuffled_mean": self.ts_shuffled_mean,
            "text_shuffled_mean": self.text_shuffled_mean,
            "ratio_percent": self.ratio_percent,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)
