"""Synthetic benchmark: a latent periodic driver observable through text.

The driver combines a period-12 oscillation with a slower period-60
component whose phase differs per seed. A 24-step window of the noisy
series pins down the fast component reasonably well but cannot separate
the slow one from the autoregressive level, while the embeddings - a
fixed random linear map of the driver's current and previous value -
expose the full driver state cleanly. Text therefore carries signal the
numerical window alone cannot recover, which is exactly the situation
the augmentation targets.
"""

import numpy as np

from .data import EmbeddingSequence, MultimodalDataset, TimeSeries, chronological_split

FAST_PERIOD = 12.0
SLOW_PERIOD = 60.0
AR_COEF = 0.5
NOISE_STD = 0.1
EMB_NOISE_STD = 0.01
DEFAULT_D_TEXT = 16


def make_synthetic_hidden_driver(t, seed, d_text=DEFAULT_D_TEXT,
                                 split_ratios=(0.7, 0.1, 0.2)):
    """Seeded dataset of length ``t`` (requires t >= 200).

    Returns a MultimodalDataset whose series follows
    x[i] = 0.5 x[i-1] + h[i] + noise with h the two-component driver, and
    whose embeddings are a random linear image of (h[i], h[i-1]) plus
    small noise.
    """
    if t < 200:
        raise ValueError(f"hidden-driver datasets need t >= 200, got {t}")
    rng = np.random.default_rng(seed)
    steps = np.arange(t)
    slow_phase = rng.uniform(0.0, 2.0 * np.pi)
    driver = np.cos(2.0 * np.pi * steps / FAST_PERIOD) + np.cos(
        2.0 * np.pi * steps / SLOW_PERIOD + slow_phase
    )
    noise = rng.normal(0.0, NOISE_STD, size=t)
    x = np.zeros(t)
    x[0] = driver[0] + noise[0]
    for i in range(1, t):
        x[i] = AR_COEF * x[i - 1] + driver[i] + noise[i]
    driver_prev = np.roll(driver, 1)
    driver_prev[0] = driver[0]
    state = np.stack([driver, driver_prev], axis=1)
    mixing = rng.normal(0.0, 1.0, size=(2, d_text))
    embeddings = state @ mixing + rng.normal(0.0, EMB_NOISE_STD, size=(t, d_text))
    return MultimodalDataset(
        series=TimeSeries(x.reshape(-1, 1)),
        embeddings=EmbeddingSequence(embeddings),
        split=chronological_split(t, split_ratios),
    )
