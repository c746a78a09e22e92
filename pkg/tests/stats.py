"""Small statistical gates used by the distribution tests."""

import numpy as np


def chi_square(counts, expected):
    counts = np.asarray(counts, dtype=float)
    return float(((counts - expected) ** 2 / expected).sum())


def chi_square_gate(df, sigmas):
    """Mean plus ``sigmas`` standard deviations of a chi-square with ``df`` degrees of freedom."""
    return df + sigmas * np.sqrt(2 * df)


def binomial_sigma(p, trials):
    """Standard deviation of an empirical frequency with success probability ``p``."""
    return float(np.sqrt(p * (1 - p) / trials))
