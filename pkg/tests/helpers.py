"""Shared fixtures-in-spirit: random class members and a geometric GOF test."""
from __future__ import annotations

import numpy as np
from scipy.stats import chi2

from lcsampler import PiecewiseQuadraticPotential


def random_class_potential(
    rng: np.random.Generator, kappa: float, max_breaks: int = 12
) -> PiecewiseQuadraticPotential:
    """Random piecewise-quadratic member: curvatures log-uniform in [1, kappa]."""
    n = int(rng.integers(1, max_breaks + 1))
    breakpoints = np.sort(rng.uniform(-3.0, 3.0, size=n))
    # enforce strict separation
    breakpoints += np.arange(n) * 1e-9
    curvatures = np.exp(rng.uniform(0.0, np.log(kappa), size=n + 1)) if kappa > 1 else np.ones(n + 1)
    return PiecewiseQuadraticPotential(breakpoints, curvatures)


def geometric_chi2_pvalue(trial_counts, rho: float) -> float:
    """Goodness-of-fit p-value of observed trial counts against Geometric(rho).

    Bins are 1, 2, ... with the tail merged so every expected count is at
    least 5; rho is known (not fitted), so degrees of freedom are bins - 1.
    """
    counts = np.asarray(trial_counts, dtype=int)
    n = counts.size
    k = 1
    edges = []
    while True:
        p_k = (1.0 - rho) ** (k - 1) * rho
        tail = (1.0 - rho) ** k
        if n * tail < 5.0 or k > 10_000:
            break
        edges.append(k)
        k += 1
    observed = [np.sum(counts == k) for k in edges]
    observed.append(np.sum(counts > edges[-1]) if edges else n)
    expected = [n * (1.0 - rho) ** (k - 1) * rho for k in edges]
    expected.append(n * (1.0 - rho) ** edges[-1] if edges else n)
    observed, expected = np.asarray(observed, float), np.asarray(expected, float)
    stat = float(np.sum((observed - expected) ** 2 / expected))
    return float(chi2.sf(stat, df=len(expected) - 1))
