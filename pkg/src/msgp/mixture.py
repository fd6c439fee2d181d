"""Truncated Dirichlet-process machinery: weights, assignments, occupancy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

# components whose posterior-mean occupancy fraction exceeds this are
# reported as "dominating"; configurable at every call site
DEFAULT_OCCUPANCY_THRESHOLD = 0.02

DEFAULT_K0 = 20
DEFAULT_ALPHA = 0.5


@dataclass(frozen=True)
class MixtureWeights:
    """Component probabilities with the DP concentration that produced them."""

    p: np.ndarray
    alpha: float
    k0: int

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        object.__setattr__(self, "p", p)
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ConfigError("weights must be nonnegative and sum to 1")


def stick_breaking(v, alpha=DEFAULT_ALPHA):
    """Weights p_1 = v_1, p_k = v_k * prod_{k'<k}(1 - v_{k'}).

    Returns the (untruncated) prefix; it sums to 1 - prod(1 - v).
    """
    v = np.asarray(v, dtype=float)
    if np.any(v <= 0) or np.any(v >= 1):
        raise ConfigError("stick-breaking fractions must lie strictly in (0, 1)")
    remaining = np.concatenate([[1.0], np.cumprod(1.0 - v)[:-1]])
    return v * remaining


def sample_weights_posterior(alpha, k0, counts, rng) -> MixtureWeights:
    """Dirichlet draw with parameters alpha/k0 + per-component counts."""
    counts = np.asarray(counts, dtype=float)
    if counts.shape != (k0,):
        raise ConfigError(f"expected {k0} occupancy counts, got shape {counts.shape}")
    if np.any(counts < 0):
        raise ConfigError("occupancy counts must be nonnegative")
    if alpha <= 0 or k0 < 1:
        raise ConfigError("need alpha > 0 and k0 >= 1")
    if k0 == 1:
        return MixtureWeights(p=np.ones(1), alpha=alpha, k0=1)
    p = rng.dirichlet(alpha / k0 + counts)
    return MixtureWeights(p=p, alpha=alpha, k0=k0)


def occupancy(z, k0):
    """Counts per component; always sums to len(z)."""
    z = np.asarray(z)
    if z.size and (z.min() < 0 or z.max() >= k0):
        raise ConfigError("assignments fall outside 0..k0-1")
    return np.bincount(z, minlength=k0)


def effective_components(occupancy_fractions, threshold=DEFAULT_OCCUPANCY_THRESHOLD):
    """Number of components whose (posterior-mean) occupancy fraction exceeds
    the reporting threshold."""
    f = np.asarray(occupancy_fractions, dtype=float)
    return int(np.sum(f > threshold))
