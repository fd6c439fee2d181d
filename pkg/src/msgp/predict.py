"""Kriging under the mixture model and its independent-surface baseline.

``krige_msgp`` conditions each mixture component's surface on *all*
observations, letting information cross stationarity-region boundaries
through the cross-component covariances.  ``krige_igp`` is the baseline that
conditions each component only on its own observations (cross-component
covariances zeroed), so the gap between the two predictive variances
measures what the shared representation buys.

Both operate on a single posterior draw; ``posterior_predict`` averages over
retained draws with the law of total variance.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .data import Dataset, atomic_write
from .errors import ConfigError, NumericalError
from .kernels import get_family
from .sampler import PosteriorChain
from .spectral import covariance_matrix

log = logging.getLogger(__name__)

# negative predictive variance below this magnitude is roundoff and clamped;
# anything larger indicates a broken covariance and is an error
VARIANCE_CLAMP_TOL = 1e-10


def _clamp_variance(var, what):
    var = np.asarray(var, dtype=float)
    worst = var.min(initial=0.0)
    if worst < -VARIANCE_CLAMP_TOL * max(1.0, np.abs(var).max()):
        raise NumericalError(f"{what} produced negative predictive variance {worst:.3e}")
    if worst < 0:
        log.debug("clamping tiny negative %s variance %.3e", what, worst)
    return np.maximum(var, 0.0)


def _check_inputs(obs_sites, obs_z, y, tables, weights, sigma2):
    obs_z = np.asarray(obs_z)
    y = np.asarray(y, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if len(obs_z) != len(y):
        raise ConfigError("assignment and outcome lengths differ")
    if len(weights) != len(tables):
        raise ConfigError("one weight per component table is required")
    if obs_z.size and (obs_z.min() < 0 or obs_z.max() >= len(tables)):
        raise ConfigError("assignments fall outside the component range")
    if sigma2 < 0:
        raise ConfigError("noise variance must be nonnegative")
    return obs_z, y, weights


def krige_msgp(obs_sites, obs_z, y, tables, weights, sigma2, target_sites):
    """Mixture kriging from one posterior draw.

    Component k's predictor uses the full observation covariance (including
    cross-component entries); the returned mean and variance mix the
    per-component predictors with the draw's weights.  The variance includes
    the observation noise ``sigma2``.

    Returns (mean, variance) arrays over the target sites.
    """
    obs_z, y, weights = _check_inputs(obs_sites, obs_z, y, tables, weights, sigma2)
    lat = tables[0].lattice
    obs_sites = np.asarray(obs_sites, dtype=np.int64).reshape(-1, lat.dims)
    target_sites = np.asarray(target_sites, dtype=np.int64).reshape(-1, lat.dims)
    k0 = len(tables)
    n_t = len(target_sites)

    kmat = covariance_matrix(obs_sites, obs_z, obs_sites, obs_z, tables)
    kmat = np.triu(kmat)
    kmat = kmat + np.triu(kmat, 1).T
    kmat[np.diag_indices_from(kmat)] += sigma2
    try:
        cf = cho_factor(kmat, lower=True)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"observation covariance is not positive definite: {e}") from None
    alpha = cho_solve(cf, y)

    mean = np.zeros(n_t)
    var = np.zeros(n_t)
    for k in range(k0):
        if weights[k] == 0.0:
            continue
        zt = np.full(n_t, k)
        b = covariance_matrix(target_sites, zt, obs_sites, obs_z, tables)  # (n_t, n)
        qf = np.sum(b * cho_solve(cf, b.T).T, axis=1)
        k0var = tables[k].values.mean()  # marginal variance of component k
        mean += weights[k] * (b @ alpha)
        var += weights[k] * (k0var + sigma2 - qf)
    return mean, _clamp_variance(var, "mixture kriging")


def krige_igp(obs_sites, obs_z, y, tables, weights, sigma2, target_sites):
    """Baseline kriging that treats each component as an independent surface.

    Identical to :func:`krige_msgp` except that every cross-component
    observation covariance is zero, so component k conditions only on the
    observations assigned to k.  Components with no observations fall back to
    the prior (zero mean, full marginal variance).
    """
    obs_z, y, weights = _check_inputs(obs_sites, obs_z, y, tables, weights, sigma2)
    lat = tables[0].lattice
    obs_sites = np.asarray(obs_sites, dtype=np.int64).reshape(-1, lat.dims)
    target_sites = np.asarray(target_sites, dtype=np.int64).reshape(-1, lat.dims)
    k0 = len(tables)
    n_t = len(target_sites)

    mean = np.zeros(n_t)
    var = np.zeros(n_t)
    for k in range(k0):
        if weights[k] == 0.0:
            continue
        k0var = tables[k].values.mean()
        sel = np.flatnonzero(obs_z == k)
        if sel.size == 0:
            var += weights[k] * (k0var + sigma2)
            continue
        zk = np.full(sel.size, k)
        kmat = covariance_matrix(obs_sites[sel], zk, obs_sites[sel], zk, tables)
        kmat = np.triu(kmat)
        kmat = kmat + np.triu(kmat, 1).T
        kmat[np.diag_indices_from(kmat)] += sigma2
        try:
            cf = cho_factor(kmat, lower=True)
        except np.linalg.LinAlgError as e:
            raise NumericalError(
                f"component {k} observation covariance is not positive definite: {e}"
            ) from None
        zt = np.full(n_t, k)
        b = covariance_matrix(target_sites, zt, obs_sites[sel], zk, tables)
        qf = np.sum(b * cho_solve(cf, b.T).T, axis=1)
        mean += weights[k] * (b @ cho_solve(cf, y[sel]))
        var += weights[k] * (k0var + sigma2 - qf)
    return mean, _clamp_variance(var, "independent-surface kriging")


def efficiency_gap(var_igp, var_msgp):
    """Per-target variance reduction of mixture kriging over the baseline.

    Nonnegative up to roundoff: conditioning on more data cannot increase
    the predictive variance.
    """
    gap = np.asarray(var_igp, dtype=float) - np.asarray(var_msgp, dtype=float)
    worst = gap.min(initial=0.0)
    if worst < -1e-8 * max(1.0, np.abs(gap).max()):
        raise NumericalError(f"baseline variance fell below mixture variance by {-worst:.3e}")
    return np.maximum(gap, 0.0)


@dataclass
class PredictionResult:
    """Posterior predictive summary at target coordinates."""

    raw_coords: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    method: str
    n_draws: int

    @property
    def sd(self):
        return np.sqrt(self.variance)

    def write_csv(self, path):
        d = self.raw_coords.shape[1]
        header = [f"x{l+1}" for l in range(d)] + ["mean", "variance"]

        def write(f):
            w = csv.writer(f)
            w.writerow(header)
            for i in range(len(self.mean)):
                w.writerow([repr(float(c)) for c in self.raw_coords[i]]
                           + [repr(float(self.mean[i])), repr(float(self.variance[i]))])

        atomic_write(path, write)

    def write_json(self, path):
        payload = {
            "method": self.method,
            "n_draws": self.n_draws,
            "n_targets": int(len(self.mean)),
            "mean_variance": float(self.variance.mean()),
        }
        atomic_write(path, lambda f: json.dump(payload, f, indent=2))


def posterior_predict(dataset: Dataset, chain: PosteriorChain, target_coords,
                      method="msgp", thin=None, max_draws=25) -> PredictionResult:
    """Average single-draw kriging over the retained chain.

    The predictive mean is the draw-average of kriging means; the variance
    follows the law of total variance (mean within-draw variance plus the
    spread of the draw means).  ``thin`` overrides the default thinning that
    caps the work at ``max_draws`` draws.  The fitted polynomial trend is
    added back, so results are on the original outcome scale.
    """
    if method not in ("msgp", "igp"):
        raise ConfigError(f"unknown prediction method {method!r}")
    krige = krige_msgp if method == "msgp" else krige_igp
    target_coords = np.atleast_2d(np.asarray(target_coords, dtype=float))
    target_sites, _ = dataset.map_targets(target_coords)
    family = get_family(chain.kernel, dataset.lattice.dims)

    r = chain.n_retained
    if thin is None:
        thin = max(1, r // max_draws)
    draws = range(0, r, thin)
    means, variances = [], []
    for d in draws:
        tables = [family.table(dataset.lattice, chain.thetas[d, k], warn=False)
                  for k in range(chain.k0)]
        m, v = krige(dataset.coords, chain.z[d], dataset.y, tables,
                     chain.weights[d], float(chain.sigma2[d]), target_sites)
        means.append(m)
        variances.append(v)
    means = np.stack(means)
    variances = np.stack(variances)
    mean = means.mean(axis=0)
    var = variances.mean(axis=0) + means.var(axis=0)
    mean = mean + dataset.trend_at(target_coords)
    return PredictionResult(raw_coords=target_coords, mean=mean,
                            variance=_clamp_variance(var, "posterior prediction"),
                            method=method, n_draws=len(means))


def rmse(predicted, truth):
    predicted = np.asarray(predicted, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if predicted.shape != truth.shape:
        raise ConfigError("prediction and truth shapes differ")
    return float(np.sqrt(np.mean((predicted - truth) ** 2)))


def mean_variance(variance):
    """Average predictive variance, the summary used in model comparisons."""
    return float(np.mean(np.asarray(variance, dtype=float)))


def metrics(result: PredictionResult, truth=None):
    """Summary metrics: root-mean-square error of the means (when truth is
    given) and average uncertainty, the root of the mean predictive variance."""
    out = {"avg_uncertainty": float(np.sqrt(mean_variance(result.variance)))}
    if truth is not None:
        out["rmse"] = rmse(result.mean, truth)
    return out
