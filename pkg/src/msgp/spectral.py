"""Cross-covariance assembly and generative simulation on the lattice.

The covariance between two sites with (possibly different) stationarity
parameters is the discrete spectral inner product

    K(x, x') = (1/|W|) * sum_w cos((x - x') . w) * sqrt(g(w; th) * g(w; th'))

with the measurement-noise term added only on observation diagonals by the
callers that assemble observation covariances.

Fields are generated from white-noise coefficients attached to half the
frequency grid and extended to the full grid by conjugate symmetry, so the
reconstruction is exactly real and its law has the covariance above.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError
from .kernels import SpectralDensityTable
from .lattice import LatticeModel

IMAG_TOL = 1e-10


@dataclass(frozen=True)
class SpectralCoefficients:
    """Real white-noise coefficient pair stored on the canonical half-space.

    The full-grid complex coefficient vector is c(w) = (a + j*b)/sqrt(2) at
    canonical frequencies and c(-w) = conj(c(w)) at their mirrors, which makes
    every reconstructed field exactly real.
    """

    lattice: LatticeModel
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        nc = self.lattice.canonical_index.size
        if self.a.shape[-1] != nc or self.b.shape[-1] != nc:
            raise ConfigError("coefficient length does not match the canonical half-space")

    def full(self):
        return coefficients_full(self.lattice, self.a, self.b)


def coefficients_full(lattice: LatticeModel, a, b):
    """Extend half-space (a, b) pairs to the full conjugate-symmetric grid.

    Supports leading batch dimensions on ``a`` and ``b``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c_half = (a + 1j * b) / np.sqrt(2.0)
    out = np.zeros(a.shape[:-1] + (lattice.total,), dtype=complex)
    out[..., lattice.canonical_index] = c_half
    out[..., lattice.canonical_mirror] = np.conj(c_half)
    return out


def _same_lattice(lattice, *tables):
    for t in tables:
        if t.lattice is not lattice and t.lattice.sizes != lattice.sizes:
            raise ConfigError("spectral tables live on different lattices")


def cross_covariance(xi, xj, gi: SpectralDensityTable, gj: SpectralDensityTable):
    """Spectral cross-covariance between two sites (noise term excluded)."""
    lat = gi.lattice
    _same_lattice(lat, gi, gj)
    delta = np.asarray(xi, dtype=float) - np.asarray(xj, dtype=float)
    if delta.shape != (lat.dims,):
        raise ConfigError(f"sites must have dimension {lat.dims}")
    phase = np.cos(lat.freq_grid @ delta)
    return float(np.mean(phase * np.sqrt(gi.values * gj.values)))


def lag_covariance_table(gi: SpectralDensityTable, gj: SpectralDensityTable):
    """Cross-covariance at every nonnegative lattice lag, via one FFT.

    Returns an array of shape ``lattice.sizes``; entry at per-axis absolute
    lag ``|x - x'|`` equals ``cross_covariance(x, x', gi, gj)``.
    """
    lat = gi.lattice
    _same_lattice(lat, gi, gj)
    h = np.sqrt(gi.values * gj.values)
    t = lat.freq_to_site(h) / np.sqrt(lat.total)
    t = t.reshape(lat.sizes)
    if np.abs(t.imag).max() > 1e-9 * max(1.0, np.abs(t.real).max()):
        raise NumericalError("lag table has a non-negligible imaginary part")
    return t.real


def _dedupe_tables(site_tables):
    """Map per-site tables to (unique tables, per-site component index)."""
    uniq = []
    keys = {}
    z = np.empty(len(site_tables), dtype=np.int64)
    for i, t in enumerate(site_tables):
        k = t.params_key or id(t)
        if k not in keys:
            keys[k] = len(uniq)
            uniq.append(t)
        z[i] = keys[k]
    return uniq, z


def _stacked_lag_tables(tables):
    k = len(tables)
    lat = tables[0].lattice
    flat = np.empty((k, k, lat.total))
    for i in range(k):
        for j in range(i, k):
            t = lag_covariance_table(tables[i], tables[j]).ravel()
            flat[i, j] = t
            flat[j, i] = t
    return flat.reshape(k * k, lat.total)


def covariance_matrix(sites_a, z_a, sites_b, z_b, tables):
    """Dense cross-covariance block between two site lists (no noise term).

    ``z_a``/``z_b`` index into ``tables``; all sites are integer lattice
    coordinates on the tables' common lattice.
    """
    lat = tables[0].lattice
    _same_lattice(lat, *tables)
    sites_a = np.asarray(sites_a, dtype=np.int64).reshape(-1, lat.dims)
    sites_b = np.asarray(sites_b, dtype=np.int64).reshape(-1, lat.dims)
    flat = _stacked_lag_tables(tables)
    k = len(tables)
    lag = np.abs(sites_a[:, None, :] - sites_b[None, :, :])
    lag_idx = np.ravel_multi_index(tuple(lag[..., l] for l in range(lat.dims)), lat.sizes)
    pair_idx = np.asarray(z_a)[:, None] * k + np.asarray(z_b)[None, :]
    return flat[pair_idx, lag_idx]


def assemble_covariance(sites, site_tables, sigma2):
    """n x n observation covariance: spectral entries plus sigma2 on the diagonal.

    ``site_tables`` gives one spectral table per site (shared objects are
    recognized and deduplicated).  The result is exactly symmetric and
    positive semidefinite up to roundoff.
    """
    if len(site_tables) != len(np.atleast_2d(sites)):
        raise ConfigError("one spectral table per site is required")
    if sigma2 < 0:
        raise ConfigError("noise variance must be nonnegative")
    tables, z = _dedupe_tables(site_tables)
    lat = tables[0].lattice
    sites = np.asarray(sites, dtype=np.int64).reshape(-1, lat.dims)
    m = covariance_matrix(sites, z, sites, z, tables)
    m = np.triu(m)
    m = m + np.triu(m, 1).T
    m[np.diag_indices_from(m)] += sigma2
    return m


def simulate_field(lattice: LatticeModel, site_tables, mu, sigma2, rng, reps=None):
    """Draw real fields on the full lattice with per-site stationarity parameters.

    ``site_tables`` assigns a spectral table to every lattice site (flat C
    order, length ``lattice.total``).  With ``reps`` set, returns a
    (reps, total) batch sharing nothing but the generator.  The law of the
    output has covariance ``assemble_covariance(all sites, site_tables, sigma2)``.
    """
    if len(site_tables) != lattice.total:
        raise ConfigError("simulate_field needs one spectral table per lattice site")
    tables, z = _dedupe_tables(site_tables)
    _same_lattice(lattice, *tables)
    batch = () if reps is None else (int(reps),)
    nc = lattice.canonical_index.size
    a = rng.standard_normal(batch + (nc,))
    b = rng.standard_normal(batch + (nc,))
    c = coefficients_full(lattice, a, b)
    sqg = np.stack([t.sqrt_values for t in tables])  # (k, total)
    fields = lattice.freq_to_site(sqg[(slice(None),) + (None,) * len(batch)] * c[None])
    scale = max(1.0, np.abs(fields.real).max())
    if np.abs(fields.imag).max() > IMAG_TOL * scale:
        raise NumericalError("reconstructed field has a non-negligible imaginary part")
    fields = fields.real  # (k, [reps,] total)
    out = np.moveaxis(fields, 0, -1)[..., np.arange(lattice.total), z]
    mu = np.broadcast_to(np.asarray(mu, dtype=float), (lattice.total,))
    out = out + mu
    if sigma2 > 0:
        out = out + np.sqrt(sigma2) * rng.standard_normal(batch + (lattice.total,))
    else:
        out = out + 0.0
    return out
