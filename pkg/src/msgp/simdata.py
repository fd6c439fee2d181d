"""Ground-truth generators for the validation experiments.

Three scenarios:

* a 1-D field of length ``n`` whose squared-exponential length-scale switches
  at ``split`` (two mixture components, cross-region covariance given by the
  model's spectral mixing),
* a 2-D surface under the locally squared-exponential "Pintore" covariance,
  whose length-scale varies over the domain (dense Cholesky/eigen draw — no
  mixture or lattice structure assumed, so it is an external ground truth),
* a 3-D space-time cube under the non-separable kernel, optionally with a
  region map assigning different parameters to different sites.

Every generator is deterministic given its seed and emits coordinates in the
same layout the CSV interchange format uses.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import ConfigError, NumericalError
from .kernels import get_family, numeric_spectral_density, make_table, st_covariance
from .lattice import build_lattice
from .spectral import simulate_field

# a generated covariance whose smallest eigenvalue is below -PSD_TOL * ||K||
# indicates a construction bug rather than roundoff
PSD_TOL = 1e-8


# ---------------------------------------------------------------------------
# 1-D two-region field (mixture-model construction)


def simulate_two_region_1d(n=100, split=50, params_left=(4.0, 3.0),
                           params_right=(4.0, 12.0), sigma2=0.25, seed=0,
                           independent=False):
    """Field on sites ``1..n`` with a length-scale switch after ``split``.

    Region 1 is ``x <= split`` with SE parameters ``params_left``
    (phi, rho); region 2 is the rest with ``params_right``.  By default both
    regions share the spectral white noise, so the cross-region covariance is
    the model's spectral mixing.  With ``independent=True`` the two surfaces
    are drawn independently and the cross-region covariance is zero.

    Returns ``(coords, y, true_component)`` with 1-based component labels.
    """
    if n < 2 or n % 2 != 0:
        raise ConfigError(f"n must be even and >= 2, got {n}")
    if not 0 < split < n:
        raise ConfigError(f"split must lie strictly inside 1..{n}")
    lat = build_lattice((n,))
    fam = get_family("se", 1)
    tab_l = fam.table(lat, np.asarray(params_left, dtype=float))
    tab_r = fam.table(lat, np.asarray(params_right, dtype=float))
    rng = np.random.default_rng(seed)
    x = np.arange(1, n + 1, dtype=float)
    z = (x > split).astype(int)
    if independent:
        f_l = simulate_field(lat, [tab_l] * n, 0.0, 0.0, rng)
        f_r = simulate_field(lat, [tab_r] * n, 0.0, 0.0, rng)
        y = np.where(z == 0, f_l, f_r) + np.sqrt(sigma2) * rng.standard_normal(n)
    else:
        site_tabs = [tab_l if zi == 0 else tab_r for zi in z]
        y = simulate_field(lat, site_tabs, 0.0, sigma2, rng)
    return x[:, None], y, z + 1


# ---------------------------------------------------------------------------
# 2-D locally squared-exponential surface


def length_scale_surface(coords):
    """Benchmark length-scale map rho(x) = (cos(4 pi x1 / 100) + 2) exp(x2 / 200).

    Defined on the (0, 100)^2 domain; rho(0, 0) = 3.
    """
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    if coords.shape[1] != 2:
        raise ConfigError("the length-scale surface is defined on 2-D coordinates")
    return (np.cos(4.0 * np.pi * coords[:, 0] / 100.0) + 2.0) * np.exp(coords[:, 1] / 200.0)


@dataclass(frozen=True)
class PintoreField:
    """Locally squared-exponential ground truth with location-varying scale.

    ``rho_fn`` maps (n, 2) coordinates to positive length-scales; the local
    scale parameter is beta(x) = 2 rho(x)^2 and the covariance between two
    points is phi * h * exp(-|x - x'|^2 / theta) with theta = (b + b')/2 and
    h = 2 sqrt(b b') / (b + b') in (0, 1].  Wherever rho is locally constant
    this collapses to the stationary squared exponential with that rho.
    """

    rho_fn: object = length_scale_surface
    phi: float = 1.0
    domain: tuple = ((0.0, 100.0), (0.0, 100.0))

    def __post_init__(self):
        if self.phi <= 0:
            raise ConfigError("phi must be positive")

    def _check_domain(self, coords):
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        for l, (lo, hi) in enumerate(self.domain):
            if np.any(coords[:, l] < lo) or np.any(coords[:, l] > hi):
                raise ConfigError(f"coordinate {l+1} falls outside the domain [{lo}, {hi}]")
        return coords

    def rho(self, coords):
        coords = self._check_domain(coords)
        r = np.asarray(self.rho_fn(coords), dtype=float)
        if np.any(r <= 0):
            raise ConfigError("the length-scale function must be positive on the domain")
        return r

    def beta(self, coords):
        return 2.0 * self.rho(coords) ** 2


def pintore_covariance(xi, xj, field: PintoreField):
    """Covariance between two points under the locally-SE ground truth."""
    xi = np.asarray(xi, dtype=float).reshape(1, -1)
    xj = np.asarray(xj, dtype=float).reshape(1, -1)
    bi, bj = field.beta(xi)[0], field.beta(xj)[0]
    theta = (bi + bj) / 2.0
    h = np.sqrt(bi * bj) / theta
    sq = float(np.sum((xi - xj) ** 2))
    return float(field.phi * h * np.exp(-sq / theta))


def pintore_covariance_matrix(coords, rho, phi):
    """Dense locally-SE covariance with explicit per-point length-scales."""
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (coords.shape[0],) or np.any(rho <= 0):
        raise ConfigError("need one positive length-scale per point")
    if phi <= 0:
        raise ConfigError("phi must be positive")
    beta = 2.0 * rho**2
    theta = (beta[:, None] + beta[None, :]) / 2.0
    h = np.sqrt(beta[:, None] * beta[None, :]) / theta
    sq = np.sum((coords[:, None, :] - coords[None, :, :]) ** 2, axis=-1)
    return phi * h * np.exp(-sq / theta)


def gaussian_draw(cov, rng):
    """Zero-mean draw with covariance ``cov``, verifying positive semidefiniteness.

    Uses Cholesky when the matrix is numerically positive definite and an
    eigenvalue-clamped square root otherwise; eigenvalues below
    ``-PSD_TOL * ||K||`` abort.
    """
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0]
    try:
        chol = np.linalg.cholesky(cov)
        return chol @ rng.standard_normal(n)
    except np.linalg.LinAlgError:
        pass
    eigvals, eigvecs = np.linalg.eigh(cov)
    norm = np.abs(eigvals).max(initial=0.0)
    if eigvals.min(initial=0.0) < -PSD_TOL * max(norm, 1.0):
        raise NumericalError(
            f"generated covariance is not positive semidefinite "
            f"(min eigenvalue {eigvals.min():.3e}, norm {norm:.3e})"
        )
    root = eigvecs * np.sqrt(np.maximum(eigvals, 0.0))
    return root @ rng.standard_normal(n)


def simulate_pintore(grid, field: PintoreField, sigma2, rng, reps=None):
    """Draw from N(0, K + sigma2 I) under the locally-SE ground truth.

    ``grid`` is an (n, 2) coordinate list.  With ``reps`` set, returns a
    (reps, n) batch from the same covariance.
    """
    if sigma2 < 0:
        raise ConfigError("noise variance must be nonnegative")
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    cov = pintore_covariance_matrix(grid, field.rho(grid), field.phi)
    n = grid.shape[0]
    if reps is None:
        return gaussian_draw(cov, rng) + np.sqrt(sigma2) * rng.standard_normal(n)
    out = np.empty((reps, n))
    # one factorization, many draws
    try:
        root = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        eigvals, eigvecs = np.linalg.eigh(cov)
        norm = np.abs(eigvals).max(initial=0.0)
        if eigvals.min(initial=0.0) < -PSD_TOL * max(norm, 1.0):
            raise NumericalError(
                f"generated covariance is not positive semidefinite "
                f"(min eigenvalue {eigvals.min():.3e})"
            ) from None
        root = eigvecs * np.sqrt(np.maximum(eigvals, 0.0))
    for i in range(reps):
        out[i] = root @ rng.standard_normal(n) + np.sqrt(sigma2) * rng.standard_normal(n)
    return out


def grid_coords(nx, ny, domain=((0.0, 100.0), (0.0, 100.0))):
    """Regular (nx * ny, 2) grid of cell midpoints over a rectangle."""
    axes = [lo + (hi - lo) * (np.arange(m) + 0.5) / m
            for m, (lo, hi) in zip((nx, ny), domain)]
    mx, my = np.meshgrid(*axes, indexing="ij")
    return np.stack([mx.ravel(), my.ravel()], axis=-1)


def discretize_levels(values, levels, breaks=None):
    """Quantile-bin ``values`` into ``len(levels)`` groups, assigning each
    group the corresponding level value.

    ``breaks`` gives the interior break quantiles (len(levels) - 1 increasing
    values in (0, 1)); by default the bins have equal mass.  Returns
    ``(level_values_per_point, group_index_per_point)``.
    """
    values = np.asarray(values, dtype=float)
    levels = np.asarray(levels, dtype=float)
    if levels.size < 1:
        raise ConfigError("need at least one level")
    if breaks is None:
        breaks = np.linspace(0, 1, levels.size + 1)[1:-1]
    else:
        breaks = np.asarray(breaks, dtype=float)
        if (breaks.shape != (levels.size - 1,) or np.any(breaks <= 0)
                or np.any(breaks >= 1) or np.any(np.diff(breaks) <= 0)):
            raise ConfigError(
                f"breaks must be {levels.size - 1} increasing quantiles in (0, 1)")
    qs = np.quantile(values, breaks)
    group = np.searchsorted(qs, values, side="right")
    return levels[group], group


@dataclass
class VaryingScaleField:
    """A draw whose length-scale takes discrete level values over quantile
    bands of the smooth benchmark surface, plus the generative truth."""

    coords: np.ndarray      # lattice-unit coordinates
    y: np.ndarray
    rho: np.ndarray         # lattice-unit length-scale per site
    group: np.ndarray       # 0-based level index per site
    phi: float
    sigma2: float
    covariance: np.ndarray  # noise-free covariance actually used to draw


def simulate_varying_scale_2d(sizes=(40, 40), levels=(1.5, 3.0, 6.0), phi=4.0,
                              sigma2=0.25, seed=0, breaks=None) -> VaryingScaleField:
    """Discrete-level nonstationary surface on an integer lattice.

    The smooth benchmark length-scale map is evaluated over the lattice
    (rescaled to its (0, 100)^2 domain), quantile-binned into ``levels``
    bands (at ``breaks`` quantiles; equal mass by default), and the field is
    drawn from the exact dense locally-SE covariance with those lattice-unit
    length-scales.
    """
    lat = build_lattice(sizes)
    coords = lat.site_grid.astype(float)
    scaled = coords * (100.0 / np.array(sizes))
    smooth = length_scale_surface(scaled)
    rho, group = discretize_levels(smooth, np.asarray(levels, dtype=float),
                                   breaks=breaks)
    cov = pintore_covariance_matrix(coords, rho, phi)
    rng = np.random.default_rng(seed)
    y = gaussian_draw(cov, rng) + np.sqrt(sigma2) * rng.standard_normal(len(coords))
    return VaryingScaleField(coords=coords, y=y, rho=rho, group=group,
                             phi=phi, sigma2=sigma2, covariance=cov)


def simulate_discrete_scale_2d(sizes=(40, 40), levels=(1.5, 3.0, 6.0), phi=4.0,
                               sigma2=0.25, seed=0, breaks=None):
    """Mixture-model draw whose component map discretizes the benchmark
    length-scale surface.

    The smooth benchmark surface is evaluated over the lattice (rescaled to
    its (0, 100)^2 domain) and quantile-binned into ``len(levels)`` bands at
    the ``breaks`` quantiles (equal mass by default); each band becomes one
    squared-exponential mixture component with the corresponding
    lattice-unit length-scale, and the field is drawn from the mixture
    model itself (shared spectral noise, so components are cross-correlated).

    Returns ``(coords, y, true_component)`` with 1-based component labels.
    """
    lat = build_lattice(sizes)
    if lat.dims != 2:
        raise ConfigError("the discrete-scale scenario is 2-D")
    coords = lat.site_grid.astype(float)
    scaled = coords * (100.0 / np.array(sizes))
    smooth = length_scale_surface(scaled)
    _, group = discretize_levels(smooth, np.asarray(levels, dtype=float),
                                 breaks=breaks)
    fam = get_family("se", 2)
    tables = [fam.table(lat, np.array([phi, l, l], dtype=float), warn=False)
              for l in np.asarray(levels, dtype=float)]
    rng = np.random.default_rng(seed)
    y = simulate_field(lat, [tables[g] for g in group], 0.0, sigma2, rng)
    return coords, y, group + 1


# ---------------------------------------------------------------------------
# 3-D space-time cube (non-separable kernel)


def simulate_st_cube(nx=12, ny=12, nt=32, components=((4.0, 1.2, 1.2, 1.5, 50.0, 50.0),),
                     region=None, sigma2=0.25, seed=0):
    """Draw on a space-time lattice under the non-separable kernel.

    ``components`` lists parameter vectors (phi, rho1, rho2, rho3, c1, c2) in
    lattice units; ``region`` assigns each site a 0-based component index
    (flat C order over (nx, ny, nt); default: all sites in component 0).
    ``nt=1`` reduces to a purely spatial 2-D field.  The kernel must decay
    within half the lattice extent or its numeric spectral density is
    rejected.

    Returns ``(coords, y, true_component)`` with 1-based component labels.
    """
    components = [np.asarray(c, dtype=float) for c in components]
    spatial_only = nt == 1
    sizes = (nx, ny) if spatial_only else (nx, ny, nt)
    lat = build_lattice(sizes)
    if region is None:
        region = np.zeros(lat.total, dtype=int)
    region = np.asarray(region)
    if region.shape != (lat.total,) or region.min() < 0 or region.max() >= len(components):
        raise ConfigError("region map must give a valid component index per site")

    tables = []
    for vec in components:
        if spatial_only:
            fam3 = get_family("st_nonseparable", 3)
            p = fam3.params(vec)

            def kernel(lags, p=p):
                lags3 = np.concatenate([lags, np.zeros((len(lags), 1))], axis=1)
                return st_covariance(lags3, p)

            raw = numeric_spectral_density(kernel, lat)
            tables.append(make_table(lat, raw, target_var=p.phi))
        else:
            fam = get_family("st_nonseparable", 3)
            tables.append(fam.table(lat, vec))
    site_tabs = [tables[k] for k in region]
    rng = np.random.default_rng(seed)
    y = simulate_field(lat, site_tabs, 0.0, sigma2, rng)
    coords = lat.site_grid.astype(float)
    if spatial_only:
        coords = np.concatenate([coords, np.zeros((lat.total, 1))], axis=1)
    return coords, y, region + 1
