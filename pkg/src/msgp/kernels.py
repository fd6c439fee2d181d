"""Stationary covariance families and their spectral densities.

Each family provides a lag-domain evaluator and a spectral density sampled on
a :class:`~msgp.lattice.LatticeModel` frequency grid.  Tables are rescaled at
construction so that the discrete inversion identity
``mean(values) == K(0) == phi`` holds to machine precision, which pins down
the continuous-to-discrete normalization and makes ``phi`` the exact marginal
variance.

All kernels take lag arguments in lattice units; unit conversion happens at
data ingestion.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError
from .lattice import LatticeModel

log = logging.getLogger(__name__)

# negative FFT mass up to this fraction of the peak is clamped to zero;
# anything larger is an error (the model needs g >= 0 for g^{1/2} to exist)
NEGATIVE_CLAMP_TOL = 1e-6
# warn when spectral mass at boundary frequencies exceeds this fraction of
# the peak (the lattice approximation assumes g ~ 0 outside (-pi, pi)^d)
ALIASING_WARN_TOL = 1e-3


# ---------------------------------------------------------------------------
# parameter containers


@dataclass(frozen=True)
class SEKernelParams:
    """Anisotropic squared-exponential parameters.

    phi is the marginal variance, rho one length-scale per input dimension.
    """

    phi: float
    rho: tuple

    def __post_init__(self):
        if self.phi <= 0:
            raise ConfigError(f"phi must be positive, got {self.phi}")
        if len(self.rho) == 0 or any(r <= 0 for r in self.rho):
            raise ConfigError(f"all length-scales must be positive, got {self.rho}")

    @property
    def dims(self):
        return len(self.rho)

    def as_vector(self):
        return np.array([self.phi, *self.rho], dtype=float)


@dataclass(frozen=True)
class NonSeparableSTParams:
    """Space-time kernel parameters with multiplicative interaction scales."""

    phi: float
    rho1: float
    rho2: float
    rho3: float
    c1: float
    c2: float

    def __post_init__(self):
        vals = (self.phi, self.rho1, self.rho2, self.rho3, self.c1, self.c2)
        if any(v <= 0 for v in vals):
            raise ConfigError(f"all space-time kernel parameters must be positive, got {vals}")

    def as_vector(self):
        return np.array([self.phi, self.rho1, self.rho2, self.rho3, self.c1, self.c2])


# ---------------------------------------------------------------------------
# lag-domain evaluators and closed-form densities


def _check_dim(vec, d, what):
    vec = np.asarray(vec, dtype=float)
    if vec.shape[-1] != d:
        raise ConfigError(f"{what} has dimension {vec.shape[-1]}, expected {d}")
    return vec


def se_covariance(delta, params: SEKernelParams):
    """phi * exp(-sum_l delta_l^2 / (2 rho_l^2)); even and positive."""
    delta = _check_dim(delta, params.dims, "lag")
    rho = np.asarray(params.rho)
    return params.phi * np.exp(-0.5 * np.sum((delta / rho) ** 2, axis=-1))


def se_spectral_density(w, params: SEKernelParams):
    """Closed-form Fourier transform of the squared-exponential kernel."""
    w = _check_dim(w, params.dims, "frequency")
    rho = np.asarray(params.rho)
    d = params.dims
    amp = params.phi * (2.0 * np.pi) ** (d / 2.0) * np.prod(rho)
    return amp * np.exp(-0.5 * np.sum((rho * w) ** 2, axis=-1))


def st_covariance(delta, params: NonSeparableSTParams):
    """Space-time kernel with interaction terms coupling each spatial lag to |dt|."""
    delta = _check_dim(delta, 3, "lag")
    d1, d2, dt = delta[..., 0], delta[..., 1], np.abs(delta[..., 2])
    spatial = -(d1**2) / (2 * params.rho1**2) - (d2**2) / (2 * params.rho2**2)
    temporal = -dt / params.rho3
    interact = -(d1**2) * dt / params.c1 - (d2**2) * dt / params.c2
    return params.phi * np.exp(spatial + temporal + interact)


# ---------------------------------------------------------------------------
# spectral density tables


@dataclass(frozen=True)
class SpectralDensityTable:
    """Nonnegative spectral density sampled on a lattice frequency grid.

    ``values`` is flat in the lattice's C order and rescaled so that
    ``values.mean() == target marginal variance``.
    """

    lattice: LatticeModel
    values: np.ndarray
    params_key: str

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.values.shape != (self.lattice.total,):
            raise ConfigError("table length does not match lattice size")

    @property
    def sqrt_values(self):
        return np.sqrt(self.values)


def make_table(lattice: LatticeModel, raw_values, target_var, params_key="",
               warn=True) -> SpectralDensityTable:
    """Clamp, validate and variance-rescale raw density values into a table."""
    g = np.asarray(raw_values, dtype=float).copy()
    if g.shape != (lattice.total,):
        raise ConfigError("raw density length does not match lattice size")
    peak = g.max(initial=0.0)
    if peak < 0:
        raise NumericalError("spectral density is negative everywhere")
    neg = g < 0
    if np.any(neg):
        worst = g.min()
        if -worst > NEGATIVE_CLAMP_TOL * peak:
            widx = int(np.argmin(g))
            w = lattice.freq_grid[widx]
            raise NumericalError(
                f"spectral density negative beyond tolerance: g={worst:.3e} at w={w} "
                f"(peak {peak:.3e})"
            )
        g[neg] = 0.0
    total_mass = g.sum()
    if target_var > 0:
        if total_mass <= 0:
            raise NumericalError("spectral density has zero mass but positive target variance")
        g *= target_var * lattice.total / total_mass
    # aliasing guard: density should have decayed at the grid boundary
    if warn and peak > 0:
        boundary = _boundary_mask(lattice)
        bmax = g[boundary].max()
        if bmax > ALIASING_WARN_TOL * g.max():
            log.warning(
                "spectral density not negligible at boundary frequencies "
                "(%.3e vs peak %.3e); lattice may be too coarse", bmax, g.max()
            )
    return SpectralDensityTable(lattice=lattice, values=g, params_key=params_key)


def _boundary_mask(lattice: LatticeModel):
    site = lattice.site_grid  # integer index grid, reused for frequency indices
    mask = np.zeros(lattice.total, dtype=bool)
    for l, m in enumerate(lattice.sizes):
        mask |= (site[:, l] == 0) | (site[:, l] == m - 1)
    return mask


def numeric_spectral_density(kernel_fn, lattice: LatticeModel):
    """Discrete Fourier transform of a lag-domain kernel sampled on the lattice.

    ``kernel_fn`` maps an (n, d) array of lags to n values and must be real,
    even per axis and effectively supported inside the centered lag window.
    Returns raw (unscaled, unclamped) density values, flat in C order.
    """
    sizes = lattice.sizes
    lag_axes = [np.arange(m) - m // 2 for m in sizes]
    mesh = np.meshgrid(*lag_axes, indexing="ij")
    lags = np.stack([m.ravel() for m in mesh], axis=-1).astype(float)
    kc = np.asarray(kernel_fn(lags), dtype=float).reshape(sizes)
    # drop the unpaired -m/2 slice on each axis so the window is symmetric
    # (keeps the transform exactly real for even kernels)
    for l in range(len(sizes)):
        sl = [slice(None)] * len(sizes)
        sl[l] = 0
        kc[tuple(sl)] = 0.0
    # pre/post phases translate the plain FFT to the half-integer-shifted grid
    arr = kc.astype(complex)
    for l, m in enumerate(sizes):
        pre = np.exp(-1j * np.pi * np.arange(m) * (1.0 / m - 1.0))
        shape = [1] * len(sizes)
        shape[l] = m
        arr = arr * pre.reshape(shape)
    arr = np.fft.fftn(arr)
    for l, m in enumerate(sizes):
        post = np.exp(1j * np.pi * (np.arange(m) - m / 2 + 0.5))
        shape = [1] * len(sizes)
        shape[l] = m
        arr = arr * post.reshape(shape)
    g = arr.ravel()
    scale = max(np.abs(g).max(), 1.0)
    if np.abs(g.imag).max() > 1e-6 * scale:
        raise NumericalError("numeric spectral density has a non-negligible imaginary part")
    return g.real


# ---------------------------------------------------------------------------
# kernel families (registry used by the sampler and the CLI)


class SquaredExponentialFamily:
    """phi plus one length-scale per dimension; closed-form spectral density."""

    name = "se"

    def __init__(self, dims):
        self.dims = dims

    @property
    def param_names(self):
        return ["phi"] + [f"rho{l+1}" for l in range(self.dims)]

    @property
    def n_params(self):
        return 1 + self.dims

    def default_bounds(self):
        return np.full(self.n_params, 0.1), np.full(self.n_params, 100.0)

    def params(self, vec) -> SEKernelParams:
        vec = np.asarray(vec, dtype=float)
        return SEKernelParams(phi=float(vec[0]), rho=tuple(vec[1:]))

    def covariance(self, delta, vec):
        return se_covariance(delta, self.params(vec))

    def table(self, lat: LatticeModel, vec, warn=True) -> SpectralDensityTable:
        p = self.params(vec)
        raw = se_spectral_density(lat.freq_grid, p)
        return make_table(lat, raw, target_var=p.phi, params_key=_key(self.name, vec),
                          warn=warn)


class NonSeparableSTFamily:
    """Three-dimensional space-time kernel; density evaluated numerically."""

    name = "st_nonseparable"
    dims = 3

    def __init__(self, dims=3):
        if dims != 3:
            raise ConfigError("the space-time kernel is defined for 3 input dimensions")

    param_names = ["phi", "rho1", "rho2", "rho3", "c1", "c2"]
    n_params = 6

    def default_bounds(self):
        lo = np.array([0.1, 0.1, 0.1, 0.1, 1.0, 1.0])
        hi = np.array([100.0, 100.0, 100.0, 100.0, 1e5, 1e5])
        return lo, hi

    def params(self, vec) -> NonSeparableSTParams:
        vec = np.asarray(vec, dtype=float)
        return NonSeparableSTParams(*[float(v) for v in vec])

    def covariance(self, delta, vec):
        return st_covariance(delta, self.params(vec))

    def table(self, lat: LatticeModel, vec, warn=True) -> SpectralDensityTable:
        p = self.params(vec)
        raw = numeric_spectral_density(lambda lags: st_covariance(lags, p), lat)
        return make_table(lat, raw, target_var=p.phi, params_key=_key(self.name, vec),
                          warn=warn)


def _key(name, vec):
    h = hashlib.sha256(np.asarray(vec, dtype=float).tobytes()).hexdigest()[:16]
    return f"{name}:{h}"


_FAMILIES = {
    "se": SquaredExponentialFamily,
    "st_nonseparable": NonSeparableSTFamily,
}


def get_family(name, dims):
    """Look up a kernel family by its configuration key."""
    try:
        cls = _FAMILIES[name]
    except KeyError:
        raise ConfigError(f"unknown kernel family {name!r}; known: {sorted(_FAMILIES)}") from None
    return cls(dims)


def register_family(name, cls):
    _FAMILIES[name] = cls


def params_to_mapping(family, vec):
    """Flat name -> value map used by the CLI config format."""
    return {n: float(v) for n, v in zip(family.param_names, np.asarray(vec, dtype=float))}


def mapping_to_params(family, mapping):
    try:
        return np.array([float(mapping[n]) for n in family.param_names])
    except KeyError as e:
        raise ConfigError(f"missing kernel parameter {e.args[0]!r}") from None
