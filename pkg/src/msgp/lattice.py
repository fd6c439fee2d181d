"""Regular site/frequency lattice and the unitary DFT linking them.

Sites live on the integer grid ``{0..m_l-1}`` per dimension.  Frequencies are
half-integer shifted, ``w_l(t) = 2*pi*(t - m_l/2 + 1/2) / m_l``, so that the
grid contains neither 0 nor +-pi and the transform is square and unitary.
Lattice sizes must be even for the shift to exclude w = 0 exactly.

The transform ``Q`` has entries ``exp(j x.w) / sqrt(|W|)``; ``freq_to_site``
applies Q and ``site_to_freq`` applies its conjugate transpose.  Both are
implemented with FFTs plus per-axis phase factors, so one apply costs
O(|W| log |W|).
"""

from __future__ import annotations

import math
from functools import cached_property

import numpy as np

from .errors import ConfigError


class LatticeModel:
    """Site grid, frequency grid and the unitary DFT between them."""

    def __init__(self, sizes):
        sizes = tuple(int(m) for m in sizes)
        if len(sizes) == 0:
            raise ConfigError("lattice needs at least one dimension")
        for m in sizes:
            if m < 2 or m % 2 != 0:
                raise ConfigError(f"lattice sizes must be even and >= 2, got {sizes}")
        self.sizes = sizes
        self.dims = len(sizes)
        self.total = math.prod(sizes)
        # w_l(t) = 2*pi*(t - m/2 + 1/2)/m, strictly increasing in t
        self.freq_axes = [
            2.0 * np.pi * (np.arange(m) - m / 2 + 0.5) / m for m in sizes
        ]
        # phase P[x] = prod_l exp(j*pi*x_l*(1/m_l - 1)) so that
        # Q c = P * ifftn(c, norm="ortho")
        phases = [np.exp(1j * np.pi * np.arange(m) * (1.0 / m - 1.0)) for m in sizes]
        p = phases[0]
        for q in phases[1:]:
            p = np.multiply.outer(p, q)
        self._phase = p  # shape == sizes

    # -- grids ------------------------------------------------------------

    @cached_property
    def freq_grid(self):
        """Flat (total, dims) array of frequency points, C order."""
        mesh = np.meshgrid(*self.freq_axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @cached_property
    def site_grid(self):
        """Flat (total, dims) array of integer site coordinates, C order."""
        mesh = np.meshgrid(*[np.arange(m) for m in self.sizes], indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @cached_property
    def mirror_index(self):
        """Flat index of -w for each flat frequency index."""
        idx = np.arange(self.total).reshape(self.sizes)
        return idx[tuple(slice(None, None, -1) for _ in self.sizes)].ravel()

    @cached_property
    def canonical_index(self):
        """Flat indices of the canonical half-space (first coordinate > 0).

        Exactly one member of every {w, -w} pair is canonical; the grid has no
        zero coordinates, so the split is exact.
        """
        m0 = self.sizes[0]
        first = self.site_grid[:, 0]  # first-axis index t
        return np.flatnonzero(first >= m0 // 2)

    @cached_property
    def canonical_mirror(self):
        """Flat indices of -w for each canonical frequency."""
        return self.mirror_index[self.canonical_index]

    def site_index(self, coords):
        """Flat C-order index of integer site coordinates (n, dims)."""
        coords = np.asarray(coords, dtype=np.int64)
        if coords.ndim == 1:
            coords = coords[None, :]
        if coords.shape[-1] != self.dims:
            raise ConfigError(
                f"site coordinates have dimension {coords.shape[-1]}, lattice has {self.dims}"
            )
        if np.any(coords < 0) or np.any(coords >= np.array(self.sizes)):
            raise ConfigError("site coordinates fall outside the lattice")
        return np.ravel_multi_index(tuple(coords[..., l] for l in range(self.dims)), self.sizes)

    # -- transforms --------------------------------------------------------

    def _check_len(self, v):
        if v.shape[-1] != self.total:
            raise ConfigError(
                f"vector length {v.shape[-1]} does not match lattice size {self.total}"
            )

    def freq_to_site(self, coeffs):
        """Apply Q: frequency coefficients -> site values.

        Accepts flat arrays with arbitrary leading batch dimensions.
        """
        coeffs = np.asarray(coeffs)
        self._check_len(coeffs)
        batch = coeffs.shape[:-1]
        c = coeffs.reshape(batch + self.sizes)
        axes = tuple(range(-self.dims, 0))
        out = self._phase * np.fft.ifftn(c, axes=axes, norm="ortho")
        return out.reshape(batch + (self.total,))

    def site_to_freq(self, values):
        """Apply Q*: site values -> frequency coefficients (adjoint of Q)."""
        values = np.asarray(values)
        self._check_len(values)
        batch = values.shape[:-1]
        v = (values.reshape(batch + self.sizes)) * np.conj(self._phase)
        axes = tuple(range(-self.dims, 0))
        out = np.fft.fftn(v, axes=axes, norm="ortho")
        return out.reshape(batch + (self.total,))

    def __repr__(self):
        return f"LatticeModel(sizes={self.sizes})"


def build_lattice(sizes) -> LatticeModel:
    return LatticeModel(sizes)
