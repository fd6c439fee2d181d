"""Datasets: raw coordinates, lattice mapping, polynomial trend, CSV interchange.

The interchange format is a headered CSV with coordinate columns ``x1..xd``,
an outcome column ``y`` (optional in target files) and an optional
``true_component`` column carried through from simulators.
"""

from __future__ import annotations

import csv
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .lattice import LatticeModel


def trend_basis(coords, degree):
    """Polynomial basis [1, x_l ..., x_l^2 ...] up to the given degree (<= 2)."""
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    if degree not in (0, 1, 2):
        raise ConfigError(f"trend degree must be 0, 1 or 2, got {degree}")
    cols = [np.ones(coords.shape[0])]
    for p in range(1, degree + 1):
        for l in range(coords.shape[1]):
            cols.append(coords[:, l] ** p)
    return np.column_stack(cols)


def fit_trend(coords, y, degree):
    """Ordinary least squares fit of the polynomial trend.

    Returns (beta, residuals).  The design matrix must be full rank.
    """
    x = trend_basis(coords, degree)
    beta, _, rank, _ = np.linalg.lstsq(x, np.asarray(y, dtype=float), rcond=None)
    if rank < x.shape[1]:
        raise DataError(f"trend design matrix is rank deficient ({rank} < {x.shape[1]})")
    return beta, y - x @ beta


def evaluate_trend(coords, beta, degree):
    return trend_basis(coords, degree) @ beta


def map_to_lattice(raw_coords, lattice: LatticeModel, collision="error"):
    """Map raw coordinates onto integer lattice sites.

    Coordinates already on the integer grid are kept as-is; otherwise they are
    affinely mapped onto [0, m_l - 1] per dimension and rounded.  Two
    observations landing on one site is an error unless ``collision="average"``
    (averaging is handled by the caller, which needs the outcome values).
    """
    raw = np.atleast_2d(np.asarray(raw_coords, dtype=float))
    if raw.shape[1] != lattice.dims:
        raise DataError(
            f"data has {raw.shape[1]} coordinates, lattice has {lattice.dims} dimensions"
        )
    mapped = np.empty_like(raw)
    transform = []
    for l, m in enumerate(lattice.sizes):
        c = raw[:, l]
        lo, hi = c.min(), c.max()
        if lo >= 0 and hi <= m - 1 and np.allclose(c, np.round(c)):
            mapped[:, l] = c
            transform.append((0.0, 1.0))
        else:
            span = hi - lo
            scale = (m - 1) / span if span > 0 else 0.0
            mapped[:, l] = (c - lo) * scale
            transform.append((float(lo), float(scale)))
    coords = np.round(mapped).astype(np.int64)
    idx = np.ravel_multi_index(tuple(coords[:, l] for l in range(lattice.dims)), lattice.sizes)
    if collision == "error":
        uniq, counts = np.unique(idx, return_counts=True)
        if np.any(counts > 1):
            bad = uniq[counts > 1][0]
            rows = np.flatnonzero(idx == bad)
            raise DataError(
                f"observations at rows {rows.tolist()} map to the same lattice site; "
                "re-run with collision mode 'average' or refine the lattice"
            )
    return coords, idx, transform


def apply_transform(raw_coords, transform, lattice: LatticeModel):
    """Map new coordinates onto the lattice with a previously fitted transform."""
    raw = np.atleast_2d(np.asarray(raw_coords, dtype=float))
    if raw.shape[1] != lattice.dims:
        raise DataError(
            f"coordinates have dimension {raw.shape[1]}, lattice has {lattice.dims}"
        )
    coords = np.empty(raw.shape, dtype=np.int64)
    for l, (lo, scale) in enumerate(transform):
        coords[:, l] = np.round((raw[:, l] - lo) * scale)
    sizes = np.array(lattice.sizes)
    if np.any(coords < 0) or np.any(coords >= sizes):
        bad = np.flatnonzero(np.any((coords < 0) | (coords >= sizes), axis=1))
        raise DataError(f"coordinates at rows {bad.tolist()} fall outside the lattice")
    idx = np.ravel_multi_index(tuple(coords[:, l] for l in range(lattice.dims)), lattice.sizes)
    return coords, idx


@dataclass
class Dataset:
    """Observed outcomes tied to lattice sites, with optional de-trending."""

    lattice: LatticeModel
    raw_coords: np.ndarray
    coords: np.ndarray        # integer lattice coordinates (n, d)
    site_idx: np.ndarray      # flat lattice indices (n,)
    y_raw: np.ndarray
    y: np.ndarray             # de-trended outcomes used by the sampler
    trend_degree: int = 0
    beta: np.ndarray = field(default_factory=lambda: np.zeros(1))
    true_component: np.ndarray | None = None
    transform: list = field(default_factory=list)  # per-axis (offset, scale)

    @property
    def n(self):
        return len(self.y)

    def trend_at(self, raw_coords):
        return evaluate_trend(raw_coords, self.beta, self.trend_degree)

    def map_targets(self, raw_coords):
        """Lattice coordinates of prediction targets under the training mapping."""
        t = self.transform or [(0.0, 1.0)] * self.lattice.dims
        return apply_transform(raw_coords, t, self.lattice)


def make_dataset(raw_coords, y, lattice, trend_degree=0, collision="error",
                 true_component=None):
    raw_coords = np.atleast_2d(np.asarray(raw_coords, dtype=float))
    y = np.asarray(y, dtype=float)
    if len(y) != raw_coords.shape[0]:
        raise DataError("coordinate and outcome counts differ")
    coords, idx, transform = map_to_lattice(raw_coords, lattice, collision=collision)
    if collision == "average":
        uniq, inverse = np.unique(idx, return_inverse=True)
        if len(uniq) < len(idx):
            sums = np.bincount(inverse, weights=y)
            counts = np.bincount(inverse)
            y = sums / counts
            keep = np.array([np.flatnonzero(inverse == u)[0] for u in range(len(uniq))])
            raw_coords, coords, idx = raw_coords[keep], coords[keep], uniq
            if true_component is not None:
                true_component = np.asarray(true_component)[keep]
    beta, resid = fit_trend(raw_coords, y, trend_degree)
    return Dataset(
        lattice=lattice, raw_coords=raw_coords, coords=coords, site_idx=idx,
        y_raw=y, y=resid, trend_degree=trend_degree, beta=beta,
        true_component=None if true_component is None else np.asarray(true_component),
        transform=transform,
    )


# ---------------------------------------------------------------------------
# CSV interchange


def atomic_write(path, write_fn, mode="w"):
    """Write through a temp file and rename, so failures leave no partial output."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, mode, newline="" if "b" not in mode else None) as f:
            write_fn(f)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_dataset_csv(path, coords, y=None, true_component=None):
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    d = coords.shape[1]
    header = [f"x{l+1}" for l in range(d)]
    if y is not None:
        header.append("y")
    if true_component is not None:
        header.append("true_component")

    def write(f):
        w = csv.writer(f)
        w.writerow(header)
        for i in range(coords.shape[0]):
            row = [repr(float(c)) for c in coords[i]]
            if y is not None:
                row.append(repr(float(y[i])))
            if true_component is not None:
                row.append(str(int(true_component[i])))
            w.writerow(row)

    atomic_write(path, write)


def read_dataset_csv(path, require_y=True):
    """Read the interchange CSV; returns (coords, y or None, true_component or None)."""
    try:
        f = open(path, newline="")
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from None
    with f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        xcols = [h for h in header if h.startswith("x") and h[1:].isdigit()]
        expected = [f"x{l+1}" for l in range(len(xcols))]
        if not xcols or xcols != expected:
            raise DataError(f"{path}: expected coordinate columns x1..xd, got {header}")
        has_y = "y" in header
        has_tc = "true_component" in header
        if require_y and not has_y:
            raise DataError(f"{path}: missing outcome column 'y'")
        col = {h: i for i, h in enumerate(header)}
        coords, ys, tcs = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                coords.append([float(row[col[c]]) for c in xcols])
                if has_y:
                    ys.append(float(row[col["y"]]))
                if has_tc:
                    tcs.append(int(float(row[col["true_component"]])))
            except (ValueError, IndexError):
                raise DataError(f"{path}: corrupt row at line {lineno}: {row!r}") from None
    coords = np.asarray(coords, dtype=float)
    y = np.asarray(ys) if has_y else None
    tc = np.asarray(tcs) if has_tc else None
    return coords, y, tc
