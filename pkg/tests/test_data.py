import numpy as np
import pytest

from msgp.data import (Dataset, apply_transform, atomic_write, fit_trend,
                       make_dataset, map_to_lattice, read_dataset_csv,
                       trend_basis, write_dataset_csv)
from msgp.errors import ConfigError, DataError
from msgp.lattice import build_lattice


def test_trend_basis_and_exact_fit():
    rng = np.random.default_rng(0)
    coords = rng.uniform(0, 10, size=(30, 2))
    assert trend_basis(coords, 0).shape == (30, 1)
    assert trend_basis(coords, 1).shape == (30, 3)
    assert trend_basis(coords, 2).shape == (30, 5)
    with pytest.raises(ConfigError):
        trend_basis(coords, 3)
    y = 2.0 + 0.5 * coords[:, 0] - 1.5 * coords[:, 1] + 0.25 * coords[:, 0] ** 2
    beta, resid = fit_trend(coords, y, 2)
    assert np.allclose(resid, 0.0, atol=1e-8)
    assert beta[0] == pytest.approx(2.0, abs=1e-8)


def test_trend_rank_deficiency():
    coords = np.zeros((5, 1))  # constant column duplicates the intercept
    with pytest.raises(DataError):
        fit_trend(coords, np.arange(5.0), 1)


def test_map_to_lattice_integer_passthrough():
    lat = build_lattice((8, 8))
    raw = np.array([[0.0, 0.0], [3.0, 7.0], [7.0, 2.0]])
    coords, idx, transform = map_to_lattice(raw, lat)
    assert np.array_equal(coords, raw.astype(int))
    assert transform == [(0.0, 1.0), (0.0, 1.0)]
    assert np.array_equal(idx, [0, 3 * 8 + 7, 7 * 8 + 2])


def test_map_to_lattice_affine_and_collision():
    lat = build_lattice((4,))
    raw = np.array([[10.0], [11.0], [13.0]])
    coords, idx, transform = map_to_lattice(raw, lat)
    assert np.array_equal(coords.ravel(), [0, 1, 3])
    (lo, scale), = transform
    assert lo == 10.0 and scale == pytest.approx(1.0)
    with pytest.raises(DataError, match="same lattice site"):
        map_to_lattice(np.array([[10.0], [10.1], [13.0]]), lat)


def test_collision_averaging():
    lat = build_lattice((4,))
    raw = np.array([[0.0], [0.0], [2.0]])
    ds = make_dataset(raw, np.array([1.0, 3.0, 5.0]), lat, collision="average",
                      true_component=np.array([1, 1, 2]))
    assert ds.n == 2
    assert ds.y_raw[0] == pytest.approx(2.0)  # mean of the colliding pair
    assert np.array_equal(ds.true_component, [1, 2])


def test_apply_transform_bounds():
    lat = build_lattice((4,))
    coords, idx = apply_transform(np.array([[1.0], [3.0]]), [(0.0, 1.0)], lat)
    assert np.array_equal(idx, [1, 3])
    with pytest.raises(DataError, match="rows \\[1\\]"):
        apply_transform(np.array([[1.0], [9.0]]), [(0.0, 1.0)], lat)


def test_dataset_detrending_and_target_mapping():
    lat = build_lattice((10,))
    coords = np.arange(10, dtype=float)[:, None]
    y = 5.0 + 2.0 * coords[:, 0] + np.random.default_rng(0).normal(0, 0.1, 10)
    ds = make_dataset(coords, y, lat, trend_degree=1)
    assert np.abs(ds.y.mean()) < 1e-10  # residuals are centered
    assert np.allclose(ds.y + ds.trend_at(coords), y)
    tcoords, tidx = ds.map_targets(np.array([[4.0]]))
    assert tidx[0] == 4


def test_csv_roundtrip_bytes(tmp_path):
    rng = np.random.default_rng(5)
    coords = rng.uniform(-3, 17, size=(20, 2))
    y = rng.standard_normal(20)
    tc = rng.integers(1, 4, size=20)
    p = tmp_path / "d.csv"
    write_dataset_csv(p, coords, y, tc)
    c2, y2, tc2 = read_dataset_csv(p)
    assert np.array_equal(c2, coords)  # repr round-trip is exact
    assert np.array_equal(y2, y)
    assert np.array_equal(tc2, tc)
    blob1 = p.read_bytes()
    write_dataset_csv(p, c2, y2, tc2)
    assert p.read_bytes() == blob1


def test_csv_error_reporting(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x1,y\n1.0,2.0\n1.5,oops\n")
    with pytest.raises(DataError, match="line 3"):
        read_dataset_csv(p)
    p.write_text("")
    with pytest.raises(DataError, match="empty"):
        read_dataset_csv(p)
    p.write_text("a,b\n1,2\n")
    with pytest.raises(DataError, match="x1"):
        read_dataset_csv(p)
    p.write_text("x1\n1.0\n")
    with pytest.raises(DataError, match="'y'"):
        read_dataset_csv(p)
    coords, y, tc = read_dataset_csv(p, require_y=False)
    assert y is None and tc is None and coords.shape == (1, 1)


def test_atomic_write_failure_leaves_nothing(tmp_path):
    p = tmp_path / "out.txt"

    def boom(f):
        f.write("partial")
        raise RuntimeError("disk on fire")

    with pytest.raises(RuntimeError):
        atomic_write(p, boom)
    assert not p.exists()
    assert list(tmp_path.iterdir()) == []  # no stray temp files
