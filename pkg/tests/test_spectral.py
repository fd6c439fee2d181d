import numpy as np
import pytest

from msgp.errors import ConfigError
from msgp.kernels import get_family
from msgp.lattice import build_lattice
from msgp.spectral import (SpectralCoefficients, assemble_covariance,
                           coefficients_full, covariance_matrix,
                           cross_covariance, lag_covariance_table,
                           simulate_field)


@pytest.fixture(scope="module")
def setup_1d():
    lat = build_lattice((16,))
    fam = get_family("se", 1)
    t1 = fam.table(lat, np.array([2.0, 2.0]))
    t2 = fam.table(lat, np.array([1.5, 4.0]))
    return lat, t1, t2


def brute_cross_cov(lat, xi, xj, gi, gj):
    w = lat.freq_grid
    delta = np.asarray(xi, dtype=float) - np.asarray(xj, dtype=float)
    return float(np.mean(np.cos(w @ delta) * np.sqrt(gi.values * gj.values)))


def test_coefficients_full_conjugate_symmetry():
    rng = np.random.default_rng(0)
    lat = build_lattice((6, 4))
    nc = lat.canonical_index.size
    a, b = rng.standard_normal(nc), rng.standard_normal(nc)
    c = coefficients_full(lat, a, b)
    assert np.allclose(c[lat.mirror_index], np.conj(c), atol=1e-14)
    assert np.allclose(np.abs(c[lat.canonical_index]) ** 2,
                       (a**2 + b**2) / 2.0)
    sc = SpectralCoefficients(lattice=lat, a=a, b=b)
    assert np.allclose(sc.full(), c)
    with pytest.raises(ConfigError):
        SpectralCoefficients(lattice=lat, a=a[:-1], b=b)


def test_cross_covariance_matches_direct_sum(setup_1d):
    lat, t1, t2 = setup_1d
    for xi, xj, gi, gj in [((0,), (3,), t1, t1), ((2,), (7,), t1, t2),
                           ((5,), (5,), t2, t2)]:
        assert cross_covariance(np.array(xi), np.array(xj), gi, gj) == pytest.approx(
            brute_cross_cov(lat, xi, xj, gi, gj), abs=1e-12)


def test_lag_table_matches_entrywise(setup_1d):
    lat, t1, t2 = setup_1d
    table = lag_covariance_table(t1, t2)
    for lag in range(lat.sizes[0]):
        expected = brute_cross_cov(lat, (lag,), (0,), t1, t2)
        assert table[lag] == pytest.approx(expected, abs=1e-12)


def test_covariance_matrix_matches_entrywise(setup_1d):
    lat, t1, t2 = setup_1d
    rng = np.random.default_rng(3)
    sites = rng.integers(0, 16, size=(7, 1))
    z = rng.integers(0, 2, size=7)
    tables = [t1, t2]
    m = covariance_matrix(sites, z, sites, z, tables)
    for i in range(7):
        for j in range(7):
            expected = brute_cross_cov(lat, sites[i], sites[j],
                                       tables[z[i]], tables[z[j]])
            assert m[i, j] == pytest.approx(expected, abs=1e-12)


def test_assemble_covariance_symmetric_psd(setup_1d):
    lat, t1, t2 = setup_1d
    site_tables = [t1 if i < 8 else t2 for i in range(16)]
    k = assemble_covariance(lat.site_grid, site_tables, 0.3)
    assert np.array_equal(k, k.T)
    assert np.linalg.eigvalsh(k).min() > 0
    # diagonal carries marginal variance + noise
    assert k[0, 0] == pytest.approx(t1.values.mean() + 0.3, rel=1e-12)
    assert k[15, 15] == pytest.approx(t2.values.mean() + 0.3, rel=1e-12)


def test_assemble_covariance_validation(setup_1d):
    lat, t1, _ = setup_1d
    with pytest.raises(ConfigError):
        assemble_covariance(lat.site_grid, [t1] * 15, 0.1)
    with pytest.raises(ConfigError):
        assemble_covariance(lat.site_grid, [t1] * 16, -0.1)


def test_simulate_field_is_real_and_deterministic(setup_1d):
    lat, t1, t2 = setup_1d
    site_tables = [t1 if i % 2 == 0 else t2 for i in range(16)]
    y1 = simulate_field(lat, site_tables, 1.5, 0.1, np.random.default_rng(7))
    y2 = simulate_field(lat, site_tables, 1.5, 0.1, np.random.default_rng(7))
    assert np.array_equal(y1, y2)
    assert y1.shape == (16,)
    assert np.isrealobj(y1)


def test_simulate_field_empirical_covariance(setup_1d):
    # the generated law must match the assembled covariance; 6000 reps on a
    # small lattice keeps Monte-Carlo error tight enough for a 5-SE bound
    lat, t1, t2 = setup_1d
    site_tables = [t1 if i < 8 else t2 for i in range(16)]
    sigma2 = 0.2
    truth = assemble_covariance(lat.site_grid, site_tables, sigma2)
    reps = 6000
    y = simulate_field(lat, site_tables, 0.0, sigma2, np.random.default_rng(11),
                       reps=reps)
    emp = y.T @ y / reps
    # SE of a covariance entry ~ sqrt((Kii Kjj + Kij^2)/reps)
    se = np.sqrt((np.outer(np.diag(truth), np.diag(truth)) + truth**2) / reps)
    assert np.all(np.abs(emp - truth) < 5 * se)


def test_simulate_field_mean_and_batch(setup_1d):
    lat, t1, _ = setup_1d
    y = simulate_field(lat, [t1] * 16, 3.0, 0.0, np.random.default_rng(1),
                       reps=4000)
    assert y.shape == (4000, 16)
    assert np.abs(y.mean() - 3.0) < 0.1
