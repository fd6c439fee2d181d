import json

import numpy as np
import pytest
from scipy.linalg import cho_factor, cho_solve

from msgp.data import make_dataset
from msgp.errors import ConfigError, NumericalError
from msgp.kernels import get_family
from msgp.lattice import build_lattice
from msgp.predict import (efficiency_gap, krige_igp, krige_msgp, mean_variance,
                          metrics, posterior_predict, rmse)
from msgp.sampler import SamplerConfig, run_chain
from msgp.simdata import simulate_two_region_1d
from msgp.spectral import covariance_matrix


def brute_conditioning(obs_sites, obs_z, y, tables, weights, sigma2, targets):
    """Oracle: per-component GP conditioning via dense linear algebra."""
    kmat = covariance_matrix(obs_sites, obs_z, obs_sites, obs_z, tables)
    kmat = np.triu(kmat) + np.triu(kmat, 1).T
    kmat = kmat + sigma2 * np.eye(len(y))
    kinv = np.linalg.inv(kmat)
    n_t = len(targets)
    mean = np.zeros(n_t)
    var = np.zeros(n_t)
    for k, w in enumerate(weights):
        if w == 0.0:
            continue
        zt = np.full(n_t, k)
        b = covariance_matrix(targets, zt, obs_sites, obs_z, tables)
        mean += w * (b @ (kinv @ y))
        var += w * (tables[k].values.mean() + sigma2
                    - np.einsum("ij,jk,ik->i", b, kinv, b))
    return mean, var


@pytest.fixture(scope="module")
def instances():
    lat = build_lattice((16,))
    fam = get_family("se", 1)
    tables = [fam.table(lat, np.array([2.0, 1.5])),
              fam.table(lat, np.array([1.0, 4.0]))]
    rng = np.random.default_rng(0)
    out = []
    for _ in range(50):
        n = int(rng.integers(3, 11))
        sites = rng.choice(16, size=n, replace=False)[:, None]
        z = rng.integers(0, 2, size=n)
        y = rng.standard_normal(n)
        w = rng.dirichlet([1.0, 1.0])
        targets = rng.integers(0, 16, size=4)[:, None]
        out.append((sites, z, y, w, 0.3, targets))
    return lat, tables, out


def test_krige_msgp_matches_brute_force(instances):
    _, tables, cases = instances
    for sites, z, y, w, s2, targets in cases:
        m, v = krige_msgp(sites, z, y, tables, w, s2, targets)
        m0, v0 = brute_conditioning(sites, z, y, tables, w, s2, targets)
        assert np.allclose(m, m0, atol=1e-8)
        assert np.allclose(v, v0, atol=1e-8)


def test_krige_igp_single_component_equals_msgp(instances):
    # with one component and weight one, the baseline and mixture kriging
    # condition on exactly the same information
    lat, tables, _ = instances
    rng = np.random.default_rng(1)
    sites = rng.choice(16, size=8, replace=False)[:, None]
    z = np.zeros(8, dtype=int)
    y = rng.standard_normal(8)
    targets = np.arange(16)[:, None]
    m1, v1 = krige_msgp(sites, z, y, tables[:1], [1.0], 0.2, targets)
    m2, v2 = krige_igp(sites, z, y, tables[:1], [1.0], 0.2, targets)
    assert np.allclose(m1, m2, atol=1e-12)
    assert np.allclose(v1, v2, atol=1e-12)


def test_igp_variance_never_below_msgp(instances):
    _, tables, cases = instances
    for sites, z, y, w, s2, targets in cases:
        _, v_m = krige_msgp(sites, z, y, tables, w, s2, targets)
        _, v_i = krige_igp(sites, z, y, tables, w, s2, targets)
        gap = efficiency_gap(v_i, v_m)
        assert np.all(gap >= 0.0)


def test_igp_empty_component_prior_fallback(instances):
    _, tables, _ = instances
    sites = np.array([[0], [5]])
    z = np.zeros(2, dtype=int)  # component 1 has no observations
    y = np.array([1.0, -1.0])
    m, v = krige_igp(sites, z, y, tables, [0.0, 1.0], 0.1, np.array([[8]]))
    assert m[0] == pytest.approx(0.0)
    assert v[0] == pytest.approx(tables[1].values.mean() + 0.1)


def test_krige_validation(instances):
    _, tables, _ = instances
    sites = np.array([[0], [1]])
    with pytest.raises(ConfigError):
        krige_msgp(sites, [0, 0], [1.0], tables, [0.5, 0.5], 0.1, sites)
    with pytest.raises(ConfigError):
        krige_msgp(sites, [0, 2], [1.0, 2.0], tables, [0.5, 0.5], 0.1, sites)
    with pytest.raises(ConfigError):
        krige_msgp(sites, [0, 0], [1.0, 2.0], tables, [1.0], 0.1, sites)
    with pytest.raises(ConfigError):
        krige_msgp(sites, [0, 0], [1.0, 2.0], tables, [0.5, 0.5], -0.1, sites)


def test_efficiency_gap_flags_violation():
    with pytest.raises(NumericalError):
        efficiency_gap(np.array([1.0]), np.array([2.0]))
    # roundoff-scale violations are clamped, not fatal
    gap = efficiency_gap(np.array([1.0]), np.array([1.0 + 1e-12]))
    assert gap[0] == 0.0


@pytest.fixture(scope="module")
def fitted():
    coords, y, tc = simulate_two_region_1d(n=24, split=12, sigma2=0.1, seed=7)
    lat = build_lattice((24,))
    ds = make_dataset(coords, y, lat, trend_degree=1)
    chain = run_chain(ds, SamplerConfig(k0=2, iters=200, seed=3))
    return coords, y, ds, chain


def test_posterior_predict_interpolates_observations(fitted):
    coords, y, ds, chain = fitted
    res = posterior_predict(ds, chain, coords, method="msgp")
    assert res.mean.shape == (24,)
    assert np.all(res.variance >= 0.0)
    # at observed sites the posterior mean should track the data closely
    assert rmse(res.mean, y) < 0.5 * np.std(y)
    res_igp = posterior_predict(ds, chain, coords, method="igp")
    assert mean_variance(res_igp.variance) >= mean_variance(res.variance) - 1e-8


def test_posterior_predict_trend_addback(fitted):
    coords, y, ds, chain = fitted
    # a strong linear trend was removed at fit time; predictions must carry
    # it, so the mean at the two ends differs by roughly the trend span
    lo, hi = coords.min(), coords.max()
    ends = np.array([[lo], [hi]])
    res = posterior_predict(ds, chain, ends)
    span_pred = res.mean[1] - res.mean[0]
    span_trend = ds.trend_at(ends[1:])[0] - ds.trend_at(ends[:1])[0]
    assert span_pred == pytest.approx(span_trend, abs=4 * np.std(ds.y))


def test_posterior_predict_thinning_and_validation(fitted):
    coords, _, ds, chain = fitted
    res = posterior_predict(ds, chain, coords[:3], thin=50)
    assert res.n_draws == len(range(0, chain.n_retained, 50))
    full = posterior_predict(ds, chain, coords[:3], thin=1)
    assert full.n_draws == chain.n_retained
    with pytest.raises(ConfigError):
        posterior_predict(ds, chain, coords[:3], method="bogus")


def test_result_writers(fitted, tmp_path):
    coords, y, ds, chain = fitted
    res = posterior_predict(ds, chain, coords[:5])
    p = tmp_path / "pred.csv"
    res.write_csv(p)
    lines = p.read_text().strip().split("\n")
    assert lines[0] == "x1,mean,variance"
    assert len(lines) == 6
    j = tmp_path / "pred.json"
    res.write_json(j)
    payload = json.loads(j.read_text())
    assert payload["method"] == "msgp"
    assert payload["n_targets"] == 5


def test_metrics_and_rmse():
    assert rmse([1.0, 2.0], [1.0, 4.0]) == pytest.approx(np.sqrt(2.0))
    with pytest.raises(ConfigError):
        rmse([1.0], [1.0, 2.0])
    from msgp.predict import PredictionResult
    res = PredictionResult(raw_coords=np.zeros((2, 1)),
                           mean=np.array([0.0, 1.0]),
                           variance=np.array([4.0, 4.0]),
                           method="msgp", n_draws=1)
    out = metrics(res, truth=np.array([0.0, 0.0]))
    assert out["avg_uncertainty"] == pytest.approx(2.0)
    assert out["rmse"] == pytest.approx(np.sqrt(0.5))
