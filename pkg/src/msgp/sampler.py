"""MCMC for the mixed-stationarity model via full-lattice data augmentation.

Every sweep runs six updates: component assignments, augmented lattice
values, spectral coefficients, noise variance, component parameters
(adaptive Metropolis-Hastings targeting a 0.234 acceptance rate) and mixture
weights.  The augmented likelihood factorizes over frequencies, so a sweep
costs O(k0 * |W| log |W|) and never inverts a matrix.

Component parameters are proposed with a truncated uniform random walk in
log-parameter space; the prior is uniform on the same log box, and the exact
(asymmetric near the boundary) Hastings correction is applied.
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import Dataset, atomic_write
from .errors import ConfigError, DataError, NumericalError
from .kernels import get_family
from .mixture import occupancy, sample_weights_posterior
from .spectral import coefficients_full

log = logging.getLogger(__name__)

ACCEPT_TARGET = 0.234


@dataclass
class SamplerConfig:
    kernel: str = "se"
    k0: int = 20
    alpha: float = 0.5
    iters: int = 2000
    seed: int = 0
    adapt_window: int = 50
    init_step: float = 0.5            # log-domain proposal half-width
    bounds_lo: np.ndarray | None = None
    bounds_hi: np.ndarray | None = None
    sigma2_shape_literal: bool = False  # IG shape from n_obs instead of k0*|W|
    init: str = "prior"                # "prior" (overdispersed) or "warm"
    init_components: int | None = None  # groups for warm init (default min(k0, 3))
    init_rounds: int = 3
    init_pin_sweeps: int = 150
    init_label_sweeps: int = 250

    def validate(self):
        if self.iters < 2:
            raise ConfigError("need at least 2 iterations")
        if self.k0 < 1 or self.alpha <= 0:
            raise ConfigError("need k0 >= 1 and alpha > 0")
        if self.adapt_window < 1 or self.init_step <= 0:
            raise ConfigError("adapt_window and init_step must be positive")
        if self.init not in ("prior", "warm"):
            raise ConfigError(f"unknown initialization {self.init!r}")
        if self.init_rounds < 1 or self.init_pin_sweeps < 0 or self.init_label_sweeps < 0:
            raise ConfigError("warm-start schedule values must be positive")


@dataclass
class MixtureState:
    """Full MCMC state; ``g`` caches the spectral tables of ``thetas``."""

    z: np.ndarray           # (n,) component per observation
    thetas: np.ndarray      # (k0, P) kernel parameters
    g: np.ndarray           # (k0, |W|) cached spectral density values
    weights: np.ndarray     # (k0,)
    a: np.ndarray           # (|W|/2,) canonical half-space coefficients
    b: np.ndarray
    sigma2: float
    ytilde: np.ndarray      # (k0, |W|) augmented lattice values
    c_full: np.ndarray | None = None  # cached full-grid coefficient vector


@dataclass
class AdaptationState:
    step: np.ndarray        # (k0, P) log-domain half-widths
    accept: np.ndarray = field(default_factory=lambda: np.zeros(0))
    propose: np.ndarray = field(default_factory=lambda: np.zeros(0))
    window: int = 50
    windows_done: int = 0

    def __post_init__(self):
        k0 = self.step.shape[0]
        if self.accept.size == 0:
            self.accept = np.zeros(k0)
        if self.propose.size == 0:
            self.propose = np.zeros(k0)


def adapt_step_sizes(adapt: AdaptationState) -> AdaptationState:
    """Robbins-Monro update of the proposal half-widths toward 0.234."""
    t = adapt.windows_done + 1
    eta = min(1.0, 10.0 / t)
    rate = np.divide(adapt.accept, adapt.propose,
                     out=np.full_like(adapt.accept, ACCEPT_TARGET),
                     where=adapt.propose > 0)
    step = adapt.step * np.exp(eta * (rate - ACCEPT_TARGET))[:, None]
    return AdaptationState(step=step, accept=np.zeros_like(adapt.accept),
                           propose=np.zeros_like(adapt.propose),
                           window=adapt.window, windows_done=t)


@dataclass
class PosteriorChain:
    """Post-burn-in snapshots plus chain diagnostics."""

    kernel: str
    lattice_sizes: tuple
    k0: int
    alpha: float
    seed: int
    thetas: np.ndarray      # (R, k0, P)
    weights: np.ndarray     # (R, k0)
    z: np.ndarray           # (R, n)
    sigma2: np.ndarray      # (R,)
    loglik: np.ndarray      # (iters,)
    accept_rates: np.ndarray  # (k0,) over the retained half
    final_step: np.ndarray

    @property
    def n_retained(self):
        return self.sigma2.shape[0]

    def occupancy_fractions(self):
        n = self.z.shape[1]
        counts = np.stack([np.bincount(zi, minlength=self.k0) for zi in self.z])
        return counts.mean(axis=0) / n

    def component_order(self):
        """Components sorted by descending posterior-mean occupancy."""
        return np.argsort(-self.occupancy_fractions(), kind="stable")

    def assignment_probabilities(self):
        """(n, k0) posterior probability of each site's assignment, in
        component_order."""
        order = self.component_order()
        r, n = self.z.shape
        probs = np.zeros((n, self.k0))
        for zi in self.z:
            probs[np.arange(n), zi] += 1.0
        return (probs / r)[:, order]


class MsgpSampler:
    """Runs the six-step sweep over a :class:`MixtureState`."""

    def __init__(self, dataset: Dataset, config: SamplerConfig):
        config.validate()
        self.dataset = dataset
        self.config = config
        self.lattice = dataset.lattice
        self.family = get_family(config.kernel, self.lattice.dims)
        lo, hi = self.family.default_bounds()
        if config.bounds_lo is not None:
            lo = np.asarray(config.bounds_lo, dtype=float)
        if config.bounds_hi is not None:
            hi = np.asarray(config.bounds_hi, dtype=float)
        if lo.shape != (self.family.n_params,) or hi.shape != lo.shape or np.any(lo >= hi):
            raise ConfigError("prior bounds must be per-parameter with lo < hi")
        if np.any(lo <= 0):
            raise ConfigError("parameters are positive; bounds must be > 0")
        self.log_lo = np.log(lo)
        self.log_hi = np.log(hi)

    # -- state construction -------------------------------------------------

    def _tables(self, thetas):
        # proposal/prior tables are transient, so skip the coarse-lattice warning
        return np.stack([self.family.table(self.lattice, t, warn=False).values
                         for t in thetas])

    def _draw_prior_thetas(self, rng):
        k0, p = self.config.k0, self.family.n_params
        return np.exp(rng.uniform(self.log_lo, self.log_hi, size=(k0, p)))

    def init_state(self, rng) -> MixtureState:
        """Overdispersed but proper start: uniform z, prior theta*/a/b,
        sigma2 at a tenth of the outcome variance."""
        n, k0 = self.dataset.n, self.config.k0
        nc = self.lattice.canonical_index.size
        z = rng.integers(0, k0, size=n)
        thetas = self._draw_prior_thetas(rng)
        g = self._tables(thetas)
        weights = sample_weights_posterior(self.config.alpha, k0, np.zeros(k0), rng).p
        a = rng.standard_normal(nc)
        b = rng.standard_normal(nc)
        var = float(np.var(self.dataset.y)) if n > 1 else 1.0
        sigma2 = 0.1 * var if var > 0 else 1.0
        state = MixtureState(z=z, thetas=thetas, g=g, weights=weights,
                             a=a, b=b, sigma2=sigma2,
                             ytilde=np.zeros((k0, self.lattice.total)))
        f = self.component_fields(state)
        state.ytilde = f + math.sqrt(sigma2) * rng.standard_normal(f.shape)
        self._pin(state)
        return state

    def prior_draw(self, rng):
        """Joint forward draw of (state, observations) from the model.

        Used by joint-distribution (Geweke-style) validation.
        """
        n, k0 = self.dataset.n, self.config.k0
        nc = self.lattice.canonical_index.size
        weights = rng.dirichlet(np.full(k0, self.config.alpha / k0))
        z = np.searchsorted(np.cumsum(weights), rng.random(n))
        z = np.minimum(z, k0 - 1)
        thetas = self._draw_prior_thetas(rng)
        g = self._tables(thetas)
        a = rng.standard_normal(nc)
        b = rng.standard_normal(nc)
        sigma2 = 1.0 / rng.gamma(2.0)  # IG(2, 1)
        state = MixtureState(z=z, thetas=thetas, g=g, weights=weights,
                             a=a, b=b, sigma2=sigma2,
                             ytilde=np.zeros((k0, self.lattice.total)))
        f = self.component_fields(state)
        state.ytilde = f + math.sqrt(sigma2) * rng.standard_normal(f.shape)
        y = state.ytilde[z, self.dataset.site_idx].copy()
        return state, y

    # -- shared pieces -------------------------------------------------------

    def _coeffs(self, state):
        if state.c_full is None:
            state.c_full = coefficients_full(self.lattice, state.a, state.b)
        return state.c_full

    def component_fields(self, state):
        """Real per-component lattice fields Q G^{1/2} c, one inverse FFT each."""
        c = self._coeffs(state)
        f = self.lattice.freq_to_site(np.sqrt(state.g) * c[None, :])
        scale = max(1.0, np.abs(f.real).max())
        if np.abs(f.imag).max() > 1e-9 * scale:
            raise NumericalError("component field has a non-negligible imaginary part")
        return f.real

    def _pin(self, state):
        state.ytilde[state.z, self.dataset.site_idx] = self.dataset.y

    def _pinned_mask(self, state):
        m = np.zeros_like(state.ytilde, dtype=bool)
        m[state.z, self.dataset.site_idx] = True
        return m

    def _residual_norms(self, state, r):
        resid = r - np.sqrt(state.g) * self._coeffs(state)[None, :]
        return np.sum(resid.real**2 + resid.imag**2, axis=1)

    # -- the six updates ------------------------------------------------------

    def step1_update_assignments(self, state, fields, rng):
        y = self.dataset.y
        fy = fields[:, self.dataset.site_idx].T  # (n, k0)
        with np.errstate(divide="ignore"):
            logw = np.log(state.weights)[None, :] - 0.5 * (y[:, None] - fy) ** 2 / state.sigma2
        gumbel = -np.log(-np.log(rng.random(logw.shape)))
        state.z = np.argmax(logw + gumbel, axis=1)
        self._pin(state)

    def step2_update_latent(self, state, fields, rng):
        noise = rng.standard_normal(state.ytilde.shape)
        free = ~self._pinned_mask(state)
        state.ytilde = np.where(free, fields + math.sqrt(state.sigma2) * noise, state.ytilde)

    def step3_update_coefficients(self, state, rng):
        """Conjugate Gaussian update of (a, b) per canonical frequency.

        Returns the per-component frequency representation of ytilde for
        reuse by the later steps.
        """
        lat = self.lattice
        r = lat.site_to_freq(state.ytilde)        # (k0, |W|)
        canon = lat.canonical_index
        gc = state.g[:, canon]
        sqgc = np.sqrt(gc)
        s2 = state.sigma2
        tau = 1.0 / (gc.sum(axis=0) / s2 + 1.0)
        mu_a = tau * math.sqrt(2.0) * np.sum(sqgc * r.real[:, canon], axis=0) / s2
        mu_b = tau * math.sqrt(2.0) * np.sum(sqgc * r.imag[:, canon], axis=0) / s2
        sd = np.sqrt(tau)
        state.a = mu_a + sd * rng.standard_normal(len(canon))
        state.b = mu_b + sd * rng.standard_normal(len(canon))
        state.c_full = None
        return r

    def step4_update_sigma2(self, state, r, rng):
        """Inverse-gamma update; returns per-component residual norms."""
        rk = self._residual_norms(state, r)
        if self.config.sigma2_shape_literal:
            count = self.dataset.n
        else:
            count = self.config.k0 * self.lattice.total
        shape = count / 2.0 + 2.0
        scale = rk.sum() / 2.0 + 1.0
        state.sigma2 = scale / rng.gamma(shape)
        return rk

    def step5_update_thetas(self, state, r, rk, adapt, rng):
        """Blockwise MH on each component's parameters.

        Components with no assigned observations get an exact blocked Gibbs
        draw instead: their (theta, ytilde) conditional factorizes into the
        parameter prior times the latent Gaussian, so redrawing both keeps
        the chain exact while letting vacant components explore freely.
        """
        c = self._coeffs(state)
        counts = np.bincount(state.z, minlength=self.config.k0)
        for k in range(self.config.k0):
            if counts[k] == 0:
                theta_new = np.exp(rng.uniform(self.log_lo, self.log_hi))
                g_new = self.family.table(self.lattice, theta_new, warn=False).values
                state.thetas[k] = theta_new
                state.g[k] = g_new
                f_k = self.lattice.freq_to_site(np.sqrt(g_new) * c).real
                eps = rng.standard_normal(self.lattice.total)
                state.ytilde[k] = f_k + math.sqrt(state.sigma2) * eps
                rk[k] = state.sigma2 * float(eps @ eps)
                continue
            t = np.log(state.thetas[k])
            s = adapt.step[k]
            lo_w = np.maximum(self.log_lo, t - s)
            hi_w = np.minimum(self.log_hi, t + s)
            t_new = rng.uniform(lo_w, hi_w)
            theta_new = np.exp(t_new)
            g_new = self.family.table(self.lattice, theta_new, warn=False).values
            resid = r[k] - np.sqrt(g_new) * c
            r_new = float(np.sum(resid.real**2 + resid.imag**2))
            # exact Hastings correction for the boundary-truncated window
            len_fwd = hi_w - lo_w
            len_back = (np.minimum(self.log_hi, t_new + s)
                        - np.maximum(self.log_lo, t_new - s))
            log_ratio = (rk[k] - r_new) / (2.0 * state.sigma2)
            log_ratio += float(np.sum(np.log(len_fwd) - np.log(len_back)))
            adapt.propose[k] += 1
            if np.log(rng.random()) < log_ratio:
                state.thetas[k] = theta_new
                state.g[k] = g_new
                rk[k] = r_new
                adapt.accept[k] += 1

    def step6_update_weights(self, state, rng):
        counts = occupancy(state.z, self.config.k0)
        state.weights = sample_weights_posterior(
            self.config.alpha, self.config.k0, counts, rng).p

    # -- likelihood, sweeps, chain -------------------------------------------

    def log_likelihood_from_residuals(self, state, rk):
        n_w = self.lattice.total
        k0 = self.config.k0
        sig = math.sqrt(state.sigma2)
        with np.errstate(divide="ignore"):
            lp = float(np.sum(np.log(state.weights[state.z])))
        return (-n_w * k0 * math.log(sig) - rk.sum() / (2.0 * state.sigma2)
                + lp - 0.5 * float(state.a @ state.a + state.b @ state.b))

    def augmented_log_likelihood(self, state):
        """Augmented log likelihood, evaluated with one FFT per component."""
        r = self.lattice.site_to_freq(state.ytilde)
        return self.log_likelihood_from_residuals(state, self._residual_norms(state, r))

    def resimulate_data(self, state, rng):
        """Redraw the observed outcomes from the model given the state.

        Used by joint-distribution validation; updates the dataset outcomes
        and the pinned augmented entries in place.
        """
        f = self.component_fields(state)
        y = (f[state.z, self.dataset.site_idx]
             + math.sqrt(state.sigma2) * rng.standard_normal(self.dataset.n))
        self.dataset.y = y
        self._pin(state)
        return y

    def sweep(self, state, rng, adapt):
        fields = self.component_fields(state)
        self.step1_update_assignments(state, fields, rng)
        self.step2_update_latent(state, fields, rng)
        r = self.step3_update_coefficients(state, rng)
        rk = self.step4_update_sigma2(state, r, rng)
        self.step5_update_thetas(state, r, rk, adapt, rng)
        self.step6_update_weights(state, rng)
        return self.log_likelihood_from_residuals(state, rk)

    def run(self, resume=None, checkpoint_path=None, checkpoint_every=None,
            checkpoint_extra=None) -> PosteriorChain:
        cfg = self.config
        iters = cfg.iters
        burn = iters // 2
        retained = iters - burn
        n, k0, p = self.dataset.n, cfg.k0, self.family.n_params

        if resume is None:
            rng = np.random.default_rng(cfg.seed)
            state = self.init_state(rng)
            if cfg.init == "warm":
                from .warmstart import warm_start
                k_init = cfg.init_components or min(k0, 3)
                warm_start(self, state, rng, k_init, rounds=cfg.init_rounds,
                           pin_sweeps=cfg.init_pin_sweeps,
                           label_sweeps=cfg.init_label_sweeps)
            adapt = AdaptationState(step=np.full((k0, p), cfg.init_step),
                                    window=cfg.adapt_window)
            start = 0
            rec = _ChainRecord(iters, retained, n, k0, p)
        else:
            rng, state, adapt, start, rec = resume

        for it in range(start, iters):
            adapting = it < burn
            if not adapting:
                a0, p0 = adapt.accept.copy(), adapt.propose.copy()
            ll = self.sweep(state, rng, adapt)
            if not math.isfinite(ll):
                raise NumericalError(
                    "non-finite log-likelihood at sweep "
                    f"{it}: sigma2={state.sigma2}, thetas={state.thetas.tolist()}"
                )
            rec.loglik[it] = ll
            if adapting:
                if (it + 1) % adapt.window == 0:
                    adapt = adapt_step_sizes(adapt)
            else:
                rec.post_accept += adapt.accept - a0
                rec.post_propose += adapt.propose - p0
                j = it - burn
                rec.thetas[j] = state.thetas
                rec.weights[j] = state.weights
                rec.z[j] = state.z
                rec.sigma2[j] = state.sigma2
            if (checkpoint_path is not None and checkpoint_every
                    and (it + 1) % checkpoint_every == 0 and it + 1 < iters):
                save_checkpoint(checkpoint_path, cfg, state, adapt, it + 1, rec,
                                rng, extra=checkpoint_extra)
        if checkpoint_path is not None:
            save_checkpoint(checkpoint_path, cfg, state, adapt, iters, rec,
                            rng, extra=checkpoint_extra)

        rates = np.divide(rec.post_accept, rec.post_propose,
                          out=np.zeros(k0), where=rec.post_propose > 0)
        return PosteriorChain(
            kernel=cfg.kernel, lattice_sizes=self.lattice.sizes, k0=k0,
            alpha=cfg.alpha, seed=cfg.seed, thetas=rec.thetas,
            weights=rec.weights, z=rec.z, sigma2=rec.sigma2,
            loglik=rec.loglik, accept_rates=rates, final_step=adapt.step,
        )


class _ChainRecord:
    """Preallocated retained-draw storage (also carried across resumes)."""

    def __init__(self, iters, retained, n, k0, p):
        self.loglik = np.zeros(iters)
        self.thetas = np.zeros((retained, k0, p))
        self.weights = np.zeros((retained, k0))
        self.z = np.zeros((retained, n), dtype=np.int32)
        self.sigma2 = np.zeros(retained)
        self.post_accept = np.zeros(k0)
        self.post_propose = np.zeros(k0)


def run_chain(dataset: Dataset, config: SamplerConfig,
              checkpoint_path=None, checkpoint_every=None,
              checkpoint_extra=None) -> PosteriorChain:
    """Fit the model end to end and return the post-burn-in chain."""
    return MsgpSampler(dataset, config).run(
        checkpoint_path=checkpoint_path, checkpoint_every=checkpoint_every,
        checkpoint_extra=checkpoint_extra)


# ---------------------------------------------------------------------------
# checkpointing: binary array blob plus a human-readable JSON sidecar

CHECKPOINT_FORMAT_VERSION = 1


def _config_to_dict(config: SamplerConfig):
    d = asdict(config)
    for k in ("bounds_lo", "bounds_hi"):
        if d[k] is not None:
            d[k] = np.asarray(d[k], dtype=float).tolist()
    return d


def config_from_dict(d) -> SamplerConfig:
    d = dict(d)
    for k in ("bounds_lo", "bounds_hi"):
        if d.get(k) is not None:
            d[k] = np.asarray(d[k], dtype=float)
    try:
        return SamplerConfig(**d)
    except TypeError as e:
        raise ConfigError(f"invalid sampler configuration: {e}") from None


def save_checkpoint(path, config: SamplerConfig, state: MixtureState,
                    adapt: AdaptationState, next_iter: int,
                    rec: "_ChainRecord", rng, extra=None):
    """Persist the full chain state so a rerun continues bit-exactly.

    Writes ``path`` (npz array blob) and ``path + '.json'`` (format version,
    configuration, generator state, blob checksum).  Both writes are atomic.
    """
    buf = io.BytesIO()
    np.savez(
        buf,
        z=state.z, thetas=state.thetas, g=state.g, weights=state.weights,
        a=state.a, b=state.b, sigma2=np.array(state.sigma2),
        ytilde=state.ytilde,
        adapt_step=adapt.step, adapt_accept=adapt.accept,
        adapt_propose=adapt.propose,
        adapt_meta=np.array([adapt.window, adapt.windows_done]),
        loglik=rec.loglik, rec_thetas=rec.thetas, rec_weights=rec.weights,
        rec_z=rec.z, rec_sigma2=rec.sigma2,
        post_accept=rec.post_accept, post_propose=rec.post_propose,
    )
    blob = buf.getvalue()
    sidecar = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "config": _config_to_dict(config),
        "next_iter": int(next_iter),
        "rng_state": rng.bit_generator.state,
        "sha256": hashlib.sha256(blob).hexdigest(),
    }
    if extra is not None:
        sidecar["run"] = extra
    atomic_write(path, lambda f: f.write(blob), mode="wb")
    atomic_write(str(path) + ".json",
                 lambda f: json.dump(sidecar, f, indent=2, sort_keys=True))


def load_checkpoint(path, dataset: Dataset):
    """Rebuild (sampler, resume tuple) from a checkpoint pair.

    The blob checksum and format version are verified before anything is
    deserialized into state.
    """
    try:
        with open(str(path) + ".json") as f:
            sidecar = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"cannot read checkpoint sidecar {path}.json: {e}") from None
    if sidecar.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise DataError(
            f"checkpoint format version {sidecar.get('format_version')} is not "
            f"supported (expected {CHECKPOINT_FORMAT_VERSION})"
        )
    try:
        with open(path, "rb") as f:
            blob = f.read()
    except OSError as e:
        raise DataError(f"cannot read checkpoint {path}: {e}") from None
    if hashlib.sha256(blob).hexdigest() != sidecar["sha256"]:
        raise DataError(f"checkpoint {path} is corrupt (checksum mismatch)")
    arrays = np.load(io.BytesIO(blob))

    config = config_from_dict(sidecar["config"])
    sampler = MsgpSampler(dataset, config)
    state = MixtureState(
        z=arrays["z"], thetas=arrays["thetas"], g=arrays["g"],
        weights=arrays["weights"], a=arrays["a"], b=arrays["b"],
        sigma2=float(arrays["sigma2"]), ytilde=arrays["ytilde"],
    )
    window, windows_done = (int(v) for v in arrays["adapt_meta"])
    adapt = AdaptationState(step=arrays["adapt_step"],
                            accept=arrays["adapt_accept"],
                            propose=arrays["adapt_propose"],
                            window=window, windows_done=windows_done)
    iters = config.iters
    retained = iters - iters // 2
    rec = _ChainRecord(iters, retained, dataset.n, config.k0,
                       sampler.family.n_params)
    rec.loglik = arrays["loglik"]
    rec.thetas = arrays["rec_thetas"]
    rec.weights = arrays["rec_weights"]
    rec.z = arrays["rec_z"]
    rec.sigma2 = arrays["rec_sigma2"]
    rec.post_accept = arrays["post_accept"]
    rec.post_propose = arrays["post_propose"]
    rng = np.random.default_rng()
    state_dict = sidecar["rng_state"]
    if isinstance(state_dict.get("state"), dict):
        state_dict["state"] = {k: int(v) for k, v in state_dict["state"].items()}
    rng.bit_generator.state = state_dict
    resume = (rng, state, adapt, int(sidecar["next_iter"]), rec)
    return sampler, resume


def read_sidecar(path):
    """Checkpoint sidecar metadata (config, progress, optional run block)."""
    try:
        with open(str(path) + ".json") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"cannot read checkpoint sidecar {path}.json: {e}") from None


def chain_from_checkpoint(path, dataset: Dataset) -> PosteriorChain:
    """Rebuild the retained chain from a checkpoint of a finished run."""
    sampler, (rng, state, adapt, next_iter, rec) = load_checkpoint(path, dataset)
    cfg = sampler.config
    if next_iter < cfg.iters:
        raise DataError(
            f"checkpoint at {path} is mid-run ({next_iter}/{cfg.iters} sweeps); "
            "resume the fit before predicting"
        )
    rates = np.divide(rec.post_accept, rec.post_propose,
                      out=np.zeros(cfg.k0), where=rec.post_propose > 0)
    return PosteriorChain(
        kernel=cfg.kernel, lattice_sizes=sampler.lattice.sizes, k0=cfg.k0,
        alpha=cfg.alpha, seed=cfg.seed, thetas=rec.thetas,
        weights=rec.weights, z=rec.z, sigma2=rec.sigma2,
        loglik=rec.loglik, accept_rates=rates, final_step=adapt.step,
    )
