"""Command-line surface: simulate, fit, predict, compare.

Every command is a pure function of its configuration, input files, and
seed: re-running with the same inputs reproduces outputs byte for byte.  No
command leaves partial outputs on failure (all writes are atomic).

Configuration comes from a flat TOML file (``--config``) whose keys match
the long flag names with dashes replaced by underscores; explicit flags
override the file.  Exit codes: 0 success, 2 configuration error, 3 data
error, 4 numerical failure.
"""

from __future__ import annotations

import os

# honor the thread cap before numpy initializes its thread pools
_threads = os.environ.get("MSGP_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                 "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse
import json
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from concurrent.futures import ThreadPoolExecutor
from hashlib import sha256
from pathlib import Path

import numpy as np

from . import __version__
from .data import atomic_write, make_dataset, read_dataset_csv, write_dataset_csv
from .errors import ConfigError, DataError, MsgpError, NumericalError
from .kernels import get_family, params_to_mapping
from .mixture import (DEFAULT_ALPHA, DEFAULT_K0, DEFAULT_OCCUPANCY_THRESHOLD,
                      effective_components)
from .predict import metrics, posterior_predict
from .sampler import (SamplerConfig, MsgpSampler, chain_from_checkpoint,
                      load_checkpoint, read_sidecar, run_chain)
from .simdata import (PintoreField, grid_coords, simulate_discrete_scale_2d,
                      simulate_pintore, simulate_st_cube,
                      simulate_two_region_1d)

FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# shared plumbing


def _parse_sizes(text, what="lattice"):
    try:
        sizes = tuple(int(p) for p in str(text).lower().split("x"))
    except ValueError:
        raise ConfigError(f"cannot parse {what} specification {text!r}") from None
    if not sizes or any(s < 1 for s in sizes):
        raise ConfigError(f"{what} sizes must be positive, got {text!r}")
    return sizes


def _load_config_file(path):
    if path is None:
        return {}
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"invalid TOML in {path}: {e}") from None


def _merge_config(args, file_cfg):
    """Fill flag values left at None from the config file (flags win)."""
    for key, value in file_cfg.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ConfigError(f"unknown config key {key!r}")
        if getattr(args, attr) is None:
            setattr(args, attr, value)
    return args


def _write_json(path, payload):
    atomic_write(path, lambda f: json.dump(payload, f, indent=2, sort_keys=True))


def _provenance(command, params, seed):
    return {
        "format_version": FORMAT_VERSION,
        "command": command,
        "package_version": __version__,
        "seed": seed,
        "parameters": params,
    }


def _file_sha256(path):
    try:
        with open(path, "rb") as f:
            return sha256(f.read()).hexdigest()
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from None


def _infer_lattice_sizes(coords):
    """Even per-axis sizes covering the data's integer span.

    Integer-valued axes keep their 0-based span; continuous axes use the
    number of distinct values.  Either is rounded up to the next even size.
    """
    coords = np.atleast_2d(coords)
    sizes = []
    for axis in coords.T:
        if np.allclose(axis, np.round(axis)):
            m = int(np.round(axis.max() - min(axis.min(), 0.0))) + 1
        else:
            m = len(np.unique(axis))
        sizes.append(m + (m % 2))
    return tuple(sizes)


def _build_dataset(data_path, lattice_sizes, trend_degree, collision):
    from .lattice import build_lattice

    coords, y, tc = read_dataset_csv(data_path, require_y=True)
    if lattice_sizes is None:
        sizes = _infer_lattice_sizes(coords)
    else:
        sizes = _parse_sizes(lattice_sizes)
    lat = build_lattice(sizes)
    return make_dataset(coords, y, lat, trend_degree=trend_degree,
                        collision=collision, true_component=tc), sizes


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args):
    _merge_config(args, _load_config_file(args.config))
    seed = 0 if args.seed is None else int(args.seed)
    sigma2 = 0.25 if args.sigma2 is None else float(args.sigma2)
    out = args.out or f"{args.scenario}.csv"

    if args.scenario == "two-region":
        n = 100 if args.n is None else int(args.n)
        split = 50 if args.split is None else int(args.split)
        phi = 4.0 if args.phi is None else float(args.phi)
        rho_left = 3.0 if args.rho_left is None else float(args.rho_left)
        rho_right = 12.0 if args.rho_right is None else float(args.rho_right)
        coords, y, tc = simulate_two_region_1d(
            n=n, split=split, params_left=(phi, rho_left),
            params_right=(phi, rho_right), sigma2=sigma2, seed=seed,
            independent=bool(args.independent))
        params = {"n": n, "split": split, "phi": phi, "rho_left": rho_left,
                  "rho_right": rho_right, "sigma2": sigma2,
                  "independent": bool(args.independent)}
    elif args.scenario == "pintore":
        grid = _parse_sizes(args.grid or "50x50", "grid")
        if len(grid) != 2:
            raise ConfigError("the pintore scenario needs a 2-D grid, e.g. --grid 50x50")
        phi = 1.0 if args.phi is None else float(args.phi)
        field = PintoreField(phi=phi)
        coords = grid_coords(*grid)
        rng = np.random.default_rng(seed)
        y = simulate_pintore(coords, field, sigma2, rng)
        tc = None
        params = {"grid": list(grid), "phi": phi, "sigma2": sigma2}
    elif args.scenario == "varying-scale":
        grid = _parse_sizes(args.grid or "40x40", "grid")
        if len(grid) != 2:
            raise ConfigError(
                "the varying-scale scenario needs a 2-D grid, e.g. --grid 40x40")
        phi = 4.0 if args.phi is None else float(args.phi)
        levels = ([1.5, 3.0, 6.0] if args.levels is None
                  else [float(v) for v in str(args.levels).split(",")])
        breaks = (None if args.breaks is None
                  else [float(v) for v in str(args.breaks).split(",")])
        coords, y, tc = simulate_discrete_scale_2d(
            sizes=tuple(grid), levels=tuple(levels), phi=phi, sigma2=sigma2,
            seed=seed, breaks=breaks)
        params = {"grid": list(grid), "phi": phi, "levels": levels,
                  "breaks": breaks, "sigma2": sigma2}
    elif args.scenario == "st-cube":
        dims = _parse_sizes(args.dims or "12x12x32", "dims")
        if len(dims) != 3:
            raise ConfigError("the st-cube scenario needs 3 dims, e.g. --dims 16x16x8")
        coords, y, tc = simulate_st_cube(*dims, sigma2=sigma2, seed=seed)
        params = {"dims": list(dims), "sigma2": sigma2}
    else:
        raise ConfigError(f"unknown scenario {args.scenario!r}")

    write_dataset_csv(out, coords, y, tc)
    prov = _provenance("simulate", {"scenario": args.scenario, **params}, seed)
    _write_json(str(Path(out).with_suffix("")) + ".provenance.json", prov)
    print(f"wrote {len(y)} rows to {out}")
    return 0


# ---------------------------------------------------------------------------
# fit


def _sampler_config(args, seed):
    kw = dict(
        kernel=args.kernel or "se",
        k0=DEFAULT_K0 if args.k0 is None else int(args.k0),
        alpha=DEFAULT_ALPHA if args.alpha is None else float(args.alpha),
        iters=2000 if args.iters is None else int(args.iters),
        seed=seed,
    )
    if args.bounds_lo is not None:
        kw["bounds_lo"] = np.asarray(args.bounds_lo, dtype=float)
    if args.bounds_hi is not None:
        kw["bounds_hi"] = np.asarray(args.bounds_hi, dtype=float)
    if args.adapt_window is not None:
        kw["adapt_window"] = int(args.adapt_window)
    if args.init is not None:
        kw["init"] = args.init
    if args.init_components is not None:
        kw["init_components"] = int(args.init_components)
    return SamplerConfig(**kw)


def _chain_summary(chain, family, threshold):
    occ = chain.occupancy_fractions()
    order = chain.component_order()
    n_eff = effective_components(occ, threshold)
    components = []
    for rank, k in enumerate(order):
        if occ[k] <= threshold:
            continue
        th = chain.thetas[:, k, :]
        params = {}
        for j, name in enumerate(family.param_names):
            m, s = float(th[:, j].mean()), float(th[:, j].std())
            params[name] = {"mean": m, "sd": s, "formatted": f"{m:.4g} ({s:.3g})"}
        w = chain.weights[:, k]
        components.append({
            "component": rank + 1,
            "occupancy_fraction": float(occ[k]),
            "weight": {"mean": float(w.mean()), "sd": float(w.std())},
            "params": params,
            "acceptance_rate": float(chain.accept_rates[k]),
        })
    warnings = []
    if chain.n_retained < 2:
        warnings.append(
            f"insufficient samples: summary built from {chain.n_retained} retained draw(s)")
    return {
        "seed": int(chain.seed),
        "n_retained": int(chain.n_retained),
        "effective_components": n_eff,
        "components": components,
        "sigma2": {"mean": float(chain.sigma2.mean()), "sd": float(chain.sigma2.std())},
        "acceptance_rates": [float(r) for r in chain.accept_rates],
        "warnings": warnings,
    }


def _write_assignments(path, dataset, chain, threshold):
    occ = chain.occupancy_fractions()
    order = chain.component_order()
    occupied = [k for k in order if occ[k] > threshold] or [order[0]]
    probs = np.zeros((dataset.n, len(occupied)))
    all_probs = chain.assignment_probabilities()  # already in component order
    rank_of = {k: r for r, k in enumerate(order)}
    for j, k in enumerate(occupied):
        probs[:, j] = all_probs[:, rank_of[k]]
    map_comp = probs.argmax(axis=1) + 1

    import csv as _csv

    d = dataset.raw_coords.shape[1]
    header = ([f"x{l+1}" for l in range(d)] + ["map_component"]
              + [f"p_{j+1}" for j in range(len(occupied))])

    def write(f):
        w = _csv.writer(f)
        w.writerow(header)
        for i in range(dataset.n):
            w.writerow([repr(float(c)) for c in dataset.raw_coords[i]]
                       + [int(map_comp[i])]
                       + [repr(float(p)) for p in probs[i]])

    atomic_write(path, write)


def _chain_path(out, index, n_chains):
    if n_chains == 1:
        return out
    p = Path(out)
    return str(p.with_suffix(f".c{index}{p.suffix}"))


def cmd_fit(args):
    _merge_config(args, _load_config_file(args.config))
    if args.data is None:
        raise ConfigError("fit requires --data")
    seed = 0 if args.seed is None else int(args.seed)
    trend_degree = 0 if args.trend_degree is None else int(args.trend_degree)
    collision = args.collision or "error"
    if collision not in ("error", "average"):
        raise ConfigError(f"collision mode must be 'error' or 'average', got {collision!r}")
    n_chains = 1 if args.chains is None else int(args.chains)
    if n_chains < 1:
        raise ConfigError("--chains must be >= 1")
    out = args.out or "chain.npz"
    threshold = (DEFAULT_OCCUPANCY_THRESHOLD if args.occupancy_threshold is None
                 else float(args.occupancy_threshold))

    dataset, sizes = _build_dataset(args.data, args.lattice, trend_degree, collision)
    run_meta = {
        "lattice_sizes": list(sizes),
        "trend_degree": trend_degree,
        "collision": collision,
        "data_sha256": _file_sha256(args.data),
    }

    if args.resume is not None:
        if n_chains != 1:
            raise ConfigError("--resume supports a single chain")
        sampler, resume = load_checkpoint(args.resume, dataset)
        chains = [sampler.run(resume=resume, checkpoint_path=out,
                              checkpoint_every=args.checkpoint_every,
                              checkpoint_extra=run_meta)]
    else:
        configs = [_sampler_config(args, seed + i) for i in range(n_chains)]
        paths = [_chain_path(out, i, n_chains) for i in range(n_chains)]

        def fit_one(i):
            return run_chain(dataset, configs[i], checkpoint_path=paths[i],
                             checkpoint_every=args.checkpoint_every,
                             checkpoint_extra=run_meta)

        if n_chains == 1:
            chains = [fit_one(0)]
        else:
            workers = n_chains
            if _threads:
                workers = min(workers, max(1, int(_threads)))
            with ThreadPoolExecutor(max_workers=workers) as pool:
                chains = list(pool.map(fit_one, range(n_chains)))

    family = get_family(chains[0].kernel, dataset.lattice.dims)
    per_chain = [_chain_summary(c, family, threshold) for c in chains]
    summary_path = args.summary or str(Path(out).with_suffix("")) + ".summary.json"
    assignments_path = str(Path(summary_path).with_suffix("")) + ".assignments.csv"
    _write_assignments(assignments_path, dataset, chains[0], threshold)
    summary = {
        "format_version": FORMAT_VERSION,
        "kernel": chains[0].kernel,
        "k0": chains[0].k0,
        "alpha": chains[0].alpha,
        "iters": int(chains[0].loglik.shape[0]),
        "lattice_sizes": list(sizes),
        "n_observations": dataset.n,
        "occupancy_threshold": threshold,
        "effective_components": per_chain[0]["effective_components"],
        "chains": per_chain,
        "warnings": per_chain[0]["warnings"],
        "assignments_csv": assignments_path,
    }
    _write_json(summary_path, summary)
    print(f"fit complete: {per_chain[0]['effective_components']} effective component(s); "
          f"summary at {summary_path}")
    return 0


# ---------------------------------------------------------------------------
# predict


def _dataset_from_checkpoint(data_path, checkpoint_path):
    sidecar = read_sidecar(checkpoint_path)
    run = sidecar.get("run")
    if run is None:
        raise DataError(f"checkpoint {checkpoint_path} carries no run metadata")
    if run.get("data_sha256") and run["data_sha256"] != _file_sha256(data_path):
        raise DataError(
            f"{data_path} differs from the data the checkpoint was fitted on")
    dataset, _ = _build_dataset(
        data_path, "x".join(str(s) for s in run["lattice_sizes"]),
        int(run.get("trend_degree", 0)), run.get("collision", "error"))
    return dataset


def cmd_predict(args):
    _merge_config(args, _load_config_file(args.config))
    for req in ("data", "checkpoint", "targets"):
        if getattr(args, req) is None:
            raise ConfigError(f"predict requires --{req}")
    method = args.method or "msgp"
    out = args.out or "predictions.csv"

    dataset = _dataset_from_checkpoint(args.data, args.checkpoint)
    chain = chain_from_checkpoint(args.checkpoint, dataset)
    target_coords, target_y, _ = read_dataset_csv(args.targets, require_y=False)
    thin = None if args.thin is None else int(args.thin)
    result = posterior_predict(dataset, chain, target_coords, method=method, thin=thin)
    result.write_csv(out)
    m = metrics(result, truth=target_y)
    payload = {"format_version": FORMAT_VERSION, "method": method,
               "n_draws": result.n_draws, "n_targets": int(len(result.mean)), **m}
    metrics_path = args.metrics or str(Path(out).with_suffix("")) + ".metrics.json"
    _write_json(metrics_path, payload)
    print(f"wrote {len(result.mean)} predictions to {out}")
    return 0


# ---------------------------------------------------------------------------
# compare


def _parse_regions(text):
    regions = []
    for part in str(text).split(","):
        try:
            a, b = (float(v) for v in part.split(":"))
        except ValueError:
            raise ConfigError(
                f"cannot parse region {part!r}; expected lo:hi") from None
        if a >= b:
            raise ConfigError(f"region bounds must satisfy lo < hi, got {part!r}")
        regions.append((a, b))
    return regions


def cmd_compare(args):
    _merge_config(args, _load_config_file(args.config))
    if args.data is None:
        raise ConfigError("compare requires --data")
    seed = 0 if args.seed is None else int(args.seed)
    out = args.out or "comparison.json"
    regions = _parse_regions(args.regions or "10:30,60:80,40:60")
    trend_degree = 0 if args.trend_degree is None else int(args.trend_degree)

    coords, y, tc = read_dataset_csv(args.data, require_y=True)
    if coords.shape[1] != 1:
        raise ConfigError("compare operates on 1-D datasets")
    from .lattice import build_lattice

    sizes = (_parse_sizes(args.lattice) if args.lattice is not None
             else _infer_lattice_sizes(coords))
    thin = None if args.thin is None else int(args.thin)

    report_regions = []
    curve_paths = []
    for a, b in regions:
        held = (coords[:, 0] > a) & (coords[:, 0] < b)
        if held.all() or not held.any():
            raise DataError(f"region ({a}, {b}) must hold out a proper subset of sites")
        lat = build_lattice(sizes)
        train = make_dataset(coords[~held], y[~held], lat,
                             trend_degree=trend_degree)
        entry = {"region": [a, b], "n_held_out": int(held.sum())}
        curves = {"x1": coords[:, 0]}
        # the two models are trained independently: separate chains, offset seeds
        for offset, method in ((0, "msgp"), (1000, "igp")):
            cfg = _sampler_config(args, seed + offset)
            chain = run_chain(train, cfg)
            held_pred = posterior_predict(train, chain, coords[held],
                                          method=method, thin=thin)
            entry[method] = metrics(held_pred, truth=y[held])
            all_pred = posterior_predict(train, chain, coords, method=method, thin=thin)
            curves[f"{method}_mean"] = all_pred.mean
            curves[f"{method}_variance"] = all_pred.variance
        report_regions.append(entry)

        import csv as _csv

        curve_path = (str(Path(out).with_suffix(""))
                      + f".curves_{a:g}_{b:g}.csv")

        def write(f, curves=curves):
            w = _csv.writer(f)
            keys = list(curves)
            w.writerow(keys)
            for i in range(len(coords)):
                w.writerow([repr(float(curves[k][i])) for k in keys])

        atomic_write(curve_path, write)
        curve_paths.append(curve_path)

    report = {
        "format_version": FORMAT_VERSION,
        "seed": seed,
        "regions": report_regions,
        "curve_files": curve_paths,
    }
    _write_json(out, report)
    for entry in report_regions:
        a, b = entry["region"]
        print(f"region ({a:g}, {b:g}): "
              f"msgp rmse={entry['msgp']['rmse']:.4g} "
              f"unc={entry['msgp']['avg_uncertainty']:.4g} | "
              f"igp rmse={entry['igp']['rmse']:.4g} "
              f"unc={entry['igp']['avg_uncertainty']:.4g}")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(p):
    p.add_argument("--config", help="flat TOML config file; flags override it")
    p.add_argument("--seed", type=int, help="random seed (default 0)")


def _add_fit_options(p):
    p.add_argument("--kernel", help="kernel family (default se)")
    p.add_argument("--k0", type=int, help="mixture truncation level (default 20)")
    p.add_argument("--alpha", type=float, help="concentration parameter (default 0.5)")
    p.add_argument("--iters", type=int, help="MCMC sweeps; first half is burn-in (default 2000)")
    p.add_argument("--lattice", help="lattice sizes, e.g. 128 or 40x40 (default: inferred)")
    p.add_argument("--trend-degree", type=int, dest="trend_degree",
                   help="polynomial trend degree 0-2 (default 0)")
    p.add_argument("--adapt-window", type=int, dest="adapt_window",
                   help="sweeps per step-size adaptation (default 50)")
    p.add_argument("--bounds-lo", type=float, nargs="+", dest="bounds_lo",
                   help="per-parameter prior lower bounds")
    p.add_argument("--bounds-hi", type=float, nargs="+", dest="bounds_hi",
                   help="per-parameter prior upper bounds")
    p.add_argument("--thin", type=int, help="thinning stride for posterior prediction")
    p.add_argument("--init", choices=["prior", "warm"],
                   help="chain initialization: overdispersed prior draw or "
                        "data-driven warm start (default prior)")
    p.add_argument("--init-components", type=int, dest="init_components",
                   help="number of groups the warm start builds (default min(k0, 3))")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="msgp",
        description="Nonstationary Gaussian-process modeling with mixtures "
                    "of stationary spectral components.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic dataset")
    _add_common(p)
    p.add_argument("--scenario", required=True,
                   choices=["two-region", "pintore", "varying-scale", "st-cube"])
    p.add_argument("--out", help="output CSV path (default <scenario>.csv)")
    p.add_argument("--sigma2", type=float, help="observation noise variance (default 0.25)")
    p.add_argument("--n", type=int, help="two-region: number of sites (default 100)")
    p.add_argument("--split", type=int, help="two-region: region boundary (default 50)")
    p.add_argument("--phi", type=float, help="marginal variance")
    p.add_argument("--rho-left", type=float, dest="rho_left",
                   help="two-region: left length-scale (default 3)")
    p.add_argument("--rho-right", type=float, dest="rho_right",
                   help="two-region: right length-scale (default 12)")
    p.add_argument("--independent", action="store_true", default=None,
                   help="two-region: zero cross-region covariance")
    p.add_argument("--grid", help="pintore/varying-scale: grid sizes "
                   "(defaults 50x50 / 40x40)")
    p.add_argument("--levels", help="varying-scale: comma-separated "
                   "length-scale levels (default 1.5,3.0,6.0)")
    p.add_argument("--breaks", help="varying-scale: comma-separated "
                   "quantile breakpoints in (0,1) for the level map "
                   "(default equal mass)")
    p.add_argument("--dims", help="st-cube: lattice dims (default 12x12x32)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit the mixture model by MCMC")
    _add_common(p)
    _add_fit_options(p)
    p.add_argument("--data", help="training CSV (x1..xd, y)")
    p.add_argument("--out", help="chain checkpoint path (default chain.npz)")
    p.add_argument("--summary", help="summary JSON path (default <out>.summary.json)")
    p.add_argument("--collision", help="duplicate-site handling: error|average")
    p.add_argument("--chains", type=int, help="independent chains with derived seeds")
    p.add_argument("--checkpoint-every", type=int, dest="checkpoint_every",
                   help="write a resumable checkpoint every N sweeps")
    p.add_argument("--resume", help="resume a mid-run checkpoint")
    p.add_argument("--occupancy-threshold", type=float, dest="occupancy_threshold",
                   help="effective-component reporting threshold (default 0.02)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="krige at target sites from a fitted chain")
    _add_common(p)
    p.add_argument("--data", help="training CSV the chain was fitted on")
    p.add_argument("--checkpoint", help="chain checkpoint from fit")
    p.add_argument("--targets", help="target CSV (x1..xd, y optional)")
    p.add_argument("--out", help="prediction CSV path (default predictions.csv)")
    p.add_argument("--metrics", help="metrics JSON path (default <out>.metrics.json)")
    p.add_argument("--method", choices=["msgp", "igp"], help="predictor (default msgp)")
    p.add_argument("--thin", type=int, help="thinning stride over retained draws")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("compare",
                       help="fit mixture and independent-surface models, report both")
    _add_common(p)
    _add_fit_options(p)
    p.add_argument("--data", help="1-D dataset CSV")
    p.add_argument("--out", help="report JSON path (default comparison.json)")
    p.add_argument("--regions", help="held-out windows lo:hi[,lo:hi...] "
                                     "(default 10:30,60:80,40:60)")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except (NumericalError, np.linalg.LinAlgError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 4
    except MsgpError as e:  # pragma: no cover - future subclasses
        print(f"error: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
