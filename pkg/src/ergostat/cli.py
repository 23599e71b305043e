"""Experiment runner.

    ergostat <experiment> --config <path> [--seed S] [--workers W] [--out DIR]

Configs are flat ``key = value`` text (dotted sections, ``#`` comments)
or a JSON object with the same keys (nested objects are flattened with
dots); the two formats are interchangeable.  The ERGOSTAT_CONFIG
environment variable overrides --config.

Every run computes first and writes only on success: results.json (keys
sorted, no timing fields), the experiment's CSV files, and manifest.json
with a sha256 per output file.  Outputs depend on the config and seed
only — never on the worker count.  Exit codes: 0 success, 2 invalid
config or arguments, 3 numerical/capacity failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, chenstein, correlations, dynamics, evl, oracle
from . import measure as measure_mod
from . import return_stats, short_returns
from .errors import ComputationError, ErgostatError, ValidationError

EXPERIMENTS = (
    "return-dist",
    "short-returns",
    "evl",
    "correlations",
    "chen-stein",
    "dimension",
    "annulus",
)

_SYSTEM_KEYS = {"system": str, "alpha": float, "angle": float, "epsilon": float}

_SCHEMAS: dict[str, dict[str, type]] = {
    "return-dist": {
        **_SYSTEM_KEYS, "seed": int,
        "ball.center": float, "ball.rho": float, "t": float, "m": int,
        "measure.value": float,
    },
    "short-returns": {
        **_SYSTEM_KEYS, "seed": int,
        "rho.grid": list, "a_frak": float, "m": int,
    },
    "evl": {
        **_SYSTEM_KEYS, "seed": int,
        "obs.type": int, "obs.z": float, "obs.beta": float, "obs.gamma": float,
        "obs.D": float, "n": int, "m": int,
        "y.min": float, "y.max": float, "y.step": float,
        "table.orbit_length": int,
    },
    "correlations": {
        **_SYSTEM_KEYS, "seed": int,
        "observable.g": str, "observable.h": str, "lags": list,
        "budget": int, "replicas": int, "fit.kind": str,
    },
    "chen-stein": {
        "seed": int, "transition": list, "marked": list,
        "N": int, "Delta": int, "J_lower": int, "C3": float, "t": float,
    },
    "dimension": {
        **_SYSTEM_KEYS, "seed": int,
        "center": float, "rho.grid": list, "orbit_length": int,
    },
    "annulus": {
        **_SYSTEM_KEYS, "seed": int,
        "center": float, "rho.grid": list, "r.fractions": list, "orbit_length": int,
    },
}

_OBSERVABLES = {
    "identity": lambda x: x,
    "cos1": lambda x: np.cos(2.0 * np.pi * x),
    "sin1": lambda x: np.sin(2.0 * np.pi * x),
}


# ------------------------------------------------------------------ config

def _flatten(obj, prefix="") -> dict:
    out = {}
    for key, value in obj.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, dotted + "."))
        else:
            out[dotted] = value
    return out


def _parse_flat_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"config line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key:
            raise ValidationError(f"config line {lineno}: empty key")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def load_config(path: Path, experiment: str) -> dict:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    if path.suffix == ".json":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"bad JSON config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ValidationError("JSON config must be an object")
        flat = _flatten(raw)
    else:
        flat = _parse_flat_text(text)
    schema = _SCHEMAS[experiment]
    config = {}
    for key, value in flat.items():
        if key not in schema:
            raise ValidationError(f"unknown config key {key!r} for {experiment}")
        want = schema[key]
        try:
            if want is list:
                if not isinstance(value, list):
                    raise TypeError("expected a list")
                config[key] = value
            elif want is int:
                if float(value) != int(float(value)):
                    raise TypeError("expected an integer")
                config[key] = int(float(value))
            elif want is float:
                config[key] = float(value)
            else:
                config[key] = str(value)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"config key {key!r}: {exc}") from exc
    return config


def _build_system(config: dict) -> dynamics.MapSystem:
    name = config.get("system")
    if name is None:
        raise ValidationError("config must set 'system'")
    if name == dynamics.DOUBLING:
        return dynamics.doubling()
    if name == dynamics.MANNEVILLE_POMEAU:
        if "alpha" not in config:
            raise ValidationError("manneville_pomeau needs 'alpha'")
        return dynamics.manneville_pomeau(config["alpha"])
    if name == dynamics.ROTATION:
        if "angle" not in config:
            raise ValidationError("rotation needs 'angle'")
        return dynamics.rotation(config["angle"])
    if name == dynamics.BERNOULLI_IID:
        if "epsilon" not in config:
            raise ValidationError("bernoulli_iid needs 'epsilon'")
        return dynamics.bernoulli_iid(config["epsilon"])
    raise ValidationError(f"unknown system {name!r}")


def _require(config: dict, *keys: str) -> None:
    missing = [k for k in keys if k not in config]
    if missing:
        raise ValidationError(f"missing config keys: {', '.join(missing)}")


def _floats(values) -> list[float]:
    return [float(v) for v in values]


def _pyify(obj):
    if isinstance(obj, dict):
        return {k: _pyify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_pyify(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_pyify(v) for v in obj.tolist()]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _csv(header: list[str], rows: list[tuple]) -> str:
    def cell(v) -> str:
        if isinstance(v, (float, np.floating)):
            return repr(float(v))
        return str(v)

    lines = [",".join(header)]
    lines.extend(",".join(cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


# -------------------------------------------------------------- experiments

def _run_return_dist(config, seed, workers):
    system = _build_system(config)
    _require(config, "t", "m")
    if system.kind == dynamics.BERNOULLI_IID:
        ball = None
    else:
        _require(config, "ball.center", "ball.rho")
        ball = measure_mod.Ball(config["ball.center"], config["ball.rho"])
    counting = return_stats.make_config(
        system, ball, config["t"], measure=config.get("measure.value"), seed=seed
    )
    hist = return_stats.empirical_distribution(
        counting, config["m"], seed=seed, workers=workers
    )
    comp = return_stats.compare_poisson(hist)
    rows = [
        (k, float(comp.empirical[k]), float(comp.poisson[k]), comp.per_k_errors[k])
        for k in range(comp.k_max + 1)
    ]
    results = {
        "t": counting.t,
        "rho": ball.radius if ball else None,
        "N": counting.n_steps,
        "mu": counting.mu,
        "m": config["m"],
        "tv": comp.tv_distance,
        "mc_error": comp.mc_error,
    }
    files = {"returns_hist.csv": _csv(
        ["r", "empirical_prob", "poisson_prob", "abs_error"], rows)}
    return results, files


def _run_short_returns(config, seed, workers):
    system = _build_system(config)
    _require(config, "rho.grid", "m")
    a_frak = config.get("a_frak", short_returns.default_a_frak(system))
    rows, fractions = [], []
    for rho in _floats(config["rho.grid"]):
        est = short_returns.measure_V(
            system, rho, a_frak, config["m"], seed=seed, workers=workers
        )
        J = short_returns.horizon_J(a_frak, rho)
        if system.kind == dynamics.DOUBLING:
            oracle_value = oracle.doubling_vrho_measure(rho, a_frak)
        else:
            oracle_value = ""
        rows.append((rho, J, est.value, est.std_error, oracle_value))
        fractions.append({"rho": rho, "J": J, "fraction": est.value,
                          "std_error": est.std_error})
    results = {"a_frak": a_frak, "m": config["m"], "estimates": fractions}
    files = {"vrho.csv": _csv(["rho", "J", "fraction", "std_error", "oracle"], rows)}
    return results, files


def _run_evl(config, seed, workers):
    system = _build_system(config)
    _require(config, "obs.type", "obs.z", "n", "m")
    spec = evl.ObservableSpec(
        obs_type=config["obs.type"],
        z=config["obs.z"],
        beta_frechet=config.get("obs.beta"),
        gamma_weibull=config.get("obs.gamma"),
        D=config.get("obs.D"),
    )
    y_lo = config.get("y.min", -2.0)
    y_hi = config.get("y.max", 4.0)
    y_step = config.get("y.step", 0.5)
    if y_step <= 0.0 or y_hi <= y_lo:
        raise ValidationError("need y.min < y.max and y.step > 0")
    y_grid = np.arange(y_lo, y_hi + 1e-9, y_step)
    table = None
    if system.kind == dynamics.MANNEVILLE_POMEAU:
        table = measure_mod.build_radius_table(
            system, spec.z, seed=seed,
            orbit_length=config.get("table.orbit_length", measure_mod.BIRKHOFF_ORBIT),
        )
    result = evl.block_maxima(
        system, spec, config["n"], config["m"],
        y_grid=y_grid, seed=seed, workers=workers, table=table,
    )
    rows = [
        (float(y), float(e), float(g), float(abs(e - g)))
        for y, e, g in zip(y_grid, result.empirical_cdf, result.limit_cdf)
    ]
    results = {
        "sup_distance": result.sup_distance,
        "n": config["n"],
        "m": config["m"],
        "obs_type": spec.obs_type,
        "z": spec.z,
    }
    files = {"evl_cdf.csv": _csv(
        ["y", "empirical_cdf", "limit_cdf", "abs_error"], rows)}
    return results, files


def _run_correlations(config, seed, workers):
    system = _build_system(config)
    _require(config, "lags")
    g_name = config.get("observable.g", "identity")
    h_name = config.get("observable.h", g_name)
    for name in (g_name, h_name):
        if name not in _OBSERVABLES:
            raise ValidationError(
                f"unknown observable {name!r}; choose from {sorted(_OBSERVABLES)}"
            )
    fit = correlations.decay_fit(
        system,
        _OBSERVABLES[g_name],
        _OBSERVABLES[h_name],
        [int(k) for k in config["lags"]],
        budget=config.get("budget"),
        replicas=config.get("replicas", correlations.DEFAULT_REPLICAS),
        fit_kind=config.get("fit.kind", correlations.FIT_EXPONENTIAL),
        seed=seed,
        workers=workers,
    )
    rows = list(zip(fit.lags, fit.corr_values, fit.std_errors))
    results = {
        "fit_kind": fit.fit_kind,
        "fitted_rate": None if fit.inconclusive else fit.fitted_rate,
        "inconclusive": fit.inconclusive,
        "usable_lags": [k for k, u in zip(fit.lags, fit.usable) if u],
    }
    files = {"corr.csv": _csv(["k", "corr", "std_error"], rows)}
    return results, files


def _run_chen_stein(config, seed, workers):
    del seed, workers  # exact mode is deterministic and single-threaded
    _require(config, "transition", "marked", "N", "Delta")
    process = chenstein.MarkovBinaryProcess(
        transition=np.array(config["transition"], dtype=float),
        marked=frozenset(int(s) for s in config["marked"]),
    )
    N, Delta = config["N"], config["Delta"]
    j_lower = config.get("J_lower", 1)
    r1 = chenstein.r1_estimate(process, N, Delta)
    r2 = chenstein.r2_estimate(process, j_lower, Delta)
    report = chenstein.theorem_bound(
        process.epsilon, N, Delta, r1, r2,
        C3=config.get("C3"), t=config.get("t"),
    )
    pmf = chenstein.exact_count_distribution(process, N)
    t = config.get("t", N * process.epsilon)
    gaps = [
        abs(float(pmf[k]) - return_stats.poisson_pmf(t, k)) for k in range(N + 1)
    ]
    results = {
        "epsilon": report.epsilon,
        "N": report.N,
        "Delta": report.Delta,
        "J_lower": j_lower,
        "R1": report.R1.value,
        "R2": report.R2.value,
        "C3": report.C3,
        "E_size": report.E_size,
        "bound": report.bound,
        "t": t,
        "max_singleton_gap": max(gaps),
        "bound_dominates": bool(max(gaps) <= report.bound),
    }
    return results, {}


def _run_dimension(config, seed, workers):
    del workers  # the fit is a single pooled Birkhoff pass
    system = _build_system(config)
    _require(config, "center", "rho.grid")
    kwargs = {}
    if "orbit_length" in config:
        kwargs["orbit_length"] = config["orbit_length"]
    fit = measure_mod.dimension_fit(
        system, config["center"], _floats(config["rho.grid"]), seed=seed, **kwargs
    )
    rows = [
        (float(r), float(np.log(r)), float(lm), float(res))
        for r, lm, res in zip(fit.radii, fit.log_measures, fit.residuals)
    ]
    results = {"slope": fit.slope, "d0": fit.d0, "d1": fit.d1,
               "center": config["center"]}
    files = {"dimension.csv": _csv(
        ["rho", "log_rho", "log_measure", "residual"], rows)}
    return results, files


def _run_annulus(config, seed, workers):
    del workers
    system = _build_system(config)
    _require(config, "center", "rho.grid")
    fractions = tuple(_floats(config.get("r.fractions", [0.5, 0.25, 0.125])))
    fit = measure_mod.annulus_fit(
        system, config["center"], _floats(config["rho.grid"]), fractions, seed=seed
    )
    rows = []
    for rho, r, ratio in fit.ratio_samples:
        if system.lebesgue_invariant:
            oracle_value = float(2.0 * r / rho)
        else:
            oracle_value = ""
        rows.append((float(rho), float(r), float(ratio), oracle_value))
    results = {"eta": fit.eta, "beta": fit.beta, "center": config["center"]}
    files = {"annulus.csv": _csv(["rho", "r", "ratio", "oracle"], rows)}
    return results, files


_RUNNERS = {
    "return-dist": _run_return_dist,
    "short-returns": _run_short_returns,
    "evl": _run_evl,
    "correlations": _run_correlations,
    "chen-stein": _run_chen_stein,
    "dimension": _run_dimension,
    "annulus": _run_annulus,
}


# ------------------------------------------------------------------ runner

def _versions() -> dict:
    import numba
    import scipy

    return {
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
        "ergostat": __version__,
    }


def run(experiment: str, config_path: Path, seed: int | None,
        workers: int, out_dir: Path) -> None:
    config = load_config(config_path, experiment)
    if seed is None:
        seed = int(config.get("seed", 0))
    results, files = _RUNNERS[experiment](config, seed, workers)

    payload = dict(results)
    payload["experiment"] = experiment
    payload["seed"] = seed
    payload["config"] = {k: _pyify(v) for k, v in sorted(config.items())}
    files = dict(files)
    files["results.json"] = json.dumps(_pyify(payload), sort_keys=True, indent=2) + "\n"

    # all computation is done; now (and only now) touch the filesystem
    out_dir.mkdir(parents=True, exist_ok=True)
    hashes = {}
    for name in sorted(files):
        data = files[name].encode("utf-8")
        (out_dir / name).write_bytes(data)
        hashes[name] = hashlib.sha256(data).hexdigest()
    manifest = {
        "experiment": experiment,
        "seed": seed,
        "config_sha256": hashlib.sha256(config_path.read_bytes()).hexdigest(),
        "versions": _versions(),
        "files": hashes,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _parse_args(argv):
    parser = argparse.ArgumentParser(
        prog="ergostat",
        description="Run a return-time / extreme-value statistics experiment.",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", type=Path, help="config file (key=value or .json)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--workers", type=int, default=1,
                        help="compute threads; never affects results")
    parser.add_argument("--out", type=Path, default=Path("."),
                        help="output directory")
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = _parse_args(argv)
    env_config = os.environ.get("ERGOSTAT_CONFIG")
    config_path = Path(env_config) if env_config else args.config
    try:
        if config_path is None:
            raise ValidationError("no config: pass --config or set ERGOSTAT_CONFIG")
        if args.workers < 1:
            raise ValidationError("workers must be at least 1")
        run(args.experiment, config_path, args.seed, args.workers, args.out)
    except ValidationError as exc:
        print(f"ergostat: invalid input: {exc}", file=sys.stderr)
        return 2
    except ComputationError as exc:
        print(f"ergostat: computation failed: {exc}", file=sys.stderr)
        return 3
    except ErgostatError as exc:  # pragma: no cover - future subclasses
        print(f"ergostat: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
