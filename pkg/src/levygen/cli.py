"""Command-line entry point: JSON config in, CSV/JSON (and PNG) reports out.

Subcommands
-----------
symbol       evaluate q(x, xi), activity index, sector constant, diffusion
             estimate and the quadratic growth check; optional CSV of q
             along rays.
generator    Lf over a state grid by quadrature, with decay diagnostics.
simulate     sample paths to per-path CSV files plus a JSON summary.
asymptotics  a small-time limit study or a vague-convergence experiment;
             CSV columns are t, mean, stderr, reference, discrepancy.
verify       one of the check suites {aux1, app7, kernel, domain} with
             per-check margins in the JSON summary.

The whole config document is schema-validated before any computation and
unknown keys are rejected by dotted path.  Exit codes: 0 all checks pass,
1 a check failed, 2 config error, 3 quadrature non-convergence.  The
master seed comes from --seed, then the config, then DEFAULT_SEED, and the
same config plus seed always produces byte-identical CSV files no matter
how many workers run the batches.

asymptotics and verify also render a PNG figure next to the delimited
output; --no-plot (or "plot": false in the config) switches that off.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .asymptotics import (
    DEFAULT_T_GRID,
    LimitExperiment,
    _verdict_model,
    generator_reference,
    limit_study,
    vague_convergence_experiment,
)
from .errors import CheckFailure, ConfigError, ContractError, DomainError, QuadratureError
from .holder import VariableOrderFn, domain_verdict
from .measures import (
    Atoms,
    GrowthFunction,
    IsotropicPower,
    aux1_moment_identity,
    kernel_identity_check,
    unit_directions,
)
from .simulate import (
    DEFAULT_SEED,
    CompoundPoissonModel,
    LevyModel,
    RelativisticModel,
    SDEModel,
    SeedPolicy,
    StableLikeModel,
    simulate_path,
)
from .symbols import (
    LevyTriplet,
    bg_index_infinity,
    diffusion_estimate,
    measure_from_config,
    quadratic_growth_check,
    sector_constant,
    symbol_from_config,
)
from . import reports, testfunctions

__all__ = [
    "main",
    "load_config",
    "model_from_config",
    "function_from_config",
    "region_from_config",
]


# ---------------------------------------------------------------------------
# schema validation


def _where(parent: str, key: str) -> str:
    return f"{parent}.{key}" if parent else str(key)


def _as_dict(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"config key '{where}' must be a JSON object")
    return value


def _check_keys(doc: dict, where: str, required, optional):
    allowed = set(required) | set(optional)
    for key in doc:
        if key not in allowed:
            raise ConfigError(
                f"unknown config key '{_where(where, key)}'; allowed here: "
                f"{', '.join(sorted(allowed))}"
            )
    for key in required:
        if key not in doc:
            raise ConfigError(f"missing config key '{_where(where, key)}'")


def _check_kind(doc: dict, where: str, field: str, table: dict) -> str:
    kind = doc.get(field)
    if kind not in table:
        raise ConfigError(
            f"config key '{_where(where, field)}' must be one of: "
            f"{', '.join(sorted(table))}"
        )
    return kind


_MEASURE_SCHEMA = {
    "isotropic_power": ({"kind", "c", "alpha"}, {"d", "r_max"}),
    "atoms": ({"kind", "locations", "weights"}, set()),
    "density": ({"kind", "intensity", "tail"}, {"d", "sing_exponent", "symmetric"}),
    "pushforward": ({"kind", "base", "matrix"}, set()),
}


def _check_measure(doc, where):
    doc = _as_dict(doc, where)
    kind = _check_kind(doc, where, "kind", _MEASURE_SCHEMA)
    req, opt = _MEASURE_SCHEMA[kind]
    _check_keys(doc, where, req, opt)
    if kind == "pushforward":
        _check_measure(doc["base"], _where(where, "base"))


_SYMBOL_SCHEMA = {
    "stable-like": ({"gamma"}, set()),
    "relativistic": ({"gamma", "m"}, set()),
    "tlp": ({"gamma", "m"}, set()),
    "tlp-like": ({"gamma", "m"}, set()),
    "lamperti": ({"gamma", "m"}, set()),
    "levy": (set(), {"b", "Q", "measure"}),
    "levy-constant": (set(), {"b", "Q", "measure"}),
    "sde-composed": ({"driver", "sigma"}, set()),
    "triplet-integrated": (set(), {"b", "Q", "measure"}),
}


def _check_symbol(doc, where):
    doc = _as_dict(doc, where)
    _check_keys(doc, where, {"family"}, {"d", "params"})
    fam = _check_kind(doc, where, "family", _SYMBOL_SCHEMA)
    req, opt = _SYMBOL_SCHEMA[fam]
    pw = _where(where, "params")
    params = _as_dict(doc.get("params", {}), pw)
    _check_keys(params, pw, req, opt)
    if fam == "sde-composed":
        _check_symbol(params["driver"], _where(pw, "driver"))
    elif fam == "triplet-integrated":
        # state-dependent powers carry expression strings for c/alpha, so
        # only a constant measure doc goes through the strict checker
        meas = params.get("measure")
        if isinstance(meas, dict) and not any(
            isinstance(meas.get(k), str) for k in ("c", "alpha")
        ):
            _check_measure(meas, _where(pw, "measure"))
    elif params.get("measure") is not None:
        _check_measure(params["measure"], _where(pw, "measure"))


_MODEL_SCHEMA = {
    "levy": (set(), {"b", "Q", "measure", "d"}),
    "compound_poisson": ({"jumps"}, {"drift"}),
    "stable_like": ({"gamma"}, {"d"}),
    "relativistic": ({"gamma", "m"}, {"d"}),
    "sde": ({"sigma", "driver"}, {"d", "sigma_bound", "sigma_lipschitz"}),
}


def _check_model(doc, where):
    doc = _as_dict(doc, where)
    kind = _check_kind(doc, where, "kind", _MODEL_SCHEMA)
    req, opt = _MODEL_SCHEMA[kind]
    _check_keys(doc, where, req | {"kind"}, opt)
    if kind == "levy" and doc.get("measure") is not None:
        _check_measure(doc["measure"], _where(where, "measure"))
    if kind == "compound_poisson":
        jw = _where(where, "jumps")
        jumps = _as_dict(doc["jumps"], jw)
        _check_keys(jumps, jw, {"locations", "weights"}, {"kind"})
        if jumps.get("kind", "atoms") != "atoms":
            raise ConfigError(f"config key '{_where(jw, 'kind')}' must be 'atoms'")
    if kind == "sde":
        _check_model(doc["driver"], _where(where, "driver"))


_FUNCTION_SCHEMA = {
    "gaussian": (set(), {"d"}),
    "bump": (set(), {"d", "radius"}),
    "power_envelope": ({"beta"}, {"d"}),
    "holder_pair": ({"alpha0"}, {"d"}),
    "cosine": ({"xi0"}, {"d"}),
    "quadratic_cutoff": (set(), {"d", "flat_radius", "support_radius"}),
    "expression": ({"source"}, {"d", "vanishes", "envelope"}),
}


def _check_function(doc, where):
    doc = _as_dict(doc, where)
    kind = _check_kind(doc, where, "kind", _FUNCTION_SCHEMA)
    req, opt = _FUNCTION_SCHEMA[kind]
    _check_keys(doc, where, req | {"kind"}, opt)


_REGION_SCHEMA = {
    "interval": {"lo", "hi"},
    "annulus": {"r0", "r1"},
    "box": {"lo", "hi"},
}


def _check_region(doc, where):
    doc = _as_dict(doc, where)
    kind = _check_kind(doc, where, "kind", _REGION_SCHEMA)
    _check_keys(doc, where, _REGION_SCHEMA[kind] | {"kind"}, set())


def _check_number(doc, where, *keys):
    for key in keys:
        if key in doc and not isinstance(doc[key], (int, float)):
            raise ConfigError(f"config key '{_where(where, key)}' must be a number")


def _check_states(doc, where, key="states"):
    spec = doc.get(key)
    if spec is None:
        return
    kw = _where(where, key)
    if isinstance(spec, dict):
        _check_keys(spec, kw, {"start", "stop", "count"}, set())
    elif not isinstance(spec, list):
        raise ConfigError(f"config key '{kw}' must be a list or a start/stop/count object")


_COMMON_KEYS = {"command", "seed", "out"}

_TOP_SCHEMAS = {
    "symbol": ({"symbol"}, _COMMON_KEYS | {"x", "xi", "eta", "rays",
                                           "probe_states", "probe_xis"}),
    "generator": ({"model", "function"}, _COMMON_KEYS | {"states", "tol"}),
    "simulate": ({"model", "horizon", "step"},
                 _COMMON_KEYS | {"x0", "paths", "exit_radius"}),
    "asymptotics": ({"model", "experiment"},
                    _COMMON_KEYS | {"plot", "function", "x", "region",
                                    "stopped_in", "growth", "reference"}),
    "verify": ({"suite"}, _COMMON_KEYS | {"plot", "ys", "alphas", "rel_tol",
                                          "measure", "kappas", "critical_kappa",
                                          "symbol", "x", "eta", "threshold",
                                          "model", "function", "order", "grid",
                                          "cap"}),
}

_VERIFY_SUITE_KEYS = {
    "kernel": {"ys", "alphas", "rel_tol"},
    "aux1": {"measure", "kappas", "critical_kappa", "rel_tol"},
    "app7": {"symbol", "x", "eta", "threshold"},
    "domain": {"model", "function", "order", "grid", "cap"},
}


def validate_config(cfg: dict, command: str) -> None:
    """Reject unknown keys anywhere in the document, by dotted path."""
    cfg = _as_dict(cfg, "<root>")
    req, opt = _TOP_SCHEMAS[command]
    _check_keys(cfg, "", req, opt)
    if "command" in cfg and cfg["command"] != command:
        raise ConfigError(
            f"config key 'command' says {cfg['command']!r} but the "
            f"{command!r} subcommand was invoked"
        )
    if "seed" in cfg:
        if not isinstance(cfg["seed"], int) or not 0 <= cfg["seed"] < 2 ** 64:
            raise ConfigError("config key 'seed' must be an integer in [0, 2^64)")

    if command == "symbol":
        _check_symbol(cfg["symbol"], "symbol")
        if "rays" in cfg:
            rays = _as_dict(cfg["rays"], "rays")
            _check_keys(rays, "rays", set(), {"r_min", "r_max", "count", "directions"})
            _check_number(rays, "rays", "r_min", "r_max", "count", "directions")
    elif command == "generator":
        _check_model(cfg["model"], "model")
        _check_function(cfg["function"], "function")
        _check_states(cfg, "")
        _check_number(cfg, "", "tol")
    elif command == "simulate":
        _check_model(cfg["model"], "model")
        _check_number(cfg, "", "horizon", "step", "paths", "exit_radius")
    elif command == "asymptotics":
        _check_model(cfg["model"], "model")
        ew = "experiment"
        exp = _as_dict(cfg["experiment"], ew)
        kind = _check_kind(exp, ew, "kind", {"limit_study": None, "vague": None})
        _check_keys(exp, ew, {"kind"}, {"t_grid", "n", "estimator", "steps"})
        _check_number(exp, ew, "n", "steps")
        if kind == "limit_study":
            if "function" not in cfg:
                raise ConfigError("limit_study experiments need a 'function' entry")
            if "region" in cfg:
                raise ConfigError("config key 'region' belongs to vague experiments")
            _check_function(cfg["function"], "function")
            if "stopped_in" in cfg:
                ball = _as_dict(cfg["stopped_in"], "stopped_in")
                _check_keys(ball, "stopped_in", {"radius"}, {"center"})
            if "growth" in cfg:
                g = _as_dict(cfg["growth"], "growth")
                _check_keys(g, "growth", set(), {"poly_p", "exp_beta", "exp_kappa"})
        else:
            if "region" not in cfg:
                raise ConfigError("vague experiments need a 'region' entry")
            for key in ("function", "stopped_in", "growth", "reference"):
                if key in cfg:
                    raise ConfigError(
                        f"config key '{key}' belongs to limit_study experiments"
                    )
            _check_region(cfg["region"], "region")
    elif command == "verify":
        suite = _check_kind(cfg, "", "suite", _VERIFY_SUITE_KEYS)
        _check_keys(cfg, "", {"suite"},
                    _COMMON_KEYS | {"plot"} | _VERIFY_SUITE_KEYS[suite])
        if suite == "aux1" and "measure" in cfg:
            _check_measure(cfg["measure"], "measure")
        if suite == "app7" and "symbol" in cfg:
            _check_symbol(cfg["symbol"], "symbol")
        if suite == "domain":
            if "model" in cfg:
                _check_model(cfg["model"], "model")
            if "function" in cfg:
                _check_function(cfg["function"], "function")
            if "order" in cfg:
                ow = "order"
                order = _as_dict(cfg["order"], ow)
                _check_keys(order, ow, {"alpha"},
                            {"eps_gap", "modulus_slope", "lower_bound"})
            _check_states(cfg, "", key="grid")


# ---------------------------------------------------------------------------
# builders


def model_from_config(doc: dict):
    kind = doc["kind"]
    if kind == "levy":
        d = int(doc.get("d", 1))
        nu = measure_from_config(doc["measure"]) if doc.get("measure") else None
        return LevyModel(LevyTriplet(doc.get("b"), doc.get("Q"), nu, d=d))
    if kind == "compound_poisson":
        jumps = doc["jumps"]
        loc = np.asarray(jumps["locations"], dtype=float)
        if loc.ndim == 1:
            loc = loc[:, None]
        atoms = Atoms(loc, np.asarray(jumps["weights"], dtype=float))
        return CompoundPoissonModel(atoms, doc.get("drift"))
    if kind == "stable_like":
        return StableLikeModel(doc["gamma"], int(doc.get("d", 1)))
    if kind == "relativistic":
        return RelativisticModel(doc["gamma"], doc["m"], int(doc.get("d", 1)))
    if kind == "sde":
        sigma = doc["sigma"]
        if isinstance(sigma, list):
            sigma = np.asarray(sigma, dtype=float)
        return SDEModel(sigma, model_from_config(doc["driver"]),
                        d=doc.get("d"), sigma_bound=doc.get("sigma_bound"),
                        sigma_lipschitz=doc.get("sigma_lipschitz"))
    raise ConfigError(f"unknown model kind {kind!r}")


def function_from_config(doc: dict):
    kind = doc["kind"]
    d = int(doc.get("d", 1))
    if kind == "gaussian":
        return testfunctions.gaussian(d)
    if kind == "bump":
        return testfunctions.bump(d, float(doc.get("radius", 1.0)))
    if kind == "power_envelope":
        return testfunctions.power_envelope(float(doc["beta"]), d)
    if kind == "holder_pair":
        return testfunctions.holder_pair(float(doc["alpha0"]), d)
    if kind == "cosine":
        return testfunctions.cosine(doc["xi0"], d)
    if kind == "quadratic_cutoff":
        return testfunctions.quadratic_cutoff(
            d, float(doc.get("flat_radius", 2.0)),
            float(doc.get("support_radius", 4.0)))
    if kind == "expression":
        env = doc.get("envelope")
        envelope = (lambda r, _c=float(env): np.full_like(
            np.asarray(r, dtype=float), _c, dtype=float)) if env is not None else None
        return testfunctions.from_expression(
            doc["source"], d, bool(doc.get("vanishes", False)), envelope)
    raise ConfigError(f"unknown function kind {kind!r}")


def region_from_config(doc: dict):
    kind = doc["kind"]
    if kind == "interval":
        return ("interval", float(doc["lo"]), float(doc["hi"]))
    if kind == "annulus":
        return ("annulus", float(doc["r0"]), float(doc["r1"]))
    if kind == "box":
        return ("box", doc["lo"], doc["hi"])
    raise ConfigError(f"unknown region kind {kind!r}")


def _states_grid(spec, d: int) -> np.ndarray:
    if spec is None:
        if d == 1:
            return np.linspace(-5.0, 5.0, 21)[:, None]
        raise ConfigError("state grids must be given explicitly for d > 1")
    if isinstance(spec, dict):
        count = int(spec.get("count", 21))
        if count < 1:
            raise ConfigError("config key 'states.count' must be at least 1")
        start = np.atleast_1d(np.asarray(spec.get("start", -5.0), dtype=float))
        stop = np.atleast_1d(np.asarray(spec.get("stop", 5.0), dtype=float))
        grid = np.linspace(start, stop, count)
        if grid.shape[1] != d:
            raise ConfigError(f"state grid endpoints must have {d} components")
        return grid
    arr = np.asarray(spec, dtype=float)
    if arr.ndim == 1:
        if d != 1:
            raise ConfigError(f"states must be rows of {d} components")
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[1] != d:
        raise ConfigError(f"states must be rows of {d} components")
    return arr


def _vector(value, d: int, default: float = 0.0) -> np.ndarray:
    if value is None:
        return np.full(d, default)
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.shape == (1,) and d > 1:
        return np.full(d, float(arr[0]))
    if arr.shape != (d,):
        raise ConfigError(f"expected a length-{d} vector, got shape {arr.shape}")
    return arr


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as ex:
        raise ConfigError(f"config file {path} is not valid JSON: {ex}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return doc


def _resolve_seed(cfg, args) -> int:
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed must lie in [0, 2^64)")
        return args.seed
    return int(cfg.get("seed", DEFAULT_SEED))


def _out_dir(cfg, args) -> str:
    out = args.out or cfg.get("out") or "."
    os.makedirs(out, exist_ok=True)
    return out


def _want_plot(cfg, args) -> bool:
    if getattr(args, "no_plot", False):
        return False
    return bool(cfg.get("plot", True))


def _emit(path: str) -> None:
    print(f"wrote {path}")


# ---------------------------------------------------------------------------
# commands


def cmd_symbol(cfg: dict, args) -> int:
    sym = symbol_from_config(cfg["symbol"])
    d = sym.d
    x = _vector(cfg.get("x"), d)
    out = _out_dir(cfg, args)

    if "xi" in cfg:
        xi_rows = [np.atleast_1d(np.asarray(row, dtype=float)) for row in cfg["xi"]]
    else:
        xi_rows = [r * unit_directions(d, 2)[0] for r in (0.25, 1.0, 4.0)]
    values = []
    for xi in xi_rows:
        if xi.shape != (d,):
            raise ConfigError(f"each 'xi' entry must have {d} components")
        q = complex(np.asarray(sym.q(x, xi)).ravel()[0])
        values.append({"xi": xi, "re": q.real, "im": q.imag})

    bg = bg_index_infinity(sym, x)
    sector = sector_constant(sym, x)
    eta = cfg.get("eta")
    eta = (_vector(eta, d) if eta is not None else unit_directions(d, 2)[0])
    diffusion = diffusion_estimate(sym, x, eta)

    if "probe_states" in cfg:
        states = [_vector(s, d) for s in cfg["probe_states"]]
    else:
        states = [np.zeros(d), 0.5 * np.ones(d), -np.ones(d)]
    if "probe_xis" in cfg:
        xis = np.atleast_2d(np.asarray(cfg["probe_xis"], dtype=float))
    else:
        ladder = np.geomspace(1e-2, 64.0, 12)
        dirs = unit_directions(d, min(8, 2 * d + 2))
        xis = np.concatenate([np.outer(ladder, e) for e in dirs])
    growth = quadratic_growth_check(sym, states, xis)

    doc = {
        "command": "symbol",
        "x": x,
        "values": values,
        "beta_infinity": {"value": bg.value, "slope_stderr": bg.slope_stderr,
                          "bounded": bg.bounded},
        "sector": {"constant": sector.constant, "unbounded": sector.unbounded,
                   "argmax_xi": sector.argmax_xi},
        "diffusion_estimate": {"value": float(diffusion),
                               "per_r": diffusion.per_r,
                               "decreasing": diffusion.decreasing},
        "growth_check": {"passed": growth.passed, "c_k": growth.c_k,
                         "worst_ratio": growth.worst_ratio,
                         "worst_state": growth.worst_state,
                         "worst_xi": growth.worst_xi},
        "passed": growth.passed,
    }
    path = os.path.join(out, "symbol.json")
    reports.write_json(path, doc)
    _emit(path)

    if "rays" in cfg:
        rays = cfg["rays"]
        radii = np.geomspace(float(rays.get("r_min", 1e-3)),
                             float(rays.get("r_max", 1e3)),
                             int(rays.get("count", 121)))
        dirs = unit_directions(d, int(rays.get("directions", 2 * d)))
        rows = []
        for i, e in enumerate(dirs):
            qs = np.atleast_1d(sym.q(x, np.outer(radii, e)))
            for r, q in zip(radii, qs):
                rows.append((i, r, q.real, q.imag))
        csv_path = os.path.join(out, "symbol_rays.csv")
        reports.write_csv(csv_path, ["ray", "r", "re_q", "im_q"], rows)
        _emit(csv_path)

    print("pass" if growth.passed else "fail: quadratic growth check")
    return 0 if growth.passed else 1


def _grid_diagnostics(states: np.ndarray, values: np.ndarray):
    """Decay ratio and largest adjacent jump, same conventions as apply_on_grid."""
    ok = np.isfinite(values)
    if not np.any(ok):
        return math.nan, math.nan
    norms = np.linalg.norm(states, axis=1)
    vmax = float(np.max(np.abs(values[ok])))
    shell = norms >= 0.9 * float(np.max(norms))
    outer = float(np.max(np.abs(values[shell & ok]))) if np.any(shell & ok) else 0.0
    decay = outer / vmax if vmax > 0 else 0.0
    ordered = values[np.argsort(norms)]
    ordered = ordered[np.isfinite(ordered)]
    jump = float(np.max(np.abs(np.diff(ordered)))) if ordered.size > 1 else 0.0
    return decay, jump


def cmd_generator(cfg: dict, args) -> int:
    model = model_from_config(cfg["model"])
    tf = function_from_config(cfg["function"])
    states = _states_grid(cfg.get("states"), model.d)
    tol = float(cfg.get("tol", 1e-8))
    out = _out_dir(cfg, args)

    n = states.shape[0]
    values = np.full(n, np.nan)
    errors = np.full(n, np.nan)
    statuses = ["ok"] * n
    for i in range(n):
        try:
            gv = generator_reference(model, tf, states[i], tol=tol)
            values[i] = gv.value
            errors[i] = gv.error
        except (DomainError, ContractError) as ex:
            statuses[i] = f"{type(ex).__name__}: {ex}"

    decay, jump = _grid_diagnostics(states, values)
    header = [f"x{j + 1}" for j in range(model.d)] + ["value", "error", "status"]
    rows = [(*states[i], values[i], errors[i], statuses[i]) for i in range(n)]
    csv_path = os.path.join(out, "generator.csv")
    reports.write_csv(csv_path, header, rows)
    _emit(csv_path)

    n_ok = sum(1 for s in statuses if s == "ok")
    all_ok = n_ok == n
    doc = {
        "command": "generator",
        "function": tf.name,
        "n_states": n,
        "n_ok": n_ok,
        "max_abs_value": float(np.nanmax(np.abs(values))) if n_ok else math.nan,
        "max_error": float(np.nanmax(errors)) if n_ok else math.nan,
        "decay_ratio": decay,
        "max_adjacent_jump": jump,
        "passed": all_ok,
    }
    json_path = os.path.join(out, "generator.json")
    reports.write_json(json_path, doc)
    _emit(json_path)
    print("pass" if all_ok else f"fail: {n - n_ok} of {n} states errored")
    return 0 if all_ok else 1


def cmd_simulate(cfg: dict, args) -> int:
    model = model_from_config(cfg["model"])
    horizon = float(cfg["horizon"])
    step = float(cfg["step"])
    x0 = _vector(cfg.get("x0"), model.d)
    paths = int(cfg.get("paths", 1))
    if paths < 1:
        raise ConfigError("config key 'paths' must be at least 1")
    exit_radius = cfg.get("exit_radius")
    exit_radius = float(exit_radius) if exit_radius is not None else None
    seed = _resolve_seed(cfg, args)
    pol = SeedPolicy(seed)
    out = _out_dir(cfg, args)

    summaries = []
    for i in range(paths):
        ps = simulate_path(model, x0, horizon, step, seeds=pol, ctx=(i,),
                           exit_radius=exit_radius)
        exit_t = ps.exit_time
        exited = (
            np.zeros(ps.times.shape[0], dtype=int)
            if exit_t is None or not math.isfinite(exit_t)
            else (ps.times >= exit_t).astype(int)
        )
        X = np.atleast_2d(ps.states)
        if X.shape[0] != ps.times.shape[0]:
            X = X.T
        header = ["t"] + [f"x{j + 1}" for j in range(model.d)] + ["runsup", "exited"]
        rows = [
            (ps.times[k], *X[k], ps.running_sup[k], exited[k])
            for k in range(ps.times.shape[0])
        ]
        csv_path = os.path.join(out, f"simulate_path{i}.csv")
        reports.write_csv(csv_path, header, rows)
        _emit(csv_path)
        summaries.append({
            "path": i,
            "final_state": X[-1],
            "running_sup": float(ps.running_sup[-1]),
            "exit_time": exit_t,
            "n_jumps": len(ps.jumps) if ps.jumps is not None else None,
        })

    doc = {
        "command": "simulate",
        "seed": seed,
        "horizon": horizon,
        "step": step,
        "x0": x0,
        "paths": paths,
        "exit_radius": exit_radius,
        "path_summaries": summaries,
    }
    json_path = os.path.join(out, "simulate.json")
    reports.write_json(json_path, doc)
    _emit(json_path)
    return 0


def _report_rows(report):
    ref = report.reference
    rows = []
    for t, est in zip(report.t_grid, report.table):
        disc = abs(est.mean - ref) / (3.0 * est.stderr + 0.05 * abs(ref) + 1e-6)
        rows.append((float(t), est.mean, est.stderr, ref, disc))
    return rows


def cmd_asymptotics(cfg: dict, args) -> int:
    model = model_from_config(cfg["model"])
    exp = cfg["experiment"]
    kind = exp["kind"]
    seed = _resolve_seed(cfg, args)
    pol = SeedPolicy(seed)
    x = _vector(cfg.get("x"), model.d)
    t_grid = tuple(float(t) for t in exp.get("t_grid", DEFAULT_T_GRID))
    n = int(exp.get("n", 10_000))
    estimator = exp.get("estimator", "last-point")
    steps = int(exp.get("steps", 64))
    out = _out_dir(cfg, args)

    if kind == "limit_study":
        tf = function_from_config(cfg["function"])
        experiment = LimitExperiment(t_grid=t_grid, n=n, estimator=estimator,
                                     seeds=pol)
        stopped = None
        if "stopped_in" in cfg:
            ball = cfg["stopped_in"]
            center = _vector(ball.get("center"), model.d) if "center" in ball else x
            stopped = (center, float(ball["radius"]))
        growth = None
        if "growth" in cfg:
            growth = GrowthFunction(
                poly_p=float(cfg["growth"].get("poly_p", 0.0)),
                exp_beta=float(cfg["growth"].get("exp_beta", 0.0)),
                exp_kappa=float(cfg["growth"].get("exp_kappa", 1.0)))
        reference = cfg.get("reference")
        if isinstance(reference, list):
            reference = tuple(float(v) for v in reference)
        elif reference is not None:
            reference = float(reference)
        report = limit_study(experiment, model, tf, x, stopped_in=stopped,
                             growth=growth, reference=reference, steps=steps,
                             workers=args.workers)
        title = f"limit study: {tf.name}"
    else:
        A = region_from_config(cfg["region"])
        report = vague_convergence_experiment(
            model, x, A, t_grid=t_grid, n=n, seeds=pol, estimator=estimator,
            steps=steps, workers=args.workers)
        title = f"vague convergence: {A[0]} target"

    csv_path = os.path.join(out, "asymptotics.csv")
    reports.write_csv(csv_path, ["t", "mean", "stderr", "reference", "discrepancy"],
                      _report_rows(report))
    _emit(csv_path)

    doc = {
        "command": "asymptotics",
        "kind": kind,
        "seed": seed,
        "n": n,
        "estimator": report.estimator,
        "t_grid": report.t_grid,
        "extrapolated": report.extrapolated,
        "extrapolated_stderr": report.extrapolated_stderr,
        "reference": report.reference,
        "reference_error": report.reference_error,
        "noise_term": report.noise_term,
        "allowance_term": report.allowance_term,
        "discrepancy": report.discrepancy,
        "passed": report.passed,
    }
    json_path = os.path.join(out, "asymptotics.json")
    reports.write_json(json_path, doc)
    _emit(json_path)

    if _want_plot(cfg, args):
        from . import plots

        png_path = os.path.join(out, "asymptotics.png")
        plots.convergence_figure(report, png_path, title)
        _emit(png_path)

    print("pass" if report.passed else
          f"fail: discrepancy {report.discrepancy:.3g} > 1")
    return 0 if report.passed else 1


# ---------------------------------------------------------------------------
# verification suites


def _suite_kernel(cfg) -> list:
    ys = cfg.get("ys", [0.25, 0.5, 1.0, 2.0])
    alphas = cfg.get("alphas", [0.3, 0.9, 1.5, 1.9])
    rel_tol = float(cfg.get("rel_tol", 0.01))
    checks = []
    for y in ys:
        for a in alphas:
            rep = kernel_identity_check(float(y), float(a))
            checks.append({
                "name": f"kernel y={y:g} alpha={a:g}",
                "margin": rel_tol - rep.rel_gap,
                "passed": rep.rel_gap <= rel_tol,
                "lhs": rep.lhs, "rhs": rep.rhs, "rel_gap": rep.rel_gap,
            })
    return checks


def _suite_aux1(cfg) -> list:
    default_measure = cfg.get("measure") is None
    if default_measure:
        spec = IsotropicPower(1.0, 0.6, 1, r_max=1.0)
    else:
        spec = measure_from_config(cfg["measure"])
    kappas = cfg.get("kappas", [0.8])
    rel_tol = float(cfg.get("rel_tol", 0.01))
    checks = []
    for k in kappas:
        rep = aux1_moment_identity(spec, float(k))
        diverged = rep.lhs_diverged or rep.rhs_diverged
        checks.append({
            "name": f"moment identity kappa={k:g}",
            "margin": -1.0 if diverged else rel_tol - rep.rel_gap,
            "passed": (not diverged) and rep.rel_gap <= rel_tol,
            "lhs": rep.lhs, "rhs": rep.rhs, "rel_gap": rep.rel_gap,
        })
    # at the critical exponent both sides must blow up together
    crit = cfg.get("critical_kappa", 0.6 if default_measure else None)
    if crit is not None:
        rep = aux1_moment_identity(spec, float(crit))
        both = rep.lhs_diverged and rep.rhs_diverged
        checks.append({
            "name": f"joint divergence kappa={crit:g}",
            "margin": 1.0 if both else -1.0,
            "passed": both,
            "lhs_diverged": rep.lhs_diverged,
            "rhs_diverged": rep.rhs_diverged,
        })
    return checks


def _suite_app7(cfg) -> list:
    doc = cfg.get("symbol", {"family": "stable-like", "d": 1,
                             "params": {"gamma": 1.5}})
    sym = symbol_from_config(doc)
    x = _vector(cfg.get("x"), sym.d)
    eta = cfg.get("eta")
    eta = _vector(eta, sym.d) if eta is not None else unit_directions(sym.d, 2)[0]
    threshold = float(cfg.get("threshold", 0.01))
    bg = bg_index_infinity(sym, x)
    est = diffusion_estimate(sym, x, eta)
    return [
        {"name": "activity index below 2", "margin": 2.0 - bg.value,
         "passed": bg.value < 2.0, "beta_infinity": bg.value},
        {"name": "vanishing diffusion part", "margin": threshold - float(est),
         "passed": float(est) <= threshold, "estimate": float(est),
         "decreasing": est.decreasing},
    ]


def _suite_domain(cfg) -> list:
    model = model_from_config(cfg.get("model", {
        "kind": "stable_like", "gamma": "0.6 + 0.2*sin(x1)", "d": 1}))
    tf = function_from_config(cfg.get("function", {
        "kind": "holder_pair", "alpha0": 0.95, "d": 1}))
    order = cfg.get("order", {"alpha": "0.75 + 0.2*sin(x1)", "eps_gap": 0.1,
                              "modulus_slope": 0.2})
    slope = order.get("modulus_slope")
    alphafn = VariableOrderFn(
        order["alpha"], eps_gap=float(order.get("eps_gap", 0.05)),
        modulus=(lambda t, _s=float(slope): _s * t) if slope is not None else None,
        lower_bound=order.get("lower_bound"))
    grid = _states_grid(cfg.get("grid"), model.d) if cfg.get("grid") is not None \
        else np.linspace(-4.0, 4.0, 17)[:, None]
    verdict = domain_verdict(_verdict_model(model), tf, alphafn, grid=grid,
                             cap=float(cfg.get("cap", 1e6)))
    worst = min((r.margin for r in verdict.reasons), default=1.0)
    return [{
        "name": f"domain certificate ({tf.name})",
        "margin": 1.0 if verdict.certified else min(worst, -1.0),
        "passed": verdict.certified,
        "status": verdict.status,
        "conditions": [
            {"route": r.route, "condition": r.condition, "passed": r.passed,
             "margin": r.margin} for r in verdict.reasons
        ],
    }]


_SUITES = {
    "kernel": _suite_kernel,
    "aux1": _suite_aux1,
    "app7": _suite_app7,
    "domain": _suite_domain,
}


def cmd_verify(cfg: dict, args) -> int:
    suite = cfg["suite"]
    checks = _SUITES[suite](cfg)
    passed = all(c["passed"] for c in checks)
    out = _out_dir(cfg, args)

    csv_path = os.path.join(out, "verify.csv")
    reports.write_csv(csv_path, ["check", "margin", "passed"],
                      [(c["name"], c["margin"], c["passed"]) for c in checks])
    _emit(csv_path)

    doc = {"command": "verify", "suite": suite, "checks": checks,
           "passed": passed}
    json_path = os.path.join(out, "verify.json")
    reports.write_json(json_path, doc)
    _emit(json_path)

    if _want_plot(cfg, args):
        from . import plots

        png_path = os.path.join(out, "verify.png")
        plots.margins_figure(checks, png_path, f"{suite} suite")
        _emit(png_path)

    for c in checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}  "
              f"margin={c['margin']:.4g}")
    print("pass" if passed else "fail")
    return 0 if passed else 1


# ---------------------------------------------------------------------------
# entry point


_COMMANDS = {
    "symbol": cmd_symbol,
    "generator": cmd_generator,
    "simulate": cmd_simulate,
    "asymptotics": cmd_asymptotics,
    "verify": cmd_verify,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levygen",
        description="symbol, generator, simulation and limit-experiment runs "
                    "driven by JSON configs")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--seed", type=lambda s: int(s, 0), default=None,
                       help="master seed (overrides the config)")
        p.add_argument("--workers", type=int, default=1,
                       help="batch worker count; never changes results")
        p.add_argument("--out", default=None,
                       help="output directory (default: config 'out' or '.')")
        if name in ("asymptotics", "verify"):
            p.add_argument("--no-plot", action="store_true",
                           help="skip the PNG figure")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        validate_config(cfg, args.command)
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        return _COMMANDS[args.command](cfg, args)
    except CheckFailure as ex:
        print(f"check failed: {ex}", file=sys.stderr)
        return 1
    except (ConfigError, ContractError, DomainError) as ex:
        print(f"config error: {ex}", file=sys.stderr)
        return 2
    except QuadratureError as ex:
        print(f"quadrature did not converge: {ex}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
