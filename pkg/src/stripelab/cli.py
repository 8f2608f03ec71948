"""Command line front-end: resolve a configuration, run one pipeline,
write artifacts plus a manifest echoing every parameter actually used.

Configuration comes from an optional JSON file (--config) overridden by
long-form flags.  Unknown keys are rejected.  Results go to files under
--out; logging goes to stderr.  Exit codes: 0 success, 2 configuration
error, 3 numerical failure (a diagnostic report is still written).
"""

import argparse
import json
import logging
import os
import platform
import sys

import numpy as np
import scipy

from . import __version__, exports
from . import bloch as bloch_mod
from . import defect as defect_mod
from . import farfield as farfield_mod
from . import fredholm as fredholm_mod
from . import response as response_mod
from .bloch import dispersion_branch, lambda2_from_jet
from .defect import SolverConfig, epsilon_sweep, solve_defect
from .errors import ConfigError, IoError, NumericalFailure
from .farfield import FarFieldParams, cokernel_pairings
from .fredholm import (
    WeightSpec,
    discrete_weighted_operator,
    kernel_cokernel_dims,
    borderline_range_test,
)
from .partition import build_partition
from .response import ImpuritySpec, phase_sweep, pinning_phases
from .stripes import continue_family, partial_k, solve_stripe

log = logging.getLogger("stripelab")

REQUIRED = object()


def _float_list(text):
    try:
        return [float(tok) for tok in str(text).split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad numeric list: {text!r}") from exc


def _int_list(text):
    try:
        return [int(tok) for tok in str(text).split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad integer list: {text!r}") from exc


# name -> (converter, default); REQUIRED means the key must be supplied
SCHEMAS = {
    "stripes": {
        "mu": (float, REQUIRED),
        "k": (float, REQUIRED),
        "n_modes": (int, 32),
        "tol": (float, 1e-10),
        "k_max": (float, None),
        "k_steps": (int, 17),
    },
    "bloch": {
        "mu": (float, REQUIRED),
        "k": (float, REQUIRED),
        "n_modes": (int, 32),
        "n_sigma": (int, 64),
    },
    "pairings": {
        "mu": (float, REQUIRED),
        "k": (float, REQUIRED),
        "n_modes": (int, 32),
        "width": (float, 0.375),
        "nodes_per_period": (int, farfield_mod.PAIRING_NODES_PER_PERIOD),
    },
    "response": {
        "mu": (float, REQUIRED),
        "k": (float, REQUIRED),
        "n_modes": (int, 32),
        "impurity": (str, REQUIRED),
        "a": (float, 0.0),
        "b": (float, 0.0),
        "w": (float, 1.0),
        "x0": (float, 0.0),
        "n_phases": (int, 64),
    },
    "solve": {
        "mu": (float, REQUIRED),
        "k": (float, REQUIRED),
        "n_modes": (int, 32),
        "impurity": (str, REQUIRED),
        "a": (float, 0.0),
        "b": (float, 0.0),
        "w": (float, 1.0),
        "x0": (float, 0.0),
        "eps": (float, REQUIRED),
        "phi0": (float, 0.0),
        "k0": (float, 0.0),
        "L": (float, 40.0),
        "h": (float, None),
        "newton_tol": (float, 1e-10),
        "width": (float, 0.375),
    },
    "sweep": {
        "mu": (float, REQUIRED),
        "k": (float, REQUIRED),
        "n_modes": (int, 32),
        "impurity": (str, REQUIRED),
        "a": (float, 0.0),
        "b": (float, 0.0),
        "w": (float, 1.0),
        "x0": (float, 0.0),
        "eps_list": (_float_list, REQUIRED),
        "phi0": (float, 0.0),
        "k0": (float, 0.0),
        "L": (float, 40.0),
        "h": (float, None),
        "newton_tol": (float, 1e-10),
        "width": (float, 0.375),
    },
    "fredholm": {
        "mode": (str, "scan"),
        "kind": (str, "delta"),
        "ell": (int, REQUIRED),
        "i": (int, 0),
        "p": (float, 2.0),
        "N": (int, 256),
        "gammas": (_float_list, None),
        "j": (int, 1),
        "n_list": (_int_list, [8, 16, 32, 64]),
    },
    "verify": {},
}

# internal tolerances surfaced in the manifest, per command
def _tolerances(command):
    common = {"stripes": {"newton_update_tol": 1e-12}}
    table = {
        "stripes": {},
        "bloch": {"branch_cluster_gap": bloch_mod.BRANCH_CLUSTER_GAP},
        "pairings": {
            "pairing_half_width": farfield_mod.PAIRING_HALF_WIDTH,
            "tol_diagonal": farfield_mod.PAIR_TOL_DIAG,
            "tol_offdiagonal": farfield_mod.PAIR_TOL_OFFD,
            "tol_kk_constancy": farfield_mod.PAIR_TOL_KK,
            "tol_diffusivity": farfield_mod.PAIR_TOL_DIFF,
        },
        "response": {
            "nodes_per_period": response_mod.NODES_PER_PERIOD,
            "tail_tol": response_mod.TAIL_TOL,
            "degenerate_slope": response_mod.DEGENERATE_SLOPE,
        },
        "solve": {
            "eps_max": defect_mod.EPS_MAX,
            "roundoff_safety": defect_mod.ROUNDOFF_SAFETY,
            "norm_weight_gamma": defect_mod.NORM_WEIGHT_GAMMA,
        },
        "fredholm": {
            "gap_factor": fredholm_mod.GAP_FACTOR,
            "zero_cluster_rel": fredholm_mod.ZERO_CLUSTER_REL,
            "inner_fraction_min": fredholm_mod.INNER_FRACTION_MIN,
            "poly_cert_tol": fredholm_mod.POLY_CERT_TOL,
        },
        "verify": {},
    }
    table["sweep"] = table["solve"]
    out = dict(table.get(command, {}))
    out.update(common.get(command, {}))
    return out


def resolve_parameters(command, config_map, args):
    schema = SCHEMAS[command]
    unknown = sorted(set(config_map) - set(schema))
    if unknown:
        raise ConfigError(f"unknown configuration keys: {unknown}")
    params = {}
    missing = []
    for name, (conv, default) in schema.items():
        value = None if default is REQUIRED else default
        if name in config_map and config_map[name] is not None:
            value = conv(config_map[name])
        override = getattr(args, name, None)
        if override is not None:
            value = override
        if default is REQUIRED and value is None:
            missing.append(name)
        params[name] = value
    if missing:
        raise ConfigError(f"missing required keys: {missing}")
    return params


def _impurity(params):
    return ImpuritySpec(
        kind=params["impurity"],
        a=params["a"],
        b=params["b"],
        w=params["w"],
        x0=params["x0"],
    )


def _table(outdir, name, header, rows, fmt, artifacts):
    path = os.path.join(outdir, name + ".csv")
    exports.write_csv(path, header, rows)
    artifacts.append(name + ".csv")
    if fmt == "json":
        payload = [dict(zip(header, row)) for row in rows]
        exports.write_json(os.path.join(outdir, name + ".json"), payload)
        artifacts.append(name + ".json")


def cmd_stripes(params, outdir, fmt):
    artifacts = []
    sol = solve_stripe(
        params["mu"], params["k"], n_modes=params["n_modes"], tol=params["tol"]
    )
    exports.write_json(os.path.join(outdir, "stripe.json"), exports.stripe_json(sol))
    artifacts.append("stripe.json")
    if params["k_max"] is not None:
        grid = np.linspace(params["k"], params["k_max"], params["k_steps"])
        family = continue_family(
            params["mu"], grid, n_modes=params["n_modes"], tol=params["tol"]
        )
        _table(
            outdir, "family", exports.FAMILY_HEADER,
            exports.family_rows(family), fmt, artifacts,
        )
    return artifacts


def cmd_bloch(params, outdir, fmt):
    artifacts = []
    sol = solve_stripe(params["mu"], params["k"], n_modes=params["n_modes"])
    derivs = partial_k(sol)
    data = dispersion_branch(sol, derivs, n_sigma=params["n_sigma"])
    _table(
        outdir, "dispersion", exports.DISPERSION_HEADER,
        exports.dispersion_rows(data), fmt, artifacts,
    )
    exports.write_json(os.path.join(outdir, "bloch.json"), exports.bloch_json(data))
    artifacts.append("bloch.json")
    return artifacts


def cmd_pairings(params, outdir, fmt):
    sol = solve_stripe(params["mu"], params["k"], n_modes=params["n_modes"])
    derivs = partial_k(sol)
    geom = build_partition(params["width"])
    lam2 = lambda2_from_jet(sol, derivs)
    report = cokernel_pairings(
        sol, derivs, geom, lam2, n_per_period=params["nodes_per_period"]
    )
    exports.write_json(os.path.join(outdir, "pairings.json"), report)
    return ["pairings.json"]


def cmd_response(params, outdir, fmt):
    artifacts = []
    sol = solve_stripe(params["mu"], params["k"], n_modes=params["n_modes"])
    derivs = partial_k(sol)
    lam2 = lambda2_from_jet(sol, derivs)
    curve = phase_sweep(sol, derivs, lam2, _impurity(params), params["n_phases"])
    _table(
        outdir, "response", exports.RESPONSE_HEADER,
        exports.response_rows(curve), fmt, artifacts,
    )
    report = pinning_phases(curve)
    exports.write_json(os.path.join(outdir, "pinning.json"), exports.pinning_json(report))
    artifacts.append("pinning.json")
    return artifacts


def _solver_config(params):
    return SolverConfig(
        L=params["L"], h=params["h"], newton_tol=params["newton_tol"]
    )


def cmd_solve(params, outdir, fmt):
    artifacts = []
    sol = solve_stripe(params["mu"], params["k"], n_modes=params["n_modes"])
    derivs = partial_k(sol)
    geom = build_partition(params["width"])
    out = solve_defect(
        sol, derivs, geom, _impurity(params),
        FarFieldParams(phi0=params["phi0"], k0=params["k0"]),
        params["eps"], _solver_config(params),
    )
    exports.write_json(os.path.join(outdir, "defect.json"), exports.defect_json(out))
    artifacts.append("defect.json")
    _table(
        outdir, "defect", exports.DEFECT_HEADER,
        exports.defect_rows(out), fmt, artifacts,
    )
    return artifacts


def cmd_sweep(params, outdir, fmt):
    artifacts = []
    sol = solve_stripe(params["mu"], params["k"], n_modes=params["n_modes"])
    derivs = partial_k(sol)
    geom = build_partition(params["width"])
    report = epsilon_sweep(
        sol, derivs, geom, _impurity(params),
        FarFieldParams(phi0=params["phi0"], k0=params["k0"]),
        params["eps_list"], _solver_config(params),
    )
    _table(
        outdir, "sweep", exports.SWEEP_HEADER,
        exports.sweep_rows(report), fmt, artifacts,
    )
    exports.write_json(os.path.join(outdir, "sweep.json"), exports.sweep_json(report))
    artifacts.append("sweep.json")
    return artifacts


def cmd_fredholm(params, outdir, fmt):
    artifacts = []
    if params["mode"] == "scan":
        ell = params["ell"]
        gammas = params["gammas"]
        if gammas is None:
            gammas = [float(j) for j in range(ell + 1)]
        rows = []
        for gamma in gammas:
            op = discrete_weighted_operator(
                params["kind"], {"ell": ell, "i": params["i"]},
                params["N"], WeightSpec(gamma, gamma, p=params["p"]),
            )
            dim_ker, dim_coker, report = kernel_cokernel_dims(op)
            rows.append(
                (gamma, params["p"], ell, params["i"], dim_ker, dim_coker,
                 report["kernel"]["gap"])
            )
        _table(
            outdir, "fredholm", exports.FREDHOLM_HEADER, rows, fmt, artifacts
        )
    elif params["mode"] == "borderline":
        report = borderline_range_test(
            params["kind"], params["ell"], p=params["p"],
            N_list=tuple(params["n_list"]), j=params["j"],
        )
        _table(
            outdir, "borderline", exports.BORDERLINE_HEADER,
            exports.borderline_rows(report), fmt, artifacts,
        )
    else:
        raise ConfigError(f"unknown fredholm mode: {params['mode']!r}")
    return artifacts


def cmd_verify(params, outdir, fmt):
    from .acceptance import run_acceptance

    results = run_acceptance()
    rows = [(r["id"], r["name"], r["passed"], r["detail"]) for r in results]
    artifacts = []
    _table(outdir, "verify", ("id", "name", "passed", "detail"), rows, fmt, artifacts)
    for r in results:
        line = "PASS" if r["passed"] else "FAIL"
        print(f"criterion {r['id']:2d} [{line}] {r['name']}: {r['detail']}")
    if not all(r["passed"] for r in results):
        raise NumericalFailure(
            "acceptance suite failed",
            failed=[r["id"] for r in results if not r["passed"]],
        )
    return artifacts


HANDLERS = {
    "stripes": cmd_stripes,
    "bloch": cmd_bloch,
    "pairings": cmd_pairings,
    "response": cmd_response,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "fredholm": cmd_fredholm,
    "verify": cmd_verify,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="stripelab",
        description="Stripe patterns, phase response and pinned defects.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, schema in SCHEMAS.items():
        p = sub.add_parser(command)
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument(
            "--log-level", default="INFO",
            choices=("DEBUG", "INFO", "WARNING", "ERROR"),
        )
        for name, (conv, _default) in schema.items():
            flag = "--" + name.replace("_", "-")
            p.add_argument(flag, dest=name, type=conv, default=None)
    return parser


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data


def _thread_cap():
    raw = os.environ.get("STRIPE_IMPURITY_THREADS")
    if raw is None:
        return None
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ConfigError(
            f"STRIPE_IMPURITY_THREADS must be an integer, got {raw!r}"
        ) from exc
    if cap < 1:
        raise ConfigError("STRIPE_IMPURITY_THREADS must be positive")
    return cap


def run(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, args.log_level),
        format="%(levelname)s %(name)s: %(message)s",
    )
    command = args.command
    params = resolve_parameters(command, _load_config(args.config), args)
    os.makedirs(args.out, exist_ok=True)
    cap = _thread_cap()
    log.info("running %s", command)

    manifest = {
        "command": command,
        "parameters": params,
        "output_dir": args.out,
        "format": args.format,
        "tolerances": _tolerances(command),
        # amplitude sweeps warm-start sequentially, so the coordinator runs
        # a single worker; the env cap is recorded for reproducibility
        "workers": 1 if cap is None else min(1, cap),
        "thread_cap": cap,
        "versions": {
            "stripelab": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }
    try:
        artifacts = HANDLERS[command](params, args.out, args.format)
    except NumericalFailure as exc:
        manifest["error"] = {
            "type": type(exc).__name__,
            "message": str(exc),
            "diagnostics": exports._native(exc.diagnostics),
        }
        manifest["artifacts"] = []
        exports.write_json(os.path.join(args.out, "manifest.json"), manifest)
        raise
    manifest["artifacts"] = sorted(artifacts)
    exports.write_json(os.path.join(args.out, "manifest.json"), manifest)
    log.info("wrote %d artifact(s) to %s", len(artifacts) + 1, args.out)
    return 0


def main(argv=None):
    try:
        return run(argv)
    except ConfigError as exc:
        log.error("%s", exc)
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except IoError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
