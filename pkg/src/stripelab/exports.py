"""Serialization of result objects to CSV and JSON artifacts.

CSV bodies are deterministic: '.' decimal separator, 17 significant
digits, '\n' line endings regardless of platform.  JSON files are UTF-8
and round-trip floats bit-exactly (repr shortest round-trip).
"""

import json

import numpy as np

from .errors import IoError
from .stripes import series_eval

FLOAT_FMT = "%.17g"


def _native(obj):
    if isinstance(obj, dict):
        return {k: _native(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_native(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_native(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FMT % value
    return str(value)


def write_csv(path, header, rows):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_cell(v) for v in row) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def write_json(path, obj):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(_native(obj), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


# ------------------------------------------------------------ per result


def stripe_amplitude(sol, n_grid=2048):
    xi = 2.0 * np.pi * np.arange(n_grid) / n_grid
    return float(np.max(np.abs(series_eval(sol.cos_coeffs, xi))))


def stripe_json(sol):
    return {
        "mu": sol.mu,
        "k": sol.k,
        "n_modes": sol.n_modes,
        "cos_coeffs": sol.cos_coeffs,
        "residual_norm": sol.residual_norm,
    }


FAMILY_HEADER = ("k", "amplitude", "residual")


def family_rows(family):
    return [
        (sol.k, stripe_amplitude(sol), sol.residual_norm) for sol in family
    ]


DISPERSION_HEADER = ("sigma", "lambda")


def dispersion_rows(data):
    return list(zip(data.sigma_grid, data.branch))


def bloch_json(data):
    return {
        "lambda2_fit": data.lambda2_fit,
        "lambda2_jet": data.lambda2_jet,
        "lambda1_fit": data.lambda1_fit,
        "stable": data.stable,
        "margins": {
            "gap0": data.gap0,
            "min_offzero": data.min_offzero,
            "other_max": data.other_max,
        },
    }


RESPONSE_HEADER = ("phi0", "Mk", "Mphi")


def response_rows(curve):
    return list(zip(curve.phi0_grid, curve.Mk, curve.Mphi))


def pinning_json(report):
    return {
        "curve_degenerate": report.curve_degenerate,
        "roots": [
            {"phi": r.phi, "slope": r.slope, "degenerate": r.degenerate}
            for r in report.roots
        ],
    }


def defect_json(d):
    return {
        "psi": {
            "phi0": d.psi.phi0,
            "k0": d.psi.k0,
            "phi1": d.psi.phi1,
            "k1": d.psi.k1,
        },
        "eps": d.eps,
        "residual_norm": d.residual_norm,
        "weighted_norm": d.weighted_norm,
        "L": d.L,
        "h": d.h,
    }


DEFECT_HEADER = ("x", "w", "u")


def defect_rows(d):
    return list(zip(d.x, d.w, d.u))


SWEEP_HEADER = ("eps", "k1", "phi1")


def sweep_rows(report):
    return list(zip(report.eps, report.k1, report.phi1))


def sweep_json(report):
    return {
        "slope_k": report.slope_k,
        "curve_k": report.curve_k,
        "slope_phi": report.slope_phi,
        "curve_phi": report.curve_phi,
        "rms_k": report.rms_k,
        "rms_phi": report.rms_phi,
    }


FREDHOLM_HEADER = ("gamma", "p", "ell", "i", "dim_ker", "dim_coker", "gap")

BORDERLINE_HEADER = ("n", "ratio")


def borderline_rows(report):
    return list(zip(report.n_values, report.ratios))
