"""Command-line front end.

Every command builds and validates its problem before any numerical work,
computes the full result in memory and only then writes output files
(through a temporary file and an atomic rename).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
import tempfile

import numpy as np

from .counter import (CountRequest, count_eigenvalues, maslov_box,
                      trace_spectral_curves)
from .endpoints import (LEFT, RIGHT, classify_endpoint, default_probes,
                        niessen_eigen_probe)
from .errors import AssumptionError, ConfigError, MaslovBoxError, NumericalError
from .greens import assemble, solve_inhomogeneous
from .model import check_assumptions
from .problems import (HYDROGEN_CONFIG, MHD_CONFIG, MHD_DEFAULTS,
                       hydrogen_setup, mhd_setup, saint_venant_setup,
                       synthetic_saint_venant)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
COMMANDS = ("classify", "count", "curves", "box", "verify")
CSV_HEADER = "curve_id,lambda,x,multiplicity"

# Defaults reproducing the published experiments.
PROBLEM_DEFAULTS = {
    "hydrogen": {"lambda1": -3.0, "lambda2": -7.0 / 12.0, "mu0": "0+1i",
                 "lambda0": -1.0, "c": 1.0, "eps": 1e-10, "xmax": 10.0,
                 "delta": 0.0, "gamma": 4.0},
    "mhd": {"lambda1": -1.1, "lambda2": -1.03, "mu0": "0+0.01i",
            "lambda0": -1.1, "c": 0.005, "eps": 1e-10, "c1": 1e-8},
    "saint-venant": {"lambda1": 0.1, "lambda2": 2.0, "xmax": 20.0},
}

_COMPLEX = re.compile(r"^\s*([+-]?[0-9.eE+-]*?[0-9.])\s*([+-])\s*"
                      r"([0-9.eE+-]*)i\s*$")


def parse_complex(text) -> complex:
    """Parse ``a+bi`` (the imaginary part is mandatory)."""
    if isinstance(text, (int, float)):
        raise ConfigError(f"complex value {text!r} needs an imaginary part")
    m = _COMPLEX.match(str(text))
    if m is None:
        raise ConfigError(f"expected a+bi, got {text!r}")
    re_part, sign, im_part = m.groups()
    try:
        im = float(im_part) if im_part not in ("", "+", "-") else 1.0
        return complex(float(re_part), -im if sign == "-" else im)
    except ValueError as exc:
        raise ConfigError(f"expected a+bi, got {text!r}") from exc


def parse_real(text) -> float:
    if isinstance(text, (int, float)):
        return float(text)
    t = str(text).strip().lower()
    if t in ("inf", "+inf"):
        return math.inf
    if t == "-inf":
        return -math.inf
    try:
        return float(t)
    except ValueError as exc:
        raise ConfigError(f"expected a real number, got {text!r}") from exc


# ----------------------------------------------------------------- output

def to_plain(obj):
    """Convert numpy values and non-finite floats to JSON-safe objects."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": to_plain(obj.real), "im": to_plain(obj.imag)}
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dump_json(obj) -> str:
    return json.dumps(to_plain(obj), sort_keys=True, indent=2) + "\n"


def curves_csv(curve_set) -> str:
    lines = [CSV_HEADER]
    if curve_set is not None:
        for cid, lam, x, mult in curve_set.csv_rows():
            lines.append(f"{cid},{lam:.16e},{x:.16e},{int(mult)}")
    return "\n".join(lines) + "\n"


def write_atomic(path: str, text: str):
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ------------------------------------------------------------ config

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="maslovbox",
        description="Eigenvalue counting for singular Hamiltonian systems "
                    "by Maslov box arguments.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--problem", help="built-in problem: hydrogen, mhd, "
                                     "saint-venant")
    p.add_argument("--config", help="JSON file with any of these options")
    p.add_argument("--out", help="CSV output path (curves)")
    p.add_argument("--json", help="JSON report path (default: stdout)")
    p.add_argument("--error-json", action="store_true",
                   help="print failures as JSON on stderr")
    for name in ("x-step", "lambda-step", "eps", "xmax", "tol-rel",
                 "tol-abs", "delta", "gamma", "lambda0", "lambda1",
                 "lambda2", "c"):
        p.add_argument("--" + name)
    p.add_argument("--mu0")
    p.add_argument("--param", action="append", default=[],
                   metavar="KEY=VALUE", help="problem parameter override")
    return p


def resolve(args) -> dict:
    """Merge defaults, the JSON config and explicit flags, then validate."""
    cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}")
        if not isinstance(cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    problem = args.problem or cfg.pop("problem", None)
    cfg.pop("problem", None)
    if problem not in PROBLEM_DEFAULTS:
        raise ConfigError(f"unknown or missing problem {problem!r}")
    opts = dict(PROBLEM_DEFAULTS[problem])
    params = dict(cfg.pop("params", {}) or {})
    opts.update(cfg)
    for key in ("x_step", "lambda_step", "eps", "xmax", "tol_rel", "tol_abs",
                "delta", "gamma", "lambda0", "lambda1", "lambda2", "c",
                "mu0"):
        val = getattr(args, key)
        if val is not None:
            opts[key] = val
    for item in args.param:
        if "=" not in item:
            raise ConfigError(f"--param needs KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = v
    out = {"command": args.command, "problem": problem}
    for key, val in opts.items():
        out[key] = parse_complex(val) if key == "mu0" else parse_real(val)
    out["params"] = {k: parse_real(v) for k, v in sorted(params.items())}
    if problem == "mhd":
        bad = set(out["params"]) - set(MHD_DEFAULTS)
        if bad:
            raise ConfigError(f"unknown MHD parameters {sorted(bad)}")
    elif out["params"]:
        raise ConfigError(f"{problem} takes no --param overrides")
    for key in ("x_step", "lambda_step", "eps", "xmax", "tol_rel", "tol_abs"):
        if key in out and not out[key] > 0:
            raise ConfigError(f"{key} must be positive")
    if not out["lambda1"] < out["lambda2"]:
        raise ConfigError("need lambda1 < lambda2")
    return out


def integrator(run: dict, base):
    return base.with_tolerances(run.get("tol_rel"), run.get("tol_abs"))


def make_setup(run: dict):
    dom = (run["lambda1"], run["lambda2"])
    name = run["problem"]
    if name == "hydrogen":
        return hydrogen_setup(
            gamma=run["gamma"], delta=run["delta"], lambda_domain=dom,
            mu0=run["mu0"], lam0=run["lambda0"], c=run["c"], eps=run["eps"],
            horizon=run["xmax"], config=integrator(run, HYDROGEN_CONFIG))
    if name == "mhd":
        return mhd_setup(run["params"], dom, c1=run["c1"],
                         config=integrator(run, MHD_CONFIG))
    setup = saint_venant_setup(synthetic_saint_venant(dom),
                               horizon=run["xmax"])
    setup.config = integrator(run, setup.config)
    return setup


def make_request(run: dict, setup) -> CountRequest:
    return CountRequest(setup, run["lambda1"], run["lambda2"],
                        x_step=run.get("x_step"),
                        lambda_step=run.get("lambda_step"))


# ---------------------------------------------------------- commands

def _probe_points(sys_, c, side, run):
    a, b = sys_.interval
    end = a if side == LEFT else b
    if np.isfinite(end):
        pts = default_probes(sys_, c, side, count=6)
        pts[-1] = end + run["eps"] if side == LEFT else end - run["eps"]
        return pts
    xmax = run.get("xmax")
    if xmax is None:
        return default_probes(sys_, c, side, count=6)
    far = -xmax if side == LEFT else xmax
    if (far - c) * (1 if side == RIGHT else -1) <= 0:
        raise ConfigError("xmax must lie beyond c")
    return c + (far - c) * np.linspace(1.0 / 6, 1.0, 6)


def cmd_classify(run: dict) -> dict:
    setup = make_setup(run)
    mu0 = run.get("mu0")
    if mu0 is None or mu0.imag == 0:
        raise ConfigError("classification needs mu0 with Im mu0 != 0")
    c = run.get("c")
    a, b = setup.sys.interval
    if c is None or not a < c < b:
        raise ConfigError(f"c must lie inside ({a}, {b})")
    report = {"command": "classify", "problem": run["problem"],
              "mu0": mu0, "lambda0": run["lambda0"], "c": c, "endpoints": {}}
    for side in (LEFT, RIGHT):
        probe = niessen_eigen_probe(setup.sys, mu0, run["lambda0"], c,
                                    _probe_points(setup.sys, c, side, run),
                                    side, setup.config)
        cl = classify_endpoint(probe)
        entry = cl.as_dict()
        entry["table"] = [{"x": float(x), "eigenvalues": v.real.tolist()}
                          for x, v in zip(probe.probes, probe.values)]
        entry["flagged_probes"] = list(probe.flagged)
        report["endpoints"][side] = entry
    return report


def cmd_count(run: dict) -> dict:
    res = count_eigenvalues(make_request(run, make_setup(run)), nullity=True)
    return {"command": "count", "problem": run["problem"],
            "interval": [run["lambda1"], run["lambda2"]], **res.as_dict()}


def cmd_curves(run: dict):
    req = make_request(run, make_setup(run))
    cs = trace_spectral_curves(req)
    report = {"command": "curves", "problem": run["problem"],
              "interval": [run["lambda1"], run["lambda2"]],
              "window": list(req.window), **cs.as_dict()}
    return report, curves_csv(cs)


def cmd_box(run: dict) -> dict:
    box = maslov_box(make_request(run, make_setup(run)))
    return {"command": "box", "problem": run["problem"],
            "interval": [run["lambda1"], run["lambda2"]], **box.as_dict()}


def cmd_verify(run: dict) -> dict:
    setup = make_setup(run)
    rep = check_assumptions(setup.sys)
    c1, c2 = setup.window
    lo, hi = c1 + 0.1 * (c2 - c1), c2 - 0.1 * (c2 - c1)
    lam = 0.5 * (run["lambda1"] + run["lambda2"])
    n = setup.sys.n
    dirichlet = np.vstack([np.zeros((n, n)), np.eye(n)])
    asm = assemble(setup.sys, lam, lo, hi, dirichlet, config=setup.config)
    sol = solve_inhomogeneous(asm, lambda x: np.ones(2 * n))
    return {"command": "verify", "problem": run["problem"],
            "assumptions": rep.as_dict(),
            "all_checkable_pass": rep.all_checkable_pass,
            "greens": {"lambda": lam, "c": lo, "b": hi,
                       "cond_E": asm.cond_E,
                       "M_anti_hermitian_defect": asm.anti_hermitian_defect(),
                       "residual": sol.residual,
                       "left_residual": sol.left_residual,
                       "right_residual": sol.right_residual,
                       "quadrature_error": sol.quadrature_error,
                       "ok": sol.ok()}}


HANDLERS = {"classify": cmd_classify, "count": cmd_count,
            "curves": cmd_curves, "box": cmd_box, "verify": cmd_verify}


def _fail(code, exc, as_json):
    if as_json:
        payload = {"error": type(exc).__name__, "message": str(exc),
                   "exit_code": code}
        detail = getattr(exc, "detail", None) or getattr(exc, "witness", None)
        if detail is not None:
            payload["detail"] = detail
        sys.stderr.write(dump_json(payload))
    else:
        sys.stderr.write(f"error: {exc}\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        run = resolve(args)
        result = HANDLERS[args.command](run)
        csv_text = None
        if isinstance(result, tuple):
            result, csv_text = result
        text = dump_json(result)
    except (ConfigError, AssumptionError) as exc:
        return _fail(EXIT_CONFIG, exc, args.error_json)
    except (NumericalError, MaslovBoxError, FloatingPointError,
            np.linalg.LinAlgError) as exc:
        return _fail(EXIT_NUMERICAL, exc, args.error_json)
    if csv_text is not None and args.out:
        write_atomic(args.out, csv_text)
    if args.json:
        write_atomic(args.json, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
