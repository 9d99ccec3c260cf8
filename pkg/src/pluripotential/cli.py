"""Command-line entry point.

Exit codes: 0 success, 1 an asserted invariant failed, 2 parse or usage error,
3 invalid model construction, 4 solver failure.

Randomness: every command draws from numpy generators seeded with
[seed, stream], where stream is a fixed small integer per purpose (see the
STREAM_* constants), so adding a new consumer never shifts existing ones.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import arith, ensembles
from .coercivity import (SamplerSpec, check_scan_modulus, reference_path, sample_measures,
                         slope_threshold, threshold_continuity_scan, uniform_functional)
from .convexity import INEQUALITIES, EnergyStructure, run_estimate_ensemble
from .core import mu_omega, omega_norm, submean_constant, verify_axioms
from .envelope import envelope
from .errors import ConstructionInvalid, IdentityViolation, PluriError, SolverError
from .measures import TOL_DUAL, dd_metric_bracket, j_energy, quasi_metric
from .modelio import ModelParseError, load_model, with_resolution
from .twisted import TOL_FD, fd_derivative_check

EXIT_OK, EXIT_INVARIANT, EXIT_PARSE, EXIT_CONSTRUCTION, EXIT_SOLVER = 0, 1, 2, 3, 4
TOL_KEYS = {"dual": TOL_DUAL, "fd": TOL_FD, "identity": 1e-9}

STREAM_MEASURES, STREAM_FORMS, STREAM_OBSTACLE = 1, 2, 3


class UsageError(Exception):
    pass


def _rng(seed, stream):
    return np.random.default_rng([seed, stream])


def _fmt(x):
    return arith.format_scalar(x)


def _vec(v):
    return [_fmt(x) for x in v]


def _parse_tolerances(items):
    tol = dict(TOL_KEYS)
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep or key not in TOL_KEYS:
            raise UsageError(f"--tol expects key=value with key in {sorted(TOL_KEYS)}, got {item!r}")
        try:
            tol[key] = float(val)
        except ValueError as exc:
            raise UsageError(f"bad tolerance value {val!r}") from exc
    return tol


def _model(args):
    if not args.model:
        raise UsageError("--model is required")
    return with_resolution(load_model(args.model), args.resolution, args.refine)


def _measures(model, omega, args):
    sub_seed = int(np.random.SeedSequence([args.seed, STREAM_MEASURES]).generate_state(1)[0])
    return sample_measures(model, omega, SamplerSpec(seed=sub_seed, count=args.samples))


# -- commands ------------------------------------------------------------------------

def cmd_verify_axioms(args, tol):
    model = _model(args)
    report = verify_axioms(model, args.samples, args.seed)
    out = report.to_dict()
    out["seed"] = args.seed
    return out, None, 0 if report.ok else EXIT_INVARIANT


ENERGY_COLUMNS = ["backend", "n", "N", "omega_id", "mu_id", "J", "Jplus", "d_omega", "dd_omega",
                  "residual", "iters"]


def _grid(model):
    return model.N if model.backend == "toric" else model.carrier_size


def cmd_energy(args, tol):
    model = _model(args)
    omega = model.reference_form()
    t_omega = submean_constant(model, omega)
    mu0 = mu_omega(model, omega)
    rows = []
    for i, mu in enumerate(_measures(model, omega, args)):
        sol = j_energy(model, omega, mu, tol["dual"])
        d0 = quasi_metric(model, omega, mu, mu0)
        dd0 = dd_metric_bracket(model, omega, mu, mu0, tol_dual=tol["dual"]).value
        rows.append({"backend": model.backend, "n": model.n, "N": _grid(model), "omega_id": 0,
                     "mu_id": i, "J": _fmt(sol.j_value), "Jplus": _fmt(sol.j_value + t_omega),
                     "d_omega": _fmt(d0), "dd_omega": _fmt(dd0), "residual": _fmt(sol.residual),
                     "iters": sol.iterations})
    return {"seed": args.seed, "T_omega": _fmt(t_omega), "rows": rows}, (ENERGY_COLUMNS, rows), 0


def cmd_metric(args, tol):
    model = _model(args)
    omega = model.reference_form()
    t_omega = submean_constant(model, omega)
    measures = _measures(model, omega, args)
    rows, status = [], 0
    for i in range(len(measures) - 1):
        mu, nu = measures[i], measures[i + 1]
        sol = j_energy(model, omega, mu, tol["dual"])
        d = quasi_metric(model, omega, mu, nu)
        back = quasi_metric(model, omega, nu, mu)
        dd = dd_metric_bracket(model, omega, mu, nu, tol_dual=tol["dual"])
        if model.exact and model.n == 1 and d != back:
            status = EXIT_INVARIANT
        rows.append({"backend": model.backend, "n": model.n, "N": _grid(model), "omega_id": 0,
                     "mu_id": f"{i}-{i + 1}", "J": _fmt(sol.j_value), "Jplus": _fmt(sol.j_value + t_omega),
                     "d_omega": _fmt(d), "dd_omega": _fmt(dd.value),
                     "residual": _fmt(max(sol.residual, dd.upper - dd.lower)), "iters": sol.iterations})
    return {"seed": args.seed, "rows": rows}, (ENERGY_COLUMNS, rows), status


def cmd_envelope(args, tol):
    model = _model(args)
    omega = model.reference_form()
    rng = _rng(args.seed, STREAM_OBSTACLE)
    results, status = [], 0
    for i in range(args.samples):
        f = model.random_function(rng)
        res = envelope(model, omega, f)
        defect = abs(float(res.defect))
        if (defect != 0 if model.exact else defect > tol["identity"]):
            status = EXIT_INVARIANT
        results.append({"id": i, "obstacle": _vec(f), "envelope": _vec(res.phi),
                        "orthogonality_defect": _fmt(res.defect), "method": res.method,
                        "iterations": res.iterations})
    return {"seed": args.seed, "envelopes": results}, None, status


def cmd_twisted(args, tol):
    model = _model(args)
    omega = model.reference_form()
    rng = _rng(args.seed, STREAM_FORMS)
    reports, status = [], 0
    for i, mu in enumerate(_measures(model, omega, args)):
        theta = model.random_cone_form(rng) - model.random_cone_form(rng)
        rep = fd_derivative_check(model, omega, theta, mu)
        if not rep.deviation <= tol["fd"]:
            status = EXIT_INVARIANT
        d = rep.to_dict()
        d.update({"id": i, "theta_norm": float(omega_norm(model, theta, omega))})
        reports.append(d)
    return {"seed": args.seed, "fd_checks": reports}, None, status


def cmd_estimates(args, tol):
    model = _model(args)
    if args.inequality not in INEQUALITIES:
        raise UsageError(f"--inequality must be one of {list(INEQUALITIES)}")
    rep = run_estimate_ensemble(EnergyStructure(model.float_model), args.inequality,
                                args.samples, args.seed)
    out = rep.to_dict()
    out["seed"] = args.seed
    out["backend"] = model.backend
    status = 0
    try:
        const = ensembles.constant(args.inequality, model.n, model.backend)
    except (OSError, KeyError):
        const = None
    out["fixture_constant"] = const
    if const is not None and rep.worst_ratio > const:
        status = EXIT_INVARIANT
    return out, None, status


def cmd_threshold(args, tol):
    model = _model(args)
    omega = model.reference_form()
    t = arith.to_fraction(args.theta_omega) if model.exact else args.theta_omega
    theta = model.scalar(t) * omega
    spec = SamplerSpec(seed=args.seed, count=args.samples)
    est = slope_threshold(model, omega, theta, uniform_functional(model, args.functional),
                          spec, args.jmin)
    out = est.to_dict()
    out["functional"] = args.functional
    return out, None, 0


SCAN_COLUMNS = ["k", "delta_T", "sigma_hat", "witness_id", "skipped_inf_count", "j_min", "seed"]


def cmd_threshold_scan(args, tol):
    model = _model(args)
    path = reference_path(model, args.steps)
    theta = model.zero_form()
    spec = SamplerSpec(seed=args.seed, count=args.samples)
    rows = threshold_continuity_scan(model, path, theta, uniform_functional(model, args.functional),
                                     spec, args.jmin)
    dicts = [r.to_dict() for r in rows]
    out = {"seed": args.seed, "functional": args.functional, "rows": dicts}
    status = 0
    try:
        const = ensembles.constant("threshvar", model.n, model.backend)
    except (OSError, KeyError):
        const = None
    if const is not None:
        worst = check_scan_modulus(rows, [0.0] * len(rows), model.n)
        out["modulus_ratio"] = worst
        out["fixture_constant"] = const
        if worst > const:
            status = EXIT_INVARIANT
    return out, (SCAN_COLUMNS, dicts), status


def cmd_calibrate(args, tol):
    data = ensembles.calibrate(seed=args.seed)
    if args.out:
        ensembles.write_fixtures(data, args.out)
    return data, None, 0


COMMANDS = {
    "verify-axioms": cmd_verify_axioms,
    "energy": cmd_energy,
    "metric": cmd_metric,
    "envelope": cmd_envelope,
    "twisted": cmd_twisted,
    "estimates": cmd_estimates,
    "threshold": cmd_threshold,
    "threshold-scan": cmd_threshold_scan,
    "calibrate": cmd_calibrate,
}

DEFAULT_SAMPLES = {"verify-axioms": 20, "energy": 8, "metric": 8, "envelope": 4, "twisted": 4,
                   "estimates": 1000, "threshold": 200, "threshold-scan": 100, "calibrate": 0}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="pluri", description="Pluripotential energies on finite models.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--model", help="model JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int)
    p.add_argument("--tol", action="append", metavar="KEY=VAL")
    p.add_argument("--resolution", type=int, help="toric grid size")
    p.add_argument("--refine", type=int, default=0, help="toric grid doublings")
    p.add_argument("--jmin", type=float)
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--inequality", default="quasi_triangle")
    p.add_argument("--functional", choices=("entropy", "j_self", "free_energy"), default="entropy")
    p.add_argument("--theta-omega", type=float, default=0.0, help="twist theta = t * omega")
    p.add_argument("--steps", type=int, default=5, help="threshold-scan path length")
    return p


def _render(payload, table, fmt):
    if fmt == "csv":
        if table is None:
            raise UsageError("this command has no CSV output")
        columns, rows = table
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()
    return json.dumps(payload, sort_keys=True, indent=1, default=_json_default) + "\n"


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    return _fmt(x)


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if args.samples is None:
            args.samples = DEFAULT_SAMPLES[args.command]
        tol = _parse_tolerances(args.tol)
        payload, table, status = COMMANDS[args.command](args, tol)
        text = _render(payload, table, args.format)
    except ModelParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConstructionInvalid as exc:
        print(f"invalid model: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except IdentityViolation as exc:
        print(f"invariant failed: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except PluriError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if args.out and args.command != "calibrate":
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
