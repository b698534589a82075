"""Command-line front end.

Subcommands::

    gaugedqball solve    --epsilon 1.5 --e 0.01 --omega 0.8 --out run/
    gaugedqball thinwall --epsilon 1.5 --e 0.1 --Q 500 --out run/
    gaugedqball picard   --epsilon 1.5 --e 0.05 --omega 0.8 --order 2 --out run/
    gaugedqball sweep    --epsilon 1.5 --e 0.1 --param Q --start 100 --stop 3000 --steps 30 --out run/
    gaugedqball check    --out run/

Every number is written with 17 significant digits; JSON keys are sorted so
identical inputs give byte-identical files.  Exit status: 0 success, 1 solver
failure or non-finite output (a diagnostics JSON is still written), 2 invalid
configuration.

A ``--config FILE`` of ``key = value`` lines supplies defaults for any flag
(keys are the long flag names with ``-`` replaced by ``_``); flags given on
the command line win.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np
from scipy import interpolate

from . import numeric, picard, thinwall
from .checks import run_checks
from .model import DomainError, ModelParams
from .thinwall import NoSolutionError

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


class NonFiniteError(ArithmeticError):
    pass


# -- output helpers --------------------------------------------------------------


def _fmt(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        raise NonFiniteError(f"non-finite value {x!r} in output")
    return format(x, ".17g")


def dumps(obj, indent=0):
    """JSON text with sorted keys and floats at 17 significant digits."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(obj[k], indent + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(pad + dumps(v, indent + 1) for v in obj) + "\n" + end + "]"
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    return _fmt(obj)


def write_json(path: Path, obj):
    path.write_text(dumps(obj) + "\n", encoding="utf-8")


def write_csv(path: Path, header, rows):
    lines = [[_fmt(v) for v in row] for row in rows]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(lines)


# -- configuration -------------------------------------------------------------------


def _positive(name):
    def conv(text):
        val = float(text)
        if not (math.isfinite(val) and val > 0):
            raise argparse.ArgumentTypeError(f"{name} must be a positive number, got {text!r}")
        return val

    return conv


def build_parser():
    ap = argparse.ArgumentParser(prog="gaugedqball", description="Gauged Q-ball solver and analytic branches.")
    ap.add_argument("--config", default=None, help="key = value file supplying defaults for flags")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, need_state=True):
        # accepted after the subcommand too; SUPPRESS keeps the top-level value otherwise
        p.add_argument("--config", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
        p.add_argument("--epsilon", type=float, help="potential parameter, 1 < epsilon <= 2")
        p.add_argument("--e", type=float, help="gauge coupling (>= 0)")
        if need_state:
            p.add_argument("--omega", type=float, help="frequency (frequency mode)")
            p.add_argument("--Q", type=float, dest="Q", help="charge (charge mode)")
        p.add_argument("--out", default=None, help="output directory (default: current directory)")
        p.add_argument("--tol-solver", type=_positive("--tol-solver"), default=None,
                       help="collocation tolerance (default 1e-8)")
        p.add_argument("--tol-quad", type=_positive("--tol-quad"), default=None,
                       help="absolute quadrature tolerance for Picard steps (default 1e-10)")
        p.add_argument("--rmax", type=_positive("--rmax"), default=None, help="lower bound on the outer radius")

    p = sub.add_parser("solve", help="solve the coupled field equations")
    common(p)
    p.add_argument("--method", choices=("collocation", "alternate"), default=None)

    p = sub.add_parser("thinwall", help="thin-wall analytic branches at fixed charge")
    common(p)

    p = sub.add_parser("picard", help="compare thin-wall, Picard and numeric gauge profiles")
    common(p)
    p.add_argument("--order", choices=("1", "2", "n"), default=None,
                   help="highest Picard order to report ('n': iterate numerically to convergence)")

    p = sub.add_parser("sweep", help="sweep charge or coupling along the thin-wall or numeric branch")
    common(p, need_state=False)
    p.add_argument("--Q", type=float, dest="Q", help="fixed charge when sweeping e")
    p.add_argument("--param", choices=("Q", "e"), default=None)
    p.add_argument("--start", type=float, default=None)
    p.add_argument("--stop", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--log", action="store_true", default=None, help="geometric spacing")
    p.add_argument("--branch", choices=("thinwall", "numeric"), default=None)

    p = sub.add_parser("check", help="run the invariant suites")
    p.add_argument("--out", default=None)
    p.add_argument("--modules", nargs="*", default=None)
    return ap


_DEFAULTS = {"out": ".", "order": "2", "method": "collocation", "branch": "thinwall", "log": False,
             "param": "Q", "tol_solver": 1e-8, "tol_quad": 1e-10}


def _apply_config(args, path):
    cp = configparser.ConfigParser()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from None
    try:
        cp.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path!r}: {exc}") from None
    known = vars(args)
    for key, raw in cp["run"].items():
        name = "Q" if key.lower() == "q" else key.replace("-", "_")
        if name not in known or name in ("command", "config"):
            raise ConfigError(f"unknown config key {key!r} for command {args.command!r}")
        if known[name] is not None:
            continue  # flag given explicitly
        known[name] = _coerce(name, raw)
    return args


def _coerce(name, raw):
    if name in ("out", "method", "branch", "param", "order"):
        return raw.strip()
    if name == "modules":
        return raw.split()
    if name == "steps":
        return int(raw)
    if name == "log":
        return raw.strip().lower() in ("1", "true", "yes", "on")
    val = float(raw)
    if name.startswith("tol_") and not val > 0:
        raise ConfigError(f"tolerance override {name} must be positive, got {raw!r}")
    return val


def _finish_args(args):
    for k, v in _DEFAULTS.items():
        if getattr(args, k, "absent") is None:
            setattr(args, k, v)
    return args


def _params(args, allow_missing_state=False):
    if args.epsilon is None or args.e is None:
        raise ConfigError("--epsilon and --e are required")
    omega = getattr(args, "omega", None)
    q = getattr(args, "Q", None)
    if allow_missing_state and omega is None and q is None:
        return None
    try:
        return ModelParams(args.e, args.epsilon, omega=omega, q=q)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


# -- subcommands ---------------------------------------------------------------------


def cmd_solve(args, out: Path):
    params = _params(args)
    prof = numeric.solve_selfconsistent(params, method=args.method, tol=args.tol_solver, r_max=args.rmax)
    en = numeric.energy(prof)
    q = numeric.charge(prof)
    f0, decay = numeric.asymptotic_fit(prof)
    rf, rg = numeric.max_residuals(prof)
    obs = {
        "epsilon": params.epsilon, "e": params.e, "omega": prof.omega, "Q": q,
        "energy": en.virial, "energy_direct": en.direct, "energy_rel_gap": en.rel_gap,
        "f0": f0, "decay": decay, "surface_r": prof.surface_r, "r_max": prof.r_max,
        "max_residual_f": rf, "max_residual_g": rg, "method": prof.method,
        "scaling_defect": numeric.scaling_defect(prof),
    }
    if params.e > 0:
        obs["gauss_surface_ratio"] = numeric.gauss_surface_ratio(prof)
        obs["coulomb_coefficient"] = numeric.coulomb_fit(prof)
        obs["coulomb_coefficient_expected"] = params.e**2 * q / (4.0 * math.pi)
    numeric.export_csv(prof, out / "profile.csv")
    write_json(out / "observables.json", obs)
    return obs


def _thinwall_record(sol):
    return {"f_tilde": sol.f_tilde, "r_star": sol.r_star, "e_star": sol.e_star, "omega": sol.omega,
            "validity": sol.validity, "valid": sol.valid, "branch": sol.branch}


def cmd_thinwall(args, out: Path):
    params = _params(args)
    if params.mode != "q":
        raise ConfigError("thinwall works at fixed charge: give --Q")
    q, e, eps = params.q, params.e, params.epsilon
    if e == 0:
        raise ConfigError("thinwall branches need e > 0")
    res = {"epsilon": eps, "e": e, "Q": q}
    if eps < 2.0:
        res.update(_thinwall_record(thinwall.small_coupling_solution(q, e, eps)))
        res["q_max"] = thinwall.q_max(e, eps)
        res["q_max_printed"] = thinwall.q_max_printed(e, eps)
    else:
        res.update(_thinwall_record(thinwall.degenerate_solution(q, e)))
        res["q_max"] = thinwall.degenerate_q_max(e)
    if eps < 2.0:
        # without a surface term the step energy has no minimum at eps = 2
        res["exact"] = _thinwall_record(thinwall.exact_solution(q, e, eps))
    write_json(out / "thinwall.json", res)
    return res


def cmd_picard(args, out: Path):
    params = _params(args)
    if params.mode != "omega":
        raise ConfigError("picard works at fixed frequency: give --omega")
    omega, e, eps = params.omega, params.e, params.epsilon
    prof = numeric.solve_selfconsistent(params, tol=args.tol_solver, r_max=args.rmax)
    q = numeric.charge(prof)
    sol = picard.picard_solution(omega, eps, e, q=q)
    R = sol.profile.r_match
    r = np.unique(np.r_[np.linspace(0.1 * R, 5.0 * R, 200), R])
    g_num = prof.interpolant()[1](r)
    tw = thinwall.exact_solution(q, e, eps) if e > 0 else None
    g_tw = thinwall.g_profile(r, q, tw.r_star, tw.f_tilde, e) if tw else np.full_like(r, omega)
    cols = {"r": r, "g_thinwall": g_tw, "g1": picard.g1_closed(r, sol)}
    if args.order in ("2", "n"):
        cols["g2"] = picard.g2_closed(r, sol)
    if args.order == "n":
        cols["gn"] = _picard_converged(sol, r, q, args.tol_quad)
    cols["g_numeric"] = g_num
    names = list(cols)
    write_csv(out / "picard.csv", names, zip(*(cols[k] for k in names)))
    summary = {"epsilon": eps, "e": e, "omega": omega, "Q": q, "r_match": R, "order": args.order,
               "sup_gap": {k: float(np.max(np.abs(cols[k] - g_num))) for k in names if k not in ("r", "g_numeric")}}
    write_json(out / "picard_summary.json", summary)
    return summary


def _picard_converged(sol, r, q, tol):
    R = sol.profile.r_match
    grid = np.unique(np.r_[np.linspace(r[0], r[-1], 3000), R, r])
    v, _, _ = picard.picard_converge(sol, grid, tol=tol)
    spl = interpolate.CubicSpline(grid, v)
    return picard.g_reconstruct(lambda t: float(spl(t)), q, R, sol.profile.omega, sol.e, r)


def _sweep_values(args):
    if args.start is None or args.stop is None or args.steps is None:
        raise ConfigError("sweep needs --start, --stop and --steps")
    if args.steps < 3:
        raise ConfigError("--steps must be at least 3")
    if args.log:
        if args.start <= 0 or args.stop <= 0:
            raise ConfigError("--log needs positive --start and --stop")
        return np.geomspace(args.start, args.stop, args.steps)
    return np.linspace(args.start, args.stop, args.steps)


def _crossing(xs, slopes):
    for i in range(len(xs) - 1):
        a, b = slopes[i] - 1.0, slopes[i + 1] - 1.0
        if a == 0.0:
            return [xs[i], xs[i]], xs[i]
        if a * b < 0:
            t = a / (a - b)
            return [xs[i], xs[i + 1]], xs[i] + t * (xs[i + 1] - xs[i])
    return None, None


def cmd_sweep(args, out: Path):
    if args.epsilon is None or args.e is None and args.param == "Q":
        raise ConfigError("--epsilon and --e are required")
    eps = args.epsilon
    values = _sweep_values(args)
    rows, status = [], "complete"
    if args.param == "Q":
        e = args.e
        if args.branch == "thinwall":
            for q in values:
                sol = thinwall.small_coupling_solution(q, e, eps)
                h = 1e-6 * q
                slope = (thinwall.small_coupling_e_star(q + h, e, eps)
                         - thinwall.small_coupling_e_star(q - h, e, eps)) / (2 * h)
                rows.append([q, sol.r_star, sol.e_star, sol.omega, slope])
        else:
            prev = None
            for q in values:
                try:
                    prev = numeric.solve_selfconsistent(ModelParams(e, eps, q=float(q)), tol=args.tol_solver,
                                                        guess=prev)
                except NoSolutionError as exc:
                    status = f"family ends before Q={q:.17g}: {exc}"
                    break
                rows.append([q, prev.surface_r, numeric.energy(prev).virial, prev.omega, math.nan])
            if len(rows) >= 2:
                qs = np.array([r_[0] for r_ in rows])
                es = np.array([r_[2] for r_ in rows])
                slopes = np.gradient(es, qs)
                for r_, s in zip(rows, slopes):
                    r_[4] = s
            elif rows:
                rows[0][4] = rows[0][3]  # dE/dQ = omega
        xs = [r_[0] for r_ in rows]
        bracket, estimate = _crossing(xs, [r_[4] for r_ in rows])
        summary = {"param": "Q", "epsilon": eps, "e": e, "branch": args.branch, "status": status,
                   "points": len(rows)}
        if eps < 2.0 and e > 0:
            summary["q_max"] = thinwall.q_max(e, eps)
            summary["q_max_printed"] = thinwall.q_max_printed(e, eps)
    else:
        if args.Q is None:
            raise ConfigError("sweeping e needs a fixed --Q")
        q = args.Q
        for e in values:
            if args.branch == "thinwall":
                sol = thinwall.small_coupling_solution(q, e, eps)
                h = 1e-6 * q
                slope = (thinwall.small_coupling_e_star(q + h, e, eps)
                         - thinwall.small_coupling_e_star(q - h, e, eps)) / (2 * h)
                rows.append([e, sol.r_star, sol.e_star, sol.omega, slope])
            else:
                prof = numeric.solve_selfconsistent(ModelParams(float(e), eps, q=q), tol=args.tol_solver)
                rows.append([e, prof.surface_r, numeric.energy(prof).virial, prof.omega, prof.omega])
        xs = [r_[0] for r_ in rows]
        bracket, estimate = _crossing(xs, [r_[4] for r_ in rows])
        summary = {"param": "e", "epsilon": eps, "Q": q, "branch": args.branch, "status": status,
                   "points": len(rows)}
    summary["crossing_bracket"] = bracket
    summary["crossing_estimate"] = estimate
    write_csv(out / "sweep.csv", [args.param, "r_star", "e_star", "omega", "de_dq"], rows)
    write_json(out / "sweep_summary.json", summary)
    return summary


def cmd_check(args, out: Path):
    results = run_checks(args.modules)
    report = {"passed": all(r.passed for r in results),
              "checks": [{"module": r.module, "name": r.name, "passed": r.passed, "value": r.value,
                          "tolerance": r.tolerance} for r in results]}
    write_json(out / "check.json", report)
    return report


COMMANDS = {"solve": cmd_solve, "thinwall": cmd_thinwall, "picard": cmd_picard, "sweep": cmd_sweep,
            "check": cmd_check}


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.config:
            _apply_config(args, args.config)
        _finish_args(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = COMMANDS[args.command](args, out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (numeric.ConvergenceError, NoSolutionError, DomainError, ArithmeticError, OverflowError) as exc:
        diag = {"command": args.command, "status": "failed", "error": type(exc).__name__, "message": str(exc)}
        hist = getattr(exc, "history", None)
        if hist:
            diag["history"] = [h for h in hist if math.isfinite(h)]
        write_json(out / "diagnostics.json", diag)
        print(f"failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if args.command == "check" and not result["passed"]:
        return EXIT_SOLVER
    print(f"wrote {args.command} output to {out}")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
