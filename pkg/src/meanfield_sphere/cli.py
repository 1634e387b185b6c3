"""Command-line surface for the shooting pipeline.

Subcommands: beta (profile sampling), roots (certified root location),
bifurcation (lambda sweep with degeneracy diagnostics), validate (identity
suite on one root), crosscheck (collocation oracle and spectrum).

Exit codes are a stable scripting contract: 0 success, 1 usage error,
2 partial or degenerate result, 3 validation failure.  Outputs are
byte-identical across repeated runs with fixed flags: CSV with full
17-significant-digit decimals, JSON documents shaped
{schema_version, params, results[], diagnostics{}}, and standalone SVG.
An optional key=value config file supplies defaults; explicit flags win.
MEANFIELD_THREADS caps sweep parallelism (default: available parallelism).
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .branch_tracer import (
    beta_derivatives_at,
    sample_profile,
    scan_roots,
    trace_branches,
)
from .collocation_crosscheck import CollocationProblem, linearized_spectrum, solve_bvp
from .errors import MeanFieldError
from .identity_validators import validate_field
from .radial_ode import ProblemParams, ShootingConfig
from .sphere_field import field_for_root, reconstruct, validation_config
from .radial_ode import integrate_radial

__all__ = ["main"]

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARTIAL = 2
EXIT_VALIDATION = 3

CROSSCHECK_SUP_TOL = 1.0e-6


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with the exit-code contract (usage errors exit 1)."""

    def error(self, message):
        raise _UsageError(message)


def _fmt(x: float) -> str:
    return "%.17g" % x


def _write(path, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as handle:
            handle.write(text)


def _json_doc(params: dict, results, diagnostics: dict) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "params": params,
        "results": results,
        "diagnostics": diagnostics,
    }
    return json.dumps(doc, indent=2) + "\n"


def _load_config_file(path) -> dict:
    if path is None:
        return {}
    out = {}
    with open(path) as handle:
        for line in handle:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise _UsageError("config line %r is not key=value" % line)
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _merge(args, config: dict, key: str, cast, default):
    """flag > config file > default."""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in config:
        return cast(config[key])
    return default


def _shooting_config(args, config) -> ShootingConfig:
    return ShootingConfig(
        s=0.0,
        r_start=_merge(args, config, "r_start", float, 1.0e-3),
        r_max=_merge(args, config, "r_max", float, 1.0e6),
        abs_tol=_merge(args, config, "abs_tol", float, 1.0e-12),
        rel_tol=_merge(args, config, "rel_tol", float, 1.0e-10),
    )


def _params(args, config) -> ProblemParams:
    lam = _merge(args, config, "lam", float, None)
    if lam is None:
        raise _UsageError("--lambda is required")
    return ProblemParams(lam)


def _scan_window(args, config):
    s_min = _merge(args, config, "s_min", float, -10.0)
    s_max = _merge(args, config, "s_max", float, 15.0)
    ds = _merge(args, config, "ds", float, 0.05)
    return s_min, s_max, ds


def _root_dict(root) -> dict:
    return {
        "lambda": root.params.lam,
        "s_root": root.s_root,
        "kind": root.kind,
        "beta_slope": root.beta_slope,
        "bracket": list(root.bracket),
        "beta_residual": root.beta_residual,
        "certified": root.certified,
    }


def cmd_beta(args, config) -> int:
    params = _params(args, config)
    s_min, s_max, ds = _scan_window(args, config)
    base = _shooting_config(args, config)
    profile = sample_profile(params, s_min, s_max, ds, config=base)
    lines = ["s,beta,d_beta,dd_beta"]
    for i in range(len(profile)):
        lines.append(
            ",".join(
                _fmt(v)
                for v in (profile.s[i], profile.beta[i], profile.d_beta[i], profile.dd_beta[i])
            )
        )
    _write(args.out, "\n".join(lines) + "\n")
    if profile.failures:
        for s_bad, msg in profile.failures:
            print("failed sample s=%.6g: %s" % (s_bad, msg), file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_roots(args, config) -> int:
    params = _params(args, config)
    s_min, s_max, ds = _scan_window(args, config)
    base = _shooting_config(args, config)
    profile = sample_profile(params, s_min, s_max, ds, config=base)
    result = scan_roots(profile)
    doc = _json_doc(
        {"lambda": params.lam, "s_min": s_min, "s_max": s_max, "ds": ds},
        [_root_dict(r) for r in result.certified],
        {
            "suspected_tangencies": [
                {"s": t.s, "beta_gap": t.beta_gap, "bracket": list(t.bracket)}
                for t in result.suspects
            ],
            "n_samples": len(profile),
        },
    )
    _write(args.out, doc)
    if not result.certified:
        return EXIT_PARTIAL
    return EXIT_OK if all(r.certified for r in result.certified) else EXIT_PARTIAL


def cmd_bifurcation(args, config) -> int:
    lam_min = _merge(args, config, "lambda_min", float, None)
    lam_max = _merge(args, config, "lambda_max", float, None)
    d_lambda = _merge(args, config, "d_lambda", float, 0.5)
    if lam_min is None or lam_max is None:
        raise _UsageError("--lambda-min and --lambda-max are required")
    scan = _scan_window(args, config)
    base = _shooting_config(args, config)
    table = trace_branches(lam_min, lam_max, d_lambda, scan=scan, config=base)

    lines = ["lambda,s_root,kind,beta_slope"]
    for lam, s_root, kind, slope in table.rows:
        lines.append("%s,%s,%s,%s" % (_fmt(lam), _fmt(s_root), kind, _fmt(slope)))
    _write(args.out, "\n".join(lines) + "\n")

    if args.json_out is not None:
        doc = _json_doc(
            {
                "lambda_min": lam_min,
                "lambda_max": lam_max,
                "d_lambda": d_lambda,
                "scan": {"s_min": scan[0], "s_max": scan[1], "ds": scan[2]},
            },
            [_root_dict(r) for r in table.roots],
            {
                "lambda_grid": list(table.lambdas),
                "dbeta_at_trivial": list(table.dbeta_trivial),
                "ddbeta_at_trivial": list(table.ddbeta_trivial),
                "gaps": [{"lambda": g, "reason": r} for g, r in table.gaps],
            },
        )
        _write(args.json_out, doc)
    if args.svg is not None:
        _write(args.svg, _bifurcation_svg(table))
    if table.gaps:
        for lam, reason in table.gaps:
            print("gap at lambda=%.6g: %s" % (lam, reason), file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _bifurcation_svg(table) -> str:
    """Standalone scatter of (lambda, s_root); one marker per table row."""
    width, height, margin = 480, 360, 48
    lams = [r.params.lam for r in table.roots]
    svals = [r.s_root for r in table.roots]
    lo_x, hi_x = (min(lams), max(lams)) if lams else (4.0, 8.0)
    lo_y, hi_y = (min(svals), max(svals)) if svals else (0.0, 5.0)
    pad_x = 0.05 * max(hi_x - lo_x, 1e-9)
    pad_y = 0.05 * max(hi_y - lo_y, 1e-9)
    lo_x, hi_x = lo_x - pad_x, hi_x + pad_x
    lo_y, hi_y = lo_y - pad_y, hi_y + pad_y

    def sx(x):
        return margin + (x - lo_x) / (hi_x - lo_x) * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - lo_y) / (hi_y - lo_y) * (height - 2 * margin)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
        'viewBox="0 0 %d %d">' % (width, height, width, height),
        '<rect width="%d" height="%d" fill="white"/>' % (width, height),
        '<line x1="%g" y1="%g" x2="%g" y2="%g" stroke="black"/>'
        % (margin, height - margin, width - margin, height - margin),
        '<line x1="%g" y1="%g" x2="%g" y2="%g" stroke="black"/>'
        % (margin, margin, margin, height - margin),
        '<text x="%g" y="%g" font-size="12">lambda</text>'
        % (width / 2 - 20, height - 12),
        '<text x="12" y="%g" font-size="12" transform="rotate(-90 12 %g)">s_root</text>'
        % (height / 2, height / 2),
    ]
    for root in table.roots:
        color = "#1f77b4" if root.kind == "trivial" else "#d62728"
        parts.append(
            '<circle cx="%.6g" cy="%.6g" r="3.5" fill="%s"/>'
            % (sx(root.params.lam), sy(root.s_root), color)
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_validate(args, config) -> int:
    params = _params(args, config)
    s_root = _merge(args, config, "s_root", float, None)
    if s_root is None:
        raise _UsageError("--s-root is required")
    n_theta = _merge(args, config, "n_theta", int, 256)

    solution = integrate_radial(params, validation_config(s_root))
    field = reconstruct(s_root, solution, n_theta)
    report = validate_field(field)

    doc = _json_doc(
        {"lambda": params.lam, "s_root": s_root, "n_theta": n_theta},
        [report.to_dict()],
        {"beta": solution.beta, "beta_residual": abs(solution.beta - 2.0 * params.lam)},
    )
    _write(args.out, doc)

    width = max(len(name) for name in report.checks)
    for name, ok in report.checks.items():
        print("%-*s  %s" % (width, name, "PASS" if ok else "FAIL"), file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_VALIDATION


def cmd_crosscheck(args, config) -> int:
    params = _params(args, config)
    if args.spectrum is not None:
        n_modes = args.spectrum
        values = linearized_spectrum(params, n_modes)
        doc = _json_doc(
            {"lambda": params.lam, "n_modes": n_modes},
            [{"j": j, "eigenvalue": float(v), "exact": float(j * (j + 1))}
             for j, v in enumerate(values)],
            {"degenerate": any(abs(params.lam - j * (j + 1)) < 1e-9
                               for j in range(n_modes))},
        )
        _write(args.out, doc)
        print("spectrum:", " ".join("%.12g" % v for v in values), file=sys.stderr)
        return EXIT_OK

    s_root = _merge(args, config, "s_root", float, None)
    if s_root is None:
        raise _UsageError("--s-root is required (or pass --spectrum N)")
    n_nodes = _merge(args, config, "n_nodes", int, 128)

    solution = integrate_radial(params, validation_config(s_root))
    shooting = reconstruct(s_root, solution, n_nodes)
    problem = CollocationProblem(params, n_nodes=n_nodes, initial_guess=shooting.u)
    collocated = solve_bvp(problem)
    gap = float(np.max(np.abs(collocated.u - shooting.u)))
    doc = _json_doc(
        {"lambda": params.lam, "s_root": s_root, "n_nodes": n_nodes},
        [{
            "sup_gap": gap,
            "iterations": len(problem.residual_history) - 1,
            "final_residual": problem.residual_history[-1],
            "sup_u": float(np.max(np.abs(collocated.u))),
        }],
        {"residual_history": list(problem.residual_history)},
    )
    _write(args.out, doc)
    print("collocation vs shooting sup gap: %.3e" % gap, file=sys.stderr)
    return EXIT_OK if gap <= CROSSCHECK_SUP_TOL else EXIT_VALIDATION


def _build_parser() -> _Parser:
    parser = _Parser(prog="meanfield-sphere", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="key=value config file")
        p.add_argument("--lambda", dest="lam", type=float, default=None)
        p.add_argument("--r-start", dest="r_start", type=float, default=None)
        p.add_argument("--r-max", dest="r_max", type=float, default=None)
        p.add_argument("--abs-tol", dest="abs_tol", type=float, default=None)
        p.add_argument("--rel-tol", dest="rel_tol", type=float, default=None)
        p.add_argument("--out", default=None, help="output path (default stdout)")

    def scan_flags(p):
        p.add_argument("--s-min", dest="s_min", type=float, default=None)
        p.add_argument("--s-max", dest="s_max", type=float, default=None)
        p.add_argument("--ds", dest="ds", type=float, default=None)

    p = sub.add_parser("beta", help="sample the beta(s) profile to CSV")
    common(p)
    scan_flags(p)
    p.set_defaults(func=cmd_beta)

    p = sub.add_parser("roots", help="locate certified roots of beta(s)=2*lambda")
    common(p)
    scan_flags(p)
    p.set_defaults(func=cmd_roots)

    p = sub.add_parser("bifurcation", help="sweep a lambda grid into a bifurcation table")
    common(p)
    scan_flags(p)
    p.add_argument("--lambda-min", dest="lambda_min", type=float, default=None)
    p.add_argument("--lambda-max", dest="lambda_max", type=float, default=None)
    p.add_argument("--d-lambda", dest="d_lambda", type=float, default=None)
    p.add_argument("--json-out", dest="json_out", default=None)
    p.add_argument("--svg", default=None)
    p.set_defaults(func=cmd_bifurcation)

    p = sub.add_parser("validate", help="run the identity suite on one root")
    common(p)
    p.add_argument("--s-root", dest="s_root", type=float, default=None)
    p.add_argument("--n-theta", dest="n_theta", type=int, default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("crosscheck", help="collocation oracle against a shooting root")
    common(p)
    p.add_argument("--s-root", dest="s_root", type=float, default=None)
    p.add_argument("--n-nodes", dest="n_nodes", type=int, default=None)
    p.add_argument("--spectrum", type=int, default=None,
                   help="print the first N axisymmetric Laplacian eigenvalues")
    p.set_defaults(func=cmd_crosscheck)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        config = _load_config_file(args.config)
        return args.func(args, config)
    except _UsageError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except MeanFieldError as exc:
        print("%s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
