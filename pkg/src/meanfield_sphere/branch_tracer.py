"""Sampling of beta(s), certified root location, and branch continuation.

Sphere solutions correspond one-to-one with solutions of beta(s) = 2*lambda.
The tracer samples beta on a uniform s-grid, refines every sign change to a
certified root, reports tangential near-misses separately, and sweeps a
lambda grid into a bifurcation table.  The zero-solution branch sits at
s = ln(4*lambda) for every lambda, so that root is certified by direct
evaluation even where the profile only touches the level 2*lambda (at
lambda = 6 the touch is quadratic and sign-change bracketing is blind
to it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from ._parallel import ordered_map
from .errors import EmptyScan, MeanFieldError
from .radial_ode import ProblemParams, ShootingConfig, compute_beta, integrate_radial

__all__ = [
    "BetaProfile",
    "BranchRoot",
    "TangencySuspect",
    "RootScan",
    "BifurcationTable",
    "sample_profile",
    "find_roots",
    "scan_roots",
    "trace_branches",
    "beta_derivatives_at",
]

ROOT_TOL = 1.0e-8           # |beta - 2 lambda| certification bound
TRIVIAL_MATCH_TOL = 1.0e-6  # |s_root - ln 4 lambda| for the trivial tag
MERGE_TOL = 1.0e-6          # roots closer than this in s are one root
STENCIL_H = 0.02            # five-point stencil spacing for beta derivatives


@dataclass(frozen=True, eq=False)
class BetaProfile:
    """beta sampled on a uniform s-grid with one shared shooting config.

    d_beta and dd_beta hold central differences at the interior samples
    (NaN at the two endpoints).  failures lists (s, message) for samples
    whose integration failed; such profiles cannot certify roots.
    """

    params: ProblemParams
    s: np.ndarray
    beta: np.ndarray
    d_beta: np.ndarray
    dd_beta: np.ndarray
    config: ShootingConfig
    failures: tuple = ()

    @property
    def ds(self) -> float:
        return float(self.s[1] - self.s[0])

    def __len__(self):
        return len(self.s)


@dataclass(frozen=True)
class BranchRoot:
    """One certified solution of beta(s) = 2*lambda."""

    params: ProblemParams
    s_root: float
    beta_slope: float
    kind: str                   # "trivial" | "nonzero"
    bracket: tuple
    beta_residual: float

    @property
    def certified(self) -> bool:
        return self.beta_residual <= ROOT_TOL


@dataclass(frozen=True)
class TangencySuspect:
    """A local approach of beta(s) to 2*lambda without a sign change."""

    params: ProblemParams
    s: float
    beta_gap: float
    bracket: tuple


@dataclass(frozen=True)
class RootScan:
    certified: list
    suspects: list


@dataclass(frozen=True, eq=False)
class BifurcationTable:
    """Root sweep over a lambda grid plus the degeneracy diagnostics.

    diagnostics maps each lambda to the beta derivatives at the trivial
    location ln(4*lambda); gaps lists (lambda, reason) for grid points
    whose scan could not be completed.
    """

    roots: list
    lambdas: np.ndarray
    dbeta_trivial: np.ndarray
    ddbeta_trivial: np.ndarray
    gaps: list

    @property
    def rows(self):
        """(lambda, s_root, kind, beta_slope) per certified root."""
        return [
            (r.params.lam, r.s_root, r.kind, r.beta_slope) for r in self.roots
        ]


def _sample_one(task):
    params, config = task
    try:
        sol = integrate_radial(params, config)
        return sol.beta, None
    except MeanFieldError as exc:
        return math.nan, "%s: %s" % (type(exc).__name__, exc)


def sample_profile(
    params: ProblemParams,
    s_min: float,
    s_max: float,
    ds: float,
    config: ShootingConfig | None = None,
    max_workers: int | None = None,
) -> BetaProfile:
    """Evaluate beta on the uniform grid s_min, s_min+ds, ..., s_max.

    The window must straddle the trivial location ln(4*lambda).  Sampling
    may run across processes; the returned samples are always in grid
    order and independent of the worker count.
    """
    if ds <= 0.0:
        raise ValueError("ds must be positive")
    if not (s_min < params.trivial_s < s_max):
        raise ValueError("scan window must contain ln(4*lambda)")
    n = int(round((s_max - s_min) / ds)) + 1
    grid = s_min + ds * np.arange(n)
    base = ShootingConfig(s=0.0) if config is None else config
    tasks = [(params, replace(base, s=float(s))) for s in grid]
    results = ordered_map(_sample_one, tasks, max_workers=max_workers)
    beta = np.array([b for b, _ in results])
    failures = tuple((float(g), msg) for g, (_, msg) in zip(grid, results) if msg)

    d1 = np.full(n, math.nan)
    d2 = np.full(n, math.nan)
    if n >= 3:
        d1[1:-1] = (beta[2:] - beta[:-2]) / (2.0 * ds)
        d2[1:-1] = (beta[2:] - 2.0 * beta[1:-1] + beta[:-2]) / ds**2
    return BetaProfile(
        params=params,
        s=grid,
        beta=beta,
        d_beta=d1,
        dd_beta=d2,
        config=base,
        failures=failures,
    )


def _beta_at(profile: BetaProfile, s: float) -> float:
    return compute_beta(profile.params, s, profile.config)


def _slope_at(profile: BetaProfile, s: float, h: float = 1.0e-2) -> float:
    return (_beta_at(profile, s + h) - _beta_at(profile, s - h)) / (2.0 * h)


def scan_roots(profile: BetaProfile) -> RootScan:
    """Locate all certified roots and tangency suspects on a profile."""
    if len(profile) == 0:
        raise EmptyScan("profile contains no samples")
    if profile.failures:
        raise ValueError(
            "profile has %d failed samples; roots cannot be certified"
            % len(profile.failures)
        )
    params = profile.params
    target = 2.0 * params.lam
    s = profile.s
    h = profile.beta - target
    f = lambda x: _beta_at(profile, x) - target

    roots = []
    for i in range(len(s)):
        if h[i] == 0.0:
            lo = float(s[max(i - 1, 0)])
            hi = float(s[min(i + 1, len(s) - 1)])
            roots.append(
                BranchRoot(
                    params=params,
                    s_root=float(s[i]),
                    beta_slope=_slope_at(profile, float(s[i])),
                    kind="nonzero",
                    bracket=(lo, hi),
                    beta_residual=abs(f(float(s[i]))),
                )
            )
    for i in range(len(s) - 1):
        if h[i] * h[i + 1] < 0.0:
            lo, hi = float(s[i]), float(s[i + 1])
            s_root = brentq(f, lo, hi, xtol=1e-12)
            # secant polish against residual noise
            resid = f(s_root)
            slope = _slope_at(profile, s_root)
            if slope != 0.0 and abs(resid) > 0.0:
                s_polish = s_root - resid / slope
                if lo <= s_polish <= hi and abs(f(s_polish)) < abs(resid):
                    s_root = s_polish
                    resid = f(s_root)
            roots.append(
                BranchRoot(
                    params=params,
                    s_root=float(s_root),
                    beta_slope=slope,
                    kind="nonzero",
                    bracket=(lo, hi),
                    beta_residual=abs(resid),
                )
            )

    # The zero-solution branch passes through (ln 4 lambda, 2 lambda) for
    # every lambda; certify it by direct evaluation so tangential touches
    # (lambda = 6) are not lost to sign-change blindness.
    s_triv = params.trivial_s
    if s[0] <= s_triv <= s[-1]:
        resid = abs(f(s_triv))
        if resid <= ROOT_TOL:
            ds = profile.ds
            roots.append(
                BranchRoot(
                    params=params,
                    s_root=s_triv,
                    beta_slope=_slope_at(profile, s_triv),
                    kind="trivial",
                    bracket=(max(s_triv - ds, float(s[0])), min(s_triv + ds, float(s[-1]))),
                    beta_residual=resid,
                )
            )

    roots = _merge_roots(roots, params)

    suspects = []
    if len(s) >= 3:
        finite_dd = profile.dd_beta[np.isfinite(profile.dd_beta)]
        curvature = float(np.max(np.abs(finite_dd))) if len(finite_dd) else 0.0
        tangency_gap = 10.0 * profile.ds**2 * curvature
        absh = np.abs(h)
        for i in range(1, len(s) - 1):
            if not (absh[i] <= absh[i - 1] and absh[i] <= absh[i + 1]):
                continue
            if absh[i] >= tangency_gap:
                continue
            if h[i - 1] * h[i] < 0.0 or h[i] * h[i + 1] < 0.0:
                continue  # belongs to a sign-change bracket
            lo, hi = float(s[i - 1]), float(s[i + 1])
            if any(lo <= r.s_root <= hi for r in roots):
                continue  # already certified inside this bracket
            res = minimize_scalar(
                lambda x: abs(f(x)), bounds=(lo, hi), method="bounded",
                options={"xatol": 1e-10},
            )
            suspects.append(
                TangencySuspect(
                    params=params,
                    s=float(res.x),
                    beta_gap=float(res.fun),
                    bracket=(lo, hi),
                )
            )

    roots.sort(key=lambda r: r.s_root)
    suspects = _merge_suspects(suspects, profile.ds if len(s) >= 2 else 0.0)
    return RootScan(certified=roots, suspects=suspects)


def _merge_suspects(suspects, ds):
    """One tangency straddling a sample shows up from both sides; merge."""
    merged = []
    for sus in sorted(suspects, key=lambda t: (t.s, t.beta_gap)):
        if merged and abs(sus.s - merged[-1].s) <= ds:
            if sus.beta_gap < merged[-1].beta_gap:
                merged[-1] = sus
            continue
        merged.append(sus)
    return merged


def _merge_roots(roots, params):
    """Collapse duplicates within MERGE_TOL; tag trivial by location."""
    merged = []
    for root in sorted(roots, key=lambda r: (r.s_root, r.beta_residual)):
        if merged and abs(root.s_root - merged[-1].s_root) <= MERGE_TOL:
            if root.beta_residual < merged[-1].beta_residual:
                merged[-1] = root
            continue
        merged.append(root)
    out = []
    for root in merged:
        kind = "trivial" if abs(root.s_root - params.trivial_s) <= TRIVIAL_MATCH_TOL else "nonzero"
        out.append(replace(root, kind=kind))
    return out


def find_roots(profile: BetaProfile) -> list:
    """Certified roots of beta(s) = 2*lambda on the profile, sorted by s."""
    return scan_roots(profile).certified


def beta_derivatives_at(
    params: ProblemParams,
    s0: float,
    h: float = STENCIL_H,
    config: ShootingConfig | None = None,
) -> tuple:
    """(beta', beta'') at s0 by five-point central stencils of width h."""
    b = [compute_beta(params, s0 + k * h, config) for k in (-2, -1, 0, 1, 2)]
    d1 = (-b[4] + 8.0 * b[3] - 8.0 * b[1] + b[0]) / (12.0 * h)
    d2 = (-b[4] + 16.0 * b[3] - 30.0 * b[2] + 16.0 * b[1] - b[0]) / (12.0 * h * h)
    return d1, d2


def trace_branches(
    lambda_min: float,
    lambda_max: float,
    d_lambda: float,
    scan: tuple = (-10.0, 15.0, 0.05),
    config: ShootingConfig | None = None,
    max_workers: int | None = None,
) -> BifurcationTable:
    """Sweep the lambda grid, collecting roots and degeneracy diagnostics.

    The grid includes both endpoints and must lie inside (4, 8].  For each
    lambda the scan window is sampled and scanned for roots; the beta
    derivatives at ln(4*lambda) are attached as the diagnostic series whose
    unique sign change localises the degenerate lambda = k(k+1) crossing.
    Failed grid points are recorded as gaps, never silently dropped.
    """
    if d_lambda <= 0.0:
        raise ValueError("d_lambda must be positive")
    n = int(round((lambda_max - lambda_min) / d_lambda)) + 1
    lambdas = lambda_min + d_lambda * np.arange(n)
    if np.any(lambdas <= 4.0) or np.any(lambdas > 8.0 + 1e-12):
        raise ValueError("lambda grid must lie in (4, 8]")
    s_min, s_max, ds = scan

    roots = []
    gaps = []
    d1s = np.full(n, math.nan)
    d2s = np.full(n, math.nan)
    for i, lam in enumerate(lambdas):
        params = ProblemParams(float(lam))
        try:
            profile = sample_profile(
                params, s_min, s_max, ds, config=config, max_workers=max_workers
            )
            result = scan_roots(profile)
        except MeanFieldError as exc:
            gaps.append((float(lam), "%s: %s" % (type(exc).__name__, exc)))
            continue
        except ValueError as exc:
            gaps.append((float(lam), str(exc)))
            continue
        roots.extend(result.certified)
        d1s[i], d2s[i] = beta_derivatives_at(params, params.trivial_s, config=config)
    return BifurcationTable(
        roots=roots,
        lambdas=lambdas,
        dbeta_trivial=d1s,
        ddbeta_trivial=d2s,
        gaps=gaps,
    )
