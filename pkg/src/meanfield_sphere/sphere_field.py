"""Reconstruction of sphere fields from planar trajectories, and quadrature.

A certified root of beta(s) = 2*lambda is pulled back to the sphere through
the inverse stereographic projection:

    u(theta) = w(r) + lambda ln(1 + r^2) - ln(4 lambda),   r = tan(theta/2),

where theta in (0, pi) is the polar angle measured from the south pole (the
image of r = 0 under projection from the north pole), so the ambient
coordinate along the symmetry axis is x3 = -cos(theta).

All surface integrals use Gauss-Legendre quadrature in cos(theta): the node
weights sum to 2 and carry an azimuthal factor 2*pi, so the quadrature of
the constant 1 is the raw sphere area 4*pi.  Every identity downstream is
stated against that raw area element.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre as npleg

from .errors import GridExceedsTrajectory
from .radial_ode import ProblemParams, RadialSolution, ShootingConfig, integrate_radial

__all__ = [
    "SphereField",
    "colatitude_grid",
    "reconstruct",
    "field_for_root",
    "gauss_curvature",
    "equation_curvature",
    "validation_config",
]

# Identity checks push spectral differentiation to the 1e-6 level, which
# needs the trajectory a couple of digits tighter than the shooting
# defaults; the pipeline re-integrates roots with these tolerances.
VALIDATION_REL_TOL = 1.0e-12
VALIDATION_ABS_TOL = 1.0e-13

SCHEMA_VERSION = 1

# Legendre coefficients below this relative floor are treated as solver
# noise and excluded from spectral differentiation.
COEFF_FLOOR = 1.0e-13


def colatitude_grid(n: int):
    """Gauss-Legendre grid in cos(theta), returned with theta ascending.

    Returns (theta, cos_theta, weights); weights sum to 2.
    """
    if n < 2:
        raise ValueError("need at least two nodes")
    c, w = npleg.leggauss(n)
    order = np.argsort(-c)          # theta = arccos(c) ascending
    c = c[order]
    w = w[order]
    return np.arccos(c), c, w


@dataclass(frozen=True, eq=False)
class SphereField:
    """Axisymmetric field u(theta) on the colatitude quadrature grid.

    Immutable after construction.  u_prime holds du/dtheta.  The field does
    not assert that u solves the equation; validators decide that.
    """

    params: ProblemParams
    theta: np.ndarray
    cos_theta: np.ndarray
    u: np.ndarray
    u_prime: np.ndarray
    weights: np.ndarray
    s: float | None = None
    source: str = "shooting"

    def __post_init__(self):
        n = len(self.theta)
        if not (len(self.u) == len(self.u_prime) == len(self.weights) == n):
            raise ValueError("grid arrays must share one length")
        area = 2.0 * math.pi * float(np.sum(self.weights))
        if abs(area - 4.0 * math.pi) > 1e-12 * 4.0 * math.pi:
            raise ValueError("quadrature weights do not resolve the sphere area")

    @property
    def x3(self) -> np.ndarray:
        """Ambient coordinate along the symmetry axis, -cos(theta)."""
        return -self.cos_theta

    def quad(self, values) -> float:
        """Surface integral of an axisymmetric integrand over the sphere."""
        return 2.0 * math.pi * float(np.dot(self.weights, values))

    def normalization_residual(self) -> float:
        """|quadrature of e^u / (4 pi) - 1|; zero exactly when beta = 2 lambda."""
        return abs(self.quad(np.exp(self.u)) / (4.0 * math.pi) - 1.0)

    def legendre_coefficients(self) -> np.ndarray:
        """Legendre expansion of u in cos(theta), computed by quadrature."""
        return _legendre_coefficients(self.u, self.cos_theta, self.weights)

    def laplacian(self) -> np.ndarray:
        """Sphere Laplacian of u measured spectrally from the sampled values.

        Each Legendre mode is an eigenfunction, so differentiation is a
        multiplication by -k(k+1) in coefficient space; coefficients at the
        solver noise floor are truncated before amplification.
        """
        a = self.legendre_coefficients()
        a = _truncate_noise_tail(a)
        k = np.arange(len(a))
        return npleg.legval(self.cos_theta, -k * (k + 1.0) * a)

    def equation_residual(self) -> np.ndarray:
        """Pointwise residual of u'' + cot(theta) u' + lambda (e^u - 1)."""
        return self.laplacian() + self.params.lam * (np.exp(self.u) - 1.0)

    def to_csv(self) -> str:
        lines = ["theta,u,u_prime,weight"]
        for th, u, up, w in zip(self.theta, self.u, self.u_prime, self.weights):
            lines.append("%.17g,%.17g,%.17g,%.17g" % (th, u, up, w))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "kind": "sphere_field",
            "lambda": self.params.lam,
            "s": self.s,
            "source": self.source,
            "theta": list(self.theta),
            "u": list(self.u),
            "u_prime": list(self.u_prime),
            "weight": list(self.weights),
        }
        return json.dumps(doc, indent=None, separators=(",", ":")) + "\n"

    @staticmethod
    def from_json(text: str) -> "SphereField":
        doc = json.loads(text)
        if doc.get("kind") != "sphere_field":
            raise ValueError("not a sphere_field document")
        theta = np.asarray(doc["theta"], dtype=float)
        return SphereField(
            params=ProblemParams(doc["lambda"]),
            theta=theta,
            cos_theta=np.cos(theta),
            u=np.asarray(doc["u"], dtype=float),
            u_prime=np.asarray(doc["u_prime"], dtype=float),
            weights=np.asarray(doc["weight"], dtype=float),
            s=doc.get("s"),
            source=doc.get("source", "shooting"),
        )


def _legendre_coefficients(values, cos_theta, weights) -> np.ndarray:
    n = len(values)
    vander = npleg.legvander(cos_theta, n - 1)
    k = np.arange(n)
    return (k + 0.5) * (vander.T @ (weights * values))


def _truncate_noise_tail(a: np.ndarray) -> np.ndarray:
    """Drop the trailing coefficients that sit at the noise floor.

    Smooth fields decay geometrically; solver noise shows up as a flat
    plateau in the top modes.  The plateau level is estimated from the
    top quarter of the spectrum and everything beyond the last coefficient
    clearly above it is discarded before the k(k+1) amplification.
    """
    mags = np.abs(a)
    top = mags[3 * len(a) // 4 :]
    floor = COEFF_FLOOR * float(np.max(mags)) if len(mags) else 0.0
    if len(top) >= 4:
        floor = max(floor, 30.0 * float(np.median(top)))
    above = np.nonzero(mags > floor)[0]
    if len(above) == 0:
        return a[:1] * 0.0
    return a[: above[-1] + 1]


def reconstruct(root, solution: RadialSolution, n_theta: int = 256) -> SphereField:
    """Pull a shooting trajectory back to an axisymmetric field on the sphere.

    root carries the certified shooting parameter; solution must be the
    trajectory integrated at that parameter.  Nodes map through
    r = tan(theta/2); radii below the series-start radius use the Taylor
    seed, radii beyond the truncation radius raise GridExceedsTrajectory.
    """
    if n_theta < 64:
        raise ValueError("n_theta must be at least 64")
    s_root = getattr(root, "s_root", None)
    if s_root is None:
        s_root = float(root)
    if abs(solution.s - s_root) > 1e-12 * max(1.0, abs(s_root)):
        raise ValueError("solution was integrated at a different shooting parameter")
    params = solution.params
    lam = params.lam

    theta, c, wq = colatitude_grid(n_theta)
    r = np.tan(0.5 * theta)
    if r[-1] > solution.r[-1]:
        raise GridExceedsTrajectory(
            "colatitude grid reaches r=%.3g beyond the truncation radius %.3g; "
            "re-integrate with a larger r_max" % (r[-1], solution.r[-1])
        )
    w, w_prime = solution.evaluate(r)
    u = w + lam * np.log1p(r**2) - math.log(4.0 * lam)
    u_prime = (w_prime + 2.0 * lam * r / (1.0 + r**2)) * (1.0 + r**2) / 2.0
    return SphereField(
        params=params,
        theta=theta,
        cos_theta=c,
        u=u,
        u_prime=u_prime,
        weights=wq,
        s=s_root,
        source="shooting",
    )


def validation_config(s: float) -> ShootingConfig:
    """Shooting config tight enough for identity validation at a root."""
    return ShootingConfig(s=s, rel_tol=VALIDATION_REL_TOL, abs_tol=VALIDATION_ABS_TOL)


def field_for_root(root, n_theta: int = 256) -> SphereField:
    """Integrate a root's trajectory at validation tolerances and reconstruct."""
    s_root = getattr(root, "s_root", None)
    params = getattr(root, "params", None)
    if s_root is None or params is None:
        raise TypeError("root must carry s_root and params")
    solution = integrate_radial(params, validation_config(s_root))
    return reconstruct(root, solution, n_theta)


def gauss_curvature(field: SphereField) -> np.ndarray:
    """Gaussian curvature of the conformal metric e^u g0 at the grid nodes.

    Standard conformal formula K = e^{-u} (1 - Laplacian(u)/2) with the
    Laplacian measured spectrally from the sampled field.
    """
    return np.exp(-field.u) * (1.0 - 0.5 * field.laplacian())


def equation_curvature(field: SphereField) -> np.ndarray:
    """Curvature with the Laplacian eliminated through the field equation.

    Substituting Laplacian(u) = lambda (1 - e^u) gives
    K = lambda/2 + (1 - lambda/2) e^{-u}; at lambda = 6 this is the familiar
    3 - 2 e^{-u}.  Valid only for fields that actually solve the equation,
    which is exactly why comparing it against gauss_curvature is a check.
    """
    lam = field.params.lam
    return 0.5 * lam + (1.0 - 0.5 * lam) * np.exp(-field.u)
