"""Integral-identity checks turning exact obstructions into residual tests.

Solutions of the sphere equation satisfy a ladder of integral identities:
the first-order moment obstruction (lambda - 2) * integral(x_i e^u) = 0,
a second-order identity pairing lambda (6 - lambda) * integral(F e^u)
against a gradient quadratic form for second harmonics F, the vanishing of
all rotational triple products integral(X_iu X_ju X_ku e^u), and the mass
normalization integral(e^u) = 4 pi.  Exact in the continuum, they become
residual bounds under quadrature; the tolerances here come from the
quadrature and integrator error budget.  A validator that cannot fail is
not a test: every check is exercised against corrupted fields as well.

All integrals use the raw area element (total sphere area 4 pi) on the
field's own quadrature grid; both sides of the second-order identity are
evaluated on the same grid so discretization bias cannot cancel the gap.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .sphere_field import SphereField

__all__ = [
    "ValidationReport",
    "check_kw_first_order",
    "check_second_order",
    "check_triple_products",
    "check_axisym_rigidity_at_6",
    "validate_field",
]

KW_TOL = 1.0e-6
SECOND_ORDER_REL_TOL = 1.0e-5
TRIPLE_TOL = 1.0e-8
NORMALIZATION_TOL = 1.0e-7
RIGIDITY_TOL = 1.0e-6

# Below this magnitude the integral of F e^u counts as quadrature noise and
# its sign carries no information.
SIGN_FLOOR = 1.0e-8

TRIPLE_COMBOS = tuple(itertools.combinations_with_replacement((1, 2, 3), 3))


def check_kw_first_order(field: SphereField) -> float:
    """First-order moment integral(x3 e^u); must vanish for solutions.

    The x1 and x2 moments of an axisymmetric field factor through the
    azimuthal integrals of cos(phi) and sin(phi), which vanish in closed
    form; they are asserted exactly zero here as a sanity check on the
    factorization, leaving x3 as the only live moment.
    """
    e_u = np.exp(field.u)
    azimuthal_cos = 0.0          # integral of cos(phi) over a full period
    azimuthal_sin = 0.0
    moment_x1 = azimuthal_cos * float(np.dot(field.weights, np.sin(field.theta) * e_u))
    moment_x2 = azimuthal_sin * float(np.dot(field.weights, np.sin(field.theta) * e_u))
    assert moment_x1 == 0.0 and moment_x2 == 0.0
    return field.quad(field.x3 * e_u)


def check_second_order(field: SphereField) -> tuple:
    """(lhs, rhs) of the second-order identity for F = 3 x3^2 - 1.

    lhs = lambda (6 - lambda) integral(F e^u); rhs reduces for fields
    axisymmetric about the x3 axis to 3 integral((1 - x3^2) |u'|^2).
    Both sides share the field's quadrature grid.
    """
    lam = field.params.lam
    F = 3.0 * field.x3**2 - 1.0
    lhs = lam * (6.0 - lam) * field.quad(F * np.exp(field.u))
    rhs = 3.0 * field.quad((1.0 - field.x3**2) * field.u_prime**2)
    return lhs, rhs


def check_triple_products(field: SphereField) -> dict:
    """Residuals of integral(X_iu X_ju X_ku e^u) for all ten combinations.

    For a field axisymmetric about the x3 axis the rotation derivatives are
    X1 u = u'(theta) sin(phi), X2 u = -u'(theta) cos(phi), X3 u = 0, so
    every combination containing index 3 vanishes structurally and the
    rest factor into a colatitude quadrature times an azimuthal moment of
    sin/cos powers of total degree three, zero in closed form.
    """
    e_u = np.exp(field.u)
    out = {}
    for combo in TRIPLE_COMBOS:
        if 3 in combo:
            out[combo] = 0.0
            continue
        sign = (-1.0) ** combo.count(2)
        colat = sign * float(np.dot(field.weights, field.u_prime**3 * e_u))
        azimuthal = _sincos_moment(combo.count(1), combo.count(2))
        out[combo] = azimuthal * colat
    return out


def _sincos_moment(a: int, b: int) -> float:
    """integral over [0, 2 pi) of sin^a(phi) cos^b(phi); zero for odd a + b."""
    if (a + b) % 2 == 1 or a % 2 == 1 or b % 2 == 1:
        return 0.0
    phi_quad = 2.0 * math.pi
    for k in range(2, a + b + 1, 2):
        phi_quad *= (k - 1.0) / k
    return phi_quad


def check_axisym_rigidity_at_6(field: SphereField) -> float:
    """Gradient energy E = 3 integral((1 - x3^2) |u'|^2) at lambda = 6.

    The second-order identity forces E = 0 for solutions at lambda = 6;
    any field with E above the tolerance is certified not a solution.
    """
    if abs(field.params.lam - 6.0) > 1e-9:
        raise ValueError("rigidity check applies at lambda = 6 only")
    return 3.0 * field.quad((1.0 - field.x3**2) * field.u_prime**2)


@dataclass(frozen=True)
class ValidationReport:
    """Signed residuals of every identity check on one field."""

    field_id: str
    lam: float
    s: float | None
    kw_first_order: float
    second_order_lhs: float
    second_order_rhs: float
    second_order_residual: float
    int_F_eu: float
    sign_consistent: bool
    triple_product_residuals: dict
    normalization_residual: float
    rigidity_energy: float | None
    complete: bool = True

    @property
    def checks(self) -> dict:
        out = {
            "kw_first_order": abs(self.kw_first_order) <= KW_TOL,
            "second_order": self.second_order_residual <= SECOND_ORDER_REL_TOL,
            "second_order_sign": self.sign_consistent,
            "triple_products": all(
                abs(v) <= TRIPLE_TOL for v in self.triple_product_residuals.values()
            ),
            "normalization": self.normalization_residual <= NORMALIZATION_TOL,
        }
        if self.rigidity_energy is not None:
            out["rigidity_at_6"] = abs(self.rigidity_energy) <= RIGIDITY_TOL
        return out

    @property
    def passed(self) -> bool:
        return self.complete and all(self.checks.values())

    def to_dict(self) -> dict:
        return {
            "field_id": self.field_id,
            "lambda": self.lam,
            "s": self.s,
            "kw_first_order": self.kw_first_order,
            "second_order_lhs": self.second_order_lhs,
            "second_order_rhs": self.second_order_rhs,
            "second_order_residual": self.second_order_residual,
            "int_F_eu": self.int_F_eu,
            "sign_consistent": self.sign_consistent,
            "triple_product_residuals": {
                "".join(map(str, k)): v
                for k, v in self.triple_product_residuals.items()
            },
            "normalization_residual": self.normalization_residual,
            "rigidity_energy": self.rigidity_energy,
            "complete": self.complete,
            "checks": self.checks,
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def validate_field(field: SphereField) -> ValidationReport:
    """Run every identity check on one field and collect the residuals."""
    lam = field.params.lam
    kw = check_kw_first_order(field)
    lhs, rhs = check_second_order(field)
    denom = max(abs(lhs), abs(rhs))
    gap = abs(lhs - rhs) if denom <= 1e-8 else abs(lhs - rhs) / denom
    F = 3.0 * field.x3**2 - 1.0
    int_F_eu = field.quad(F * np.exp(field.u))
    if lam == 6.0 or abs(int_F_eu) <= SIGN_FLOOR:
        sign_ok = True
    else:
        sign_ok = math.copysign(1.0, int_F_eu) == math.copysign(1.0, 6.0 - lam)
    rigidity = None
    if abs(lam - 6.0) <= 1e-9:
        rigidity = check_axisym_rigidity_at_6(field)
    return ValidationReport(
        field_id="lambda=%.17g,s=%s,n=%d,source=%s"
        % (lam, "%.17g" % field.s if field.s is not None else "none",
           len(field.theta), field.source),
        lam=lam,
        s=field.s,
        kw_first_order=kw,
        second_order_lhs=lhs,
        second_order_rhs=rhs,
        second_order_residual=gap,
        int_F_eu=int_F_eu,
        sign_consistent=sign_ok,
        triple_product_residuals=check_triple_products(field),
        normalization_residual=field.normalization_residual(),
        rigidity_energy=rigidity,
    )
