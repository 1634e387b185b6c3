import json
import math
from dataclasses import replace

import numpy as np
import pytest
from numpy.polynomial import legendre as npleg

from meanfield_sphere import (
    ProblemParams,
    check_axisym_rigidity_at_6,
    check_kw_first_order,
    check_second_order,
    check_triple_products,
    colatitude_grid,
    validate_field,
)
from meanfield_sphere.identity_validators import (
    KW_TOL,
    NORMALIZATION_TOL,
    SECOND_ORDER_REL_TOL,
    TRIPLE_COMBOS,
    _sincos_moment,
)
from meanfield_sphere.sphere_field import SphereField


def corrupt(field, eps=0.01):
    """Add eps * x3 to the profile; breaks every moment identity."""
    return replace(
        field,
        u=field.u + eps * field.x3,
        u_prime=field.u_prime + eps * np.sin(field.theta),
    )


def zero_field(lam=6.0, n=128):
    theta, c, w = colatitude_grid(n)
    return SphereField(
        params=ProblemParams(lam), theta=theta, cos_theta=c,
        u=np.zeros(n), u_prime=np.zeros(n), weights=w, source="manual",
    )


class TestKazdanWarnerFirstOrder:
    def test_zero_field_vanishes_at_roundoff(self):
        # odd integrand on a symmetric grid; only summation roundoff survives
        assert abs(check_kw_first_order(zero_field())) <= 1e-14

    @pytest.mark.parametrize("lam", [5.0, 7.0, 8.0])
    def test_vanishes_on_solutions(self, nonzero_fields, lam):
        assert abs(check_kw_first_order(nonzero_fields[lam])) <= 1e-6

    def test_corrupted_field_fails_loudly(self, nonzero_fields):
        residual = check_kw_first_order(corrupt(nonzero_fields[7.0]))
        assert abs(residual) > 1e-4


class TestSecondOrder:
    def test_zero_field(self):
        lhs, rhs = check_second_order(zero_field())
        assert lhs == 0.0 and rhs == 0.0

    @pytest.mark.parametrize("lam,sign", [(5.0, 1.0), (7.0, -1.0), (8.0, -1.0)])
    def test_identity_and_sign_at_roots(self, nonzero_fields, lam, sign):
        field = nonzero_fields[lam]
        lhs, rhs = check_second_order(field)
        assert rhs > 0.0
        assert abs(lhs - rhs) / max(abs(lhs), abs(rhs)) <= 1e-5
        F = 3.0 * field.x3**2 - 1.0
        int_F = field.quad(F * np.exp(field.u))
        assert math.copysign(1.0, int_F) == sign
        # the identity itself forces the sign: rhs >= 0 and lhs carries 6-lambda
        assert math.copysign(1.0, 6.0 - lam) == sign

    def test_identity_holds_per_grid(self, nonzero_roots):
        # both sides are evaluated on one shared grid; the identity must
        # hold on each resolution independently, not by cancellation
        # between different grids
        from meanfield_sphere.sphere_field import field_for_root

        for n in (96, 160):
            field = field_for_root(nonzero_roots[7.0], n)
            lhs, rhs = check_second_order(field)
            assert abs(lhs - rhs) / max(abs(lhs), abs(rhs)) <= 1e-5


class TestTripleProducts:
    def test_moment_table(self):
        # even powers integrate to the Wallis values, odd powers to zero
        assert _sincos_moment(0, 0) == pytest.approx(2 * math.pi)
        assert _sincos_moment(2, 0) == pytest.approx(math.pi)
        assert _sincos_moment(0, 2) == pytest.approx(math.pi)
        assert _sincos_moment(3, 0) == 0.0
        assert _sincos_moment(1, 2) == 0.0
        assert _sincos_moment(2, 1) == 0.0

    def test_all_ten_combinations_vanish(self, nonzero_fields):
        residuals = check_triple_products(nonzero_fields[7.0])
        assert set(residuals) == set(TRIPLE_COMBOS)
        assert len(residuals) == 10
        for combo, value in residuals.items():
            assert abs(value) <= 1e-8, combo

    def test_axis_terms_structurally_zero(self, nonzero_fields):
        residuals = check_triple_products(corrupt(nonzero_fields[7.0], 0.05))
        for combo, value in residuals.items():
            if 3 in combo:
                assert value == 0.0


class TestRigidityAtSix:
    def test_zero_field(self):
        assert check_axisym_rigidity_at_6(zero_field(6.0)) == 0.0

    def test_full_pipeline_trivial_root(self, trivial_field_6):
        assert check_axisym_rigidity_at_6(trivial_field_6) <= 1e-8

    def test_bump_profile_detected(self):
        theta, c, w = colatitude_grid(128)
        coeffs = [0.0, 0.0, 0.2]
        field = SphereField(
            params=ProblemParams(6.0), theta=theta, cos_theta=c,
            u=npleg.legval(c, coeffs),
            u_prime=-np.sin(theta) * npleg.legval(c, npleg.legder(coeffs)),
            weights=w, source="manual",
        )
        assert check_axisym_rigidity_at_6(field) > 1e-3

    def test_wrong_lambda_rejected(self, nonzero_fields):
        with pytest.raises(ValueError):
            check_axisym_rigidity_at_6(nonzero_fields[7.0])


class TestValidationReport:
    @pytest.mark.parametrize("lam", [5.0, 7.0, 8.0])
    def test_certified_roots_pass_everything(self, nonzero_fields, lam):
        report = validate_field(nonzero_fields[lam])
        assert report.passed
        assert all(report.checks.values())
        assert abs(report.kw_first_order) <= KW_TOL
        assert report.second_order_residual <= SECOND_ORDER_REL_TOL
        assert report.normalization_residual <= NORMALIZATION_TOL
        assert report.complete

    def test_trivial_root_report(self, trivial_field_6):
        report = validate_field(trivial_field_6)
        assert report.passed
        assert report.rigidity_energy is not None
        assert report.rigidity_energy <= 1e-8

    def test_negative_control_margins(self, nonzero_fields):
        # the perturbation is odd in x3, so the moment checks reject it
        # with two-orders-of-magnitude margins (the even second-order
        # identity only sees it at O(eps^2), which still fails)
        report = validate_field(corrupt(nonzero_fields[7.0]))
        assert not report.passed
        failing = {k for k, ok in report.checks.items() if not ok}
        assert {"kw_first_order", "second_order", "normalization"} <= failing
        assert abs(report.kw_first_order) >= 100 * KW_TOL
        assert report.normalization_residual >= 100 * NORMALIZATION_TOL

    def test_report_serializes(self, nonzero_fields):
        report = validate_field(nonzero_fields[5.0])
        doc = json.loads(report.to_json())
        assert doc["passed"] is True
        assert doc["lambda"] == 5.0
        assert set(doc["triple_product_residuals"]) == {
            "".join(map(str, combo)) for combo in TRIPLE_COMBOS
        }
        assert all(np.isfinite(v) for v in doc["triple_product_residuals"].values())
