import json
import math

import numpy as np
import pytest
from hypothesis import given, settings

from sswalk import decomposition as dec

import oracles
from conftest import angles

PI = math.pi
Z_12 = "Z(theta1) Z(theta2)"
Z_21 = "Z(theta2) Z(theta1)"
FORM_2D = "S1 [Z~(2)(0,theta1) Z~(1)(theta2,theta1)] S1^dag"


def test_double_step_equals_product_oracle():
    # element-wise construction of both sides, no library operators involved
    n, t1, t2 = 8, 0.7, -1.9
    C1, C2 = oracles.uniform_coin((n,), t1), oracles.uniform_coin((n,), t2)
    Tp, Tm, S = oracles.T_plus(n), oracles.T_minus(n), oracles.S(n)
    lhs = C1 @ Tm @ Tm @ C2 @ Tp @ Tp
    assert np.linalg.norm(lhs - (C1 @ S) @ (C2 @ S), 2) < 1e-12
    assert np.linalg.norm(lhs - (C2 @ S) @ (C1 @ S), 2) > 0.1


@given(angles, angles)
def test_1d_matched_ordering(t1, t2):
    # at degenerate points both orderings hold and either may be reported
    r = dec.verify_1d_decomposition(t1, t2, 8)
    assert Z_12 in r.matching_forms()
    assert r.residual <= 1e-12
    assert set(r.candidates) == {Z_12, Z_21}


def test_1d_reversed_ordering_only_matches_in_special_cases():
    assert dec.verify_1d_decomposition(0.4, 0.4, 8).matching_forms() == {Z_12, Z_21}
    # C_{theta + pi} = -C_theta, so the two orderings also agree at theta1 - theta2 = pi
    assert dec.verify_1d_decomposition(0.4 + PI, 0.4, 8).matching_forms() == {Z_12, Z_21}
    generic = dec.verify_1d_decomposition(0.4, -1.1, 8)
    assert generic.matching_forms() == {Z_12}
    assert generic.candidates[Z_21] > 0.5


def test_1d_requires_even_ring():
    with pytest.raises(ValueError, match="even"):
        dec.verify_1d_decomposition(0.1, 0.2, 7)


@given(angles)
def test_cyclic_property(theta):
    r = dec.verify_cyclic_property(theta, 6)
    assert r.candidates["S Z S^dag"] <= 1e-12
    assert r.matched_form == "S Z S^dag"


def test_cyclic_step_differs_from_z():
    assert dec.verify_cyclic_property(0.9, 6).candidates["Z"] > 0.5


@settings(max_examples=10)
@given(angles, angles)
def test_2d_matched_form(t1, t2):
    r = dec.verify_2d_decomposition(t1, t2, 4, 4)
    assert FORM_2D in r.matching_forms()
    assert r.residual <= 1e-12
    assert len(r.candidates) == 8


def test_2d_unconjugated_form_fails():
    r = dec.verify_2d_decomposition(0.7, -1.1, 4, 6)
    assert r.candidates["Z~(2)(0,theta1) Z~(1)(theta2,theta1)"] > 0.5
    assert r.matching_forms() == {FORM_2D}


def test_2d_requires_even():
    with pytest.raises(ValueError, match="even"):
        dec.verify_2d_decomposition(0.1, 0.2, 4, 5)


@pytest.mark.parametrize("theta", [0.0, PI / 8, PI / 4, PI / 2, -PI / 3])
def test_qplate_identity_needs_flip_basis(theta):
    r = dec.verify_qplate_identity(theta, 8)
    assert "basis sigma_x" in r.matching_forms()
    assert r.residual <= 1e-12
    if abs(math.cos(theta)) > 1e-12:
        # away from zero retardation the default L -> up convention fails
        assert r.matched_form == "basis sigma_x"
        assert r.candidates["basis identity"] > 0.1


def test_qplate_identity_records_phase():
    r = dec.verify_qplate_identity(0.3, 8)
    d = r.details["basis sigma_x"]
    assert abs(d["global_phase"]) < 1e-12
    assert d["exact_residual"] <= 1e-12


def test_single_qplate_scheme_reports_without_matching():
    # trace argument: at theta2 = pi/2 the walk has tr(C1 (-i sigma_y)) = -2 sin(theta1)
    # per site block, while every single-plate candidate is traceless there
    r = dec.verify_single_qplate_scheme(0.7, PI / 2, 8)
    assert r.matched_form is None
    assert not r.passed
    assert r.residual == min(r.candidates.values())
    assert r.residual > 0.1
    assert len(r.candidates) == 12


def test_matching_prefers_smallest_then_first():
    r = dec._report("x", {}, {"a": 1e-13, "b": 1e-14, "c": 1.0}, 1e-12)
    assert r.matched_form == "b"
    r = dec._report("x", {}, {"a": 0.0, "b": 0.0}, 1e-12)
    assert r.matched_form == "a"
    r = dec._report("x", {}, {"a": 0.2, "b": 0.1}, 1e-12)
    assert r.matched_form is None and r.residual == 0.1


def test_record_is_json_serializable():
    rec = dec.verify_1d_decomposition(0.5, 0.2, 8).to_record()
    for key in ("claim_id", "theta1", "theta2", "N", "matched_form", "residual"):
        assert key in rec
    json.dumps(rec)


def test_run_claim_dispatch():
    assert dec.run_claim("2d-decomposition", 0.3, 0.2, 4).parameters["N2"] == 4
    with pytest.raises(ValueError, match="unknown claim"):
        dec.run_claim("nope", 0.1)


def test_angle_grid():
    g = dec.angle_grid(4)
    assert np.allclose(g, [-PI / 2, 0, PI / 2, PI])


def test_common_forms():
    pts = [(0.3, 0.3), (0.3, -1.0)]
    reports = dec.verify_grid("1d-decomposition", pts, 8, threads=2)
    assert dec.common_forms(reports) == [Z_12]
    assert dec.common_forms([]) == []


def test_verify_grid_thread_independent():
    pts = [(a, b) for a in dec.angle_grid(3) for b in dec.angle_grid(3)]
    r1 = [r.to_record() for r in dec.verify_grid("2d-decomposition", pts, 4, threads=1)]
    r4 = [r.to_record() for r in dec.verify_grid("2d-decomposition", pts, 4, threads=4)]
    assert r1 == r4
