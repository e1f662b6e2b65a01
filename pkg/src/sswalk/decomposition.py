"""
Numerical verification of the operator identities behind the split-step
decomposition.

Each verifier evaluates a small, fixed list of candidate algebraic forms and
reports the residual of every one. ``matched_form`` is the candidate with the
smallest residual among those within tolerance (ties go to the earlier
candidate), or ``None`` when nothing matches. The lattice identities are
checked as exact operator equalities; the optical-scheme equivalences allow
a global phase and a fixed coin-basis change.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from ._parallel import parallel_map
from .core import LatticeGeometry, PropagatorMatrix, operator_distance, optimal_phase
from . import operators as ops

DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class IdentityReport:
    claim_id: str
    parameters: dict
    candidates: dict[str, float]
    matched_form: str | None
    residual: float
    tolerance: float = DEFAULT_TOL
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.matched_form is not None

    def matching_forms(self) -> set[str]:
        return {f for f, r in self.candidates.items() if r <= self.tolerance}

    def to_record(self) -> dict:
        rec = {"claim_id": self.claim_id}
        rec.update(self.parameters)
        rec.update(
            matched_form=self.matched_form,
            residual=self.residual,
            tolerance=self.tolerance,
            candidates=dict(self.candidates),
        )
        if self.details:
            rec["details"] = self.details
        return rec


def _report(claim_id, parameters, candidates, tol, details=None) -> IdentityReport:
    within = [(r, i, f) for i, (f, r) in enumerate(candidates.items()) if r <= tol]
    if within:
        residual, _, matched = min(within)
    else:
        matched, residual = None, min(candidates.values())
    return IdentityReport(claim_id, parameters, candidates, matched, residual, tol, details or {})


def verify_cyclic_property(theta: float, n: int, tol: float = DEFAULT_TOL) -> IdentityReport:
    """S (1 x C) against Z(theta) itself and against its similarity transform by S."""
    g = LatticeGeometry.ring(n)
    z = ops.oqw_step(theta, g)
    zbar = ops.oqw_step_cyclic(theta, g)
    s = ops.shift_s(g)
    candidates = {
        "S Z S^dag": operator_distance(zbar, s @ z @ s.dag),
        "Z": operator_distance(zbar, z),
    }
    return _report("cyclic-property", {"theta1": theta, "theta2": None, "N": n}, candidates, tol)


def verify_1d_decomposition(theta1: float, theta2: float, n: int, tol: float = DEFAULT_TOL) -> IdentityReport:
    """Double-shift split-step walk against both orderings of two ordinary steps."""
    g = LatticeGeometry.ring(n)
    g.require_even(0)
    target = ops.ssqw_double_step(theta1, theta2, g)
    z1, z2 = ops.oqw_step(theta1, g), ops.oqw_step(theta2, g)
    candidates = {
        "Z(theta2) Z(theta1)": operator_distance(target, z2 @ z1),
        "Z(theta1) Z(theta2)": operator_distance(target, z1 @ z2),
    }
    return _report("1d-decomposition", {"theta1": theta1, "theta2": theta2, "N": n}, candidates, tol)


def _axis_double_ssqw(a: float, b: float, g: LatticeGeometry, axis: int) -> PropagatorMatrix:
    """(1 x C_a) T-^2 (1 x C_b) T+^2 acting along one axis of a torus."""
    f = ops._axis_shift(g, axis)
    ident = np.eye(g.n_sites)
    tp = PropagatorMatrix(g, ops._conditional(g, f, ident))
    tm = PropagatorMatrix(g, ops._conditional(g, ident, f.conj().T))
    return ops.coin_operator(a, g) @ tm @ tm @ ops.coin_operator(b, g) @ tp @ tp


def verify_2d_decomposition(
    theta1: float, theta2: float, n1: int, n2: int, tol: float = DEFAULT_TOL
) -> IdentityReport:
    """Triangular-lattice walk against products of per-axis double-shift walks.

    Tries both factor orders and conjugation ``X R X^dag`` by X in {1, S1, S2, S3}.
    """
    g = LatticeGeometry.torus(n1, n2)
    g.require_even()
    target = ops.ssqw2d_step(theta1, theta2, n1, n2)
    ax2 = _axis_double_ssqw(0.0, theta1, g, axis=1)
    ax1 = _axis_double_ssqw(theta2, theta1, g, axis=0)
    products = {
        "Z~(2)(0,theta1) Z~(1)(theta2,theta1)": ax2 @ ax1,
        "Z~(1)(theta2,theta1) Z~(2)(0,theta1)": ax1 @ ax2,
    }
    sh1, sh2 = ops.s1(n1, n2), ops.s2(n1, n2)
    conjugators = {"1": None, "S1": sh1, "S2": sh2, "S3": sh1 @ sh2}
    candidates = {}
    for pname, prod in products.items():
        for xname, x in conjugators.items():
            form = pname if x is None else f"{xname} [{pname}] {xname}^dag"
            rhs = prod if x is None else x @ prod @ x.dag
            candidates[form] = operator_distance(target, rhs)
    params = {"theta1": theta1, "theta2": theta2, "N": n1, "N2": n2}
    return _report("2d-decomposition", params, candidates, tol)


_QPLATE_BASES = {
    "identity": ops.IDENTITY_2,
    "sigma_x": ops.SIGMA_X,
    "sigma_y": ops.SIGMA_Y,
    "sigma_z": ops.SIGMA_Z,
}

_R = np.diag([np.exp(-1j * math.pi / 4), np.exp(1j * math.pi / 4)])
_SCHEME_BASES = dict(_QPLATE_BASES, **{"exp(-i pi sz/4)": _R, "exp(i pi sz/4)": _R.conj().T})


def _basis_change(V: np.ndarray, M: PropagatorMatrix) -> PropagatorMatrix:
    big = PropagatorMatrix(M.geometry, np.kron(np.eye(M.geometry.n_sites), V), check=False)
    return big @ M @ big.dag


def _phase_search(lhs: dict[str, PropagatorMatrix], rhs: PropagatorMatrix, bases: dict):
    candidates, details = {}, {}
    for lname, L in lhs.items():
        for bname, V in bases.items():
            form = f"{lname} | basis {bname}" if len(lhs) > 1 else f"basis {bname}"
            M = _basis_change(V, L)
            candidates[form] = operator_distance(rhs, M, up_to_phase=True)
            details[form] = {
                "global_phase": optimal_phase(rhs, M),
                "exact_residual": operator_distance(rhs, M),
            }
    return candidates, details


def _qplate_rhs(theta: float, g: LatticeGeometry) -> PropagatorMatrix:
    """-i (1 x sigma_x) [cos(theta) S + i sin(theta) (1 x sigma_x)]."""
    sx = np.kron(np.eye(g.n_sites), ops.SIGMA_X)
    s = ops.shift_s(g).matrix
    return PropagatorMatrix(g, -1j * sx @ (math.cos(theta) * s + 1j * math.sin(theta) * sx))


def verify_qplate_identity(theta: float, n: int, tol: float = DEFAULT_TOL) -> IdentityReport:
    """q = 1/2 plate at retardation pi/2 - theta against the shift-plus-flip form."""
    g = LatticeGeometry.ring(n)
    q = ops.qplate(ops.QPlateParams(0.5, math.pi / 2 - theta), g)
    candidates, details = _phase_search({"Q": q}, _qplate_rhs(theta, g), _QPLATE_BASES)
    return _report("qplate-identity", {"theta1": theta, "theta2": None, "N": n}, candidates, tol, details)


def verify_single_qplate_scheme(
    theta1: float, theta2: float, n: int, tol: float = DEFAULT_TOL
) -> IdentityReport:
    """One modified coin plus one q-plate against the split-step walk Z_ss(theta1, theta2).

    Both orders of the two elements and a handful of fixed coin-basis changes
    are tried; a global phase is allowed.
    """
    g = LatticeGeometry.ring(n)
    q = ops.qplate(ops.QPlateParams(0.5, math.pi / 2 - theta2), g)
    ct = PropagatorMatrix(g, np.kron(np.eye(n), ops.smp_tilde_coin(theta1)))
    lhs = {"C~ Q": ct @ q, "Q C~": q @ ct}
    target = ops.ssqw_step(theta1, theta2, g)
    candidates, details = _phase_search(lhs, target, _SCHEME_BASES)
    params = {"theta1": theta1, "theta2": theta2, "N": n}
    return _report("single-qplate-scheme", params, candidates, tol, details)


CLAIMS: dict[str, Callable[..., IdentityReport]] = {
    "cyclic-property": lambda t1, t2, n, n2, tol: verify_cyclic_property(t1, n, tol),
    "1d-decomposition": lambda t1, t2, n, n2, tol: verify_1d_decomposition(t1, t2, n, tol),
    "2d-decomposition": lambda t1, t2, n, n2, tol: verify_2d_decomposition(t1, t2, n, n2 or n, tol),
    "qplate-identity": lambda t1, t2, n, n2, tol: verify_qplate_identity(t1, n, tol),
    "single-qplate-scheme": lambda t1, t2, n, n2, tol: verify_single_qplate_scheme(t1, t2, n, tol),
}


def run_claim(
    claim_id: str,
    theta1: float,
    theta2: float = 0.0,
    n: int = 8,
    n2: int | None = None,
    tol: float = DEFAULT_TOL,
) -> IdentityReport:
    try:
        fn = CLAIMS[claim_id]
    except KeyError:
        raise ValueError(f"unknown claim {claim_id!r}; choose from {sorted(CLAIMS)}") from None
    return fn(theta1, theta2, n, n2, tol)


def angle_grid(points: int) -> np.ndarray:
    """``points`` evenly spaced angles in (-pi, pi]."""
    return -math.pi + 2 * math.pi * (np.arange(points) + 1) / points


def verify_grid(
    claim_id: str,
    thetas: Iterable[tuple[float, float]],
    n: int,
    n2: int | None = None,
    tol: float = DEFAULT_TOL,
    threads: int | None = None,
) -> list[IdentityReport]:
    return parallel_map(lambda p: run_claim(claim_id, p[0], p[1], n, n2, tol), list(thetas), threads)


def common_forms(reports: Sequence[IdentityReport]) -> list[str]:
    """Forms that match at every report (the parameter-independent identity).

    Returned in candidate enumeration order.
    """
    if not reports:
        return []
    keep = set.intersection(*(r.matching_forms() for r in reports))
    return [f for f in reports[0].candidates if f in keep]
