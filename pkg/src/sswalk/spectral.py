"""
Momentum-space analysis of translation-invariant walks.

Conventions
-----------
Momentum states are ``|k> = sum_x exp(-i k x) |x>``, so the ring translation
``F`` becomes ``exp(i k)`` and the conditional shift ``S`` becomes
``D(k) = diag(exp(i k), exp(-i k))``. The Bloch block of the ordinary step
``Z(theta) = (1 x C_theta) S`` is then ``C_theta D(k)``.

Every 2x2 block ``U`` in SU(2) is written ``U = cos(E) 1 - i sin(E) n.sigma``
and ``H = i log U = E n.sigma`` with ``E`` in [0, pi]. Internally a block is
carried as the pair ``(cos E, sin(E) n)``, which stays finite at gap closings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from ._parallel import parallel_map
from .core import PropagatorMatrix
from .operators import SIGMA_X, SIGMA_Y, SIGMA_Z, coin

PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)

# sin(E) below this is treated as a gap closing (n undefined)
GAP_TOL = 1e-6
# eigenphases within this distance of -pi are assigned +pi
BRANCH_TOL = 1e-9


class GapClosingError(ValueError):
    """Raised where E is 0 or pi and the Bloch vector is undefined."""


class GaplessError(ValueError):
    pass


class NonPlanarError(ValueError):
    pass


def quasienergies(eigenvalues) -> np.ndarray:
    """Quasienergies ``-arg(lambda)`` in (-pi, pi]; lambda = -1 maps to +pi.

    Phases within ``BRANCH_TOL`` of -pi are wrapped and clamped to pi.
    """
    e = -np.angle(np.asarray(eigenvalues))
    return np.where(e <= -math.pi + BRANCH_TOL, np.minimum(e + 2 * math.pi, math.pi), e)


def su2_log(U) -> np.ndarray:
    """Hermitian ``H`` with ``U = exp(-i H)``, eigenvalues in (-pi, pi].

    Uses a complex Schur form so degenerate eigenvalues still get an
    orthonormal eigenbasis.
    """
    U = np.asarray(U, dtype=np.complex128)
    T, Q = scipy.linalg.schur(U, output="complex")
    e = quasienergies(np.diag(T))
    H = (Q * e) @ Q.conj().T
    return 0.5 * (H + H.conj().T)


def pauli_components(M) -> np.ndarray:
    """Coefficients ``m`` in ``M = m0 1 + m.sigma`` (complex in general)."""
    M = np.asarray(M)
    return np.array([np.trace(M @ s) / 2 for s in PAULI])


def dmat(k: float) -> np.ndarray:
    """Bloch image of the conditional shift S."""
    return np.diag([np.exp(1j * k), np.exp(-1j * k)])


@dataclass(frozen=True, eq=False)
class BlochBlock:
    """2x2 unitary/Hermitian pair at fixed quasimomentum.

    ``n`` is ``None`` at gap closings (sin E < GAP_TOL).
    """

    k: float | tuple[float, float]
    U: np.ndarray
    H: np.ndarray
    E: float
    n: np.ndarray | None

    @classmethod
    def from_unitary(cls, U, k) -> BlochBlock:
        """Build from a numerical SU(2) block via :func:`su2_log`."""
        U = np.asarray(U, dtype=np.complex128)
        H = su2_log(U)
        E = float(np.max(np.abs(np.linalg.eigvalsh(H))))
        h = np.real(pauli_components(H))
        n = h / np.linalg.norm(h) if math.sin(E) > GAP_TOL else None
        return cls(k, U, H, E, n)

    @classmethod
    def from_cos_vec(cls, c: float, v: np.ndarray, k) -> BlochBlock:
        """Build from ``(cos E, sin(E) n)``; raises at gap closings."""
        s = float(np.linalg.norm(v))
        if s < GAP_TOL:
            raise GapClosingError(f"gap closes at k = {k} (sin E = {s:.2e})")
        E = math.atan2(s, c)
        n = v / s
        H = E * sum(ni * p for ni, p in zip(n, PAULI))
        U = c * np.eye(2) - 1j * sum(vi * p for vi, p in zip(v, PAULI))
        return cls(k, U, H, E, n)


# -- ordinary walk -------------------------------------------------------------


def oqw_bloch_unitary(theta: float, k: float) -> np.ndarray:
    """Bloch block of Z(theta)."""
    return coin(theta) @ dmat(k)


def oqw_cyclic_bloch_unitary(theta: float, k: float) -> np.ndarray:
    """Bloch block of the reordered step S (1 x C_theta)."""
    return dmat(k) @ coin(theta)


def bloch_block_oqw(theta: float, k: float) -> BlochBlock:
    return BlochBlock.from_unitary(oqw_bloch_unitary(theta, k), k)


def dispersion_oqw(theta: float, k: float) -> tuple[float, np.ndarray]:
    """Closed-form quasienergy and Bloch vector of the ordinary walk.

    ``E = arccos(cos(theta) cos(k))`` and
    ``n = (sin(theta) sin(k), sin(theta) cos(k), -cos(theta) sin(k)) / sin(E)``.
    This ``n`` belongs to the reordered block ``D(k) C_theta``; the block of
    ``Z(theta)`` itself is its conjugate by ``D(k)`` and shares ``E``.
    """
    s, c = math.sin(theta), math.cos(theta)
    E = math.acos(max(-1.0, min(1.0, c * math.cos(k))))
    sin_e = math.sin(E)
    if sin_e < GAP_TOL:
        raise GapClosingError(f"gap closes at theta = {theta}, k = {k}")
    n = np.array([s * math.sin(k), s * math.cos(k), -c * math.sin(k)]) / sin_e
    return E, n


def _oqw_cos_vec(theta: float, k: float) -> tuple[float, np.ndarray]:
    """``(cos E, sin(E) n)`` for the block of Z(theta), i.e. ``C_theta D(k)``."""
    s, c = math.sin(theta), math.cos(theta)
    sk, ck = math.sin(k), math.cos(k)
    return c * ck, np.array([-s * sk, s * ck, -c * sk])


def compose(a: tuple[float, np.ndarray], b: tuple[float, np.ndarray]) -> tuple[float, np.ndarray]:
    """Product of two SU(2) blocks in ``(cos E, sin(E) n)`` form, ``a`` on the left.

    cos E = cos Ea cos Eb - sin Ea sin Eb na.nb
    sin E n = cos Ea sin Eb nb + cos Eb sin Ea na + sin Ea sin Eb na x nb
    """
    ca, va = a
    cb, vb = b
    return ca * cb - float(va @ vb), ca * vb + cb * va + np.cross(va, vb)


# -- split-step walks ------------------------------------------------------


def ssqw_bloch_unitary(theta1: float, theta2: float, k: float) -> np.ndarray:
    """Bloch block of the double-shift walk, equal to that of Z(theta1) Z(theta2)."""
    return oqw_bloch_unitary(theta1, k) @ oqw_bloch_unitary(theta2, k)


def ssqw_single_bloch_unitary(theta1: float, theta2: float, k: float) -> np.ndarray:
    """Bloch block of the single-shift walk C1 T- C2 T+."""
    return coin(theta1) @ np.diag([1, np.exp(-1j * k)]) @ coin(theta2) @ np.diag([np.exp(1j * k), 1])


def _ss_cos_vec(theta1: float, theta2: float, k: float) -> tuple[float, np.ndarray]:
    return compose(_oqw_cos_vec(theta1, k), _oqw_cos_vec(theta2, k))


def hamiltonian_ss_closed_form(theta1: float, theta2: float, k: float) -> BlochBlock:
    """Effective Hamiltonian of the double-shift split-step walk at momentum ``k``.

    Composes the two ordinary-walk factors in the order Z(theta1) Z(theta2);
    with that order the cross term is ``n1 x n2``.
    """
    c, v = _ss_cos_vec(theta1, theta2, k)
    return BlochBlock.from_cos_vec(c, v, k)


def ssqw2d_bloch_product(theta1: float, theta2: float, kx: float, ky: float) -> np.ndarray:
    """Bloch block of the 2D decomposition, axis-2 factor on the left.

    Z2D is this product conjugated by S1, so its own block is
    ``D(kx) P D(kx)^dag``.
    """
    return ssqw_bloch_unitary(0.0, theta1, ky) @ ssqw_bloch_unitary(theta2, theta1, kx)


def hamiltonian_2dss_closed_form(theta1: float, theta2: float, kx: float, ky: float) -> BlochBlock:
    """Effective Hamiltonian of the triangular-lattice walk from two 1D split-step factors."""
    left = _ss_cos_vec(0.0, theta1, ky)
    right = _ss_cos_vec(theta2, theta1, kx)
    c, v = compose(left, right)
    return BlochBlock.from_cos_vec(c, v, (kx, ky))


def lattice_bloch_block(U: PropagatorMatrix, k) -> np.ndarray:
    """Project a translation-invariant lattice operator onto momentum ``k``.

    Computes ``<k, c| U |k, c'> / n_sites`` with the momentum basis above.
    """
    g = U.geometry
    ks = np.atleast_1d(np.asarray(k, dtype=float))
    if ks.size != g.ndim:
        raise ValueError(f"need {g.ndim} momentum components, got {ks.size}")
    coords = np.indices(g.dims).reshape(g.ndim, -1)
    phase = np.exp(-1j * (ks @ coords))
    ket = np.kron(phase, np.eye(2)).T  # columns |k, c>
    return ket.conj().T @ U.matrix @ ket / g.n_sites


# -- BCH -------------------------------------------------------------------


def _comm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def bch_truncated(H1, H2, order: int = 3) -> np.ndarray:
    """Series for ``H`` with ``exp(-i H) = exp(-i H1) exp(-i H2)`` up to ``order``."""
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2 or 3, got {order}")
    H1 = np.asarray(H1, dtype=np.complex128)
    H2 = np.asarray(H2, dtype=np.complex128)
    out = H1 + H2
    if order >= 2:
        out = out - 0.5j * _comm(H1, H2)
    if order >= 3:
        out = out - (_comm(H1, _comm(H1, H2)) + _comm(H2, _comm(H2, H1))) / 12
    return out


# -- gaps and topology -----------------------------------------------------------


def k_grid(resolution: int) -> np.ndarray:
    """``resolution`` evenly spaced momenta in (-pi, pi]."""
    return -math.pi + 2 * math.pi * (np.arange(resolution) + 1) / resolution


def ss_quasienergy(theta1: float, theta2: float, k: float) -> float:
    c, v = _ss_cos_vec(theta1, theta2, k)
    return math.atan2(float(np.linalg.norm(v)), c)


def gap(theta1: float, theta2: float, resolution: int = 256) -> tuple[float, float]:
    """Minimum distance of the split-step band to quasienergy 0 and to pi."""
    if resolution < 64:
        raise ValueError(f"resolution must be >= 64, got {resolution}")
    E = np.array([ss_quasienergy(theta1, theta2, k) for k in k_grid(resolution)])
    return float(E.min()), float((math.pi - E).min())


def chiral_bloch_unitary(theta1: float, theta2: float, k: float) -> np.ndarray:
    """Single-shift block in the symmetric frame C(theta1/2) T- C(theta2) T+ C(theta1/2).

    This frame is similar to the plain single-shift walk and has chiral
    symmetry sigma_x U sigma_x = U^dag, which confines n(k) to the y-z plane.
    """
    half = coin(theta1 / 2)
    return half @ ssqw_single_bloch_unitary(0.0, theta2, k) @ half


def _bloch_vectors(blocks: Sequence[np.ndarray]) -> np.ndarray:
    out = []
    for U in blocks:
        v = np.real(0.5j * pauli_components(U))
        out.append(v / np.linalg.norm(v))
    return np.array(out)


def plane_winding(vectors: np.ndarray, plane_tol: float = 1e-8) -> tuple[int, np.ndarray]:
    """Signed winding of a closed loop of unit vectors about their common plane normal.

    The normal is the least principal axis of ``sum n n^T``, oriented so its
    largest-magnitude component is positive.
    """
    vectors = np.asarray(vectors, dtype=float)
    w, V = np.linalg.eigh(vectors.T @ vectors)
    normal = V[:, 0]
    normal = normal * np.sign(normal[np.argmax(np.abs(normal))])
    off = float(np.max(np.abs(vectors @ normal)))
    if off > plane_tol:
        raise NonPlanarError(f"Bloch vectors leave their best-fit plane by {off:.2e}")
    e1 = vectors[0] - (vectors[0] @ normal) * normal
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    phi = np.arctan2(vectors @ e2, vectors @ e1)
    dphi = np.diff(np.append(phi, phi[0]))
    dphi = (dphi + math.pi) % (2 * math.pi) - math.pi
    total = dphi.sum() / (2 * math.pi)
    if abs(total - round(total)) > 1e-6:
        raise ValueError(f"winding is not close to an integer ({total:.6f}); refine the grid")
    return int(round(total)), normal


def winding_number(theta1: float, theta2: float, resolution: int = 256) -> int:
    """Winding of the single-shift walk's Bloch vector about its plane normal.

    Raises :class:`GaplessError` unless both gaps exceed ten grid spacings and
    :class:`NonPlanarError` if the sampled vectors are not coplanar.
    """
    g0, gpi = gap(theta1, theta2, resolution)
    spacing = 2 * math.pi / resolution
    if min(g0, gpi) <= 10 * spacing:
        raise GaplessError(
            f"spectrum not gapped at resolution {resolution}: gap0={g0:.3g}, gap_pi={gpi:.3g}"
        )
    blocks = [chiral_bloch_unitary(theta1, theta2, k) for k in k_grid(resolution)]
    w, _ = plane_winding(_bloch_vectors(blocks))
    return w


# -- tabulation -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DispersionCurve:
    """Sampled split-step band; ``n`` rows are NaN at gap closings."""

    theta1: float
    theta2: float
    k: np.ndarray
    E: np.ndarray
    n: np.ndarray

    def rows(self):
        for k, E, n in zip(self.k, self.E, self.n):
            yield {
                "theta1": self.theta1,
                "theta2": self.theta2,
                "k": float(k),
                "E": float(E),
                "n1": float(n[0]),
                "n2": float(n[1]),
                "n3": float(n[2]),
            }


def dispersion_curve(theta1: float, theta2: float, resolution: int = 256, threads: int | None = None) -> DispersionCurve:
    ks = k_grid(resolution)

    def one(k):
        c, v = _ss_cos_vec(theta1, theta2, k)
        s = float(np.linalg.norm(v))
        E = math.atan2(s, c)
        return E, (v / s if s >= GAP_TOL else np.full(3, np.nan))

    out = parallel_map(one, ks, threads)
    return DispersionCurve(
        theta1, theta2, ks, np.array([e for e, _ in out]), np.array([n for _, n in out])
    )


@dataclass(frozen=True, eq=False)
class DispersionSurface:
    """Sampled 2D band on a (kx, ky) grid; ``n`` rows are NaN at gap closings."""

    theta1: float
    theta2: float
    kx: np.ndarray
    ky: np.ndarray
    E: np.ndarray  # (len(kx), len(ky))
    n: np.ndarray  # (len(kx), len(ky), 3)

    def rows(self):
        for i, kx in enumerate(self.kx):
            for j, ky in enumerate(self.ky):
                n = self.n[i, j]
                yield {
                    "theta1": self.theta1,
                    "theta2": self.theta2,
                    "k": float(kx),
                    "ky": float(ky),
                    "E": float(self.E[i, j]),
                    "n1": float(n[0]),
                    "n2": float(n[1]),
                    "n3": float(n[2]),
                }


def dispersion_surface(
    theta1: float, theta2: float, resolution: int = 64, threads: int | None = None
) -> DispersionSurface:
    ks = k_grid(resolution)

    def one(kx):
        E, N = [], []
        right = _ss_cos_vec(theta2, theta1, kx)
        for ky in ks:
            c, v = compose(_ss_cos_vec(0.0, theta1, ky), right)
            s = float(np.linalg.norm(v))
            E.append(math.atan2(s, c))
            N.append(v / s if s >= GAP_TOL else np.full(3, np.nan))
        return E, N

    out = parallel_map(one, ks, threads)
    return DispersionSurface(
        theta1, theta2, ks, ks, np.array([e for e, _ in out]), np.array([n for _, n in out])
    )
