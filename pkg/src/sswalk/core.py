"""
Hilbert-space primitives for walks on finite periodic lattices.

Basis ordering is site-major, coin-minor: for a 1D ring of ``N`` sites the
amplitude of ``|x, c>`` lives at index ``2*x + c``; on an ``N1 x N2`` torus it
lives at ``2*(x1*N2 + x2) + c``. Coin index 0 is ``|up>`` and 1 is ``|down>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

NORM_TOL = 1e-12
UNITARY_TOL = 1e-12


class GeometryMismatchError(ValueError):
    """Raised when two objects live on different lattices."""


@dataclass(frozen=True)
class LatticeGeometry:
    """Ring (1D) or torus (2D) of sites, each carrying a two-level coin."""

    dims: tuple[int, ...]
    coin_dim: int = 2

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if len(dims) not in (1, 2):
            raise ValueError(f"dims must have length 1 or 2, got {dims}")
        if any(d < 2 for d in dims):
            raise ValueError(f"every site count must be >= 2, got {dims}")
        if self.coin_dim != 2:
            raise ValueError(f"coin_dim is fixed at 2, got {self.coin_dim}")

    @classmethod
    def ring(cls, n: int) -> LatticeGeometry:
        return cls((n,))

    @classmethod
    def torus(cls, n1: int, n2: int) -> LatticeGeometry:
        return cls((n1, n2))

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.dims))

    @property
    def dim(self) -> int:
        return self.n_sites * self.coin_dim

    def require_even(self, axis: int | None = None) -> None:
        axes = range(self.ndim) if axis is None else [axis]
        for ax in axes:
            if self.dims[ax] % 2:
                raise ValueError(
                    f"axis {ax} needs an even site count for double shifts, got {self.dims[ax]}"
                )

    def site_index(self, site: int | Sequence[int]) -> int:
        site = (site,) if np.isscalar(site) else tuple(site)
        if len(site) != self.ndim:
            raise ValueError(f"site {site} does not match lattice dims {self.dims}")
        for x, n in zip(site, self.dims):
            if not 0 <= x < n:
                raise IndexError(f"site index {x} out of range [0, {n})")
        return int(np.ravel_multi_index(site, self.dims))


def _check_geometry(a: LatticeGeometry, b: LatticeGeometry) -> None:
    if a != b:
        raise GeometryMismatchError(f"geometry mismatch: {a.dims} vs {b.dims}")


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.complex128, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class WalkerState:
    """Normalized amplitude vector over (sites x coin)."""

    geometry: LatticeGeometry
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = _frozen(self.amplitudes).reshape(-1)
        if amps.shape != (self.geometry.dim,):
            raise ValueError(
                f"amplitude vector has length {amps.size}, expected {self.geometry.dim}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm - 1 = {norm - 1.0:.3e})")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_array(cls, geometry: LatticeGeometry, amplitudes, normalize: bool = True) -> WalkerState:
        amps = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise ValueError("cannot normalize the zero vector")
            amps = amps / norm
        return cls(geometry, amps)

    def as_array(self) -> np.ndarray:
        """Amplitudes reshaped to ``(*dims, 2)``."""
        return self.amplitudes.reshape(*self.geometry.dims, self.geometry.coin_dim)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True, eq=False)
class PropagatorMatrix:
    """Dense unitary acting on the walk Hilbert space of ``geometry``.

    Unitarity is checked on construction; pass ``check=False`` only for
    intermediate products that are known to be unitary.
    """

    geometry: LatticeGeometry
    matrix: np.ndarray
    check: bool = True

    def __post_init__(self) -> None:
        mat = _frozen(self.matrix)
        d = self.geometry.dim
        if mat.shape != (d, d):
            raise ValueError(f"matrix shape {mat.shape} does not match Hilbert dimension {d}")
        object.__setattr__(self, "matrix", mat)
        if self.check:
            err = self.unitarity_error()
            if err > UNITARY_TOL:
                raise ValueError(f"operator is not unitary (max |U^dag U - 1| = {err:.3e})")

    def unitarity_error(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))

    @property
    def dag(self) -> PropagatorMatrix:
        return PropagatorMatrix(self.geometry, self.matrix.conj().T, check=False)

    def __matmul__(self, other):
        if isinstance(other, PropagatorMatrix):
            _check_geometry(self.geometry, other.geometry)
            return PropagatorMatrix(self.geometry, self.matrix @ other.matrix, check=False)
        if isinstance(other, WalkerState):
            return apply(self, other)
        return NotImplemented

    def __neg__(self) -> PropagatorMatrix:
        return PropagatorMatrix(self.geometry, -self.matrix, check=False)


def identity(geometry: LatticeGeometry) -> PropagatorMatrix:
    return PropagatorMatrix(geometry, np.eye(geometry.dim), check=False)


def make_basis_state(geometry: LatticeGeometry, site, coin=(1.0, 0.0)) -> WalkerState:
    """Walker localized at ``site`` with (normalized) coin amplitudes ``coin``."""
    coin = np.asarray(coin, dtype=np.complex128)
    if coin.shape != (2,):
        raise ValueError(f"coin must be an amplitude pair, got shape {coin.shape}")
    cnorm = np.linalg.norm(coin)
    if cnorm == 0:
        raise ValueError("coin vector must not be zero")
    idx = geometry.site_index(site)
    amps = np.zeros(geometry.dim, dtype=np.complex128)
    amps[2 * idx : 2 * idx + 2] = coin / cnorm
    return WalkerState(geometry, amps)


def apply(U: PropagatorMatrix, psi: WalkerState) -> WalkerState:
    _check_geometry(U.geometry, psi.geometry)
    # no renormalization: WalkerState rejects any drift beyond NORM_TOL
    return WalkerState(psi.geometry, U.matrix @ psi.amplitudes)


def position_distribution(psi: WalkerState) -> np.ndarray:
    """Site probabilities, shaped like ``geometry.dims``."""
    return np.sum(np.abs(psi.as_array()) ** 2, axis=-1)


def marginals(psi: WalkerState) -> tuple[np.ndarray, ...]:
    """Per-axis marginal distributions (a 1-tuple for a ring)."""
    p = position_distribution(psi)
    if p.ndim == 1:
        return (p,)
    return p.sum(axis=1), p.sum(axis=0)


def _matrices(A, B) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(A, PropagatorMatrix) and isinstance(B, PropagatorMatrix):
        _check_geometry(A.geometry, B.geometry)
    a = A.matrix if isinstance(A, PropagatorMatrix) else np.asarray(A)
    b = B.matrix if isinstance(B, PropagatorMatrix) else np.asarray(B)
    if a.shape != b.shape:
        raise GeometryMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def optimal_phase(A, B) -> float:
    """Global phase phi aligning ``exp(i phi) B`` with ``A`` (argument of tr(B^dag A))."""
    a, b = _matrices(A, B)
    overlap = np.vdot(b, a)
    if abs(overlap) < 1e-300:
        return 0.0
    return float(np.angle(overlap))


def operator_distance(A, B, up_to_phase: bool = False) -> float:
    """Spectral-norm distance ``||A - B||``.

    With ``up_to_phase=True`` the global phase of ``B`` is first aligned to
    ``A`` using :func:`optimal_phase`.
    """
    a, b = _matrices(A, B)
    if up_to_phase:
        b = np.exp(1j * optimal_phase(a, b)) * b
    return float(np.linalg.norm(a - b, 2))
