"""
Propagator constructors: coins, conditional shifts, ordinary and split-step
walk steps in one and two dimensions, the q-plate, and position-dependent
coins.

Every dense constructor returns a :class:`~sswalk.core.PropagatorMatrix`.
``apply_coin_field`` and ``apply_shift`` at the bottom act directly on
amplitude arrays of shape ``(*dims, 2)``; they are the fast path for large
lattices and must agree with the dense operators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import LatticeGeometry, PropagatorMatrix

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
IDENTITY_2 = np.eye(2, dtype=np.complex128)
PROJ_UP = np.diag([1.0, 0.0]).astype(np.complex128)
PROJ_DOWN = np.diag([0.0, 1.0]).astype(np.complex128)

# circular polarization <-> coin basis used by the q-plate model
POL_L = 0
POL_R = 1


def normalize_angle(theta: float) -> float:
    """Map an angle into (-pi, pi]."""
    t = math.remainder(float(theta), 2 * math.pi)
    return math.pi if t <= -math.pi else t


def coin(theta: float) -> np.ndarray:
    """C(theta) = cos(theta) 1 - i sin(theta) sigma_y, a real rotation matrix."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def ring_shift(n: int, steps: int = 1) -> np.ndarray:
    """Permutation matrix sending |x> to |x + steps mod n>."""
    if n < 2:
        raise ValueError(f"ring needs at least 2 sites, got {n}")
    return np.roll(np.eye(n, dtype=np.complex128), steps, axis=0)


def _geometry(n) -> LatticeGeometry:
    return n if isinstance(n, LatticeGeometry) else LatticeGeometry.ring(n)


def _axis_shift(geometry: LatticeGeometry, axis: int, steps: int = 1) -> np.ndarray:
    """Site-space translation along one axis (no coin factor)."""
    mats = [np.eye(n, dtype=np.complex128) for n in geometry.dims]
    mats[axis] = ring_shift(geometry.dims[axis], steps)
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def _site_identity(geometry: LatticeGeometry) -> np.ndarray:
    return np.eye(geometry.n_sites, dtype=np.complex128)


def _conditional(geometry: LatticeGeometry, up: np.ndarray, down: np.ndarray) -> np.ndarray:
    return np.kron(up, PROJ_UP) + np.kron(down, PROJ_DOWN)


def forward_f(n) -> PropagatorMatrix:
    """Coin-independent translation F (x) 1 by one site."""
    g = _geometry(n)
    return PropagatorMatrix(g, np.kron(_axis_shift(g, 0), IDENTITY_2))


def shift_s(n) -> PropagatorMatrix:
    """S = F (x) |up><up| + F^dag (x) |down><down|."""
    g = _geometry(n)
    f = _axis_shift(g, 0)
    return PropagatorMatrix(g, _conditional(g, f, f.conj().T))


def t_plus(n) -> PropagatorMatrix:
    """T+ = F (x) |up><up| + 1 (x) |down><down|."""
    g = _geometry(n)
    return PropagatorMatrix(g, _conditional(g, _axis_shift(g, 0), _site_identity(g)))


def t_minus(n) -> PropagatorMatrix:
    """T- = 1 (x) |up><up| + F^dag (x) |down><down|."""
    g = _geometry(n)
    return PropagatorMatrix(g, _conditional(g, _site_identity(g), _axis_shift(g, 0, -1)))


def coin_operator(theta: float, geometry) -> PropagatorMatrix:
    """Uniform coin 1 (x) C(theta) on any lattice."""
    g = _geometry(geometry)
    return PropagatorMatrix(g, np.kron(_site_identity(g), coin(theta)))


def oqw_step(theta: float, n) -> PropagatorMatrix:
    """Ordinary walk step Z(theta) = (1 (x) C_theta) S."""
    g = _geometry(n)
    return coin_operator(theta, g) @ shift_s(g)


def oqw_step_cyclic(theta: float, n) -> PropagatorMatrix:
    """The cyclically reordered step S (1 (x) C_theta)."""
    g = _geometry(n)
    return shift_s(g) @ coin_operator(theta, g)


def ssqw_step(theta1: float, theta2: float, n) -> PropagatorMatrix:
    """Split-step walk Z_ss = (1 (x) C_theta1) T- (1 (x) C_theta2) T+."""
    g = _geometry(n)
    return coin_operator(theta1, g) @ t_minus(g) @ coin_operator(theta2, g) @ t_plus(g)


def shift_theta(theta: float, n) -> PropagatorMatrix:
    """Effective shift T_theta = T- (1 (x) C_theta) T+."""
    g = _geometry(n)
    return t_minus(g) @ coin_operator(theta, g) @ t_plus(g)


def ssqw_double_step(theta1: float, theta2: float, n) -> PropagatorMatrix:
    """Double-shift split-step walk (1 (x) C_theta1) T-^2 (1 (x) C_theta2) T+^2.

    The walker skips one site per jump, so the site count must be even.
    """
    g = _geometry(n)
    g.require_even(0)
    tm, tp = t_minus(g), t_plus(g)
    return coin_operator(theta1, g) @ tm @ tm @ coin_operator(theta2, g) @ tp @ tp


# -- two dimensions ---------------------------------------------------------


def _torus(n1: int, n2: int) -> LatticeGeometry:
    return LatticeGeometry.torus(n1, n2)


def _conditional_axis(g: LatticeGeometry, axis: int) -> PropagatorMatrix:
    f = _axis_shift(g, axis)
    return PropagatorMatrix(g, _conditional(g, f, f.conj().T))


def s1(n1: int, n2: int) -> PropagatorMatrix:
    """Conditional shift along the first lattice axis."""
    return _conditional_axis(_torus(n1, n2), 0)


def s2(n1: int, n2: int) -> PropagatorMatrix:
    """Conditional shift along the second lattice axis."""
    return _conditional_axis(_torus(n1, n2), 1)


def s3(n1: int, n2: int) -> PropagatorMatrix:
    """Diagonal conditional shift S3 = S1 S2."""
    return s1(n1, n2) @ s2(n1, n2)


def ssqw2d_step(theta1: float, theta2, n1: int, n2: int) -> PropagatorMatrix:
    """Triangular-lattice split-step walk S3 C_theta1 S2 C_theta2 S1 C_theta1.

    ``theta2`` may be a scalar or a :class:`CoinProfile` along the first axis.
    """
    g = _torus(n1, n2)
    c1 = coin_operator(theta1, g)
    if isinstance(theta2, CoinProfile):
        c2 = site_dependent_coin(theta2, g, axis=0)
    else:
        c2 = coin_operator(theta2, g)
    sh1, sh2 = s1(n1, n2), s2(n1, n2)
    return sh1 @ sh2 @ c1 @ sh2 @ c2 @ sh1 @ c1


# -- q-plate ----------------------------------------------------------------


@dataclass(frozen=True)
class QPlateParams:
    """Topological charge ``q`` (2q integer) and retardation ``delta`` in [0, pi]."""

    q: float
    delta: float

    def __post_init__(self) -> None:
        if abs(2 * self.q - round(2 * self.q)) > 1e-12:
            raise ValueError(f"2q must be an integer, got q = {self.q}")
        if not -1e-12 <= self.delta <= math.pi + 1e-12:
            raise ValueError(f"retardation must lie in [0, pi], got {self.delta}")

    @property
    def oam_step(self) -> int:
        return int(round(2 * self.q))


def qplate(params: QPlateParams, n) -> PropagatorMatrix:
    """cos(d) 1 - i sin(d) (F_2q (x) |L><R| + F_2q^dag (x) |R><L|) on an OAM ring.

    |L> is identified with coin index 0 (|up>) and |R> with index 1.
    """
    g = _geometry(n)
    f = _axis_shift(g, 0, params.oam_step)
    l_r = np.zeros((2, 2), dtype=np.complex128)
    l_r[POL_L, POL_R] = 1.0
    coupling = np.kron(f, l_r) + np.kron(f.conj().T, l_r.T)
    d = params.delta
    mat = math.cos(d) * np.eye(g.dim) - 1j * math.sin(d) * coupling
    return PropagatorMatrix(g, mat)


def smp_tilde_coin(theta1: float) -> np.ndarray:
    """exp(-i pi sigma_z / 4) C(theta1) sigma_x exp(i pi sigma_z / 4)."""
    rot = np.diag([np.exp(-1j * math.pi / 4), np.exp(1j * math.pi / 4)])
    return rot @ coin(theta1) @ SIGMA_X @ rot.conj().T


# -- position-dependent coins -------------------------------------------------


def _ramp(u: np.ndarray, smoothing: float) -> np.ndarray:
    if smoothing <= 0:
        return (u > 0).astype(float)
    return np.clip(0.5 + u / smoothing, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class CoinProfile:
    """Coin angle for every site along one lattice axis.

    ``boundaries`` lists the first site of each zone change, for profiles
    built from zones (empty for uniform or arbitrary profiles).
    """

    thetas: np.ndarray
    boundaries: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        th = np.array([normalize_angle(t) for t in np.ravel(self.thetas)], dtype=float)
        if th.size < 2:
            raise ValueError("a profile needs at least 2 sites")
        th.setflags(write=False)
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "boundaries", tuple(int(b) for b in self.boundaries))

    def __len__(self) -> int:
        return self.thetas.size

    @classmethod
    def uniform(cls, n: int, theta: float) -> CoinProfile:
        return cls(np.full(n, float(theta)))

    @classmethod
    def two_zone(
        cls,
        n: int,
        theta_left: float,
        theta_right: float,
        boundary: int | None = None,
        smoothing: float = 0.0,
    ) -> CoinProfile:
        """``theta_left`` on sites [0, boundary), ``theta_right`` on [boundary, n).

        On a ring this creates two interfaces: at ``boundary`` and at site 0.
        ``smoothing`` > 0 replaces each sharp step by a linear ramp that many
        sites wide.
        """
        b = n // 2 if boundary is None else int(boundary)
        if not 0 < b < n:
            raise ValueError(f"boundary must lie strictly inside (0, {n}), got {b}")
        x = np.arange(n, dtype=float)
        inside = x >= b
        # signed distance to the nearest interface, positive in the right zone
        d_right = np.minimum(x - (b - 0.5), (n - 0.5) - x)
        d_left = -np.minimum(x + 0.5, (b - 0.5) - x)
        frac = _ramp(np.where(inside, d_right, d_left), smoothing)
        thetas = (1 - frac) * theta_left + frac * theta_right
        return cls(thetas, boundaries=(b, 0))

    @classmethod
    def oam_disc(
        cls,
        n: int,
        ell_c: int,
        theta_inner: float,
        theta_outer: float,
        smoothing: float = 0.0,
    ) -> CoinProfile:
        """Generalized SMP gadget: ``theta_inner`` for |l| <= ell_c, ``theta_outer`` elsewhere.

        Site ``x`` carries OAM index ``l = x - n // 2``.
        """
        if ell_c < 0:
            raise ValueError(f"ell_c must be non-negative, got {ell_c}")
        c = n // 2
        if c - ell_c < 1 or c + ell_c + 1 > n - 1:
            raise ValueError(f"ell_c = {ell_c} does not fit on a ring of {n} OAM sites")
        ell = np.arange(n) - c
        # distance outward from the gadget edge at |l| = ell_c + 1/2
        frac = _ramp(np.abs(ell) - (ell_c + 0.5), smoothing)
        thetas = (1 - frac) * theta_inner + frac * theta_outer
        return cls(thetas, boundaries=(c - ell_c, c + ell_c + 1))


def site_dependent_coin(profile: CoinProfile, geometry, axis: int = 0) -> PropagatorMatrix:
    """Block-diagonal coin applying C(theta(x)) at each site.

    In 2D the angle depends only on the coordinate along ``axis``.
    """
    g = _geometry(geometry)
    if len(profile) != g.dims[axis]:
        raise ValueError(
            f"profile has {len(profile)} sites but axis {axis} has {g.dims[axis]}"
        )
    idx = np.unravel_index(np.arange(g.n_sites), g.dims)[axis]
    th = profile.thetas[idx]
    c, s = np.cos(th), np.sin(th)
    mat = np.zeros((g.dim, g.dim), dtype=np.complex128)
    sites = np.arange(g.n_sites)
    mat[2 * sites, 2 * sites] = c
    mat[2 * sites, 2 * sites + 1] = -s
    mat[2 * sites + 1, 2 * sites] = s
    mat[2 * sites + 1, 2 * sites + 1] = c
    return PropagatorMatrix(g, mat)


def generalized_smp_radii(ell_c: int, w: float) -> tuple[list[float], float]:
    """Intensity-ring radii w*sqrt(|l|/2) for l = 0..ell_c+1 and the gadget edge radius.

    The edge radius is the midpoint of the rings for ``ell_c`` and ``ell_c + 1``.
    """
    if w <= 0:
        raise ValueError(f"beam width must be positive, got {w}")
    if ell_c < 0:
        raise ValueError(f"ell_c must be non-negative, got {ell_c}")
    r_max = [w * math.sqrt(abs(ell) / 2) for ell in range(ell_c + 2)]
    return r_max, 0.5 * (r_max[ell_c] + r_max[ell_c + 1])


# -- structured fast path ----------------------------------------------------


def apply_coin_field(arr: np.ndarray, theta, axis: int = 0) -> np.ndarray:
    """Apply C(theta) site by site to an amplitude array of shape ``(*dims, 2)``.

    ``theta`` is a scalar or a per-site vector along ``axis``.
    """
    th = np.asarray(theta, dtype=float)
    if th.ndim:
        shape = [1] * (arr.ndim - 1)
        shape[axis] = th.size
        th = th.reshape(shape)
    c, s = np.cos(th), np.sin(th)
    up, down = arr[..., 0], arr[..., 1]
    return np.stack([c * up - s * down, s * up + c * down], axis=-1)


def apply_shift(arr: np.ndarray, axis: int = 0, kind: str = "S", power: int = 1) -> np.ndarray:
    """Apply a conditional shift (``"S"``, ``"T+"`` or ``"T-"``) ``power`` times."""
    up_steps, down_steps = {"S": (1, -1), "T+": (1, 0), "T-": (0, -1)}[kind]
    out = np.empty_like(arr)
    out[..., 0] = np.roll(arr[..., 0], up_steps * power, axis=axis)
    out[..., 1] = np.roll(arr[..., 1], down_steps * power, axis=axis)
    return out
