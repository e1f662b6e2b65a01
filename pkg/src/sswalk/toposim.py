"""
Real-space simulation of inhomogeneous split-step walks.

Boundaries are produced by letting the second coin angle depend on position
while the first stays uniform. This module builds those propagators, evolves
walkers, detects bound modes at quasienergy 0 and pi, and runs the 2D
edge-state dynamics with a structured (matrix-free) update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from ._parallel import parallel_map
from .core import (
    GeometryMismatchError,
    LatticeGeometry,
    PropagatorMatrix,
    WalkerState,
    apply,
    position_distribution,
)
from . import operators as ops
from .operators import CoinProfile
from .spectral import GaplessError, gap, quasienergies, winding_number

EPS_E = 1e-6
P_MIN = 0.5
WINDOW = 5
DIST_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class BoundaryConfig:
    """Ring of ``n`` sites with uniform ``theta1`` and a site-dependent second coin."""

    n: int
    theta1: float
    theta2_profile: CoinProfile

    def __post_init__(self) -> None:
        if len(self.theta2_profile) != self.n:
            raise ValueError(f"profile has {len(self.theta2_profile)} sites, ring has {self.n}")
        object.__setattr__(self, "theta1", ops.normalize_angle(self.theta1))

    @classmethod
    def uniform(cls, n: int, theta1: float, theta2: float) -> BoundaryConfig:
        return cls(n, theta1, CoinProfile.uniform(n, theta2))

    @classmethod
    def two_zone(
        cls,
        n: int,
        theta1: float,
        theta2_left: float,
        theta2_right: float,
        boundary: int | None = None,
        smoothing: float = 0.0,
    ) -> BoundaryConfig:
        profile = CoinProfile.two_zone(n, theta2_left, theta2_right, boundary, smoothing)
        return cls(n, theta1, profile)

    @property
    def boundaries(self) -> tuple[int, ...]:
        return self.theta2_profile.boundaries


def build_inhomogeneous_ssqw(config: BoundaryConfig) -> PropagatorMatrix:
    """(1 x C_theta1) T- C_theta2(x) T+ on the ring."""
    g = LatticeGeometry.ring(config.n)
    c2 = ops.site_dependent_coin(config.theta2_profile, g)
    return ops.coin_operator(config.theta1, g) @ ops.t_minus(g) @ c2 @ ops.t_plus(g)


def ring_distance(x, b: int, n: int) -> np.ndarray:
    d = np.abs(np.asarray(x) - b) % n
    return np.minimum(d, n - d)


def window_probability(p: np.ndarray, boundary, window: int) -> float:
    """Probability within ``window`` sites (ring distance) of ``boundary``.

    ``boundary`` may be a sequence of sites, in which case the union of their
    windows is used.
    """
    return float(p[_nearest_distance(p.size, np.atleast_1d(boundary)) <= window].sum())


@dataclass(frozen=True)
class LocalizationMetrics:
    ipr: float
    window_prob: float
    decay_length: float


def localization_metrics(psi, boundary, window: int = WINDOW) -> LocalizationMetrics:
    """IPR, window probability and exponential decay length of a 1D distribution.

    ``psi`` is a ring :class:`WalkerState` or a site-probability vector.
    ``boundary`` is one site or a sequence of sites; distances are then taken
    to the nearest of them and the window is the union of their windows. The
    decay length comes from a least-squares fit of ``log p`` against that
    distance for sites outside the window whose probability exceeds 1e-14 of
    the peak. With fewer than 4 such sites the fit is degenerate and the decay
    length is NaN; a non-decaying profile gives ``inf``.
    """
    p = position_distribution(psi) if isinstance(psi, WalkerState) else np.asarray(psi, float)
    if p.ndim != 1:
        raise ValueError(f"expected a 1D distribution, got shape {p.shape}")
    n = p.size
    d = _nearest_distance(n, np.atleast_1d(boundary))
    outside = d > window
    use = outside & (p > 1e-14 * p.max())
    if use.sum() < 4 or np.unique(d[use]).size < 2:
        xi = math.nan
    else:
        slope = np.polyfit(d[use], np.log(p[use]), 1)[0]
        xi = -1.0 / slope if slope < 0 else math.inf
    return LocalizationMetrics(float(np.sum(p**2)), float(p[~outside].sum()), xi)


def _nearest_distance(n: int, boundaries) -> np.ndarray:
    return np.min([ring_distance(np.arange(n), b, n) for b in boundaries], axis=0)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Position distributions at steps 0..T and the boundary-window probability.

    ``distributions`` has shape ``(T + 1, *dims)``. ``window_prob`` is taken
    on the axis-``axis`` marginal and is None when no boundary was given.
    """

    distributions: np.ndarray
    boundary: int | tuple[int, ...] | None = None
    window: int = WINDOW
    axis: int = 0
    window_prob: np.ndarray | None = field(default=None)
    final_state: WalkerState | None = None

    def __post_init__(self) -> None:
        dist = np.asarray(self.distributions, dtype=float)
        sums = dist.reshape(dist.shape[0], -1).sum(axis=1)
        bad = np.abs(sums - 1.0) > DIST_TOL
        if bad.any():
            raise ValueError(f"distribution at step {int(np.argmax(bad))} sums to {sums[bad][0]!r}")
        object.__setattr__(self, "distributions", dist)
        if self.boundary is not None and self.window_prob is None:
            m = self.marginal(self.axis)
            wp = np.array([window_probability(row, self.boundary, self.window) for row in m])
            object.__setattr__(self, "window_prob", wp)

    @property
    def steps(self) -> int:
        return self.distributions.shape[0] - 1

    @property
    def ndim(self) -> int:
        return self.distributions.ndim - 1

    def marginal(self, axis: int = 0) -> np.ndarray:
        """Per-step marginal along ``axis``, shape ``(T + 1, dims[axis])``."""
        if self.ndim == 1:
            if axis != 0:
                raise ValueError("a ring has only axis 0")
            return self.distributions
        return self.distributions.sum(axis=2 - axis)

    def axis_std(self, axis: int = 0, center: int | None = None) -> np.ndarray:
        """Per-step standard deviation along ``axis``.

        Positions are unwrapped to the interval of length ``n`` centred on
        ``center`` (default: the peak of the initial marginal).
        """
        m = self.marginal(axis)
        n = m.shape[1]
        c = int(np.argmax(m[0])) if center is None else center
        x = (np.arange(n) - c + n // 2) % n - n // 2
        mean = m @ x
        return np.sqrt(np.maximum(m @ x**2 - mean**2, 0.0))

    def rows(self):
        """Long-format rows (step, axis, site, probability)."""
        axes = range(self.ndim)
        for t in range(self.steps + 1):
            for ax in axes:
                for site, p in enumerate(self.marginal(ax)[t]):
                    yield {"step": t, "axis": ax + 1, "site": site, "probability": float(p)}


def evolve(
    psi0: WalkerState,
    U: PropagatorMatrix,
    steps: int,
    boundary=None,
    window: int = WINDOW,
) -> Trajectory:
    """Apply ``U`` ``steps`` times, recording the distribution after every step."""
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if psi0.geometry != U.geometry:
        raise GeometryMismatchError(f"state on {psi0.geometry.dims}, operator on {U.geometry.dims}")
    dists = [position_distribution(psi0)]
    psi = psi0
    for _ in range(steps):
        psi = apply(U, psi)
        dists.append(position_distribution(psi))
    return Trajectory(np.array(dists), boundary, window, final_state=psi)


@dataclass(frozen=True, eq=False)
class SpectrumRecord:
    """Eigenphases and per-mode localization diagnostics of a ring propagator.

    ``splitting`` is the largest quasienergy spread inside any cluster of
    modes near 0 or pi (the hybridization splitting between interfaces), or
    NaN when there is no such cluster.
    """

    quasienergies: np.ndarray
    eigenvectors: list[WalkerState]
    ipr: np.ndarray
    window_prob: np.ndarray
    decay_length: np.ndarray
    nearest_boundary: np.ndarray
    flagged: np.ndarray
    boundary_sites: tuple[int, ...]
    window: int
    eps_e: float
    p_min: float
    reconstruction_error: float
    splitting: float = math.nan

    @property
    def flagged_indices(self) -> np.ndarray:
        return np.flatnonzero(self.flagged)

    def distance_to_symmetric(self) -> np.ndarray:
        """min(|E|, pi - |E|): distance of each quasienergy from 0 or pi."""
        return symmetric_distance(self.quasienergies)

    def flagged_per_boundary(self) -> dict[int, int]:
        return {b: int(np.sum(self.flagged & (self.nearest_boundary == b))) for b in self.boundary_sites}

    def rows(self):
        for i in range(self.quasienergies.size):
            yield {
                "index": i,
                "quasienergy": float(self.quasienergies[i]),
                "ipr": float(self.ipr[i]),
                "window_prob": float(self.window_prob[i]),
                "decay_length": float(self.decay_length[i]),
                "flagged": bool(self.flagged[i]),
            }


def symmetric_distance(E) -> np.ndarray:
    a = np.abs(np.asarray(E, dtype=float))
    return np.minimum(a, math.pi - a)


def eigendecompose(U: PropagatorMatrix) -> tuple[np.ndarray, np.ndarray, float]:
    """Eigenvalues and orthonormal eigenvectors of a unitary, via complex Schur form.

    For a normal matrix the Schur factor is diagonal, so the Schur vectors are
    an orthonormal eigenbasis even inside degenerate subspaces. Returns
    ``(eigenvalues, V, ||U - V diag V^dag||)``.
    """
    try:
        T, V = scipy.linalg.schur(U.matrix, output="complex")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise RuntimeError(f"eigensolver failed to converge: {exc}") from exc
    lam = np.diag(T)
    err = float(np.linalg.norm(U.matrix - (V * lam) @ V.conj().T, 2))
    return lam, V, err


def _symmetric_clusters(E: np.ndarray, eps_e: float) -> list[np.ndarray]:
    """Groups of modes within ``eps_e`` of 0 and of pi (circularly)."""
    near0 = np.flatnonzero(np.abs(E) <= eps_e)
    nearpi = np.flatnonzero(math.pi - np.abs(E) <= eps_e)
    return [c for c in (near0, nearpi) if c.size]


def _localize(V: np.ndarray, cluster: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Rotate a near-degenerate block so each vector sits at one interface.

    Diagonalizes the site-label operator (nearest boundary index per site)
    restricted to the block; for well-separated interfaces its eigenvectors
    are the interface-localized combinations.
    """
    block = V[:, cluster]
    lab = np.repeat(labels, 2).astype(float)
    A = block.conj().T @ (lab[:, None] * block)
    _, R = np.linalg.eigh(0.5 * (A + A.conj().T))
    return block @ R


def bound_state_spectrum(
    U: PropagatorMatrix,
    boundary_sites: Sequence[int],
    window: int = WINDOW,
    eps_e: float = EPS_E,
    p_min: float = P_MIN,
    localize: bool = True,
) -> SpectrumRecord:
    """Full spectrum of a ring propagator with bound-mode flags.

    A mode is flagged when its quasienergy lies within ``eps_e`` of 0 or pi
    (circularly, so -pi + d counts as near pi) and its probability inside the
    union of the boundary windows is at least ``p_min``.

    Modes pinned near 0 or pi at different interfaces are degenerate up to an
    exponentially small splitting, so the eigensolver may return arbitrary
    mixtures of them. With ``localize`` each such cluster is rotated into
    interface-localized vectors; these remain eigenvectors up to the
    splitting, which is reported. Decay lengths are fit against the distance
    to the nearest boundary.
    """
    g = U.geometry
    if g.ndim != 1:
        raise ValueError("bound_state_spectrum works on rings; use strip_spectrum in 2D")
    if U.unitarity_error() > 1e-10:
        raise ValueError("operator is not unitary")
    bsites = tuple(int(b) for b in boundary_sites)
    if not bsites:
        raise ValueError("at least one boundary site is required")
    n = g.n_sites
    lam, V, err = eigendecompose(U)
    E = quasienergies(lam)
    dist = np.stack([ring_distance(np.arange(n), b, n) for b in bsites])
    labels = np.argmin(dist, axis=0)

    splitting = math.nan
    for cluster in _symmetric_clusters(E, eps_e):
        if cluster.size > 1:
            # quasienergies near pi straddle the branch cut, so compare eigenvalues
            spread = float(np.max(np.abs(lam[cluster][:, None] - lam[cluster][None, :])))
            splitting = spread if math.isnan(splitting) else max(splitting, spread)
            if localize:
                V[:, cluster] = _localize(V, cluster, labels)

    vecs, ipr, wp, xi, nearest = [], [], [], [], []
    for j in range(V.shape[1]):
        psi = WalkerState.from_array(g, V[:, j])
        p = position_distribution(psi)
        m = localization_metrics(p, bsites, window)
        weight = np.bincount(labels, weights=p, minlength=len(bsites))
        vecs.append(psi)
        ipr.append(m.ipr)
        wp.append(m.window_prob)
        xi.append(m.decay_length)
        nearest.append(bsites[int(np.argmax(weight))])
    wp = np.array(wp)
    flagged = (symmetric_distance(E) <= eps_e) & (wp >= p_min)
    return SpectrumRecord(
        E, vecs, np.array(ipr), wp, np.array(xi), np.array(nearest), flagged,
        bsites, window, eps_e, p_min, err, splitting,
    )


# -- two dimensions ---------------------------------------------------------


def _z2d_step(arr: np.ndarray, theta1: float, theta2) -> np.ndarray:
    """One step of S1 S2 C1 S2 C2(x1) S1 C1 on a (N1, N2, 2) array."""
    arr = ops.apply_coin_field(arr, theta1)
    arr = ops.apply_shift(arr, axis=0)
    arr = ops.apply_coin_field(arr, theta2, axis=0)
    arr = ops.apply_shift(arr, axis=1)
    arr = ops.apply_coin_field(arr, theta1)
    arr = ops.apply_shift(arr, axis=1)
    return ops.apply_shift(arr, axis=0)


def edge_state_sim_2d(
    theta1: float,
    profile: CoinProfile,
    n1: int,
    n2: int,
    psi0: WalkerState,
    steps: int,
    boundary: int | None = None,
    window: int = WINDOW,
) -> Trajectory:
    """Evolve the triangular-lattice walk with ``theta2`` varying along axis 1.

    The window probability is measured on the axis-1 marginal around
    ``boundary`` (default: the profile's first recorded boundary).
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if len(profile) != n1:
        raise ValueError(f"profile has {len(profile)} sites, axis 1 has {n1}")
    if n2 < 2 * steps + 2:
        raise ValueError(f"N2 = {n2} too small for {steps} steps (need >= {2 * steps + 2})")
    g = LatticeGeometry.torus(n1, n2)
    if psi0.geometry != g:
        raise GeometryMismatchError(f"state on {psi0.geometry.dims}, lattice is {g.dims}")
    if boundary is None and profile.boundaries:
        boundary = profile.boundaries[0]
    arr = psi0.as_array()
    dists = [position_distribution(psi0)]
    for _ in range(steps):
        arr = _z2d_step(arr, theta1, profile.thetas)
        dists.append(np.sum(np.abs(arr) ** 2, axis=-1))
    final = WalkerState(g, arr)
    return Trajectory(np.array(dists), boundary, window, axis=0, final_state=final)


@dataclass(frozen=True, eq=False)
class StripSpectrum:
    ky: np.ndarray
    quasienergies: np.ndarray  # (len(ky), 2 * N1)
    window_prob: np.ndarray  # same shape, axis-1 window around the boundary
    boundary: int | None


def strip_bloch_unitary(theta1: float, profile: CoinProfile, ky: float) -> np.ndarray:
    """2N1 x 2N1 block of the 2D walk at momentum ``ky`` along axis 2."""
    n1 = len(profile)
    g = LatticeGeometry.ring(n1)
    c1 = ops.coin_operator(theta1, g).matrix
    c2 = ops.site_dependent_coin(profile, g).matrix
    sh1 = ops.shift_s(g).matrix
    sh2 = np.kron(np.eye(n1), np.diag([np.exp(1j * ky), np.exp(-1j * ky)]))
    return sh1 @ sh2 @ c1 @ sh2 @ c2 @ sh1 @ c1


def strip_spectrum(
    theta1: float,
    profile: CoinProfile,
    ky,
    boundary: int | None = None,
    window: int = WINDOW,
    threads: int | None = None,
) -> StripSpectrum:
    """Quasienergy bands of a strip (real space on axis 1, momentum on axis 2)."""
    ky = np.atleast_1d(np.asarray(ky, dtype=float))
    n1 = len(profile)
    if boundary is None and profile.boundaries:
        boundary = profile.boundaries[0]

    def one(k):
        lam, V, _ = eigendecompose(PropagatorMatrix(LatticeGeometry.ring(n1), strip_bloch_unitary(theta1, profile, k)))
        E = quasienergies(lam)
        p = np.abs(V.reshape(n1, 2, -1)) ** 2
        p = p.sum(axis=1)
        if boundary is None:
            wp = np.full(E.size, math.nan)
        else:
            mask = ring_distance(np.arange(n1), boundary, n1) <= window
            wp = p[mask].sum(axis=0)
        order = np.argsort(E)
        return E[order], wp[order]

    res = parallel_map(one, ky, threads)
    return StripSpectrum(ky, np.array([r[0] for r in res]), np.array([r[1] for r in res]), boundary)


# -- phase diagram ----------------------------------------------------------


def phase_diagram_scan(
    theta1s: Sequence[float],
    theta2s: Sequence[float],
    resolution: int = 256,
    threads: int | None = None,
) -> list[dict]:
    """Gaps and winding number on a (theta1, theta2) grid.

    Rows come in theta1-major order. ``winding`` is None where either gap is
    too small to resolve at this k resolution.
    """
    points = [(float(a), float(b)) for a in theta1s for b in theta2s]

    def one(pt):
        t1, t2 = pt
        g0, gpi = gap(t1, t2, resolution)
        try:
            w = winding_number(t1, t2, resolution)
        except GaplessError:
            w = None
        return {"theta1": t1, "theta2": t2, "gap0": g0, "gapPi": gpi, "winding": w}

    return parallel_map(one, points, threads)


def adjacent_phase_pairs(rows: Sequence[dict]) -> list[tuple[dict, dict]]:
    """Nearest gapped cells along theta2 (same theta1) whose windings differ.

    Gapless cells in between are skipped, so each pair straddles a gap-closing
    line; such a pair is a valid choice for a two-zone profile.
    """
    gapped = [r for r in rows if r["winding"] is not None]
    return [
        (a, b)
        for a, b in zip(gapped, gapped[1:])
        if a["theta1"] == b["theta1"] and a["winding"] != b["winding"]
    ]
