"""Split-step quantum walks: operator identities, Bloch spectra and topological bound states."""

from .core import (
    LatticeGeometry,
    PropagatorMatrix,
    WalkerState,
    apply,
    make_basis_state,
    operator_distance,
)
from .operators import CoinProfile, QPlateParams

__version__ = "0.1.0"

__all__ = [
    "CoinProfile",
    "LatticeGeometry",
    "PropagatorMatrix",
    "QPlateParams",
    "WalkerState",
    "__version__",
    "apply",
    "make_basis_state",
    "operator_distance",
]
