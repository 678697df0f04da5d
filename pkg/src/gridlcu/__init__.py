"""Simulation of many-particle dynamics on a real-space grid.

Central-difference kinetic operators, bounded potentials split into signature
matrices, truncated Taylor series evolution with oblivious amplitude
amplification, the controlled-swap register network, and the closed-form error
and resource bounds that tie grid spacing and stencil order to a target error.
"""

__version__ = "0.1.0"

from .errors import (
    AmplificationError,
    BinIndexError,
    ContractError,
    DataError,
    DegenerateStateError,
    DomainError,
    GridLcuError,
    HypothesisError,
    InstabilityError,
    InvalidOrderError,
    ResourceError,
    ShapeError,
)
from .grid import GridSpec, StateVector, discretize, inner_product, load_state, save_state
from .hamiltonian import LcuDecomposition, PotentialSpec, QueryLedger, assemble_dense, lcu_decompose
from .stencil import StencilCoefficients, fd_coefficients
from .taylor import TaylorPlan, evolve, plan_evolution

__all__ = [
    "__version__",
    "AmplificationError",
    "BinIndexError",
    "ContractError",
    "DataError",
    "DegenerateStateError",
    "DomainError",
    "GridLcuError",
    "HypothesisError",
    "InstabilityError",
    "InvalidOrderError",
    "ResourceError",
    "ShapeError",
    "GridSpec",
    "StateVector",
    "discretize",
    "inner_product",
    "load_state",
    "save_state",
    "LcuDecomposition",
    "PotentialSpec",
    "QueryLedger",
    "assemble_dense",
    "lcu_decompose",
    "StencilCoefficients",
    "fd_coefficients",
    "TaylorPlan",
    "evolve",
    "plan_evolution",
]
