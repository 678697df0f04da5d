"""Brute-force references: dense exponentials and closed-form continuous states."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.special import erfc

from .errors import ContractError, DomainError, ResourceError, ShapeError
from .grid import GridSpec, StateVector, discretize

__all__ = [
    "EXPM_CAP",
    "expm_evolve",
    "expm_propagator",
    "free_particle_reference",
    "plane_wave",
    "truncated_gaussian",
    "gaussian_state",
    "gaussian_max_derivative",
]

EXPM_CAP = 4096
HERMITIAN_TOL = 1e-8
GAUSSIAN_TAIL_MASS = 1e-8


def _checked_hermitian(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ShapeError("Hamiltonian must be a square matrix")
    if h.shape[0] > EXPM_CAP:
        raise ResourceError(f"dense exponential of dimension {h.shape[0]} exceeds cap {EXPM_CAP}")
    asym = np.max(np.abs(h - h.conj().T)) if h.size else 0.0
    if asym > HERMITIAN_TOL:
        raise ContractError(f"matrix is not Hermitian (max asymmetry {asym:.3e})")
    return h


def expm_propagator(h: np.ndarray, t: float) -> np.ndarray:
    """Dense ``exp(-i H t)`` via the Hermitian eigendecomposition."""
    h = _checked_hermitian(h)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def expm_evolve(h: np.ndarray, psi: StateVector | np.ndarray, t: float) -> StateVector | np.ndarray:
    """Apply ``exp(-i H t)`` to ``psi``.

    Accepts either a :class:`StateVector` or a raw amplitude array and returns the
    same type.
    """
    h = _checked_hermitian(h)
    amps = psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi, dtype=complex)
    if amps.shape[0] != h.shape[0]:
        raise ShapeError(f"state of length {amps.shape[0]} vs Hamiltonian of size {h.shape[0]}")
    w, v = np.linalg.eigh(h)
    out = v @ (np.exp(-1j * w * t) * (v.conj().T @ amps))
    if isinstance(psi, StateVector):
        return psi.with_amplitudes(out)
    return out


def _commensurate(grid: GridSpec, k: Sequence[float]) -> np.ndarray:
    k = np.asarray(k, dtype=float).reshape(-1)
    if k.shape[0] != grid.n_coords:
        raise ShapeError(f"wavevector needs {grid.n_coords} components")
    kappa = k * grid.length / (2.0 * math.pi)
    if np.any(np.abs(kappa - np.round(kappa)) > 1e-9):
        raise DomainError(f"wavevector {k.tolist()} is not commensurate with L={grid.length}")
    return k


def plane_wave(grid: GridSpec, k: Sequence[float]):
    """Continuous normalized plane wave ``exp(i k.x) / L**(eta*D/2)`` as a callable."""
    k = _commensurate(grid, k)
    norm = grid.length ** (-grid.n_coords / 2.0)

    def psi(x: np.ndarray) -> np.ndarray:
        return norm * np.exp(1j * (np.asarray(x) @ k))

    return psi


def free_particle_reference(k: Sequence[float], m: float | Sequence[float], t: float, grid: GridSpec) -> StateVector:
    """Discretized plane wave carrying the exact continuum phase ``exp(-i sum k^2 t / 2m)``.

    ``m`` may be a single mass or one per particle; component ``(i, n)`` of ``k``
    uses the mass of particle ``i``.
    """
    k = _commensurate(grid, k)
    masses = np.broadcast_to(np.asarray(m, dtype=float), (grid.eta,)) if np.ndim(m) else np.full(grid.eta, float(m))
    per_coord = np.repeat(masses, grid.dims)
    energy = float(np.sum(k**2 / (2.0 * per_coord)))
    state = discretize(grid, plane_wave(grid, k), renormalize=True)
    return state.with_amplitudes(state.amplitudes * np.exp(-1j * energy * t))


def _momentum_quadrature(delta_p: float, k_max: float, n: int = 400):
    nodes, weights = np.polynomial.legendre.leggauss(n)
    k = k_max * nodes
    w = k_max * weights
    amp = np.exp(-(k**2) / (4.0 * delta_p**2)) / math.sqrt(math.sqrt(2.0 * math.pi) * delta_p)
    return k, w * amp / math.sqrt(2.0 * math.pi)


def truncated_gaussian(x: np.ndarray, delta_p: float, k_max: float, center: float = 0.0, derivative: bool = False) -> np.ndarray:
    """Position-space minimum-uncertainty state with momenta cut off at ``k_max``.

    Computed as the inverse Fourier integral over ``[-k_max, k_max]`` by
    Gauss-Legendre quadrature. With ``derivative`` the first spatial derivative
    is returned instead.
    """
    k, w = _momentum_quadrature(delta_p, k_max)
    u = np.asarray(x, dtype=float)[..., None] - center
    phase = np.exp(1j * k * u)
    if derivative:
        return phase @ (1j * k * w)
    return phase @ w


def gaussian_max_derivative(delta_p: float) -> float:
    """Closed form ``(8 / (pi e^2))**(1/4) * delta_p**1.5`` for the untruncated state."""
    return (8.0 / (math.pi * math.e**2)) ** 0.25 * delta_p**1.5


def gaussian_state(delta_p: float, k_max: float, grid: GridSpec, center: float | None = None) -> StateVector:
    """Discretized, renormalized truncated minimum-uncertainty state (one coordinate per axis).

    For ``eta*D > 1`` the state is the product of identical factors, one per
    coordinate.
    """
    if not delta_p > 0:
        raise DomainError("momentum width must be positive")
    if k_max < 3.0 * delta_p:
        raise DomainError(f"k_max={k_max} must be at least 3*delta_p={3.0 * delta_p}")
    center = grid.length / 2.0 if center is None else float(center)
    delta_x = 1.0 / (2.0 * delta_p)
    gap = min(center, grid.length - center)
    # |G|^2 is a normal density with standard deviation delta_x
    outside = erfc(gap / (math.sqrt(2.0) * delta_x)) if gap > 0 else 1.0
    if outside > GAUSSIAN_TAIL_MASS:
        raise DomainError(f"box too small: {outside:.2e} of the probability lies outside [0, L]")

    def psi(pts: np.ndarray) -> np.ndarray:
        vals = truncated_gaussian(pts, delta_p, k_max, center)
        return np.prod(vals, axis=-1)

    return discretize(grid, psi, renormalize=True)
