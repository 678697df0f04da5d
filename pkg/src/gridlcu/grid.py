"""Uniform hypercube mesh of the periodic box ``[0, L]^(eta*D)``.

Bins are 0-indexed; bin ``x`` along an axis has its centroid at ``(x + 1/2) h``.
Coordinates are ordered particle-major: axis ``i*D + n`` is dimension ``n`` of
particle ``i`` (both 0-based here). Flat indices are the mixed-radix value of the
coordinates with axis 0 most significant, which is NumPy's C order for an array
of shape ``(b,) * (eta*D)``.

Amplitudes carry the midpoint quadrature weight ``h**(eta*D/2)`` so that the
plain Euclidean inner product of two discretized states approximates the
corresponding continuous ``L^2`` integral.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import BinIndexError, DegenerateStateError, DomainError, ResourceError, ShapeError

__all__ = [
    "DIMENSION_CAP_DEFAULT",
    "GridSpec",
    "StateVector",
    "centroid",
    "nearest_centroid",
    "discretize",
    "inner_product",
    "save_state",
    "load_state",
    "dumps_state",
]

DIMENSION_CAP_DEFAULT = 2**20


@dataclass(frozen=True)
class GridSpec:
    """Geometry of the mesh. ``spacing`` is derived as ``length / bins``."""

    eta: int
    dims: int
    bins: int
    length: float
    masses: tuple[float, ...] = ()
    dimension_cap: int = DIMENSION_CAP_DEFAULT

    def __post_init__(self) -> None:
        for name in ("eta", "dims", "bins"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v!r}")
        if not self.length > 0:
            raise DomainError(f"box length must be positive, got {self.length}")
        masses = tuple(float(m) for m in self.masses) if self.masses else (1.0,) * self.eta
        if len(masses) != self.eta:
            raise ShapeError(f"expected {self.eta} masses, got {len(masses)}")
        if any(not m > 0 for m in masses):
            raise DomainError("masses must be positive")
        object.__setattr__(self, "masses", masses)
        if self.bins ** (self.eta * self.dims) > self.dimension_cap:
            raise ResourceError(
                f"Hilbert dimension {self.bins}^{self.eta * self.dims} exceeds cap {self.dimension_cap}"
            )

    @property
    def spacing(self) -> float:
        return self.length / self.bins

    h = spacing

    @property
    def n_coords(self) -> int:
        return self.eta * self.dims

    @property
    def dimension(self) -> int:
        return self.bins**self.n_coords

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.bins,) * self.n_coords

    @property
    def min_mass(self) -> float:
        return min(self.masses)

    def axis(self, particle: int, dim: int) -> int:
        """Tensor axis of (0-based) particle ``particle`` and dimension ``dim``."""
        return particle * self.dims + dim

    def header(self) -> dict:
        return {"eta": self.eta, "dims": self.dims, "bins": self.bins, "length": self.length}

    def flat_index(self, idx: Sequence[int]) -> int:
        check_index(self, idx)
        return int(np.ravel_multi_index(tuple(int(v) for v in idx), self.shape))

    def bin_index(self, flat: int) -> tuple[int, ...]:
        if not 0 <= flat < self.dimension:
            raise BinIndexError(f"flat index {flat} outside [0, {self.dimension})")
        return tuple(int(v) for v in np.unravel_index(flat, self.shape))

    def centroid_axis(self) -> np.ndarray:
        """Centroid coordinates along a single axis."""
        return (np.arange(self.bins) + 0.5) * self.spacing

    def all_centroids(self) -> np.ndarray:
        """Array of shape ``(dimension, eta*D)`` listing centroids in flat order."""
        c = self.centroid_axis()
        grids = np.meshgrid(*([c] * self.n_coords), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)


def check_index(grid: GridSpec, idx: Sequence[int]) -> None:
    if len(idx) != grid.n_coords:
        raise BinIndexError(f"expected {grid.n_coords} coordinates, got {len(idx)}")
    for v in idx:
        if not 0 <= int(v) < grid.bins:
            raise BinIndexError(f"bin coordinate {v} outside [0, {grid.bins - 1}]")


def centroid(grid: GridSpec, idx: Sequence[int]) -> np.ndarray:
    """Centroid of the bin with per-coordinate index ``idx``."""
    check_index(grid, idx)
    return (np.asarray(idx, dtype=float) + 0.5) * grid.spacing


def nearest_centroid(grid: GridSpec, x: Sequence[float]) -> tuple[int, ...]:
    """Bin whose centroid is closest to ``x``; ties go to the lower bin on each axis."""
    x = np.asarray(x, dtype=float)
    if x.shape != (grid.n_coords,):
        raise ShapeError(f"expected a point with {grid.n_coords} coordinates")
    if np.any(x < 0) or np.any(x > grid.length) or not np.all(np.isfinite(x)):
        raise DomainError(f"point {x.tolist()} outside [0, {grid.length}]")
    h = grid.spacing
    out = []
    for xv in x:
        guess = min(int(math.floor(xv / h)), grid.bins - 1)
        best, best_dist = None, math.inf
        # the Euclidean argmin separates per axis, so scan the neighbours in
        # ascending order and keep the first minimum
        for cand in range(max(guess - 1, 0), min(guess + 2, grid.bins)):
            dist = abs(xv - (cand + 0.5) * h)
            if dist < best_dist:
                best, best_dist = cand, dist
        out.append(best)
    return tuple(out)


@dataclass(frozen=True)
class StateVector:
    """Amplitudes over the ``b**(eta*D)`` centroids in flat order."""

    amplitudes: np.ndarray
    grid: GridSpec
    norm_sq: float = field(default=float("nan"))

    def __post_init__(self) -> None:
        amp = np.ascontiguousarray(self.amplitudes, dtype=complex).ravel()
        if amp.shape[0] != self.grid.dimension:
            raise ShapeError(f"expected {self.grid.dimension} amplitudes, got {amp.shape[0]}")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "norm_sq", float(np.vdot(amp, amp).real))

    @property
    def norm(self) -> float:
        return math.sqrt(self.norm_sq)

    @property
    def normalized(self) -> bool:
        return abs(self.norm_sq - 1.0) < 1e-10

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.grid.shape)

    def renormalized(self) -> "StateVector":
        if self.norm_sq == 0.0:
            raise DegenerateStateError("cannot renormalize the zero state")
        return StateVector(self.amplitudes / self.norm, self.grid)

    def with_amplitudes(self, amplitudes: np.ndarray) -> "StateVector":
        return StateVector(amplitudes, self.grid)


def discretize(
    grid: GridSpec,
    psi: Callable[[np.ndarray], np.ndarray],
    renormalize: bool = False,
) -> StateVector:
    """Sample ``psi`` at every centroid and attach the quadrature weight.

    ``psi`` receives an array of shape ``(dimension, eta*D)`` and must return
    ``dimension`` complex values.
    """
    pts = grid.all_centroids()
    vals = np.asarray(psi(pts), dtype=complex).reshape(-1)
    if vals.shape[0] != grid.dimension:
        raise ShapeError("psi returned the wrong number of values")
    state = StateVector(vals * grid.spacing ** (grid.n_coords / 2.0), grid)
    if renormalize:
        if state.norm_sq == 0.0 or not math.isfinite(state.norm_sq):
            raise DegenerateStateError("discretized state has zero or non-finite norm")
        state = state.renormalized()
    return state


def inner_product(phi: StateVector, psi: StateVector) -> complex:
    """``sum(conj(phi) * psi)``."""
    if phi.grid.header() != psi.grid.header():
        raise ShapeError("states live on different grids")
    return complex(np.vdot(phi.amplitudes, psi.amplitudes))


def save_state(state: StateVector, path: str | Path) -> None:
    """Write a JSON header line followed by little-endian float64 (re, im) pairs."""
    Path(path).write_bytes(dumps_state(state))


def load_state(path: str | Path, masses: Sequence[float] = ()) -> StateVector:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
        raw = np.frombuffer(fh.read(), dtype="<f8")
    grid = GridSpec(header["eta"], header["dims"], header["bins"], header["length"], tuple(masses))
    if raw.shape[0] != 2 * grid.dimension:
        raise ShapeError("state file body does not match its header")
    return StateVector(raw[0::2] + 1j * raw[1::2], grid)


def dumps_state(state: StateVector) -> bytes:
    """Serialized form written by :func:`save_state`."""
    buf = io.BytesIO()
    header = json.dumps(state.grid.header(), sort_keys=True).encode() + b"\n"
    buf.write(header)
    body = np.empty(2 * state.grid.dimension, dtype="<f8")
    body[0::2] = state.amplitudes.real
    body[1::2] = state.amplitudes.imag
    buf.write(body.tobytes())
    return buf.getvalue()
