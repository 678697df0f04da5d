"""Discretized Hamiltonian, potential oracles and the LCU decomposition.

The kinetic part ``T~`` is kept purely off-diagonal: the identity term carried by
the stencil's ``d_0`` is removed and reported separately by :func:`energy_shift`.
Along coordinate ``(i, n)`` the kinetic operator is

    -1/(2 m_i h^2) * sum_{j != 0} d_j A_j ,

with ``A_j |x> = |(x + j) mod b>``. The scaled Hamiltonian ``M H~`` is written as a
positive combination of signed adders ``sign * A_j`` and ``M`` signature matrices
(diagonal, entries +-1) each with weight ``V_max``.
"""

from __future__ import annotations

import csv
import math
import threading
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ContractError, DataError, DomainError, ResourceError, ShapeError
from .grid import GridSpec, StateVector, centroid, check_index
from .stencil import StencilCoefficients, fd_coefficients

__all__ = [
    "DENSE_CAP_DEFAULT",
    "PotentialSpec",
    "QueryLedger",
    "KineticTerm",
    "SignatureTerm",
    "LcuDecomposition",
    "potential_value",
    "pairwise_potential_value",
    "potential_diagonal",
    "kinetic_matrix_1d",
    "assemble_dense",
    "energy_shift",
    "lcu_decompose",
    "signature_count",
    "signature_row_sign",
    "potential_from_config",
]

DENSE_CAP_DEFAULT = 4096

KINDS = ("zero", "modified_coulomb", "tabulated", "external")


@dataclass(frozen=True)
class PotentialSpec:
    """Description of the potential energy ``V``.

    ``v_max`` bounds ``|V|`` and ``v_prime_max`` bounds ``|grad V|``. For the
    modified Coulomb kind both are derived from ``delta`` and ``charges`` when
    not supplied. ``table`` maps flat indices to values for the tabulated kind;
    ``oracle`` is a callable ``(points: (N, eta*D) array) -> (N,) values`` for the
    external kind.
    """

    kind: str = "zero"
    delta: float | None = None
    charges: tuple[float, ...] = ()
    v_max: float | None = None
    v_prime_max: float | None = None
    table: dict[int, float] | None = field(default=None, compare=False, repr=False)
    oracle: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise DomainError(f"unknown potential kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "charges", tuple(float(q) for q in self.charges))
        if self.kind == "zero":
            object.__setattr__(self, "v_max", 0.0 if self.v_max is None else float(self.v_max))
            if self.v_prime_max is None:
                object.__setattr__(self, "v_prime_max", 0.0)
        elif self.kind == "modified_coulomb":
            if self.delta is None or not self.delta > 0:
                raise DomainError("modified Coulomb potential needs a softening delta > 0")
            if len(self.charges) < 1:
                raise DomainError("modified Coulomb potential needs charges")
            eta = len(self.charges)
            q = max(abs(c) for c in self.charges)
            derived = eta * (eta - 1) * q**2 / (2.0 * self.delta)
            if self.v_max is None:
                object.__setattr__(self, "v_max", derived)
            elif self.v_max < derived:
                raise ContractError(f"v_max={self.v_max} below the Coulomb bound {derived}")
            if self.v_prime_max is None:
                object.__setattr__(self, "v_prime_max", eta**2 * q**2 * math.sqrt(3.0) / (9.0 * self.delta**2))
        elif self.kind == "tabulated":
            if self.table is None:
                raise DataError("tabulated potential without a table")
            if self.v_max is None:
                vals = [abs(v) for v in self.table.values()]
                object.__setattr__(self, "v_max", max(vals) if vals else 0.0)
        elif self.kind == "external":
            if self.oracle is None:
                raise DataError("external potential without an oracle callable")
            if self.v_max is None:
                raise DataError("external potential needs an explicit v_max")

    @property
    def is_pairwise(self) -> bool:
        return self.kind in ("zero", "modified_coulomb")


class QueryLedger:
    """Thread-safe query counters."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.potential_queries = 0
        self.pairwise_queries = 0
        self.adder_applications = 0

    def charge(self, potential: int = 0, pairwise: int = 0, adders: int = 0) -> None:
        if potential < 0 or pairwise < 0 or adders < 0:
            raise ContractError("ledger counters are monotone")
        with self._lock:
            self.potential_queries += potential
            self.pairwise_queries += pairwise
            self.adder_applications += adders

    def as_dict(self) -> dict[str, int]:
        return {
            "potential_queries": self.potential_queries,
            "pairwise_queries": self.pairwise_queries,
            "adder_applications": self.adder_applications,
        }


def _pair_coulomb(spec: PotentialSpec, i: int, j: int, xi: np.ndarray, xj: np.ndarray) -> np.ndarray:
    r2 = np.sum((np.asarray(xi) - np.asarray(xj)) ** 2, axis=-1)
    return spec.charges[i] * spec.charges[j] / np.sqrt(r2 + spec.delta**2)


def _potential_at_points(spec: PotentialSpec, grid: GridSpec, points: np.ndarray) -> np.ndarray:
    """Vectorised ``V`` at ``points`` of shape ``(N, eta*D)``; no ledger charges."""
    n = points.shape[0]
    if spec.kind == "zero":
        return np.zeros(n)
    if spec.kind == "modified_coulomb":
        if len(spec.charges) != grid.eta:
            raise ShapeError(f"{len(spec.charges)} charges for {grid.eta} particles")
        pos = points.reshape(n, grid.eta, grid.dims)
        out = np.zeros(n)
        for i in range(grid.eta):
            for j in range(i + 1, grid.eta):
                out += _pair_coulomb(spec, i, j, pos[:, i], pos[:, j])
        return out
    if spec.kind == "external":
        vals = np.asarray(spec.oracle(points), dtype=float).reshape(-1)
        if vals.shape[0] != n:
            raise ShapeError("external oracle returned the wrong number of values")
        return vals
    raise DataError("tabulated potentials are evaluated by flat index, not by point")


def potential_value(spec: PotentialSpec, grid: GridSpec, idx: Sequence[int], ledger: QueryLedger | None = None) -> float:
    """``V~`` at bin ``idx`` (``V`` evaluated at the bin centroid); one potential query."""
    check_index(grid, idx)
    if ledger is not None:
        ledger.charge(potential=1)
    if spec.kind == "tabulated":
        flat = grid.flat_index(idx)
        try:
            return float(spec.table[flat])
        except KeyError:
            raise DataError(f"tabulated potential has no entry for flat index {flat}") from None
    return float(_potential_at_points(spec, grid, centroid(grid, idx)[None, :])[0])


def pairwise_potential_value(
    spec: PotentialSpec,
    i: int,
    j: int,
    xi: Sequence[float],
    xj: Sequence[float],
    ledger: QueryLedger | None = None,
) -> float:
    """Two-particle term ``V_ij(x_i, x_j)`` (0-based particle labels); one pairwise query."""
    if i == j:
        raise DomainError("pairwise potential needs two distinct particles")
    if not spec.is_pairwise:
        raise DomainError(f"{spec.kind} potential has no pairwise decomposition")
    if ledger is not None:
        ledger.charge(pairwise=1)
    if spec.kind == "zero":
        return 0.0
    n = len(spec.charges)
    if not (0 <= i < n and 0 <= j < n):
        raise DomainError(f"particle labels ({i}, {j}) outside [0, {n})")
    return float(_pair_coulomb(spec, i, j, np.asarray(xi, float), np.asarray(xj, float)))


def potential_diagonal(spec: PotentialSpec, grid: GridSpec) -> np.ndarray:
    """``V~`` at every centroid in flat order (bulk evaluation, not charged)."""
    if spec.kind == "tabulated":
        out = np.empty(grid.dimension)
        for flat in range(grid.dimension):
            try:
                out[flat] = spec.table[flat]
            except KeyError:
                raise DataError(f"tabulated potential has no entry for flat index {flat}") from None
        return out
    return _potential_at_points(spec, grid, grid.all_centroids())


def kinetic_matrix_1d(coeffs: StencilCoefficients, bins: int, h: float, mass: float, include_diagonal: bool = False) -> np.ndarray:
    """Circulant ``-1/(2 m h^2) sum_j d_j A_j`` on one coordinate (j = 0 only if asked)."""
    if coeffs.order_a >= bins:
        raise DomainError(f"stencil half-width a={coeffs.order_a} must be below bins={bins}")
    out = np.zeros((bins, bins))
    cols = np.arange(bins)
    for j in coeffs.offsets:
        if j == 0 and not include_diagonal:
            continue
        out[(cols + j) % bins, cols] += -float(coeffs.d(j)) / (2.0 * mass * h**2)
    return out


def assemble_dense(spec: PotentialSpec, grid: GridSpec, a: int, dense_cap: int = DENSE_CAP_DEFAULT) -> np.ndarray:
    """Dense ``H~ = T~ + V~`` with ``T~`` purely off-diagonal."""
    dim = grid.dimension
    if dim > dense_cap:
        raise ResourceError(f"dense assembly of dimension {dim} exceeds cap {dense_cap}")
    coeffs = fd_coefficients(a)
    h = grid.spacing
    out = np.diag(potential_diagonal(spec, grid)).astype(float)
    for i in range(grid.eta):
        k1 = kinetic_matrix_1d(coeffs, grid.bins, h, grid.masses[i])
        for n in range(grid.dims):
            ax = grid.axis(i, n)
            left = np.eye(grid.bins**ax)
            right = np.eye(grid.bins ** (grid.n_coords - ax - 1))
            out += np.kron(np.kron(left, k1), right)
    return out


def energy_shift(grid: GridSpec, a: int) -> float:
    """Identity term removed from the kinetic operator: ``-D sum_i d_0 / (2 m_i h^2)``."""
    d0 = float(fd_coefficients(a).d0)
    h = grid.spacing
    return -grid.dims * sum(d0 / (2.0 * m * h**2) for m in grid.masses)


def signature_count(v: float, v_max: float, m: int) -> int:
    """Number ``n(v)`` of signature matrices carrying ``+1`` on a row with value ``v``."""
    if v_max == 0.0:
        return 0 if m == 0 else m // 2
    raw = math.floor(m * (1.0 + v / v_max) / 2.0 + 0.5)
    return min(max(raw, 0), m)


def signature_row_sign(v: float, j: int, v_max: float, m: int) -> int:
    """Entry of signature matrix ``j`` (1-based) on a row whose potential is ``v``.

    With ``n(v) = round(M (1 + v/V_max) / 2)`` clamped to ``[0, M]``, rows get
    ``+1`` for ``j <= n(v)`` and ``-1`` otherwise, so that
    ``|(V_max/M) * sum_j sign_j - v| <= V_max / M``.
    """
    if not 1 <= j <= m:
        raise DomainError(f"signature index {j} outside [1, {m}]")
    if abs(v) > v_max * (1.0 + 1e-12):
        raise ContractError(f"|v|={abs(v)} exceeds v_max={v_max}")
    return 1 if j <= signature_count(v, v_max, m) else -1


@dataclass(frozen=True)
class KineticTerm:
    """``weight * sign * A_shift`` acting on coordinate ``(particle, dim)`` (0-based)."""

    weight: float
    particle: int
    dim: int
    shift: int
    sign: int


@dataclass(frozen=True)
class SignatureTerm:
    """``weight * S_index`` with ``index`` in ``1..M``."""

    weight: float
    index: int


@dataclass(frozen=True)
class LcuDecomposition:
    """``M H~ ~= sum_chi d_chi V_chi`` with all ``d_chi > 0``.

    Term order (the ``chi`` numbering) is kinetic terms first, particle-major,
    then dimension, then shift ``-a..-1, 1..a``; signature terms follow.
    """

    grid: GridSpec
    potential: PotentialSpec
    order_a: int
    scale_m: int
    v_max: float
    kinetic_terms: tuple[KineticTerm, ...]
    potential_terms: tuple[SignatureTerm, ...]

    @property
    def terms(self) -> tuple[KineticTerm | SignatureTerm, ...]:
        return self.kinetic_terms + self.potential_terms

    @property
    def n_terms(self) -> int:
        return len(self.kinetic_terms) + len(self.potential_terms)

    @property
    def weights(self) -> np.ndarray:
        return np.array([t.weight for t in self.terms])

    @property
    def lam(self) -> float:
        """Sum of all weights (``lambda``)."""
        return float(sum(t.weight for t in self.terms))

    lambda_ = lam

    @cached_property
    def potential_values(self) -> np.ndarray:
        return potential_diagonal(self.potential, self.grid)

    @cached_property
    def signature_counts(self) -> np.ndarray:
        """``n(v)`` for every basis state."""
        if not self.potential_terms:
            return np.zeros(self.grid.dimension, dtype=int)
        v = self.potential_values
        if np.any(np.abs(v) > self.v_max * (1.0 + 1e-12)):
            raise ContractError("potential exceeds its declared v_max on the grid")
        raw = np.floor(self.scale_m * (1.0 + v / self.v_max) / 2.0 + 0.5).astype(int)
        return np.clip(raw, 0, self.scale_m)

    @cached_property
    def effective_diagonal(self) -> np.ndarray:
        """Diagonal of ``(1/M) sum_chi d_chi V_chi``: the reconstructed potential."""
        if not self.potential_terms:
            return np.zeros(self.grid.dimension)
        n = self.signature_counts
        return self.v_max * (2.0 * n - self.scale_m) / self.scale_m

    def signature_diagonal(self, index: int) -> np.ndarray:
        """Diagonal (+-1) of signature matrix ``index`` (1-based)."""
        if not 1 <= index <= self.scale_m:
            raise DomainError(f"signature index {index} outside [1, {self.scale_m}]")
        return np.where(index <= self.signature_counts, 1.0, -1.0)

    def term_matrix(self, chi: int) -> np.ndarray:
        """Dense unitary ``V_chi`` (toy scale)."""
        if not 0 <= chi < self.n_terms:
            raise DomainError(f"term index {chi} outside [0, {self.n_terms})")
        term = self.terms[chi]
        dim = self.grid.dimension
        if dim > DENSE_CAP_DEFAULT:
            raise ResourceError(f"dense term of dimension {dim} exceeds cap {DENSE_CAP_DEFAULT}")
        if isinstance(term, SignatureTerm):
            return np.diag(self.signature_diagonal(term.index)).astype(complex)
        eye = np.eye(dim, dtype=complex).reshape(self.grid.shape + (dim,))
        ax = self.grid.axis(term.particle, term.dim)
        return term.sign * np.roll(eye, term.shift, axis=ax).reshape(dim, dim)

    def term_unitaries(self) -> list[np.ndarray]:
        return [self.term_matrix(chi) for chi in range(self.n_terms)]

    def apply_term(self, chi: int, psi: np.ndarray) -> np.ndarray:
        """``V_chi psi`` for a flat state vector."""
        term = self.terms[chi]
        if isinstance(term, SignatureTerm):
            return self.signature_diagonal(term.index) * psi
        t = psi.reshape(self.grid.shape)
        ax = self.grid.axis(term.particle, term.dim)
        return term.sign * np.roll(t, term.shift, axis=ax).reshape(-1)

    def apply_effective(self, psi: np.ndarray) -> np.ndarray:
        """``H_eff psi`` with ``H_eff = (1/M) sum_chi d_chi V_chi``, matrix-free."""
        psi = np.asarray(psi)
        t = psi.reshape(self.grid.shape)
        out = np.zeros_like(t, dtype=complex)
        for term in self.kinetic_terms:
            ax = self.grid.axis(term.particle, term.dim)
            out += (term.sign * term.weight) * np.roll(t, term.shift, axis=ax)
        out = out.reshape(-1) / self.scale_m
        return out + self.effective_diagonal * psi

    def effective_matrix(self) -> np.ndarray:
        """Dense ``(1/M) sum_chi d_chi V_chi``."""
        dim = self.grid.dimension
        if dim > DENSE_CAP_DEFAULT:
            raise ResourceError(f"dense matrix of dimension {dim} exceeds cap {DENSE_CAP_DEFAULT}")
        out = np.zeros((dim, dim), dtype=complex)
        for chi, term in enumerate(self.kinetic_terms):
            out += term.weight * self.term_matrix(chi)
        out /= self.scale_m
        out[np.diag_indices(dim)] += self.effective_diagonal
        return out


def lcu_decompose(spec: PotentialSpec, grid: GridSpec, a: int, delta_lcu: float) -> LcuDecomposition:
    """Decompose ``M H~`` into signed adders and ``M = ceil(V_max / delta)`` signatures."""
    if not delta_lcu > 0:
        raise DomainError(f"LCU accuracy must be positive, got {delta_lcu}")
    coeffs = fd_coefficients(a)
    if a >= grid.bins:
        raise DomainError(f"stencil half-width a={a} must be below bins={grid.bins}")
    v_max = float(spec.v_max or 0.0)
    m = max(1, math.ceil(v_max / delta_lcu)) if v_max > 0 else 1
    h = grid.spacing
    kinetic = []
    for i in range(grid.eta):
        for n in range(grid.dims):
            for j in coeffs.nonzero_offsets():
                d = float(coeffs.d(j))
                # matrix entry is -d/(2 m h^2); keep the weight positive and fold the sign
                kinetic.append(
                    KineticTerm(
                        weight=m * abs(d) / (2.0 * grid.masses[i] * h**2),
                        particle=i,
                        dim=n,
                        shift=j,
                        sign=-1 if d > 0 else 1,
                    )
                )
    potential = tuple(SignatureTerm(weight=v_max, index=j) for j in range(1, m + 1)) if v_max > 0 else ()
    return LcuDecomposition(
        grid=grid,
        potential=spec,
        order_a=a,
        scale_m=m,
        v_max=v_max,
        kinetic_terms=tuple(kinetic),
        potential_terms=potential,
    )


def _load_table(path: str | Path) -> dict[int, float]:
    table: dict[int, float] = {}
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                table[int(row[0])] = float(row[1])
            except (ValueError, IndexError):
                # tolerate a header row
                if table:
                    raise DataError(f"malformed tabulated potential row {row!r}") from None
    return table


def potential_from_config(cfg: dict | None, base_dir: str | Path | None = None) -> PotentialSpec:
    """Build a :class:`PotentialSpec` from its JSON form."""
    cfg = cfg or {"type": "zero"}
    kind = cfg.get("type", "zero")
    extra = {k: cfg[k] for k in ("v_max", "v_prime_max") if k in cfg}
    if kind == "zero":
        return PotentialSpec("zero", **extra)
    if kind == "modified_coulomb":
        return PotentialSpec("modified_coulomb", delta=float(cfg["delta"]), charges=tuple(cfg["charges"]), **extra)
    if kind == "tabulated":
        path = Path(cfg["path"])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        if not path.exists():
            raise DataError(f"tabulated potential file {path} not found")
        return PotentialSpec("tabulated", table=_load_table(path), **extra)
    raise DomainError(f"unsupported potential type {kind!r} in config")
