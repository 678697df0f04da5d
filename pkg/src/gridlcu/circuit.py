"""Register-level realization of ``select(V)``.

A kinetic term ``(i, n, j)`` is applied by swapping coordinate register
``x_{i,n}`` into the first position with a binary-search network of controlled
swaps, adding ``j`` there, and undoing the swaps. Stage ``k`` of the particle
network is controlled on bit ``k`` (most significant first) of ``i - 1`` and
swaps register ``i'`` with ``i' - 2^(ceil(log2 eta) - k)`` for
``i'`` in ``[2^(ceil(log2 eta) - k) + 1, 2^(ceil(log2 eta) - k + 1)]``; the same
construction then runs over the ``D`` coordinates of the selected particle.

Particle and dimension counts that are not powers of two are padded with inert
one-dimensional registers, which makes the swaps with them plain relabelings.
Register positions and particle labels in this module are 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BinIndexError, DomainError, ResourceError
from .grid import GridSpec
from .hamiltonian import (
    KineticTerm,
    LcuDecomposition,
    QueryLedger,
    SignatureTerm,
    potential_value,
    signature_row_sign,
)

__all__ = [
    "RegisterLayout",
    "SwapStage",
    "SwapSchedule",
    "ceil_log2",
    "build_swap_schedule",
    "apply_schedule",
    "modular_adder",
    "select_v_circuit",
    "circuit_metrics",
]

TOY_CAP = 4096


def ceil_log2(n: int) -> int:
    return (int(n) - 1).bit_length() if n > 1 else 0


def _is_pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


@dataclass(frozen=True)
class RegisterLayout:
    """Qubit registers of the position and index registers."""

    eta: int
    dims: int
    bins: int
    n_terms: int

    def __post_init__(self) -> None:
        if not _is_pow2(self.bins):
            raise DomainError(f"circuit mode needs a power-of-two bin count, got {self.bins}")

    @classmethod
    def for_decomposition(cls, decomp: LcuDecomposition) -> "RegisterLayout":
        g = decomp.grid
        return cls(g.eta, g.dims, g.bins, decomp.n_terms)

    @property
    def qubits_per_register(self) -> int:
        return ceil_log2(self.bins)

    @property
    def system_qubits(self) -> int:
        return self.eta * self.dims * self.qubits_per_register

    @property
    def index_qubits(self) -> int:
        return ceil_log2(self.n_terms)

    def register_order(self) -> list[tuple[int, int]]:
        """(particle, dim) labels, 1-based, in particle-major order."""
        return [(i, n) for i in range(1, self.eta + 1) for n in range(1, self.dims + 1)]


@dataclass(frozen=True)
class SwapStage:
    """One layer of disjoint controlled swaps.

    ``level`` is ``"particle"`` or ``"dimension"``; ``control_bit`` is the bit of
    ``i - 1`` (or ``n - 1``) it is conditioned on and ``active`` its value for the
    scheduled target. ``swaps`` lists position pairs ``(p, p - 2^s)``.
    """

    level: str
    control_bit: int
    active: bool
    swaps: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class SwapSchedule:
    eta: int
    dims: int
    target_i: int
    target_n: int
    stages: tuple[SwapStage, ...]

    @property
    def depth(self) -> int:
        return len(self.stages)

    def active_stages(self) -> list[SwapStage]:
        return [s for s in self.stages if s.active]


def _level_stages(count: int, target: int, level: str) -> list[SwapStage]:
    bits = ceil_log2(count)
    offset = target - 1
    stages = []
    for k in range(1, bits + 1):
        width = 2 ** (bits - k)
        bit = (offset >> (bits - k)) & 1
        swaps = tuple((p, p - width) for p in range(width + 1, 2 * width + 1))
        stages.append(SwapStage(level, k, bool(bit), swaps))
    return stages


def build_swap_schedule(eta: int, target_i: int, dims: int = 1, target_n: int = 1) -> SwapSchedule:
    """Controlled-swap network bringing register ``x_{target_i, target_n}`` to position 1."""
    if not 1 <= target_i <= eta:
        raise BinIndexError(f"particle {target_i} outside [1, {eta}]")
    if not 1 <= target_n <= dims:
        raise BinIndexError(f"dimension {target_n} outside [1, {dims}]")
    stages = _level_stages(eta, target_i, "particle") + _level_stages(dims, target_n, "dimension")
    return SwapSchedule(eta, dims, target_i, target_n, tuple(stages))


def apply_schedule(schedule: SwapSchedule, labels: Sequence, inverse: bool = False) -> list:
    """Run the active swaps of ``schedule`` on a particle-major list of register labels.

    ``labels`` holds ``eta * dims`` entries. The result is the padded layout of
    ``2^ceil(log2 eta) * 2^ceil(log2 D)`` slots, inert slots holding ``None``.
    Passing a padded layout back with ``inverse=True`` undoes the swaps.
    """
    p_pad = 2 ** ceil_log2(schedule.eta)
    d_pad = 2 ** ceil_log2(schedule.dims)
    if len(labels) == p_pad * d_pad:
        slots = list(labels)
    elif len(labels) == schedule.eta * schedule.dims:
        slots = [None] * (p_pad * d_pad)
        for i in range(schedule.eta):
            for n in range(schedule.dims):
                slots[i * d_pad + n] = labels[i * schedule.dims + n]
    else:
        raise DomainError("label count does not match the register layout")
    stages = schedule.active_stages()
    if inverse:
        stages = stages[::-1]
    for st in stages:
        for p, q in st.swaps:
            if st.level == "particle":
                a, b = (p - 1) * d_pad, (q - 1) * d_pad
                slots[a : a + d_pad], slots[b : b + d_pad] = slots[b : b + d_pad], slots[a : a + d_pad]
            else:
                slots[p - 1], slots[q - 1] = slots[q - 1], slots[p - 1]
    return slots


def _permute_tensor(t: np.ndarray, schedule: SwapSchedule, d_pad: int, inverse: bool) -> np.ndarray:
    stages = schedule.active_stages()
    if inverse:
        stages = stages[::-1]
    for st in stages:
        for p, q in st.swaps:
            if st.level == "particle":
                for n in range(d_pad):
                    t = np.swapaxes(t, (p - 1) * d_pad + n, (q - 1) * d_pad + n)
            else:
                t = np.swapaxes(t, p - 1, q - 1)
    return t


def modular_adder(j: int, b: int) -> np.ndarray:
    """Permutation matrix of ``|x> -> |(x + j) mod b>``."""
    if abs(j) >= b:
        raise DomainError(f"shift |{j}| must be below b={b}")
    out = np.zeros((b, b))
    x = np.arange(b)
    out[(x + j) % b, x] = 1.0
    return out


def _padded_tensor(batch: np.ndarray, grid: GridSpec, p_pad: int, d_pad: int) -> np.ndarray:
    """Reshape ``(dim, batch)`` amplitudes into a tensor with inert size-1 registers."""
    shape = []
    for i in range(p_pad):
        for n in range(d_pad):
            shape.append(grid.bins if i < grid.eta and n < grid.dims else 1)
    return batch.reshape(tuple(shape) + (batch.shape[-1],))


def select_v_circuit(
    decomp: LcuDecomposition,
    layout: RegisterLayout,
    chi: int,
    ledger: QueryLedger | None = None,
) -> np.ndarray:
    """Dense matrix of the register-level circuit for term ``chi``.

    Kinetic terms run swap-in, one modular adder on position 1 (with the term's
    sign), swap-out. Signature terms query the potential oracle on every basis
    state and apply the resulting ``+-1`` phase.
    """
    grid = decomp.grid
    dim = grid.dimension
    if dim > TOY_CAP:
        raise ResourceError(f"circuit materialization of dimension {dim} exceeds cap {TOY_CAP}")
    if not 0 <= chi < decomp.n_terms:
        raise BinIndexError(f"term index {chi} outside [0, {decomp.n_terms})")
    if (layout.eta, layout.dims, layout.bins) != (grid.eta, grid.dims, grid.bins):
        raise DomainError("register layout does not match the decomposition grid")
    term = decomp.terms[chi]
    if isinstance(term, SignatureTerm):
        signs = np.empty(dim)
        for flat in range(dim):
            v = potential_value(decomp.potential, grid, grid.bin_index(flat), ledger)
            signs[flat] = signature_row_sign(v, term.index, decomp.v_max, decomp.scale_m)
        return np.diag(signs).astype(complex)
    assert isinstance(term, KineticTerm)
    sched = build_swap_schedule(grid.eta, term.particle + 1, grid.dims, term.dim + 1)
    p_pad = 2 ** ceil_log2(grid.eta)
    d_pad = 2 ** ceil_log2(grid.dims)
    t = _padded_tensor(np.eye(dim, dtype=complex), grid, p_pad, d_pad)
    t = _permute_tensor(t, sched, d_pad, inverse=False)
    adder = term.sign * modular_adder(term.shift, grid.bins)
    t = np.tensordot(adder, t, axes=([1], [0]))
    if ledger is not None:
        ledger.charge(adders=1)
    t = _permute_tensor(t, sched, d_pad, inverse=True)
    return t.reshape(dim, dim)


def circuit_metrics(schedule: SwapSchedule, grid: GridSpec) -> tuple[int, int]:
    """``(gate_count, depth)`` of the full controlled-swap network.

    Every stage is present in the circuit whatever the target, so all stages
    count. A swap of two particle blocks costs ``D * ceil(log2 b)`` controlled
    qubit swaps; a swap of two coordinate registers costs ``ceil(log2 b)``.
    """
    q = ceil_log2(grid.bins)
    gates = 0
    for st in schedule.stages:
        per = grid.dims * q if st.level == "particle" else q
        gates += len(st.swaps) * per
    return gates, schedule.depth
