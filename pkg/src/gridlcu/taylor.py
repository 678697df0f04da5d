"""Truncated Taylor series evolution over a linear combination of unitaries.

The evolution time is cut into ``r`` segments. Every non-final segment has
duration ``tau = M ln 2 / lambda`` so that its coefficient sum ``c`` is as close
to 2 as the truncation allows; the last segment absorbs the remainder.

Two execution modes are provided:

* *effective*: matrix-free application of ``sum_k (-i tau)^k / k! H_eff^k`` with
  ``H_eff = (1/M) sum_chi d_chi V_chi``; queries are charged analytically
  (``3K`` potential queries and ``3K`` adder applications per segment).
* *block encoding*: explicit ancilla space over multi-indices
  ``alpha = (k, chi_1, ..., chi_k)``, the preparation reflection ``B``,
  ``select(W)`` and the amplification step ``G = -A R A^dag R A``. Toy scale only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import AmplificationError, DomainError, InstabilityError, ResourceError, ShapeError
from .grid import StateVector
from .hamiltonian import LcuDecomposition, QueryLedger
from .oracle import expm_propagator

__all__ = [
    "LN2",
    "TaylorPlan",
    "SegmentReport",
    "taylor_tail",
    "truncation_order",
    "plan_evolution",
    "evolve",
    "evolve_effective",
    "BlockEncoding",
    "block_encode_segment",
    "amplify_segment",
]

LN2 = math.log(2.0)
ANCILLA_CAP = 10_000


def taylor_tail(x: float, k: int) -> float:
    """``sum_{j > k} x^j / j!`` for ``0 <= x``, summed directly (no cancellation)."""
    term = x ** (k + 1) / math.factorial(k + 1)
    total, j = 0.0, k + 1
    while term > 0.0:
        total += term
        if term <= 1e-17 * total:
            break
        j += 1
        term *= x / j
    return total


def truncation_order(budget: float, x: float = LN2, k_cap: int = 200) -> int:
    """Smallest ``K >= 1`` with ``x^(K+1)/(K+1)! <= budget`` and whole tail ``<= budget``."""
    if not budget > 0:
        raise DomainError(f"truncation budget must be positive, got {budget}")
    for k in range(1, k_cap + 1):
        if x ** (k + 1) / math.factorial(k + 1) <= budget and taylor_tail(x, k) <= budget:
            return k
    raise ResourceError(f"no truncation order up to {k_cap} meets budget {budget}")


def _series_sum(x: float, k: int) -> float:
    return sum(x**j / math.factorial(j) for j in range(k + 1))


@dataclass(frozen=True)
class TaylorPlan:
    """Segmenting and truncation choices for one evolution."""

    segments_r: int
    truncation_k: int
    tau: float
    final_tau: float
    scale_m: int
    lam: float
    c_per_segment: float
    c_final: float
    time: float
    eps: float

    @property
    def eps_taylor(self) -> float:
        return self.eps / 2.0

    def segment_durations(self) -> list[float]:
        return [self.tau] * (self.segments_r - 1) + [self.final_tau]

    @property
    def truncation_bound(self) -> float:
        """Per-segment bound on ``||U - W||`` for a full segment."""
        return taylor_tail(self.lam * self.tau / self.scale_m, self.truncation_k)

    def queries(self) -> int:
        """Potential queries (equal to adder applications) under the ``3K`` per segment model."""
        return 3 * self.truncation_k * self.segments_r

    def as_dict(self) -> dict:
        return {
            "segments_r": self.segments_r,
            "truncation_k": self.truncation_k,
            "tau": self.tau,
            "final_tau": self.final_tau,
            "scale_m": self.scale_m,
            "lambda": self.lam,
            "c_per_segment": self.c_per_segment,
            "c_final": self.c_final,
            "time": self.time,
            "eps": self.eps,
        }


def plan_evolution(decomp: LcuDecomposition, t: float, eps: float) -> TaylorPlan:
    """Choose ``r = ceil(lambda t / (M ln 2))`` and the truncation order ``K``."""
    if not t > 0:
        raise DomainError(f"evolution time must be positive, got {t}")
    if not 0 < eps < 1:
        raise DomainError(f"error budget must lie in (0, 1), got {eps}")
    lam, m = decomp.lam, decomp.scale_m
    if not lam > 0:
        raise DomainError("decomposition has zero total weight")
    x = lam * t / (m * LN2)
    r = max(1, math.ceil(x * (1.0 - 1e-12)))
    tau_full = m * LN2 / lam
    tau = min(t, tau_full)
    final_tau = t - (r - 1) * tau_full if r > 1 else t
    k = truncation_order(eps / (2.0 * r))
    return TaylorPlan(
        segments_r=r,
        truncation_k=k,
        tau=tau,
        final_tau=final_tau,
        scale_m=m,
        lam=lam,
        c_per_segment=_series_sum(lam * tau / m, k),
        c_final=_series_sum(lam * final_tau / m, k),
        time=t,
        eps=eps,
    )


@dataclass
class SegmentReport:
    """Per-segment diagnostics."""

    mode: str
    norm_drift: list[float] = field(default_factory=list)
    oaa_residual: list[float | None] = field(default_factory=list)
    success_probability: list[float | None] = field(default_factory=list)
    cumulative_potential_queries: list[int] = field(default_factory=list)
    cumulative_adder_applications: list[int] = field(default_factory=list)
    plan: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "plan": self.plan,
            "norm_drift": self.norm_drift,
            "oaa_residual": self.oaa_residual,
            "success_probability": self.success_probability,
            "cumulative_potential_queries": self.cumulative_potential_queries,
            "cumulative_adder_applications": self.cumulative_adder_applications,
        }


def _taylor_step(decomp: LcuDecomposition, psi: np.ndarray, tau: float, k_max: int) -> np.ndarray:
    out = psi.copy()
    term = psi
    for k in range(1, k_max + 1):
        term = (-1j * tau / k) * decomp.apply_effective(term)
        out = out + term
    return out


def evolve(
    decomp: LcuDecomposition,
    psi: StateVector,
    plan: TaylorPlan,
    ledger: QueryLedger | None = None,
    mode: str = "effective",
) -> tuple[StateVector, SegmentReport]:
    """Run every segment of ``plan`` and return the final state with diagnostics.

    In ``"blockencoding"`` mode full segments go through :func:`amplify_segment`;
    a shorter final segment (``c < 2``) falls back to the effective series.
    """
    if mode not in ("effective", "blockencoding"):
        raise DomainError(f"unknown evolution mode {mode!r}")
    if not psi.normalized:
        raise DomainError("input state must be normalized")
    ledger = ledger if ledger is not None else QueryLedger()
    report = SegmentReport(mode=mode, plan=plan.as_dict())
    amps = psi.amplitudes.copy()
    limit = 10.0 * plan.eps / plan.segments_r
    encoding = None
    for s, tau in enumerate(plan.segment_durations()):
        prev_norm = float(np.linalg.norm(amps))
        c_seg = plan.c_per_segment if s < plan.segments_r - 1 else plan.c_final
        full = c_seg >= 2.0 - plan.eps_taylor / plan.segments_r
        if mode == "blockencoding" and full:
            if encoding is None:
                encoding = block_encode_segment(decomp, plan)
            amps, residual = amplify_segment(encoding, amps)
            report.oaa_residual.append(residual)
            report.success_probability.append(float(np.vdot(amps, amps).real))
        else:
            amps = _taylor_step(decomp, amps, tau, plan.truncation_k)
            report.oaa_residual.append(None)
            report.success_probability.append(None)
        ledger.charge(potential=3 * plan.truncation_k, adders=3 * plan.truncation_k)
        drift = float(np.linalg.norm(amps)) - prev_norm
        report.norm_drift.append(drift)
        report.cumulative_potential_queries.append(ledger.potential_queries)
        report.cumulative_adder_applications.append(ledger.adder_applications)
        if abs(drift) > limit:
            raise InstabilityError(f"segment {s}: norm drift {drift:.3e} exceeds {limit:.3e}")
    return psi.with_amplitudes(amps), report


def evolve_effective(
    decomp: LcuDecomposition,
    psi: StateVector,
    plan: TaylorPlan,
    ledger: QueryLedger | None = None,
) -> StateVector:
    """Matrix-free truncated Taylor evolution; see :func:`evolve`."""
    return evolve(decomp, psi, plan, ledger, mode="effective")[0]


class BlockEncoding:
    """Explicit ``A = (B^dag x I) select(W) (B x I)`` over an enumerated ancilla.

    ``coeffs[alpha]`` are the positive ``c_alpha`` and ``unitaries[alpha]`` the
    matching ``W_alpha``. ``B`` is the real Householder reflection sending the
    ancilla ``|0>`` to ``sum_alpha sqrt(c_alpha / c) |alpha>``; it is its own
    inverse. ``reference`` is the target unitary used to score amplification.
    """

    def __init__(
        self,
        coeffs: Sequence[float],
        unitaries: np.ndarray,
        reference: np.ndarray | None = None,
        truncation_bound: float = 0.0,
        labels: Sequence[tuple] | None = None,
    ) -> None:
        c = np.asarray(coeffs, dtype=float)
        w = np.asarray(unitaries, dtype=complex)
        if c.ndim != 1 or w.ndim != 3 or w.shape[0] != c.shape[0] or w.shape[1] != w.shape[2]:
            raise ShapeError("need one square unitary per coefficient")
        if np.any(c < 0):
            raise DomainError("block-encoding coefficients must be nonnegative")
        if c.shape[0] > ANCILLA_CAP:
            raise ResourceError(f"ancilla dimension {c.shape[0]} exceeds cap {ANCILLA_CAP}")
        self.coeffs = c
        self.unitaries = w
        self.reference = reference
        self.truncation_bound = truncation_bound
        self.labels = list(labels) if labels is not None else None
        self.c = float(c.sum())
        prep = np.sqrt(c / self.c)
        u = -prep
        u[0] += 1.0
        self._u = u
        self._uu = float(u @ u)

    @property
    def ancilla_dim(self) -> int:
        return self.coeffs.shape[0]

    @property
    def system_dim(self) -> int:
        return self.unitaries.shape[1]

    def prepare(self, x: np.ndarray) -> np.ndarray:
        """Apply ``B x I`` (equivalently ``B^dag x I``) to an ``(ancilla, system)`` array."""
        if self._uu < 1e-30:
            return x
        return x - (2.0 / self._uu) * np.outer(self._u, self._u @ x)

    def select(self, x: np.ndarray, adjoint: bool = False) -> np.ndarray:
        if adjoint:
            return np.einsum("aji,aj->ai", self.unitaries.conj(), x)
        return np.einsum("aij,aj->ai", self.unitaries, x)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.prepare(self.select(self.prepare(x)))

    def apply_adjoint(self, x: np.ndarray) -> np.ndarray:
        return self.prepare(self.select(self.prepare(x), adjoint=True))

    def embed(self, psi: np.ndarray) -> np.ndarray:
        out = np.zeros((self.ancilla_dim, self.system_dim), dtype=complex)
        out[0] = psi
        return out

    def block0(self) -> np.ndarray:
        """Ancilla-``|0>`` block of ``A``, i.e. ``W / c``."""
        cols = []
        for s in range(self.system_dim):
            e = np.zeros(self.system_dim, dtype=complex)
            e[s] = 1.0
            cols.append(self.apply(self.embed(e))[0])
        return np.stack(cols, axis=1)

    def combination(self) -> np.ndarray:
        """``W = sum_alpha c_alpha W_alpha`` assembled directly."""
        return np.einsum("a,aij->ij", self.coeffs, self.unitaries)

    def dense(self) -> np.ndarray:
        n = self.ancilla_dim * self.system_dim
        if n > 4096:
            raise ResourceError(f"dense block encoding of dimension {n} exceeds cap 4096")
        cols = []
        for col in np.eye(n, dtype=complex):
            cols.append(self.apply(col.reshape(self.ancilla_dim, self.system_dim)).reshape(-1))
        return np.stack(cols, axis=1)


def block_encode_segment(decomp: LcuDecomposition, plan: TaylorPlan, tau: float | None = None) -> BlockEncoding:
    """Block encoding of one segment of duration ``tau`` (default: a full segment)."""
    tau = plan.tau if tau is None else tau
    n_chi = decomp.n_terms
    k_max = plan.truncation_k
    anc = sum(n_chi**k for k in range(k_max + 1))
    if anc > ANCILLA_CAP:
        raise ResourceError(f"ancilla dimension {anc} exceeds cap {ANCILLA_CAP}")
    v = np.stack(decomp.term_unitaries())
    d = decomp.weights
    m = decomp.scale_m
    dim = decomp.grid.dimension
    coeffs: list[float] = [1.0]
    unitaries: list[np.ndarray] = [np.eye(dim, dtype=complex)]
    labels: list[tuple] = [(0,)]
    level_c, level_w, level_l = [1.0], [np.eye(dim, dtype=complex)], [()]
    for k in range(1, k_max + 1):
        nc, nw, nl = [], [], []
        for c_prev, w_prev, l_prev in zip(level_c, level_w, level_l):
            for chi in range(n_chi):
                nc.append(c_prev * (tau / m) * d[chi] / k)
                nw.append(-1j * (w_prev @ v[chi]))
                nl.append(l_prev + (chi,))
        level_c, level_w, level_l = nc, nw, nl
        coeffs.extend(nc)
        unitaries.extend(nw)
        labels.extend((k,) + lab for lab in nl)
    h_eff = decomp.effective_matrix()
    return BlockEncoding(
        coeffs,
        np.stack(unitaries),
        reference=expm_propagator(h_eff, tau),
        truncation_bound=taylor_tail(decomp.lam * tau / m, k_max),
        labels=labels,
    )


def amplify_segment(encoding: BlockEncoding, psi: StateVector | np.ndarray) -> tuple[StateVector | np.ndarray, float]:
    """Apply ``P0 G`` with ``G = -A R A^dag R A`` and ``R = I - 2 P0``.

    Returns the system part of ``P0 G |0>|psi>`` and its distance to the
    reference unitary applied to ``psi``.
    """
    amps = psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi, dtype=complex)
    x = encoding.apply(encoding.embed(amps))
    x[0] *= -1.0
    x = encoding.apply_adjoint(x)
    x[0] *= -1.0
    x = -encoding.apply(x)
    out = x[0].copy()
    residual = float("nan")
    if encoding.reference is not None:
        residual = float(np.linalg.norm(out - encoding.reference @ amps))
        allowed = 10.0 * (abs(encoding.c - 2.0) + encoding.truncation_bound) + 1e-10
        if residual > allowed * max(1.0, float(np.linalg.norm(amps))):
            raise AmplificationError(f"amplification residual {residual:.3e} exceeds {allowed:.3e}")
    if isinstance(psi, StateVector):
        return psi.with_amplitudes(out), residual
    return out, residual
