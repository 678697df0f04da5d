"""Self-check suites run by ``gridlcu verify``.

Each suite returns :class:`Check` rows; a suite passes when every row does.
The checks are small instances of the properties exercised by the test suite,
sized to finish in seconds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .bounds import BoundInputs, combined_error_bound, worst_case_plan
from .circuit import RegisterLayout, apply_schedule, build_swap_schedule, circuit_metrics, select_v_circuit
from .errors import HypothesisError
from .grid import GridSpec, StateVector, discretize, nearest_centroid
from .hamiltonian import PotentialSpec, QueryLedger, assemble_dense, lcu_decompose
from .oracle import expm_evolve, expm_propagator, gaussian_max_derivative, plane_wave, truncated_gaussian
from .stencil import NORM_SUM_LIMIT, fd_coefficients
from .taylor import amplify_segment, block_encode_segment, evolve, plan_evolution

__all__ = ["Check", "SUITES", "run_suite", "run_suites"]


@dataclass
class Check:
    suite: str
    name: str
    passed: bool
    detail: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


def _random_state(grid: GridSpec, rng: np.random.Generator) -> StateVector:
    v = rng.normal(size=grid.dimension) + 1j * rng.normal(size=grid.dimension)
    return StateVector(v / np.linalg.norm(v), grid)


def suite_stencil(rng: np.random.Generator) -> list[Check]:
    out = []
    c2 = fd_coefficients(2)
    want = [Fraction(-1, 12), Fraction(4, 3), Fraction(-5, 2), Fraction(4, 3), Fraction(-1, 12)]
    out.append(Check("stencil", "a=2 coefficients", list(c2.coeffs) == want, str([str(c) for c in c2.coeffs])))
    sums = [fd_coefficients(a).norm_sum_exact for a in range(1, 65)]
    ok = all(s < NORM_SUM_LIMIT for s in sums) and all(x < y for x, y in zip(sums, sums[1:]))
    out.append(Check("stencil", "norm sum < 2pi^2/3, increasing (a<=64)", ok, f"a=64: {float(sums[-1]):.12f}"))
    exact = True
    for a in range(1, 5):
        c = fd_coefficients(a)
        for p in range(2 * a + 2):
            got = sum(c.d(j) * Fraction(j) ** p for j in c.offsets)
            exact &= got == (2 if p == 2 else 0)
    out.append(Check("stencil", "exact on monomials up to degree 2a+1 (a<=4)", exact))
    return out


def suite_grid(rng: np.random.Generator) -> list[Check]:
    g = GridSpec(2, 2, 4, 3.0)
    ok = all(g.flat_index(g.bin_index(f)) == f for f in range(g.dimension))
    out = [Check("grid", "flat index round trip", ok)]
    tie = nearest_centroid(GridSpec(1, 1, 4, 4.0), [1.0])
    out.append(Check("grid", "ties go to the lower bin", tie == (0,), str(tie)))
    g1 = GridSpec(1, 1, 16, 2 * math.pi)
    st = discretize(g1, plane_wave(g1, [3.0]))
    out.append(Check("grid", "plane wave discretizes normalized", abs(st.norm_sq - 1) < 1e-12, f"{st.norm_sq:.15f}"))
    return out


def suite_hamiltonian(rng: np.random.Generator) -> list[Check]:
    out = []
    for b, a, m in itertools.product((4, 8), (1, 2), (2, 4, 16)):
        g = GridSpec(2, 1, b, 4.0)
        pot = PotentialSpec("modified_coulomb", delta=0.5, charges=(1.0, 1.0))
        dec = lcu_decompose(pot, g, a, pot.v_max / m)
        h_tilde = assemble_dense(pot, g, a)
        err = float(np.max(np.abs(h_tilde - dec.effective_matrix())))
        bound = dec.v_max / dec.scale_m
        out.append(Check("hamiltonian", f"reconstruction b={b} a={a} M={dec.scale_m}", err <= bound, f"{err:.3e} <= {bound:.3e}"))
    return out


def suite_taylor(rng: np.random.Generator) -> list[Check]:
    out = []
    g = GridSpec(2, 1, 8, 4.0)
    pot = PotentialSpec("modified_coulomb", delta=0.5, charges=(1.0, 1.0))
    dec = lcu_decompose(pot, g, 2, 0.1)
    psi = _random_state(g, rng)
    plan = plan_evolution(dec, 1.0, 1e-6)
    ledger = QueryLedger()
    final, _ = evolve(dec, psi, plan, ledger)
    ref = expm_evolve(dec.effective_matrix(), psi.amplitudes, 1.0)
    err = float(np.linalg.norm(final.amplitudes - ref))
    out.append(Check("taylor", "effective evolution vs expm", err <= 1e-6, f"{err:.3e}"))
    out.append(
        Check("taylor", "ledger = 3Kr", ledger.potential_queries == plan.queries(), f"{ledger.potential_queries} vs {plan.queries()}")
    )
    gt = GridSpec(1, 1, 4, 2.0)
    tab = PotentialSpec("tabulated", table={i: 0.3 * i - 0.4 for i in range(4)})
    dt = lcu_decompose(tab, gt, 1, 0.5)
    pt = plan_evolution(dt, 2.0, 1e-2)
    enc = block_encode_segment(dt, pt)
    psi_t = _random_state(gt, rng)
    amp, residual = amplify_segment(enc, psi_t.amplitudes)
    bound = 10 * (abs(enc.c - 2) + enc.truncation_bound)
    out.append(Check("taylor", f"OAA residual (ancilla {enc.ancilla_dim})", residual <= bound, f"{residual:.3e} <= {bound:.3e}"))
    blk = float(np.max(np.abs(enc.block0() - enc.combination() / enc.c)))
    out.append(Check("taylor", "ancilla-0 block = W/c", blk <= 1e-10, f"{blk:.3e}"))
    return out


def suite_circuit(rng: np.random.Generator) -> list[Check]:
    out = []
    for eta, dims, a in itertools.product((1, 2), (1, 2), (1, 2)):
        g = GridSpec(eta, dims, 4, 2.0)
        pot = PotentialSpec("modified_coulomb", delta=0.5, charges=(1.0,) * eta) if eta > 1 else PotentialSpec("zero")
        dec = lcu_decompose(pot, g, a, 0.5)
        layout = RegisterLayout.for_decomposition(dec)
        err = max(float(np.max(np.abs(select_v_circuit(dec, layout, chi) - dec.term_matrix(chi)))) for chi in range(dec.n_terms))
        gates, depth = circuit_metrics(build_swap_schedule(eta, eta, dims, dims), g)
        out.append(
            Check(
                "circuit",
                f"eta={eta} D={dims} b=4 a={a}",
                err <= 1e-12 and depth == (eta - 1).bit_length() + (dims - 1).bit_length(),
                f"terms={dec.n_terms} max|diff|={err:.1e} gates={gates} depth={depth}",
            )
        )
    ok = True
    for eta in range(1, 17):
        for i in range(1, eta + 1):
            sched = build_swap_schedule(eta, i)
            fwd = apply_schedule(sched, list(range(1, eta + 1)))
            back = apply_schedule(sched, fwd, inverse=True)
            ok &= fwd[0] == i and back[:eta] == list(range(1, eta + 1))
    out.append(Check("circuit", "swap network round trip (eta<=16)", ok))
    return out


def suite_oracle(rng: np.random.Generator) -> list[Check]:
    x = rng.normal(size=(64, 64)) + 1j * rng.normal(size=(64, 64))
    h = (x + x.conj().T) / 2
    diff = float(np.max(np.abs(expm_propagator(h, 0.3) @ expm_propagator(h, 0.4) - expm_propagator(h, 0.7))))
    out = [Check("oracle", "group property", diff <= 1e-9, f"{diff:.2e}")]
    xs = np.linspace(-6, 6, 20001)
    measured = float(np.max(np.abs(truncated_gaussian(xs, 1.0, 6.0, derivative=True))))
    rel = abs(measured / gaussian_max_derivative(1.0) - 1)
    out.append(Check("oracle", "Gaussian max derivative within 1%", rel <= 0.01, f"{measured:.5f} (rel {rel:.1e})"))
    return out


def suite_bounds(rng: np.random.Generator) -> list[Check]:
    worst = 0.0
    for _ in range(20):
        p = BoundInputs(
            eta=int(rng.integers(1, 3)),
            dims=int(rng.integers(1, 3)),
            length=float(rng.uniform(3, 10)),
            kmax=float(rng.uniform(3, 6)),
            time=float(rng.uniform(0.1, 10)),
            eps=float(10 ** rng.uniform(-6, -2)),
            v_prime_max=float(rng.uniform(0, 2)),
        )
        h, a = worst_case_plan(p)
        worst = max(worst, (combined_error_bound(p.with_plan(h, a)) + p.budget) / p.eps)
    out = [Check("bounds", "worst-case plan recomposes to <= eps", worst <= 1.0, f"max ratio {worst:.4f}")]
    try:
        worst_case_plan(BoundInputs(kmax=1.0, length=1.0))
        raised = False
    except HypothesisError:
        raised = True
    out.append(Check("bounds", "assumption check raises", raised))
    return out


SUITES: dict[str, Callable[[np.random.Generator], list[Check]]] = {
    "stencil": suite_stencil,
    "grid": suite_grid,
    "hamiltonian": suite_hamiltonian,
    "taylor": suite_taylor,
    "circuit": suite_circuit,
    "oracle": suite_oracle,
    "bounds": suite_bounds,
}


def run_suite(name: str, seed: int = 0) -> list[Check]:
    return SUITES[name](np.random.default_rng(seed))


def run_suites(name: str = "all", seed: int = 0) -> list[Check]:
    names = list(SUITES) if name == "all" else [name]
    rows: list[Check] = []
    for n in names:
        rows.extend(run_suite(n, seed))
    return rows
