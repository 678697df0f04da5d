"""Closed-form error and resource bounds, with hypothesis checks.

All logarithms are natural. ``N = eta * D`` throughout, ``X = (k_max L / pi)^(N/2)``
is the worst-case amplitude factor, and the error budget is split as
``delta = eps / 3`` unless overridden.

Two rules are offered for the stencil order in the planners:

``"safe"``
    the smallest ``a >= 1`` with
    ``e^(2a(1 - ln 2)) (k_max h)^(2a) * C <= delta`` where ``C`` collects the
    remaining factors of the kinetic term (using ``sqrt(4a + 3) >= sqrt(7)``).
    It needs ``k_max h < 2/e``.
``"literal"``
    ``a = ceil(3/2 (ln C' + N/2 ln(k_max L / pi)) / (1 - 3 ln(k_max h)))`` as it
    is usually quoted. It trades ``e^(2a(1 - ln 2))`` for ``e^(-2a/3)``, which
    is smaller, so it can return orders that do not meet the budget.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any

from .errors import DomainError, HypothesisError
from .stencil import coefficient_norm_sum
from .taylor import LN2, truncation_order

__all__ = [
    "ASSUMPTION_KL",
    "BoundInputs",
    "BoundReport",
    "derivative_bound",
    "kinetic_error_bound",
    "potential_error_bound",
    "combined_error_bound",
    "normalization_h_bound",
    "worst_case_plan",
    "optimistic_plan",
    "query_count",
    "query_envelope",
    "bound_report",
]

ASSUMPTION_KL = "k_max L > π(2e^{−1/3})^{2/ηD}"
KH_LIMIT = math.exp(1.0 / 3.0)
KH_SAFE_LIMIT = 2.0 / math.e


@dataclass(frozen=True)
class BoundInputs:
    """Every symbol the bounds use.

    ``h`` and ``order_a`` are only needed by the error bounds; the planners
    produce them. ``v_max`` and ``v_prime_max`` are filled from the Coulomb
    formulas when ``coulomb_delta`` is given and they are left unset.
    """

    eta: int = 1
    dims: int = 1
    mass: float = 1.0
    length: float = 1.0
    kmax: float = math.pi
    time: float = 1.0
    eps: float = 1e-3
    h: float | None = None
    order_a: int | None = None
    v_max: float | None = None
    v_prime_max: float | None = None
    coulomb_delta: float | None = None
    charge: float = 1.0
    beta: float = 1.0
    delta: float | None = None

    def __post_init__(self) -> None:
        for name in ("eta", "dims"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v!r}")
        for name in ("mass", "length", "kmax", "beta"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.time >= 0:
            raise DomainError(f"time must be nonnegative, got {self.time}")
        if not self.eps > 0:
            raise DomainError(f"eps must be positive, got {self.eps}")
        if self.h is not None and not self.h > 0:
            raise DomainError(f"h must be positive, got {self.h}")
        if self.order_a is not None and self.order_a < 1:
            raise DomainError(f"order must be at least 1, got {self.order_a}")
        if self.coulomb_delta is not None:
            if not self.coulomb_delta > 0:
                raise DomainError("Coulomb softening must be positive")
            q2 = self.charge**2
            if self.v_max is None:
                object.__setattr__(self, "v_max", self.eta * (self.eta - 1) * q2 / (2.0 * self.coulomb_delta))
            if self.v_prime_max is None:
                object.__setattr__(
                    self, "v_prime_max", self.eta**2 * q2 * math.sqrt(3.0) / (9.0 * self.coulomb_delta**2)
                )
        if self.v_max is None:
            object.__setattr__(self, "v_max", 0.0)
        if self.v_prime_max is None:
            object.__setattr__(self, "v_prime_max", 0.0)
        if self.v_max < 0 or self.v_prime_max < 0:
            raise DomainError("potential bounds must be nonnegative")
        if self.delta is not None and not self.delta > 0:
            raise DomainError("delta must be positive")

    @property
    def n(self) -> int:
        return self.eta * self.dims

    @property
    def budget(self) -> float:
        return self.eps / 3.0 if self.delta is None else self.delta

    @property
    def amplitude_factor(self) -> float:
        """``(k_max L / pi)^(N/2)``."""
        return (self.kmax * self.length / math.pi) ** (self.n / 2.0)

    def need(self, *names: str) -> None:
        for name in names:
            if getattr(self, name) is None:
                raise DomainError(f"bound needs {name!r}")

    def with_plan(self, h: float, a: int) -> "BoundInputs":
        return replace(self, h=h, order_a=a)


@dataclass
class BoundReport:
    """Named bound values plus the hypotheses that were checked."""

    inputs: dict[str, Any]
    mode: str
    values: dict[str, float] = field(default_factory=dict)
    hypotheses: dict[str, bool] = field(default_factory=dict)
    violations: list[str] = field(default_factory=list)

    def check(self, name: str, ok: bool) -> None:
        self.hypotheses[name] = bool(ok)
        if not ok:
            self.violations.append(name)

    def as_dict(self) -> dict:
        return asdict(self)


def derivative_bound(r: int, kmax: float, n: int) -> float:
    """Bound on ``|d^r psi|`` for a state with momenta cut off at ``kmax``."""
    if r < 0 or n < 1 or not kmax > 0:
        raise DomainError("derivative bound needs r >= 0, n >= 1, kmax > 0")
    return kmax**r / math.sqrt(2 * r + 1) * (kmax / math.pi) ** (n / 2.0)


def _kinetic_core(p: BoundInputs) -> float:
    a = p.order_a
    return (
        math.pi**1.5
        * math.exp(2 * a * (1.0 - LN2))
        / (18.0 * p.mass * math.sqrt(4 * a + 3))
        * p.n
        * p.kmax ** (2 * a + 1)
        * p.h ** (2 * a - 1)
    )


def kinetic_error_bound(p: BoundInputs) -> float:
    p.need("h", "order_a")
    return _kinetic_core(p) * (p.kmax / math.pi) ** (p.n / 2.0)


def potential_error_bound(p: BoundInputs) -> float:
    p.need("h")
    return p.h * p.n / 2.0 * p.v_prime_max * (p.kmax / math.pi) ** (p.n / 2.0)


def combined_error_bound(p: BoundInputs) -> float:
    """Total discretization error of the unnormalized discretized state."""
    p.need("h", "order_a")
    shift = p.kmax * p.n * p.h / (2.0 * math.sqrt(3.0))
    drift = p.time * (_kinetic_core(p) + p.h * p.n / 2.0 * p.v_prime_max)
    return (shift + drift) * p.amplitude_factor


def normalization_h_bound(delta: float, p: BoundInputs) -> float:
    """Largest ``h`` for which renormalizing the discretized state costs at most ``delta``."""
    if not delta > 0:
        raise DomainError("delta must be positive")
    return 3.0 * math.sqrt(min(delta, math.sqrt(3.0 / 8.0)) / p.n) / p.kmax / p.amplitude_factor


def _safe_order(const: float, kh: float) -> int:
    # smallest a with const * exp(2a (1 - ln 2 + ln kh)) <= 1
    if const <= 1.0:
        return 1
    rate = 1.0 - LN2 + math.log(kh)
    if rate >= 0:
        raise HypothesisError("k_max h < 2/e", f"k_max h = {kh:.4g}")
    a = max(1, math.ceil(math.log(const) / (-2.0 * rate)))
    while const * math.exp(2 * a * rate) > 1.0:
        a += 1
    return a


def _literal_order(log_const: float, kh: float) -> int:
    return max(1, math.ceil(1.5 * log_const / (1.0 - 3.0 * math.log(kh))))


def _order(p: BoundInputs, h: float, x: float, rule: str) -> int:
    kh = p.kmax * h
    if not kh < KH_LIMIT:
        raise HypothesisError("k_max h < e^{1/3}", f"k_max h = {kh:.4g}")
    if p.time == 0:
        return 1
    base = math.pi**1.5 * p.n * p.time * p.kmax / (18.0 * math.sqrt(7.0) * p.budget * p.mass * h)
    if rule == "safe":
        return _safe_order(base * x, kh)
    if rule == "literal":
        return _literal_order(math.log(base) + math.log(x), kh)
    raise DomainError(f"unknown order rule {rule!r}")


def check_cutoff_assumption(p: BoundInputs) -> None:
    threshold = math.pi * (2.0 * math.exp(-1.0 / 3.0)) ** (2.0 / p.n)
    if not p.kmax * p.length > threshold:
        raise HypothesisError(ASSUMPTION_KL, f"k_max L = {p.kmax * p.length:.6g} <= {threshold:.6g}")


def worst_case_plan(p: BoundInputs, rule: str = "safe") -> tuple[float, int]:
    """``(h, a)`` meeting the total error ``eps`` using only the momentum cutoff."""
    check_cutoff_assumption(p)
    x = p.amplitude_factor
    h = 2.0 * p.budget / (p.n * (p.kmax + p.v_prime_max * p.time)) / x
    return h, _order(p, h, x, rule)


def optimistic_plan(p: BoundInputs, rule: str = "safe") -> tuple[float, int]:
    """``(h, a)`` when every derivative is bounded by ``beta k^r / (sqrt(2r+1) L^(N/2))``."""
    h = 2.0 * p.budget / (p.beta * p.n * (p.kmax + p.v_prime_max * p.time))
    return h, _order(p, h, p.beta, rule)


def lcu_lambda_per_m(p: BoundInputs, h: float, a: int) -> tuple[float, float]:
    """Kinetic and potential parts of ``lambda / M`` for the decomposition at ``(h, a)``."""
    kinetic = p.n * coefficient_norm_sum(a) / (2.0 * p.mass * h**2)
    return kinetic, p.v_max


def query_count(p: BoundInputs, h: float | None = None, a: int | None = None) -> dict[str, float]:
    """Segments ``r``, truncation ``K`` and the ``3 K r`` query total.

    ``r = ceil(t (kinetic + V_max) / ln 2)`` follows from ``lambda / M`` with
    ``M`` cancelling. ``r_kinetic`` is the same ceiling with the potential part
    dropped, so ``potential_queries = 3 K (r - r_kinetic)`` isolates the cost the
    potential adds.
    """
    h = p.h if h is None else h
    a = p.order_a if a is None else a
    if h is None or a is None:
        raise DomainError("query count needs h and order_a")
    if not p.time > 0:
        raise DomainError("query count needs a positive time")
    kin, pot = lcu_lambda_per_m(p, h, a)
    r = max(1, math.ceil(p.time * (kin + pot) / LN2 * (1.0 - 1e-12)))
    r_kin = max(1, math.ceil(p.time * kin / LN2 * (1.0 - 1e-12)))
    k = truncation_order(p.eps / (2.0 * r))
    return {
        "segments_r": r,
        "truncation_k": k,
        "total_queries": 3 * k * r,
        "potential_queries": 3 * k * (r - r_kin),
        "segments_kinetic": r_kin,
        "envelope": query_envelope(p, h),
    }


def query_envelope(p: BoundInputs, h: float) -> float:
    """Asymptotic query expression with unit constant, for comparison."""
    lam_t = (p.n / (p.mass * h**2) + p.v_max) * p.time
    log_term = math.log(lam_t / p.eps) if lam_t > p.eps else 1.0
    denom = math.log(log_term) if log_term > math.e else 1.0
    return lam_t * log_term / denom


def bound_report(p: BoundInputs, mode: str = "worst", rule: str = "safe") -> BoundReport:
    """Plan ``(h, a)`` in the given mode and evaluate every bound at it.

    Hypothesis violations raise :class:`HypothesisError`; the report lists the
    hypotheses that were checked.
    """
    report = BoundReport(inputs={k: v for k, v in asdict(p).items()}, mode=mode)
    threshold = math.pi * (2.0 * math.exp(-1.0 / 3.0)) ** (2.0 / p.n)
    if mode == "worst":
        report.check(ASSUMPTION_KL, p.kmax * p.length > threshold)
        h, a = worst_case_plan(p, rule)
    elif mode == "optimistic":
        h, a = optimistic_plan(p, rule)
    else:
        raise DomainError(f"unknown mode {mode!r}; expected 'worst' or 'optimistic'")
    report.check("k_max h < e^{1/3}", p.kmax * h < KH_LIMIT)
    q = p.with_plan(h, a)
    delta = p.budget
    report.values.update(
        {
            "h": h,
            "order_a": a,
            "delta": delta,
            "bins_min": math.ceil(p.length / h),
            "derivative_bound_r1": derivative_bound(1, p.kmax, p.n),
            "kinetic_error_bound": kinetic_error_bound(q),
            "potential_error_bound": potential_error_bound(q),
            "combined_error_bound": combined_error_bound(q),
            "normalization_h_bound": normalization_h_bound(delta, p),
            "v_max": p.v_max,
            "v_prime_max": p.v_prime_max,
        }
    )
    if mode == "worst":
        total = combined_error_bound(q) + delta
        report.values["total_error_bound"] = total
        report.check("total error <= eps", total <= p.eps * (1.0 + 1e-12))
    if p.time > 0:
        report.values.update({f"queries_{k}": v for k, v in query_count(p, h, a).items()})
    return report
