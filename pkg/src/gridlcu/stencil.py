r"""Centered finite-difference stencils for the second derivative.

The :math:`(2a+1)`-point stencil approximates

.. math::

    \partial_x^2 \psi(x) \approx h^{-2} \sum_{j=-a}^{a} d_j \, \psi(x + jh)

with

.. math::

    d_{j \ne 0} = \frac{2 (-1)^{j+1} (a!)^2}{(a+j)!\,(a-j)!\,j^2},
    \qquad d_0 = -\sum_{j \ne 0} d_j .

Coefficients are produced as exact :class:`fractions.Fraction` values using the
ratio recurrence

.. math::

    d_{j+1} = -d_j \, \frac{j^2 (a-j)}{(j+1)^2 (a+j+1)}, \qquad d_1 = \frac{2a}{a+1},

so no factorial is ever formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import DomainError, InvalidOrderError, ShapeError

__all__ = [
    "A_MAX_DEFAULT",
    "NORM_SUM_LIMIT",
    "StencilCoefficients",
    "fd_coefficients",
    "coefficient_norm_sum",
    "stencil_error_bound",
    "apply_stencil",
    "dispersion",
]

A_MAX_DEFAULT = 64
NORM_SUM_LIMIT = 2.0 * math.pi**2 / 3.0


@dataclass(frozen=True)
class StencilCoefficients:
    """Exact coefficients of the order-``2a`` centered second-derivative stencil.

    ``coeffs[k]`` holds :math:`d_{k-a}`, i.e. the list runs over ``j = -a..a``.
    """

    order_a: int
    coeffs: tuple[Fraction, ...]

    @property
    def offsets(self) -> range:
        return range(-self.order_a, self.order_a + 1)

    def d(self, j: int) -> Fraction:
        """Coefficient for offset ``j``."""
        if abs(j) > self.order_a:
            return Fraction(0)
        return self.coeffs[j + self.order_a]

    @property
    def d0(self) -> Fraction:
        return self.coeffs[self.order_a]

    @property
    def norm_sum_exact(self) -> Fraction:
        return sum((abs(c) for j, c in zip(self.offsets, self.coeffs) if j != 0), Fraction(0))

    @property
    def norm_sum(self) -> float:
        return float(self.norm_sum_exact)

    def as_floats(self) -> np.ndarray:
        return np.array([float(c) for c in self.coeffs])

    def nonzero_offsets(self) -> list[int]:
        return [j for j in self.offsets if j != 0]


def _check_order(a: int, a_max: int) -> None:
    if isinstance(a, bool) or not isinstance(a, (int, np.integer)):
        raise InvalidOrderError(f"stencil order must be an integer, got {a!r}")
    if a < 1 or a > a_max:
        raise InvalidOrderError(f"stencil order a={a} outside [1, {a_max}]")


@lru_cache(maxsize=None)
def _half_coefficients(a: int) -> tuple[Fraction, ...]:
    # d_1 .. d_a via the ratio recurrence
    out = [Fraction(2 * a, a + 1)]
    for j in range(1, a):
        out.append(-out[-1] * Fraction(j * j * (a - j), (j + 1) ** 2 * (a + j + 1)))
    return tuple(out)


def fd_coefficients(a: int, a_max: int = A_MAX_DEFAULT) -> StencilCoefficients:
    """Return the exact ``(2a+1)``-point centered second-derivative coefficients.

    Raises:
        InvalidOrderError: if ``a`` is not an integer in ``[1, a_max]``.
    """
    _check_order(a, a_max)
    a = int(a)
    half = _half_coefficients(a)
    d0 = -2 * sum(half, Fraction(0))
    coeffs = tuple(reversed(half)) + (d0,) + half
    return StencilCoefficients(order_a=a, coeffs=coeffs)


def coefficient_norm_sum(a: int, a_max: int = A_MAX_DEFAULT) -> float:
    """Sum of ``|d_j|`` over ``j != 0``; always below ``2*pi**2/3``."""
    return fd_coefficients(a, a_max).norm_sum


def stencil_error_bound(a: int, h: float, max_deriv: float) -> float:
    """Upper bound on the stencil truncation error for a function whose
    ``(2a+1)``-th derivative is bounded by ``max_deriv``.

    Returns ``(pi**1.5 / 9) * exp(2a(1 - ln 2)) * h**(2a-1) * max_deriv``.
    """
    _check_order(a, A_MAX_DEFAULT)
    if not h > 0:
        raise DomainError(f"grid spacing must be positive, got h={h}")
    if max_deriv < 0:
        raise DomainError(f"derivative bound must be nonnegative, got {max_deriv}")
    return (math.pi**1.5 / 9.0) * math.exp(2 * a * (1.0 - math.log(2.0))) * h ** (2 * a - 1) * max_deriv


def apply_stencil(
    coeffs: StencilCoefficients,
    samples: Sequence[complex] | np.ndarray,
    h: float,
    periodic_length: int | None = None,
) -> np.ndarray:
    """Apply the stencil to periodic samples.

    ``output[i] = h**-2 * sum_j d_j * samples[(i + j) % n]``.

    Args:
        coeffs: stencil to apply.
        samples: one period of the sampled function.
        h: grid spacing.
        periodic_length: number of points per period; must equal ``len(samples)``
            when given.
    """
    x = np.asarray(samples)
    if x.ndim != 1:
        raise ShapeError("samples must be one-dimensional")
    n = x.shape[0]
    if periodic_length is not None and periodic_length != n:
        raise ShapeError(f"periodic_length={periodic_length} does not match {n} samples")
    if n < 2 * coeffs.order_a + 1:
        raise ShapeError(f"need at least {2 * coeffs.order_a + 1} samples, got {n}")
    if not h > 0:
        raise DomainError(f"grid spacing must be positive, got h={h}")
    out = np.zeros(n, dtype=np.result_type(x.dtype, float))
    for j, d in zip(coeffs.offsets, coeffs.as_floats()):
        out += d * np.roll(x, -j)
    return out / h**2


def dispersion(coeffs: StencilCoefficients, k: float | np.ndarray, h: float) -> float | np.ndarray:
    """Eigenvalue of the periodic stencil on the plane wave ``exp(ikx)``.

    ``h**-2 * (d_0 + 2 * sum_{j>=1} d_j cos(j k h))``; approximates ``-k**2``.
    """
    k = np.asarray(k, dtype=float)
    acc = np.full_like(k, float(coeffs.d0))
    for j in range(1, coeffs.order_a + 1):
        acc = acc + 2.0 * float(coeffs.d(j)) * np.cos(j * k * h)
    out = acc / h**2
    return float(out) if out.ndim == 0 else out
