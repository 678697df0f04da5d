"""Exception types raised across the package."""

from __future__ import annotations


class GridLcuError(Exception):
    """Base class for all package errors."""

    #: short machine-readable tag used in CLI error reports
    kind = "error"


class InvalidOrderError(GridLcuError, ValueError):
    kind = "invalid_order"


class DomainError(GridLcuError, ValueError):
    kind = "domain"


class ShapeError(GridLcuError, ValueError):
    kind = "shape"


class BinIndexError(GridLcuError, IndexError):
    kind = "index"


class DegenerateStateError(GridLcuError, ValueError):
    kind = "degenerate_state"


class DataError(GridLcuError, ValueError):
    kind = "data"


class ResourceError(GridLcuError, MemoryError):
    kind = "resource"


class ContractError(GridLcuError, ValueError):
    kind = "contract"


class InstabilityError(GridLcuError, ArithmeticError):
    kind = "instability"


class AmplificationError(GridLcuError, ArithmeticError):
    kind = "amplification"


class HypothesisError(GridLcuError, ValueError):
    """A hypothesis of an error bound does not hold for the supplied inputs.

    ``assumption`` carries the human readable statement that failed.
    """

    kind = "hypothesis"

    def __init__(self, assumption: str, detail: str = "") -> None:
        self.assumption = assumption
        self.detail = detail
        msg = f"hypothesis violated: {assumption}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
