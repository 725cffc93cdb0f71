"""Exception types shared across the package.

Every failure mode raised by the public API derives from MdgError so callers
can catch one base class; subclasses mirror the distinct error categories the
API contracts promise (range, contract, numeric, lookup, applicability,
parse/version, binding, uninitialized read, codegen).
"""

from __future__ import annotations

__all__ = [
    "MdgError",
    "RangeError",
    "ContractError",
    "NumericError",
    "GraphLookupError",
    "ApplicabilityError",
    "ParseError",
    "VersionError",
    "BindingError",
    "UninitializedReadError",
    "CodegenError",
]


class MdgError(Exception):
    """Base class for all package errors."""


class RangeError(MdgError, ValueError):
    """An argument fell outside its documented range."""


class ContractError(MdgError, ValueError):
    """A documented precondition was violated."""


class NumericError(MdgError, ArithmeticError):
    """An iteration failed to converge or produced non-finite values."""


class GraphLookupError(MdgError, LookupError):
    """A graph query did not resolve to exactly one entity.

    count carries how many candidates matched (0 or >1).
    """

    def __init__(self, message: str, count: int):
        super().__init__(message)
        self.count = count


class ApplicabilityError(MdgError):
    """A transform precondition failed; the input graph is untouched.

    step is the recipe step index when raised from a recipe driver.
    """

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class ParseError(MdgError, ValueError):
    """A document or expression failed to parse.

    offset is the byte offset of the failure when known.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class VersionError(MdgError, ValueError):
    """A document declared an unknown schema version or enum value."""


class BindingError(MdgError, ValueError):
    """Execution bindings are incomplete or shaped wrongly."""


class UninitializedReadError(MdgError, RuntimeError):
    """A transient container was read before any write covered the cell."""

    def __init__(self, container: str, index: tuple[int, ...]):
        super().__init__(
            f"read of transient '{container}' at index {list(index)} "
            "before it was written"
        )
        self.container = container
        self.index = index


class CodegenError(MdgError, ValueError):
    """The graph cannot be lowered to source code as configured."""
