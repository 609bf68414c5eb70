"""Exception types raised across the package."""


class SccodeError(Exception):
    """Base class for all package errors."""


class ContractViolation(SccodeError, ValueError):
    """An operation was called with arguments that break its preconditions."""


class NumericDegeneracyError(SccodeError, ArithmeticError):
    """A numerical quantity collapsed (e.g. a zero dictionary column)."""


class DivergenceError(SccodeError, ArithmeticError):
    """Training produced a non-finite loss."""

    def __init__(self, iteration, j0, j1, j2):
        self.iteration = iteration
        self.components = (j0, j1, j2)
        super().__init__(
            f"non-finite loss at iteration {iteration}: "
            f"J0={j0!r}, J1={j1!r}, J2={j2!r}"
        )


class GenerationError(SccodeError, RuntimeError):
    """Rejection sampling could not produce the requested sample count."""


class ParseError(SccodeError, ValueError):
    """A data or checkpoint file could not be parsed."""

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class BudgetExceeded(SccodeError, RuntimeError):
    """An exhaustive enumeration would exceed its configured budget."""


class UnsupportedConfiguration(SccodeError, ValueError):
    """The requested analysis is not defined for this model configuration."""
