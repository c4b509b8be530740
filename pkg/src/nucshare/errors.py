"""Exception hierarchy shared across the package."""


class NucshareError(Exception):
    """Base class for all package errors."""


class DomainError(NucshareError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DataError(NucshareError):
    """Input data is malformed, inconsistent, or physically impossible."""


class BuildError(NucshareError):
    """The LP cannot be assembled from the given system and scenario."""


class ExpansionLimitError(NucshareError, ValueError):
    """Requested link expansion exceeds the potential-cost curve limit."""


class SolutionError(NucshareError):
    """A derived metric was requested from a solution that cannot supply it."""
