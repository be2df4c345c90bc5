"""
Exception hierarchy for the cde library.

Every error raised on purpose by cde derives from CdeError so that the CLI and
the HTTP layer can map failures to exit codes / status codes in one place.
"""
from typing import Optional


class CdeError(Exception):
    """Base class for all cde errors."""

    exit_code = 2


class QueryError(CdeError):
    """A query or argument refers to unknown ids, overlapping sets or invalid states."""


class GraphStructureError(CdeError):
    """A graph, network or model violates a structural invariant."""


# The text format and CLI talk about "semantic errors"; same thing.
SemanticError = GraphStructureError


class ParseError(CdeError):
    """Syntax error in the graph text format, with a 1-based location."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        location = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(f"{location}{message}")


class ProbabilityError(CdeError):
    """A probability table or distribution is not a valid distribution."""


class ConsistencyError(CdeError):
    """Two specifications that must agree (e.g. coupling marginals and CPT rows) do not."""


class ScopeError(CdeError):
    """The operation is not defined for the given input (e.g. non-binary PC)."""


class CapacityError(CdeError):
    """A state space or enumeration exceeds the configured capacity guard."""

    exit_code = 1


class ConditioningError(CdeError):
    """Conditioning on an event of (numerically) zero probability."""

    exit_code = 1
