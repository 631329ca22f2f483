"""Error taxonomy shared across the package.

Four failure categories: malformed combinatorial objects, inputs too large
for an exact routine, a routine applied to a graph class it does not
support, and bad numeric parameters.
"""
from __future__ import annotations

__all__ = [
    "StochCoverError",
    "StructuralError",
    "CapacityError",
    "ApplicabilityError",
    "ParameterError",
]


class StochCoverError(Exception):
    """Base class for package-specific failures."""


class StructuralError(StochCoverError, ValueError):
    """An object violates a structural contract (bad edge list, mismatched
    parents, a matching that is not a matching, ...)."""


class CapacityError(StochCoverError, RuntimeError):
    """Input exceeds the size budget of an exact routine."""


class ApplicabilityError(StochCoverError, ValueError):
    """Operation requires a graph class the input does not belong to,
    e.g. a bipartite-only strategy on a non-bipartite graph."""


class ParameterError(StochCoverError, ValueError):
    """Numeric or configuration parameter outside its documented range."""
