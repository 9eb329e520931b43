"""Exception hierarchy shared across the package.

Every error raised by library code derives from :class:`ConvlabError` so callers
(and the CLI) can distinguish domain failures from genuine bugs.
"""

from __future__ import annotations


class ConvlabError(Exception):
    """Base class for all domain errors."""


class ModeError(ConvlabError):
    """Field modes mixed, or an operation applied in an unsupported mode."""


class PrecisionError(ConvlabError):
    """A truncated-series computation would need unknown coefficients."""


class IntervalError(ConvlabError):
    """Malformed radius interval (r1 > r2) or point outside the working interval."""


class DegenerateInputError(ConvlabError):
    """Structurally empty input (zero polynomial, rank-0 matrix, ...)."""


class SlopeCollisionError(ConvlabError):
    """A requested cut value coincides with a Newton-polygon slope."""


class NormalizationError(ConvlabError):
    """Polynomial is not monic and cannot be exactly normalized."""


class LiftingError(ConvlabError):
    """Slope factorization could not be lifted to the requested accuracy."""


class GaugeError(ConvlabError):
    """Gauge matrix is not exactly invertible over the Laurent ring."""


class CyclicSearchError(ConvlabError):
    """Deterministic cyclic-vector ladder exhausted its budget.

    Carries the list of rejected candidates in ``candidates``.
    """

    def __init__(self, message: str, candidates: list | None = None):
        super().__init__(message)
        self.candidates = candidates or []


class ParameterError(ConvlabError):
    """Invalid structural parameters (non-prime p, bad twist index, ...)."""


class SingularMatrixError(ConvlabError):
    """Exact linear solve hit a singular (or not exactly invertible) matrix."""


class InversionError(ConvlabError):
    """Pushforward radii multiset could not be inverted."""


class InversionInfeasibleError(InversionError):
    """No multiset maps onto the given one under the pushforward law."""


class AmbiguousInversionError(InversionError):
    """Mass at exactly the junk radius prevents a certified inversion.

    ``entry`` holds the offending (irlog, multiplicity) pair.
    """

    def __init__(self, message: str, entry=None):
        super().__init__(message)
        self.entry = entry


class ContainmentError(ConvlabError):
    """A point lies outside the ambient disc (or outside a required subset)."""


class IntegralityError(ConvlabError):
    """A rational was required to be a p-adic integer and is not."""


class SpectrumError(ConvlabError):
    """Residue matrix spectrum is irrational or does not split over Q."""


class IrregularityError(ConvlabError):
    """Matrix has a pole where a regular singularity was required."""


class PreparednessError(ConvlabError):
    """Exponent spectrum has integer differences where prepared input is required."""


class ContractionError(ConvlabError):
    """Iteration hypothesis violated: no positive contraction gap."""


class BudgetError(ConvlabError):
    """An iteration or refinement budget was exhausted before convergence."""


class SchemaError(ConvlabError):
    """Input file violates the documented JSON schema.

    ``pointer`` is a JSON-pointer-style path to the offending element.
    """

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(f"{pointer}: {message}" if pointer else message)
        self.pointer = pointer
        self.pointer = pointer
