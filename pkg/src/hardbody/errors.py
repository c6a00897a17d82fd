"""Exception types shared across the library.

Every operational failure mode has its own class so callers (and the CLI)
can map failures to exit codes without string matching.
"""

from __future__ import annotations


class HardBodyError(Exception):
    """Base class for all library errors."""


class InvalidConfig(HardBodyError):
    """A configuration record violates its invariants."""


class NonUnitDirection(HardBodyError):
    """A direction that must be unit-norm is not (tolerance 1e-9)."""


class IterationLimit(HardBodyError):
    """An iterative kernel failed to reach its tolerance within budget."""


class NonPositiveT(HardBodyError):
    """The hull/ball mixing parameter t must be positive."""


class EtaTooLarge(HardBodyError):
    """The shift parameter eta exceeds the operation's admissible range."""


class EtaZero(HardBodyError):
    """eta = 0 makes a closed-form cone volume infinite."""


class NotInBody(HardBodyError):
    """A point claimed to lie in a body fails the membership test."""


class HOutOfRange(HardBodyError):
    """The polar-shift height h lies outside [-1/eta, 1/(1-eta)]."""


class OriginNotInterior(HardBodyError):
    """An operation requiring 0 strictly inside the body was given one where it is not."""


class DimensionTooLarge(HardBodyError):
    """Exact enumeration requested above the supported dimension budget."""


class CenterNotInterior(HardBodyError):
    """A sandwich-ratio center is not strictly inside the candidate polytope."""


class StartNotInterior(HardBodyError):
    """A Markov-chain start point is not strictly inside the body."""


class ChordDegenerate(HardBodyError):
    """A hit-and-run chord came out shorter than 1e-12."""


class ContainmentViolated(HardBodyError):
    """A Monte-Carlo sample of the target body fell outside the reference body."""


class RootNotBracketed(HardBodyError):
    """A 1-D root finder received a bracket whose endpoints have equal sign."""
