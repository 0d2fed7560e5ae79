"""Exception types raised across the package.

Every error the library raises deliberately derives from :class:`RmstError`
so callers can catch one base class at an API boundary.  The CLI maps these
onto process exit codes (input problems vs. numeric failures).
"""

from __future__ import annotations


class RmstError(Exception):
    """Base class for all errors raised by rmstkit."""


class InvalidInput(RmstError, ValueError):
    """Malformed or out-of-domain argument (shape, range, or type)."""


class RestrictionTimeBeyondData(RmstError):
    """The restriction time exceeds the largest observed follow-up time.

    ``subject_index`` is set when the failure only occurs after removing a
    single subject (leave-one-out refits), identifying the offending subject
    in the caller's ordering.
    """

    def __init__(self, tau: float, limit: float, subject_index: int | None = None):
        self.tau = tau
        self.limit = limit
        self.subject_index = subject_index
        where = (
            f" after removing subject {subject_index}"
            if subject_index is not None
            else ""
        )
        super().__init__(
            f"restriction time {tau!r} exceeds the largest observed time "
            f"{limit!r}{where}"
        )


class SingularDesign(RmstError):
    """Design matrix is rank deficient or numerically singular."""


class DegenerateCovariate(RmstError):
    """A covariate (or response) has zero variance where a correlation is needed."""


class ParseError(RmstError):
    """A data file could not be parsed; ``line`` is 1-based (header is line 1)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class ConfigError(RmstError):
    """A scenario configuration file is invalid; names the offending key."""


class ScenarioError(RmstError):
    """A simulation scenario could not be completed (too many failed replicates)."""
