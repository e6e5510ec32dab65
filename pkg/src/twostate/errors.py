"""Exception types raised across the package."""

from __future__ import annotations


class TwoStateError(Exception):
    """Base class for every error raised by :mod:`twostate`."""


class NotHermitian(TwoStateError, ValueError):
    pass


class NotNormalized(TwoStateError, ValueError):
    pass


class BadDimension(TwoStateError, ValueError):
    pass


class BadSubsystem(TwoStateError, ValueError):
    pass


class DimMismatch(TwoStateError, ValueError):
    pass


class NotCPTP(TwoStateError, ValueError):
    """A channel flagged physical whose Kraus operators are not complete."""


class InconsistentSelection(TwoStateError, ValueError):
    """Pre- and post-selection leave every intermediate branch with zero weight."""


class EmptyEnsemble(InconsistentSelection):
    """No branch of a timeline survives post-selection."""


class InsufficientShots(TwoStateError, RuntimeError):
    """Sampling accepted no shot although the exact ensemble is non-empty."""


class BranchCapExceeded(TwoStateError, RuntimeError):
    pass


class UnknownExperiment(TwoStateError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else ""


class ScenarioError(TwoStateError, ValueError):
    """A scenario document failed to parse.

    ``problems`` holds ``(location, message)`` pairs, where location is a
    JSON-pointer-like path such as ``events/3/type``.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(f"{loc}: {msg}" for loc, msg in self.problems))


class ValidationError(TwoStateError, ValueError):
    """A timeline failed structural validation.

    ``issues`` is the full list returned by :func:`twostate.timeline.validate`.
    """

    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))


class GuardViolation(ValidationError):
    pass


class UnknownLabel(ValidationError):
    pass
