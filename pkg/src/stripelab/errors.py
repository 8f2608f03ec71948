"""Exception types shared across the package.

Numerical failures carry a ``diagnostics`` dict so callers (and the CLI)
can report what the solver saw without re-running it.
"""


class StripelabError(Exception):
    pass


class ConfigError(StripelabError):
    """Bad or unknown configuration input. CLI exit code 2."""


class IoError(StripelabError):
    """Filesystem problem while writing results."""


class NumericalFailure(StripelabError):
    """Base for all numerical failures. CLI exit code 3."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = dict(diagnostics)


class NoNontrivialStripe(NumericalFailure):
    """Newton converged to the zero branch."""


class MaxIterations(NumericalFailure):
    pass


class NewtonDivergence(NumericalFailure):
    pass


class SingularLinearization(NumericalFailure):
    pass


class ContinuationBreakdown(NumericalFailure):
    pass


class TailBoundExceeded(NumericalFailure):
    """Spectral tail still too large at the maximum mode count."""


class OutOfBand(NumericalFailure):
    """Parameters outside the existence band or the jet trust radius."""


class BranchCrossing(NumericalFailure):
    """Tracked dispersion branch lost to an eigenvalue collision."""


class HypothesisViolated(NumericalFailure):
    """A spectral standing assumption failed at the given parameters."""


class ZeroDiffusivity(NumericalFailure):
    pass


class IdentityViolation(NumericalFailure):
    """An exact identity (parity, pairing, constancy) failed numerically."""


class DecayViolation(NumericalFailure):
    pass


class FitFailure(NumericalFailure):
    pass


class BorderlineWeight(NumericalFailure):
    """Requested weight sits on a forbidden value of the Fredholm scale."""


class NoCleanGap(NumericalFailure):
    """Singular values show no clean zero cluster."""


class SubspaceMismatch(NumericalFailure):
    pass
