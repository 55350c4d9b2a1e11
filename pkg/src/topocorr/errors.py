"""Exception types shared across the package."""


class TopocorrError(Exception):
    """Base class for all package-specific errors."""


class DuplicateLabel(TopocorrError):
    """Two tensor factors were given the same subsystem label."""


class UnknownSubsystem(TopocorrError):
    """A subsystem label does not resolve to any factor of the layout."""


class OverlappingRegions(TopocorrError):
    """Region sets that must be disjoint overlap."""


class InvalidState(TopocorrError):
    """Matrix fails the density-matrix invariants (hermiticity/PSD/trace)."""


class SupportMismatch(TopocorrError):
    """supp(rho) is not contained in supp(sigma); relative entropy is +inf."""


class InvalidLattice(TopocorrError):
    """Torus dimensions too small or region indices out of range."""


class DenseLimitExceeded(TopocorrError):
    """Requested dense object would exceed the dense-path size guard."""


class InconsistentMarginal(TopocorrError):
    """Provided marginal does not match the partial trace of the joint state."""


class NotMarkov(TopocorrError):
    """State is not a quantum Markov state at the requested tolerance."""


class DecompositionFailed(TopocorrError):
    """Block decomposition could not be constructed or validated."""


class ConvergenceFailure(TopocorrError):
    """Iterative solver did not reach tolerance within max_iter.

    Carries the best iterate and diagnostics so callers can inspect or
    continue from it.
    """

    def __init__(self, message, best_state=None, diagnostics=None):
        super().__init__(message)
        self.best_state = best_state
        self.diagnostics = diagnostics or {}


class AssumptionViolated(TopocorrError):
    """A zero-correlation precondition fails at the requested tolerance.

    ``quantities`` maps the offending residual names to their values.
    """

    def __init__(self, message, quantities=None):
        super().__init__(message)
        self.quantities = dict(quantities or {})


class DegeneracyAmbiguous(TopocorrError):
    """Eigenvalue grouping is ambiguous at the given relative tolerance."""


class ConfigError(TopocorrError):
    """Experiment configuration failed validation."""
