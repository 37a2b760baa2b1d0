"""Exception hierarchy shared by all ldlkit modules."""


class LdlError(Exception):
    """Base class for all ldlkit errors."""


class ValidationError(LdlError):
    """Bad model, system, or configuration input."""


class ConfigError(ValidationError):
    """Config file violates the documented schema; message carries the key path."""


class DisjointSupportError(ValidationError):
    """Energy bands overlap; the model requires disjoint supports."""


class IllFormedTermError(LdlError):
    """A symbolic term violates a structural precondition, e.g. a bound
    variable appearing in two incompatible deltas."""


class KernelProductError(LdlError):
    """A product of singular kernels outside the closed commutator table.

    These products are never simplified heuristically; they are a hard error
    so the caller can report the offending term.
    """


class UnevaluatedCommutatorError(LdlError):
    """Commutator has no rewrite rule (e.g. with the evolution symbol at a
    time that is not known to be later)."""


class SingularCoefficientError(LdlError):
    """1 + (gamma*gamma)(E) D_eps D_{1-eps} is numerically singular."""


class QuadratureError(LdlError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class ToleranceError(LdlError):
    """A computed residual exceeded its contract tolerance."""


class ConvergenceError(LdlError):
    """An iterative limit (Abel average, lambda sweep) did not converge;
    carries diagnostic values for both attempts."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class UnitarityError(ToleranceError):
    """One-particle propagator lost unitarity beyond tolerance."""


class DomainError(LdlError):
    """Evaluation requested outside the defined domain (e.g. n_eps off
    support, xi(E) where both densities vanish)."""
