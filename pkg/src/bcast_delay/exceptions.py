"""Exception types shared across the package."""


class GuardError(ValueError):
    """A size/workload guard was exceeded (input is valid but too large)."""


class DegenerateRates(ValueError):
    """Hypo-exponential rates too close together for the closed-form CDF."""


class NonConvergence(RuntimeError):
    """An iterative evaluation did not meet its stopping rule within the cap."""


class NonPrimeField(ValueError):
    """A finite-field simulation was requested for a composite field size."""


class NoCounterexample(RuntimeError):
    """No adversarial erasure trace was found within the search budget."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""
