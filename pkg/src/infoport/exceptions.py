"""Exception types raised by the engine."""


class InfoportError(Exception):
    """Base class for all engine errors."""


class ConfigError(InfoportError):
    """A run configuration could not be parsed or validated."""

    def __init__(self, message, key=None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class NonFiniteState(InfoportError):
    """A simulated path left the representable range."""

    def __init__(self, path_index, step):
        self.path_index = path_index
        self.step = step
        super().__init__(
            f"non-finite state on path {path_index} at step {step}"
        )


class UnsupportedEnlargement(InfoportError):
    """Requested an information model that needs a correlated change point."""


class DegenerateLikelihood(InfoportError):
    """Observation volatility underflowed in the change-point filter."""


class OutOfRange(InfoportError):
    """Argument outside the domain of a marginal-inverse function."""


class NoConvergence(InfoportError):
    """A bracketed root search failed to converge."""


class BracketFailure(NoConvergence):
    """Could not bracket a root after repeated bound doubling."""


class Unattainable(InfoportError):
    """No cash add-on can bring the expected loss below the benchmark."""


class NonFinite(InfoportError):
    """A Monte Carlo functional overflowed."""


class Infeasible(InfoportError):
    """The risk benchmark is below the attainable minimum."""

    def __init__(self, eps, eps_min):
        self.eps = eps
        self.eps_min = eps_min
        super().__init__(
            f"infeasible risk benchmark {eps} < attainable minimum {eps_min}"
        )


class IllConditioned(InfoportError):
    """Regression normal equations are numerically singular."""


class QuadratureFailure(InfoportError):
    """Adaptive refinement of the wealth-path quadrature disagreed."""


class OrderViolation(InfoportError):
    """Filtration pair passed in the wrong (fine, coarse) order."""


class NoRoot(InfoportError):
    """Indifference-value bisection could not bracket a root."""

    def __init__(self, lo, hi, f_lo, f_hi):
        self.bracket = (lo, hi)
        super().__init__(
            f"no sign change on [{lo}, {hi}] (f={f_lo}, {f_hi})"
        )
