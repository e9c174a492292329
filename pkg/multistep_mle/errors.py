"""Exception hierarchy shared by every module.

The command line maps the three branches to exit codes:
ConfigError -> 1, NumericalError -> 2, AcceptanceError -> 3.
"""


class MultistepMLEError(Exception):
    """Base class for errors raised by multistep_mle."""


class ConfigError(MultistepMLEError):
    """Invalid user input: bounds, delta ranges, unknown ids, unreadable config files."""


class WindowError(ConfigError):
    """A requested tau lies outside [tau_delta, 1], or tau intervals are malformed."""


class NumericalError(MultistepMLEError):
    """A computation could not produce a finite, meaningful result."""


class SimulationDivergedError(NumericalError):
    def __init__(self, step, value=None):
        self.step = int(step)
        self.value = value
        message = f"simulation diverged at step {self.step}"
        if value is not None:
            message += f" (state {value!r})"
        super().__init__(message)


class ErgodicityViolationError(NumericalError):
    """Invariant density support could not be truncated within |x| <= 1e3."""


class QuadratureError(NumericalError):
    pass


class DegenerateFisherError(NumericalError):
    def __init__(self, min_eigenvalue, theta=None):
        self.min_eigenvalue = float(min_eigenvalue)
        self.theta = theta
        super().__init__(
            f"Fisher information is degenerate: smallest eigenvalue {self.min_eigenvalue:.3e}"
            + (f" at theta={theta}" if theta is not None else "")
        )


class DegeneratePreliminaryError(NumericalError):
    pass


class InsufficientDataError(NumericalError):
    pass


class ExperimentFailedError(NumericalError):
    def __init__(self, failures, replicates, max_rate):
        self.failures = failures
        self.replicates = replicates
        self.max_rate = max_rate
        super().__init__(
            f"{failures} of {replicates} replicates failed "
            f"(allowed rate {max_rate:.1%})"
        )


class AcceptanceError(MultistepMLEError):
    def __init__(self, failed_checks):
        self.failed_checks = list(failed_checks)
        super().__init__("acceptance checks failed: " + ", ".join(self.failed_checks))
