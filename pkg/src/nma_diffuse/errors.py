"""Exception types shared across the package.

The CLI maps these onto distinct exit codes, so raising the right class
matters: bad user input, a series that did not converge, and a network
whose structure rules out the requested computation are different failures.
"""


class NmaDiffuseError(Exception):
    """Base class for all errors raised by this package."""


class InputDataError(NmaDiffuseError):
    """Malformed or inconsistent input data (CSV rows, labels, variances)."""


class StructuralError(NmaDiffuseError):
    """The network's structure forbids the request (disconnected, bipartite)."""


class NonConvergenceError(NmaDiffuseError):
    """A matrix series did not meet its tolerance within the step cap."""

    def __init__(self, message, method=None, steps=None, residual=None):
        super().__init__(message)
        self.method = method
        self.steps = steps
        self.residual = residual
