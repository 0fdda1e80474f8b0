"""Exception types raised by the library."""


class UnstableKernelError(ValueError):
    """The exciting function has L1 norm >= 1."""


class NoRealSolutionError(ValueError):
    """The fixed-point equation for x(theta) has no real root (theta > theta_c)."""


class ConvergenceError(ArithmeticError):
    """An iterative solver failed to converge."""


class HorizonExhaustedError(ConvergenceError):
    """A tail integral did not settle within the largest allowed horizon."""


class SingularSaddleError(ValueError):
    """The saddle point sits at (or beyond) the critical exponent."""


class LatticeError(ValueError):
    """t * x is not an integer where the lattice expansion requires one."""
