"""Exception hierarchy shared by all skinlat modules."""


class SkinlatError(Exception):
    """Base class for every error raised by skinlat."""


class ParameterError(SkinlatError, ValueError):
    """Invalid model or experiment parameters."""


class IndexRangeError(SkinlatError, IndexError):
    """Lattice index outside ``1..L``."""


class ShapeError(SkinlatError, ValueError):
    """Array with the wrong length or dimension."""


class SingularParameterError(ParameterError):
    """A derived quantity (logarithm, square root) is undefined, e.g. zero hopping."""


class ConvergenceError(SkinlatError, RuntimeError):
    """An iterative kernel did not reach its tolerance.

    Attributes
    ----------
    worst_residual : float
        Largest residual observed when giving up.
    """

    def __init__(self, message, worst_residual=float("nan")):
        super().__init__(message)
        self.worst_residual = worst_residual


class DegenerateLoopError(SkinlatError, ValueError):
    """The spectral loop passes through the winding base point."""


class SamplingError(SkinlatError, RuntimeError):
    """Adaptive refinement of a winding integral did not stabilise."""


class NearSingularError(SkinlatError, ValueError):
    """Energy too close to a branch point of the lattice Green function."""


class ClassificationError(SkinlatError, RuntimeError):
    """No clear energy gap separates bound from scattering states."""


class FitError(SkinlatError, ValueError):
    """Too few usable points for an exponential fit."""


class GaplessError(SkinlatError, ValueError):
    """The two-band Bloch spectrum closes its gap, the winding is undefined."""


class InfeasibleParametersError(ParameterError):
    """No circuit component values realize the requested hoppings."""


class EquivalenceError(SkinlatError, RuntimeError):
    """Circuit Laplacian is not affinely equivalent to the Hamiltonian.

    Attributes
    ----------
    report : skinlat.circuit.EquivalenceReport
        Fit that failed, including the worst entry location.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
