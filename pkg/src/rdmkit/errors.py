"""Exception hierarchy shared by every rdmkit module."""


class RdmError(Exception):
    """Base class for all computation errors raised by rdmkit."""


class NotHermitian(RdmError):
    pass


class NegativeEigenvalue(RdmError):
    """A state has an eigenvalue below the clamping tolerance."""


class DimensionOverflow(RdmError):
    """Dense matrix would exceed the configured entry cap."""


class BadArity(RdmError):
    """Particle numbers, tensor orders or dimensions are inconsistent."""


class DegenerateState(RdmError):
    """A normalisation coefficient vanishes where a positive one is required."""


class NotInvertible(RdmError):
    pass


class NormBoundViolated(RdmError):
    pass
