"""Exception types shared across the package."""


class JointSparseError(Exception):
    """Base class for every package-specific error."""


class DimensionMismatch(JointSparseError, ValueError):
    """Operator and vector shapes are incompatible."""


class InvalidHyperParameter(JointSparseError, ValueError):
    """Hyper-model parameters violate a sign or positivity constraint."""


class InvalidEta(InvalidHyperParameter):
    """Coupling constant eta has the wrong sign for the requested update."""


class InvalidShape(InvalidHyperParameter):
    """Shape parameters make the hyper-parameter update ill-posed."""


class NonPositiveTheta(JointSparseError, ValueError):
    """A hyper-parameter vector has entries <= 0."""


class NotPositiveDefinite(JointSparseError, ValueError):
    """A matrix expected to be symmetric positive definite is not."""


class IndexOutOfRange(JointSparseError, IndexError):
    """A sampling index set is empty, duplicated, or out of bounds."""


class SingularSystem(JointSparseError, RuntimeError):
    """Normal equations are numerically rank deficient."""


class NonFiniteValue(JointSparseError, RuntimeError):
    """An iterative solver produced a NaN or infinity."""


class NoPositiveRoot(JointSparseError, RuntimeError):
    """The hyper-parameter stationarity equation has no positive root."""


class ZeroTruth(JointSparseError, ValueError):
    """Relative error is undefined because the reference signals are all zero."""


class NotApplicable(JointSparseError, ValueError):
    """The requested quantity is undefined for this parameter regime."""


class ValidationError(JointSparseError, ValueError):
    """User-supplied input files or options failed validation."""
