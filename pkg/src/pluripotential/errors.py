"""Exception hierarchy shared by all modules."""


class PluriError(Exception):
    """Base class for every error raised by the package."""


class ConstructionInvalid(PluriError):
    """A model or structure violates its construction invariants."""


class ConeViolation(PluriError):
    def __init__(self, message, witness=None):
        super().__init__(message if witness is None else f"{message} (witness {witness})")
        self.witness = witness


class VolumeError(PluriError):
    """The class [omega] has non-positive volume."""


class ArityError(PluriError):
    pass


class FiberError(PluriError):
    """Two vectors do not lie in the same fiber of the projection."""


class SolverError(PluriError):
    def __init__(self, message, residual=None, bracket=None):
        super().__init__(message)
        self.residual = residual
        self.bracket = bracket


class ModelDegenerate(PluriError):
    """An optimization over the cone is unbounded."""


class EmptyEnsemble(PluriError):
    pass


class EmptySublevel(PluriError):
    pass


class IdentityViolation(PluriError):
    """Two routes to the same quantity disagree."""


class ReferenceMeasureError(PluriError):
    """The reference measure of an entropy is not positive."""


class PathError(PluriError):
    def __init__(self, message, index):
        super().__init__(f"{message} (index {index})")
        self.index = index
