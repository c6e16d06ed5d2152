"""Exception hierarchy. Every error raised on purpose by gclab derives from GclabError."""


class GclabError(Exception):
    pass


# numerics
class PoleDetected(GclabError):
    """A state component crossed the pole threshold: a movable pole, not a solver failure."""

    def __init__(self, param, state, msg=None):
        self.param = param
        self.state = state
        super().__init__(msg or f"pole detected near parameter {param:.12g}")


class StepUnderflow(GclabError):
    pass


class MaxStepsExceeded(GclabError):
    pass


class GridTooSmall(GclabError):
    pass


class InsufficientData(GclabError):
    pass


class PathError(GclabError):
    pass


class ExtrapolationBeyondTrajectory(GclabError):
    pass


# painleve
class SingularPoint(GclabError):
    pass


class FormMismatch(GclabError):
    pass


class DegenerateDenominator(GclabError):
    pass


class SingularRSystem(GclabError):
    pass


class BranchCollision(GclabError):
    pass


# gauss_codazzi
class BoundaryPoint(GclabError):
    pass


class DegenerateJacobian(GclabError):
    pass


class ConditionViolated(GclabError):
    pass


class FieldVanishes(GclabError):
    pass


# reductions
class SingularState(GclabError):
    pass


class ConstraintViolated(GclabError):
    pass


class QuadraturePathSingular(GclabError):
    pass


class ProductMismatch(GclabError):
    pass


class BranchPreconditionFailed(GclabError):
    pass


class DomainSingular(GclabError):
    pass


# lie
class TableMismatch(GclabError):
    def __init__(self, pairs):
        self.pairs = pairs
        super().__init__("commutator table mismatch: " + ", ".join(map(str, pairs)))


class ResampleOutOfDomain(GclabError):
    pass
