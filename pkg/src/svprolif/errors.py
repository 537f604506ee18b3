"""Exception hierarchy.

``NumericalFailure`` subclasses signal that a single instance cannot be
processed (singular Gram matrix, non-separable data).  ``InconsistentVerdicts``
means two independent routes disagreed where they provably should not.
"""


class SvprolifError(Exception):
    pass


class ConfigError(SvprolifError):
    pass


class NumericalFailure(SvprolifError):
    pass


class SingularGram(NumericalFailure):
    pass


class SingularLeaveOneOut(NumericalFailure):
    def __init__(self, index, msg=None):
        self.index = index
        super().__init__(msg or f"leave-one-out Gram matrix without row {index} is singular")


class SingularCoordinate(NumericalFailure):
    pass


class NotSeparable(NumericalFailure):
    pass


class NoAdmissibleK(NumericalFailure):
    pass


class PreconditionViolated(SvprolifError):
    pass


class InconsistentVerdicts(SvprolifError):
    pass
