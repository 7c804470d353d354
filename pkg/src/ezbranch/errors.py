class EzBranchError(Exception):
    r"""Base class of every error raised by ``ezbranch``."""


class ModelAssumptionError(EzBranchError, ValueError):
    r"""Invalid input or violated model assumption; the CLI exits with code 2."""


class NumericalError(EzBranchError, ArithmeticError):
    r"""Numerical breakdown of an exact computation; the CLI exits with code 1."""


class NotNormalized(ModelAssumptionError):
    pass


class ZeroAtOrigin(ModelAssumptionError):
    pass


class NegativeMass(ModelAssumptionError):
    pass


class OutOfRange(ModelAssumptionError):
    pass


class NotSupercritical(ModelAssumptionError):
    pass


class LevelTooSmall(ModelAssumptionError):
    pass


class TooFewChildren(ModelAssumptionError):
    pass


class EmptySample(ModelAssumptionError):
    pass


class TooFewCategories(ModelAssumptionError):
    pass


class UnderpooledExpectation(ModelAssumptionError):
    pass


class TooFewSamples(ModelAssumptionError):
    pass


class AllTruncated(ModelAssumptionError):
    pass


class HardCap(ModelAssumptionError):
    r"""Exact iteration did not reach the requested tail mass within the cap.

    Almost always means a subcritical or critical offspring law slipped into
    a computation that expects a long-lived supercritical chain.
    """


class PmfFormatError(ModelAssumptionError):
    pass


class SingularSystem(NumericalError):
    pass
