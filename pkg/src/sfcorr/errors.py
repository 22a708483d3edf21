"""Exception hierarchy shared by every module."""


class SfcorrError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(SfcorrError, ValueError):
    pass


class OutOfRange(SfcorrError, ValueError):
    pass


class ConvergenceFailure(SfcorrError, RuntimeError):
    pass


class NotUnitary(SfcorrError, ValueError):
    pass


class NotHermitian(SfcorrError, ValueError):
    pass


class NotNormalized(SfcorrError, ValueError):
    pass


class DegenerateReadout(SfcorrError, ValueError):
    """A self-fidelity variance vanishes, so the correlation is undefined."""


class InvalidAxis(SfcorrError, ValueError):
    pass


class GridTooSmall(SfcorrError, ValueError):
    pass


class ParseError(SfcorrError, ValueError):
    pass
