"""Exception hierarchy shared by all modules."""


class MisoError(Exception):
    """Base class for every error raised by this package."""


class InvalidDimensions(MisoError, ValueError):
    pass


class DimensionMismatch(MisoError, ValueError):
    pass


class NonHermitian(MisoError, ValueError):
    pass


class NonPositivePower(MisoError, ValueError):
    pass


class SingularSystem(MisoError, ArithmeticError):
    pass


class SingularPilotGram(MisoError, ArithmeticError):
    """The pilot-projected covariance carries no usable energy."""


class RankDeficient(MisoError, ArithmeticError):
    """The Gram matrix of the estimated channel is not invertible.

    For LS estimates this is the expected outcome whenever fewer pilots than
    users are sent (``T_dl < K``).
    """


class ZeroMatrix(MisoError, ValueError):
    pass


class InvalidPrelog(MisoError, ValueError):
    pass


class UnknownPreset(MisoError, KeyError):
    pass


class ConfigParseError(MisoError, ValueError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class ConfigValidationError(MisoError, ValueError):
    pass
