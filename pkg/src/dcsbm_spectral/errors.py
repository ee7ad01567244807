"""Exception types shared by all modules."""


class DcsbmError(Exception):
    """Base class for every error raised by the package."""


class InvalidParams(DcsbmError, ValueError):
    pass


class InvalidProbability(DcsbmError, ValueError):
    pass


class EmptyGraph(DcsbmError, ValueError):
    pass


class ParseError(DcsbmError, ValueError):
    def __init__(self, msg, line=None):
        if line is not None:
            msg = f"line {line}: {msg}"
        super().__init__(msg)
        self.line = line


class LabelMismatch(DcsbmError, ValueError):
    pass


class ZeroDegree(DcsbmError, ValueError):
    pass


class MissingLatent(DcsbmError, ValueError):
    pass


class InvalidMeasure(DcsbmError, ValueError):
    pass


class NotConverged(DcsbmError, ArithmeticError):
    pass


class BracketFailure(DcsbmError, ArithmeticError):
    pass


class RootNotBracketed(DcsbmError, ArithmeticError):
    pass


class DegenerateMoment(DcsbmError, ArithmeticError):
    pass


class DegenerateDenominator(DcsbmError, ArithmeticError):
    pass


class NotInformative(DcsbmError, ValueError):
    pass


class DegenerateVariance(DcsbmError, ValueError):
    pass


class NoIsolatedEigenvalue(DcsbmError, ArithmeticError):
    pass


class EmDegenerate(DcsbmError, ArithmeticError):
    pass


class EmptyClass(DcsbmError, ValueError):
    pass


class KMismatch(DcsbmError, ValueError):
    pass
