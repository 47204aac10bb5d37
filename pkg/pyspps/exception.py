class SppsException(Exception):
    pass


class InvalidArgumentException(SppsException):
    pass


class InvalidWindowException(SppsException):
    pass


class IndexOutOfRangeException(SppsException):
    pass


class InvalidCoefficientException(SppsException):
    pass


class ArithmeticModeException(SppsException):
    pass


class NonRealCoefficientsException(SppsException):
    pass


class SeedException(SppsException):
    pass


class SeedVanishesException(SeedException):
    pass


class SeedNotFoundException(SeedException):
    def __init__(self, message: str, indices=None):
        super().__init__(message)
        self.indices = list(indices or [])


class SeedResidualException(SeedException):
    pass


class InsufficientOrderException(SppsException):
    pass


class TableMismatchException(SppsException):
    pass


class TableOverflowException(SppsException):
    pass


class DegenerateBoundaryException(SppsException):
    pass


class NoConvergenceException(SppsException):
    def __init__(self, message: str, roots=None, unconverged=None):
        super().__init__(message)
        self.roots = roots
        self.unconverged = list(unconverged or [])


class NotAnEigenvalueException(SppsException):
    pass


class GridTooCoarseException(SppsException):
    pass


class SignConditionException(SppsException):
    pass


class SerializeException(SppsException):
    pass


class DeserializeException(SppsException):
    pass


class ProblemFileException(DeserializeException):
    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.reason = message
        self.path = path


class UsageException(InvalidArgumentException):
    pass
