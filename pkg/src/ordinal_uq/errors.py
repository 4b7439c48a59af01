"""Exception hierarchy. Everything derives from ``OrdinalUQError``."""


class OrdinalUQError(Exception):
    pass


class ConfigError(OrdinalUQError, ValueError):
    """Invalid parameters or configuration."""


class NumericalFailure(OrdinalUQError, ArithmeticError):
    """Base for failures of a numerical routine."""


class TieError(OrdinalUQError, ValueError):
    pass


class DomainError(OrdinalUQError, ValueError):
    pass


class ParseError(OrdinalUQError, ValueError):
    def __init__(self, message, line=None, column=None):
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)
        self.line = line
        self.column = column


class TripletIndexError(OrdinalUQError, IndexError):
    pass


class RankError(OrdinalUQError, ValueError):
    pass


class UnsupportedError(OrdinalUQError, TypeError):
    pass


class NumericalError(NumericalFailure):
    pass


class EmptyTripletsError(OrdinalUQError, ValueError):
    pass


class DegenerateError(NumericalFailure):
    pass


class NonTerminationError(NumericalFailure):
    pass


class NotAlignedError(OrdinalUQError, ValueError):
    pass


class ThresholdError(ConfigError):
    pass


class BatchTooLargeError(ConfigError):
    pass


class CholeskyError(NumericalFailure):
    pass


class ShapeError(OrdinalUQError, ValueError):
    pass


class DisconnectedGraphError(NumericalFailure):
    pass
