"""Exception hierarchy.

Every error carries a short ``category`` string; the command line prints it as
the first token of its one-line failure message.
"""


class MVDLMError(Exception):
    category = "error"


class ArgumentError(MVDLMError, ValueError):
    category = "argument"


class NumericError(MVDLMError, ArithmeticError):
    category = "numeric"


class ImproperDistributionError(MVDLMError, ValueError):
    category = "improper"


class DataError(MVDLMError, ValueError):
    category = "data"


class InsufficientDataError(DataError):
    category = "insufficient-data"


class DegenerateInputError(DataError):
    category = "degenerate"


class ConfigError(MVDLMError, ValueError):
    category = "config"


class StepError(MVDLMError):
    """Wraps an error raised inside a recursion with the time index it hit."""

    def __init__(self, t, cause, model=None):
        self.t = t
        self.cause = cause
        self.model = model
        self.category = getattr(cause, "category", "error")
        where = f"t={t}" if model is None else f"model={model}, t={t}"
        super().__init__(f"{where}: {cause}")
