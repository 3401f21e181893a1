"""Exception hierarchy mapped onto the CLI exit codes."""


class CommfeatError(Exception):
    """Base class for all package errors."""


class InputError(CommfeatError):
    """Bad or inconsistent user input (files, config, shapes). CLI exit code 2."""


class NumericalError(CommfeatError):
    """Optimization or numerical failure. CLI exit code 3.

    May carry the last stable model on ``.model`` when a descent diverges.
    """

    def __init__(self, message, model=None):
        super().__init__(message)
        self.model = model
