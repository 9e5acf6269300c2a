"""Exception types shared across the package."""


class FedmmError(Exception):
    """Base class for package errors."""


class ConfigError(FedmmError):
    """Invalid configuration; ``path`` is the dotted key path of the bad field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class ParseError(FedmmError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class DomainError(FedmmError):
    """An argument lies outside the operation's mathematical domain."""


class SolverDivergenceError(FedmmError):
    """An inner iterative solver failed to reach its tolerance."""

    def __init__(self, iterations, residual, message="inner solver did not converge"):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"{message} (iterations={iterations}, residual={residual:.3e})")


class NumericsError(FedmmError):
    """A run produced a non-finite iterate; ``round_index`` is 1-based."""

    def __init__(self, round_index, message="non-finite iterate"):
        self.round_index = round_index
        super().__init__(f"{message} at round {round_index}")
