"""Error taxonomy shared across the pipeline.

Exit-code mapping used by the CLI: 0 ok, 2 config error, 3 contract
violation, 4 numeric divergence.
"""


class TopoPriorError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(TopoPriorError):
    """Bad configuration, bad input file, or missing upstream artifact."""

    exit_code = 2


class ContractViolation(TopoPriorError):
    """An operation received input that breaks a documented precondition."""

    exit_code = 3


class DivergenceError(TopoPriorError):
    """Training produced a non-finite loss; carries last finite diagnostics."""

    exit_code = 4

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
