"""Shared error taxonomy, aligned with the CLI exit codes."""


class DataError(ValueError):
    """Malformed input data: traces, sidecars, scenario files, configs, stores."""


class ProtocolError(RuntimeError):
    """Wire protocol violation by a connected peer."""


class UsageError(ValueError):
    """Bad command-line invocation."""
