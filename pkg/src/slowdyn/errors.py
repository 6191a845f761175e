"""Exception hierarchy shared by all modules."""


class SlowDynError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(SlowDynError, ValueError):
    """Invalid configuration. ``line`` is the 1-based source line, if known."""

    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PreconditionError(SlowDynError, ValueError):
    """An operator was called on input violating its precondition."""


class StateError(SlowDynError, ValueError):
    """A model state violates its invariants."""


class InputError(SlowDynError, ValueError):
    """Malformed input to a diagnostic (e.g. unordered history)."""


class NumericalBlowupError(SlowDynError, FloatingPointError):
    """Non-finite values appeared during time integration."""

    def __init__(self, message, t=None, twin=None):
        self.reason = message
        self.t = t
        self.twin = twin
        parts = [message]
        if t is not None:
            parts.append(f"t={t!r}")
        if twin is not None:
            parts.append(f"twin={twin}")
        super().__init__(" ".join(parts) if len(parts) == 1 else f"{message} ({', '.join(parts[1:])})")


class CheckpointError(SlowDynError):
    """Checkpoint file could not be decoded."""


class CorruptHeaderError(CheckpointError):
    pass


class TruncatedPayloadError(CheckpointError):
    pass
