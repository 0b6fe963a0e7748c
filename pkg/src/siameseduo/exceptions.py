"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """Invalid shapes, labels or hyper-parameters handed to a component."""


class TrainingError(FloatingPointError):
    """A gradient or parameter became non-finite during an update."""


class IngestionError(ValueError):
    """A delimited data file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigParseError(ValueError):
    """An experiment configuration contains an unknown key or bad value."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class AggregationError(ValueError):
    """Run logs cannot be combined (e.g. unequal lengths)."""


class ExperimentError(RuntimeError):
    """A run failed; the message names the learner, dataset and seed."""
