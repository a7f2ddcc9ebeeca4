"""Exception types shared across the package."""


class IngestionError(Exception):
    """An input data file is missing, malformed, or internally inconsistent."""


class ConfigError(Exception):
    """A configuration file or value is invalid."""


class CheckpointError(Exception):
    """A checkpoint file cannot be read or does not match the model."""


class ProbeError(Exception):
    """The linear probe cannot be trained on the given labels/splits."""
