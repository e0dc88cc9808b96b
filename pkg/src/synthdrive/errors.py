"""Exception hierarchy shared across the pipeline.

The CLI maps these onto exit codes: configuration problems exit 2, I/O and
ingestion problems exit 3, data validation problems exit 4.
"""


class SynthDriveError(Exception):
    exit_code = 1


class ConfigError(SynthDriveError, ValueError):
    exit_code = 2


class IngestionError(SynthDriveError, OSError):
    exit_code = 3


class ValidationError(SynthDriveError, ValueError):
    exit_code = 4


class ConversionError(ValidationError):
    """A SOLO annotation could not be mapped onto a YOLO class id."""


class FormatError(ValidationError):
    """A file did not match its documented layout."""


class SceneStructureError(SynthDriveError, RuntimeError):
    """The scene graph stopped being a forest (cycle or double parent)."""
