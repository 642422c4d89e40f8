"""Exception hierarchy. Everything raised on purpose derives from PartwiseError."""


class PartwiseError(Exception):
    pass


class ParameterError(PartwiseError, ValueError):
    """A caller-supplied parameter is out of its documented range."""


class DataError(PartwiseError):
    """Input data (files, datasets, payloads) is malformed or unusable."""


class FeatureFileError(DataError):
    """Base for feature-file decode failures."""


class BadMagicError(FeatureFileError):
    pass


class UnsupportedVersionError(FeatureFileError):
    pass


class TruncatedFileError(FeatureFileError):
    pass


class PayloadSizeError(FeatureFileError):
    """Payload length disagrees with the dimensions promised by the header."""


class ModelFormatError(DataError):
    """Model-file decode failure (bad magic, version, or section layout)."""


class DegenerateFieldError(DataError):
    """A scalar field has too little value diversity for the requested operation."""


class TrainingError(PartwiseError):
    """Training cannot proceed (empty dataset, all components filtered, ...)."""
