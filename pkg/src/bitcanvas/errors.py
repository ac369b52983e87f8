"""Exception types shared across the package."""


class BitcanvasError(Exception):
    """Base class for all errors raised by this package."""


class ProfileError(BitcanvasError):
    """Device profile is malformed or violates an invariant."""


class ContainerError(BitcanvasError):
    """Bitstream container cannot be parsed or synthesized."""


class ImageCodecError(BitcanvasError):
    """Image encoding/decoding failure."""


class AnnotationError(BitcanvasError):
    """Annotation file or coordinate conversion failure."""


class DatasetError(BitcanvasError):
    """Dataset manifest or generation failure."""


class EvalError(BitcanvasError):
    """Prediction/ground-truth evaluation failure."""
