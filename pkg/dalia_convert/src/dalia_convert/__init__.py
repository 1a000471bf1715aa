from dalia_convert.convert import (
    ConversionError,
    ConversionManifest,
    MissingFieldError,
    RateInferenceError,
    SubjectEntry,
    convert,
    load_manifest,
    verify,
)

__all__ = [
    "ConversionError",
    "ConversionManifest",
    "MissingFieldError",
    "RateInferenceError",
    "SubjectEntry",
    "convert",
    "load_manifest",
    "verify",
]

__version__ = "0.1.0"
