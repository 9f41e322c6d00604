"""Compressive sensing with redundant Parseval dictionaries and structured sampling."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    InvalidArgumentError,
    PreconditionError,
    RedictError,
    ResourceError,
    UnsupportedError,
    ValidationError,
)
from .frames import (  # noqa: E402
    Dictionary,
    build_harmonic_frame,
    build_redundant_haar_frame,
    custom_dictionary,
    dict_apply,
    gram,
    identity_dictionary,
    parseval_defect,
)

__all__ = [
    "__version__",
    "Dictionary",
    "build_harmonic_frame",
    "build_redundant_haar_frame",
    "custom_dictionary",
    "dict_apply",
    "gram",
    "identity_dictionary",
    "parseval_defect",
    "RedictError",
    "InvalidArgumentError",
    "ValidationError",
    "ResourceError",
    "UnsupportedError",
    "PreconditionError",
]
