"""Semi-device-independent verification of the Bell state and GHZ states."""

from .errors import BellCertError, InvalidArgument, NumericFailure, Unsupported
from .strategy import Strategy, make_named, parse_protocol

__all__ = [
    "BellCertError", "InvalidArgument", "NumericFailure", "Unsupported",
    "Strategy", "make_named", "parse_protocol",
]
__version__ = "0.1.0"
