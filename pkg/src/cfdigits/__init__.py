"""Continued-fraction digits of real constants: extraction, predicted
digit statistics, a Gauss-measure sampler and block tests."""

from .cf import CFDigitStream, Convergent, convergents, evaluate, expand_rational
from .errors import (CapacityError, CFError, DomainError, EntropyError, InsufficientDataError,
                     ParseError, ShortfallError, ValidationError)
from .sources import CertifiedInterval, extract_digits, parse_const

__version__ = "0.1.0"
