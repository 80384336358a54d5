"""Exact continued-fraction arithmetic over Python integers.

A stream ``[a0; a1, a2, ...]`` keeps the leading term apart from the
digits: ``a0`` may be any integer, digits are positive.  Rationals are
``fractions.Fraction`` (always reduced, positive denominator).
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

from . import fastcf
from .errors import DomainError, ShortfallError


@dataclass(frozen=True)
class CFDigitStream:
    """Leading term plus digits of a (prefix of a) continued fraction.

    ``finite`` means the digits are the *whole* expansion of a rational
    number; otherwise they are a prefix of an infinite expansion.  Finite
    streams are stored in canonical form (last digit > 1).  Use
    :meth:`normalized` to build one from a possibly non-canonical list.
    """

    leading: int
    digits: tuple
    finite: bool = False
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not isinstance(self.digits, tuple):
            object.__setattr__(self, "digits", tuple(self.digits))
        if self.digits and min(self.digits) < 1:
            raise DomainError("continued-fraction digits must be >= 1")
        if self.finite and len(self.digits) > 1 and self.digits[-1] == 1:
            raise DomainError("finite stream not canonical: last digit is 1 (use normalized())")
        if self.finite and len(self.digits) == 1 and self.digits[0] == 1:
            raise DomainError("[a0; 1] is the non-canonical form of a0 + 1")

    @classmethod
    def normalized(cls, leading, digits, finite=True, provenance=None):
        """Fold a trailing 1 of a finite expansion into its predecessor."""
        digits = list(digits)
        if finite and digits and digits[-1] == 1:
            digits.pop()
            if digits:
                digits[-1] += 1
            else:
                leading += 1
        return cls(leading, tuple(digits), finite, provenance or {})

    @property
    def count(self):
        return len(self.digits)

    def __len__(self):
        return len(self.digits)

    def prefix(self, n):
        """First ``n`` digits, as a non-finite stream (a prefix is never the whole)."""
        if n > len(self.digits):
            raise ShortfallError(n, len(self.digits))
        return CFDigitStream(self.leading, self.digits[:n], False, dict(self.provenance))

    def __str__(self):
        body = ",".join(map(str, self.digits[:12]))
        more = ",..." if len(self.digits) > 12 or not self.finite else ""
        return f"[{self.leading};{body}{more}]"


class Convergent(NamedTuple):
    p: int
    q: int
    index: int

    def as_fraction(self):
        return Fraction(self.p, self.q)


def expand_rational(num, den=1):
    """Canonical finite expansion of ``num/den``.

    >>> expand_rational(355, 113)
    CFDigitStream(leading=3, digits=(7, 16), finite=True, provenance={})
    """
    if den == 0:
        raise DomainError("denominator must be nonzero")
    if den < 0:
        num, den = -num, -den
    leading, digits = fastcf.expand(num, den)
    return CFDigitStream(leading, tuple(digits), True)


def convergents(stream, n=None, include_seed=False):
    """Convergents ``p_k/q_k`` for k = 0..n (and k = -1 if ``include_seed``).

    Uses the recurrences with seeds ``(p_-1, q_-1) = (1, 0)`` and
    ``(p_0, q_0) = (a0, 1)``.
    """
    if n is None:
        n = len(stream.digits)
    if n < 0:
        raise DomainError("n must be >= 0")
    if n > len(stream.digits):
        raise ShortfallError(n, len(stream.digits))
    p_prev, q_prev = 1, 0
    p, q = stream.leading, 1
    out = [Convergent(1, 0, -1)] if include_seed else []
    out.append(Convergent(p, q, 0))
    for k in range(1, n + 1):
        a = stream.digits[k - 1]
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
        out.append(Convergent(p, q, k))
    return out


def evaluate(stream, n=None):
    """``[a0; a1, ..., an]`` as a reduced Fraction (all digits if n is None)."""
    if n is None:
        n = len(stream.digits)
    if n > len(stream.digits):
        raise ShortfallError(n, len(stream.digits))
    m00, m01, m10, m11 = fastcf.product(stream.digits, 0, n)
    # [a0; x] = a0 + 1/x with x = (m00/m10); m10 == 0 only for n == 0.
    if n == 0:
        return Fraction(stream.leading)
    return Fraction(stream.leading) + Fraction(int(m10), int(m00))


def gauss_map_step(r):
    """One step of the Gauss map on ``0 < r < 1``: returns ``(floor(1/r), 1/r - floor(1/r))``."""
    r = Fraction(r)
    if not 0 < r < 1:
        raise DomainError(f"Gauss map needs 0 < r < 1, got {r}")
    inv = 1 / r
    digit = inv.numerator // inv.denominator
    return digit, inv - digit


def gauss_expand(x, n):
    """Up to ``n`` digits of a rational by iterating the Gauss map (slow reference path)."""
    x = Fraction(x)
    a0 = x.numerator // x.denominator
    r = x - a0
    digits = []
    while r and len(digits) < n:
        d, r = gauss_map_step(r)
        digits.append(d)
    return CFDigitStream.normalized(a0, digits, finite=not r)


def from_convergents(convs: Sequence[Convergent]):
    """Invert the recurrence: recover ``[a0; a1, ...]`` from consecutive convergents."""
    if not convs:
        raise DomainError("need at least one convergent")
    convs = [c for c in convs if c.index >= 0]
    leading = convs[0].p
    digits = []
    q_prev, q = 0, 1
    for c in convs[1:]:
        a, rem = divmod(c.q - q_prev, q)
        if rem or a < 1:
            raise DomainError(f"convergent {c.p}/{c.q} does not follow the recurrence")
        digits.append(a)
        q_prev, q = q, c.q
    return CFDigitStream(leading, tuple(digits), False)
