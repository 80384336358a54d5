"""Certified real-number sources and provably correct digit extraction.

A source yields enclosures ``lo < x < hi`` with rational endpoints at any
requested binary precision.  Digits are read off an enclosure only where
both endpoints agree, so every emitted digit is a true digit of ``x``.

Extraction keeps the digits emitted so far as one Möbius matrix ``M``
(``x = M(y)``, ``y`` the tail ``[a_{j+1}; a_{j+2}, ...]``).  Each segment
maps the source enclosure through ``M^-1`` to get an enclosure of ``y``,
rounds it outward to a short dyadic pair, and expands both ends.  When
the source enclosure is the bottleneck the precision doubles; ``M`` stays
valid, so work restarts from the last segment, not from scratch.
"""

import json
import logging
import math
import os
import re
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
from gmpy2 import mpz

from . import digitfile, fastcf
from .cf import CFDigitStream, expand_rational
from .errors import CapacityError, DomainError, ParseError, ValidationError

log = logging.getLogger(__name__)

LOG2_10 = math.log2(10)
# Lochs: about 0.97 CF digits per decimal digit; start with 10% slack.
DECIMALS_PER_DIGIT = 1.1
# Enclosure width shrinks ~ q_n^-2; Levy gives pi^2/(6 ln(2)^2) ~ 3.42 bits per digit.
BITS_PER_DIGIT = 3.7
CHECKPOINT_EVERY = 100_000


@dataclass(frozen=True)
class CertifiedInterval:
    """Enclosure ``lo_num/lo_den <= x <= hi_num/hi_den`` (strict unless degenerate)."""

    lo_num: int
    lo_den: int
    hi_num: int
    hi_den: int

    @property
    def lo(self):
        return Fraction(int(self.lo_num), int(self.lo_den))

    @property
    def hi(self):
        return Fraction(int(self.hi_num), int(self.hi_den))

    @property
    def width(self):
        return self.hi - self.lo

    def __contains__(self, x):
        return self.lo <= Fraction(x) <= self.hi

    @classmethod
    def dyadic(cls, lo, hi, bits):
        den = mpz(1) << bits
        return cls(mpz(lo), den, mpz(hi), den)


class RealSource:
    """Base class: subclasses implement :meth:`enclosure`."""

    name = "real"
    exact = False
    #: maximum binary precision available, None if unbounded
    max_bits = None

    def enclosure(self, bits):
        """Interval of width at most ``2**(2 - bits)`` containing the value."""
        raise NotImplementedError

    @property
    def max_precision(self):
        """Decimal digits available (None means computable to any precision)."""
        return None if self.max_bits is None else int(self.max_bits / LOG2_10)

    def initial_bits(self, n):
        return math.ceil(DECIMALS_PER_DIGIT * n * LOG2_10) + 64

    def approximate(self, epsilon):
        """Certified interval of width <= 2*epsilon around the value."""
        eps = Fraction(epsilon)
        bits = _bits_for(eps)
        if self.max_bits is not None and bits > self.max_bits:
            raise CapacityError(math.ceil(bits / LOG2_10), self.max_precision)
        iv = self.enclosure(bits)
        while iv.width > 2 * eps:
            bits += 4
            iv = self.enclosure(bits)
        return iv

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


def _bits_for(epsilon):
    eps = Fraction(epsilon)
    if eps <= 0:
        raise DomainError("epsilon must be positive")
    return (eps.denominator // eps.numerator).bit_length() + 2


def approximate(source, epsilon):
    """Certified interval of width <= 2*epsilon around the source value."""
    return source.approximate(epsilon)


# --- pi via Machin: pi = 16 arctan(1/5) - 4 arctan(1/239) ---------------------

def _arctan_split(a, b, m2):
    """Binary splitting of sum_{k=a}^{b-1} (-1)^k / ((2k+1) m^(2k)); returns (P, Q, T)."""
    if b - a == 1:
        if a == 0:
            return mpz(1), mpz(1), mpz(1)
        p = mpz(1 - 2 * a)
        return p, (2 * a + 1) * m2, p
    mid = (a + b) // 2
    p1, q1, t1 = _arctan_split(a, mid, m2)
    p2, q2, t2 = _arctan_split(mid, b, m2)
    return p1 * p2, q1 * q2, t1 * q2 + p1 * t2


def arctan_inverse(m, bits):
    """Exact partial sum of arctan(1/m) as ``(T, Q)`` plus term count N.

    N is chosen so the alternating-series remainder 1/((2N+1) m^(2N+1))
    is below ``2**-(bits + 8)``.
    """
    n_terms = math.ceil((bits + 8) / (2 * math.log2(m))) + 1
    while (2 * n_terms + 1) * mpz(m) ** (2 * n_terms + 1) < mpz(1) << (bits + 8):
        n_terms += 1
    _, q, t = _arctan_split(0, n_terms, mpz(m) * m)
    return t, q * m, n_terms


class PiSource(RealSource):
    name = "pi"

    def __init__(self):
        self._cache = {}

    def enclosure(self, bits):
        if bits not in self._cache:
            t5, q5, _ = arctan_inverse(5, bits)
            t239, q239, _ = arctan_inverse(239, bits)
            f = ((16 * t5) << bits) // q5 - ((4 * t239) << bits) // q239
            # two floor divisions (< 1 ulp each) plus tails (< 1/16 ulp total)
            self._cache = {bits: CertifiedInterval.dyadic(f - 2, f + 2, bits)}
        return self._cache[bits]


def _exp_split(a, b):
    """Binary splitting of sum_{k=a}^{b-1} (a-1)!/k! (a >= 1); returns (Q, T)."""
    if b - a == 1:
        return mpz(max(a, 1)), mpz(1)
    mid = (a + b) // 2
    q1, t1 = _exp_split(a, mid)
    q2, t2 = _exp_split(mid, b)
    return q1 * q2, t1 * q2 + t2


class ESource(RealSource):
    name = "e"

    def __init__(self):
        self._cache = {}

    def enclosure(self, bits):
        if bits not in self._cache:
            # remainder sum_{k>=N} 1/k! <= 2/N!; make it < 2^-(bits+7)
            n_terms = 2
            while math.lgamma(n_terms + 1) / math.log(2) < bits + 8:
                n_terms = max(n_terms + 1, int(n_terms * 1.1))
            q, t = _exp_split(0, n_terms)
            f = (t << bits) // q
            self._cache = {bits: CertifiedInterval.dyadic(f - 1, f + 2, bits)}
        return self._cache[bits]


class Sqrt2Source(RealSource):
    name = "sqrt2"

    def enclosure(self, bits):
        target = mpz(2) << (2 * bits)
        s = gmpy2.isqrt(target)
        if not (s * s <= target < (s + 1) * (s + 1)):
            raise AssertionError("integer square root check failed")
        return CertifiedInterval.dyadic(s, s + 1, bits)


class RationalSource(RealSource):
    exact = True

    def __init__(self, num, den=1):
        if den == 0:
            raise DomainError("zero denominator")
        self.value = Fraction(num, den)
        self.name = f"rational:{self.value.numerator}/{self.value.denominator}"

    def enclosure(self, bits):
        p, q = self.value.numerator, self.value.denominator
        return CertifiedInterval(p, q, p, q)


_HEADER_RE = re.compile(r"#\s*decimal-digits\s+v1\b(.*)")


class DecimalFileSource(RealSource):
    """Decimal expansion from a file, trusted to +-1 unit in the last place."""

    def __init__(self, integer_part, fraction_digits, name="file", path=None):
        self.integer_part = int(integer_part)
        self.fraction_digits = fraction_digits
        self.ndigits = len(fraction_digits)
        self.name = name
        self.path = path
        self._scaled = None
        self.max_bits = int(self.ndigits * LOG2_10)

    @property
    def max_precision(self):
        return self.ndigits

    def _value_at(self, m):
        if self._scaled is None:
            frac = mpz(self.fraction_digits) if self.ndigits else mpz(0)
            self._scaled = self.integer_part * mpz(10) ** self.ndigits + frac
        return self._scaled // mpz(10) ** (self.ndigits - m)

    def decimal_enclosure(self, m):
        """Enclosure from the first ``m`` decimals; width 2 or 3 units of 10^-m."""
        if m > self.ndigits:
            raise CapacityError(m, self.ndigits)
        d = self._value_at(m)
        den = mpz(10) ** m
        slack = 1 if m == self.ndigits else 2
        return CertifiedInterval(d - 1, den, d + slack, den)

    def enclosure(self, bits):
        return self.decimal_enclosure(math.ceil(bits / LOG2_10))

    def approximate(self, epsilon):
        eps = Fraction(epsilon)
        if eps <= 0:
            raise DomainError("epsilon must be positive")
        for m in range(1, self.ndigits + 1):
            iv = self.decimal_enclosure(m)
            if iv.width <= 2 * eps:
                return iv
        need = math.ceil(math.log10(eps.denominator / eps.numerator))
        raise CapacityError(max(need, self.ndigits + 1), self.ndigits)


def ingest_decimal_file(path, declared_kind=None):
    """Load a decimal-digit file as a :class:`DecimalFileSource`.

    Format: optional header ``# decimal-digits v1 const=<name> count=<N>``
    (``count`` = digits after the point), then digits with at most one
    ``.``; whitespace is ignored.  When the constant is ``pi`` or ``e`` the
    first 30 decimals are checked against the built-in series.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError as exc:
        raise ParseError("non-ASCII byte in decimal file", exc.start) from None

    header = {}
    body_start = 0
    first, nl, _ = text.partition("\n")
    match = _HEADER_RE.match(first.strip())
    if match:
        for token in match.group(1).split():
            key, sep, value = token.partition("=")
            if not sep:
                raise ParseError(f"bad header field {token!r}", 0)
            header[key] = value
        body_start = len(first) + len(nl)
    elif first.lstrip().startswith("#"):
        raise ParseError("unrecognized header line", 0)

    int_chars, frac_chars = [], []
    seen_point = False
    for offset in range(body_start, len(text)):
        ch = text[offset]
        if ch.isspace():
            continue
        if ch == ".":
            if seen_point:
                raise ParseError("second decimal point", offset)
            seen_point = True
        elif "0" <= ch <= "9":
            (frac_chars if seen_point else int_chars).append(ch)
        else:
            raise ParseError(f"unexpected character {ch!r}", offset)
    if not int_chars and not frac_chars:
        raise ValidationError(f"{path}: no digits")
    if not int_chars:
        int_chars = ["0"]

    frac = "".join(frac_chars)
    if "count" in header and int(header["count"]) != len(frac):
        raise ValidationError(f"header count={header['count']} but file holds {len(frac)} decimals")
    name = header.get("const") or declared_kind or "file"
    if declared_kind and header.get("const") and header["const"] != declared_kind:
        raise ValidationError(f"header const={header['const']} but declared {declared_kind}")
    source = DecimalFileSource("".join(int_chars), frac, name=name, path=str(path))
    if name in BUILTIN:
        _cross_check(source, BUILTIN[name]())
    return source


def _cross_check(source, reference, ndigits=30):
    m = min(ndigits, source.ndigits)
    if m == 0:
        return
    iv = reference.enclosure(int(m * LOG2_10) + 32)
    scale = 10 ** m
    allowed = {iv.lo_num * scale // iv.lo_den, iv.hi_num * scale // iv.hi_den}
    got = source.integer_part * scale + int(source.fraction_digits[:m])
    if got not in allowed:
        raise ValidationError(f"first {m} decimals disagree with built-in {source.name}")


BUILTIN = {"pi": PiSource, "e": ESource, "sqrt2": Sqrt2Source}


def parse_const(spec):
    """Source from a spec string: pi | e | sqrt2 | rational:p/q | file:PATH."""
    if spec in BUILTIN:
        return BUILTIN[spec]()
    kind, _, arg = spec.partition(":")
    if kind == "rational":
        num, _, den = arg.partition("/")
        try:
            return RationalSource(int(num), int(den or 1))
        except ValueError:
            raise DomainError(f"bad rational {arg!r}") from None
    if kind == "file":
        return ingest_decimal_file(arg)
    raise DomainError(f"unknown constant {spec!r}")


# --- certified extraction --------------------------------------------------

def _common_certified(lo_exp, hi_exp):
    """Number of leading terms shared by two canonical expansions that are
    guaranteed for every point strictly between them."""
    j = 0
    limit = min(len(lo_exp), len(hi_exp))
    while j < limit and lo_exp[j] == hi_exp[j]:
        j += 1
    return min(j, len(lo_exp) - 1, len(hi_exp) - 1)


def _tail_interval(iv, M):
    """Map the x-enclosure through M^-1; None if the image is not inside (1, inf)."""
    m00, m01, m10, m11 = M
    ends = []
    for num, den in ((iv.lo_num, iv.lo_den), (iv.hi_num, iv.hi_den)):
        yn = m11 * num - m01 * den
        yd = m00 * den - m10 * num
        ends.append((yn, yd))
    (n1, d1), (n2, d2) = ends
    if d1 == 0 or d2 == 0 or (d1 > 0) != (d2 > 0):
        return None
    if d1 < 0:
        n1, d1, n2, d2 = -n1, -d1, -n2, -d2
    if n1 * d2 > n2 * d1:
        n1, d1, n2, d2 = n2, d2, n1, d1
    if n1 <= d1:
        return None
    return n1, d1, n2, d2


def _expansion(num, den):
    a0, digits = fastcf.expand(num, den)
    return [a0] + digits


class ExtractionState:
    """Digits emitted so far and the matching Möbius matrix (serializable)."""

    def __init__(self, source_name, bits, leading=None, digits=None, matrix=None):
        self.source_name = source_name
        self.bits = bits
        self.leading = leading
        self.digits = digits if digits is not None else []
        if matrix is None:
            matrix = fastcf.IDENTITY
            if leading is not None:
                matrix = fastcf.mat_mul((mpz(leading), mpz(1), mpz(1), mpz(0)), fastcf.product(self.digits))
        self.matrix = matrix

    def push(self, new_digits):
        self.matrix = fastcf.mat_mul(self.matrix, fastcf.product(new_digits))
        self.digits.extend(new_digits)

    def save(self, path):
        digits_path = f"{path}.cfd"
        digitfile.write(CFDigitStream(self.leading, tuple(self.digits)), digits_path, fmt="binary")
        doc = {
            "version": 1,
            "const": self.source_name,
            "bits": self.bits,
            "leading": self.leading,
            "count": len(self.digits),
            "matrix": [format(int(v), "x") if v >= 0 else "-" + format(int(-v), "x") for v in self.matrix],
        }
        tmp = f"{path}.tmp"
        with open(tmp, "w") as fh:
            json.dump(doc, fh)
        os.replace(tmp, path)

    @classmethod
    def load(cls, path, source_name):
        with open(path) as fh:
            doc = json.load(fh)
        if doc["const"] != source_name:
            raise ValidationError(f"checkpoint is for {doc['const']}, not {source_name}")
        stream = digitfile.read(f"{path}.cfd")
        digits = list(stream.digits[: doc["count"]])
        if len(digits) != doc["count"]:
            raise ValidationError("checkpoint digit file shorter than recorded count")
        state = cls(source_name, doc["bits"], doc["leading"], digits)
        stored = tuple(mpz(v, 16) for v in doc["matrix"])
        if stored != tuple(state.matrix):
            raise ValidationError("checkpoint matrix does not match its digits")
        return state


def extract_digits(source, n, *, checkpoint=None, checkpoint_every=CHECKPOINT_EVERY,
                   progress=None, initial_bits=None):
    """First ``n`` certified continued-fraction digits of ``source``.

    Rational sources use the exact expansion; if it is shorter than ``n``
    the whole (finite) expansion is returned.  ``checkpoint`` is a path:
    the state is saved there after every ``checkpoint_every`` digits and
    picked up again if the file already exists.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if source.exact:
        full = expand_rational(source.value.numerator, source.value.denominator)
        prov = {"const": source.name}
        if len(full.digits) <= n:
            return CFDigitStream(full.leading, full.digits, True, prov)
        return CFDigitStream(full.leading, full.digits[:n], False, prov)

    bits = initial_bits or source.initial_bits(n)
    if source.max_bits is not None:
        bits = min(bits, source.max_bits)
    if checkpoint and os.path.exists(checkpoint):
        state = ExtractionState.load(checkpoint, source.name)
        log.info("resuming %s from checkpoint at %d digits", source.name, len(state.digits))
    else:
        state = ExtractionState(source.name, bits)
    segment = max(1, checkpoint_every)
    last_saved = len(state.digits)

    while state.leading is None or len(state.digits) < n:
        iv = source.enclosure(state.bits)
        got = _advance(state, iv, min(segment, n - len(state.digits)))
        if got is None:
            _raise_precision(state, source, n)
            continue
        if progress is not None:
            progress(len(state.digits), state.bits)
        if checkpoint and len(state.digits) - last_saved >= segment:
            state.save(checkpoint)
            last_saved = len(state.digits)

    if checkpoint and len(state.digits) != last_saved:
        state.save(checkpoint)
    prov = {"const": source.name, "bits": state.bits}
    return CFDigitStream(state.leading, tuple(state.digits[:n]), False, prov)


def _raise_precision(state, source, n):
    if source.max_bits is not None and state.bits >= source.max_bits:
        need = math.ceil(DECIMALS_PER_DIGIT * n)
        raise CapacityError(need, source.max_precision)
    new_bits = 2 * state.bits
    if source.max_bits is not None:
        new_bits = min(new_bits, source.max_bits)
    log.info("%s: certification stalled at %d digits, precision %d -> %d bits",
             source.name, len(state.digits), state.bits, new_bits)
    state.bits = new_bits


def _advance(state, iv, want):
    """Extract up to ``want`` more digits from enclosure ``iv``.

    Returns the number of digits added, or None if the enclosure is too
    wide to certify anything new (the caller then raises precision).
    """
    if state.leading is None:
        a_lo = iv.lo_num // iv.lo_den
        a_hi = iv.hi_num // iv.hi_den
        if a_lo != a_hi:
            return None
        state.leading = int(a_lo)
        state.matrix = (mpz(a_lo), mpz(1), mpz(1), mpz(0))
        if want == 0:
            return 0

    tail = _tail_interval(iv, state.matrix)
    if tail is None:
        return None
    n1, d1, n2, d2 = tail
    k = math.ceil(BITS_PER_DIGIT * want) + 64
    while True:
        lo = (n1 << k) // d1
        hi = -((-n2 << k) // d2)
        den = mpz(1) << k
        lo_exp = _expansion(lo, den)
        hi_exp = _expansion(hi, den)
        c = _common_certified(lo_exp, hi_exp)
        if c >= want:
            state.push(lo_exp[:want])
            return want
        # is the dyadic rounding (2^-k) already finer than the tail interval itself?
        if (n2 * d1 - n1 * d2) << k >= d1 * d2:
            if c == 0:
                return None
            state.push(lo_exp[:c])
            return c
        k *= 2
