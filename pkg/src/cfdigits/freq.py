"""Theoretical frequencies of digits, digit sets and digit strings.

Every value is the Gauss measure of some set of reals.  Log arguments
are formed exactly (integers or Fractions) and only then handed to
mpmath at :data:`WORKING_PREC` bits, so tiny frequencies keep their
relative accuracy.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional

import gmpy2
import mpmath
import numpy as np

from .cf import CFDigitStream, convergents
from .errors import DomainError

WORKING_PREC = 128
BERNOULLI_MAX_K = 30
_TABLE_LIMIT = 50_000_000

FORMS = (
    "gauss-kuzmin", "product-truncation", "zeta", "sine-product",
    "run-recurrence", "convergent-formula", "block-recurrence", "binet-approx",
)


@dataclass(frozen=True)
class FrequencyPrediction:
    value: float
    form: str
    abs_error_bound: float = 0.0

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"unknown form tag {self.form!r}")
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"frequency {self.value} outside [0, 1]")
        if not math.isfinite(self.abs_error_bound) or self.abs_error_bound < 0:
            raise ValueError("error bound must be finite and non-negative")


def _mp():
    return mpmath.workprec(WORKING_PREC)


def _log2_1p(x):
    """log2(1 + x) for an exact rational x, evaluated at working precision."""
    x = Fraction(x)
    with _mp():
        return mpmath.log1p(mpmath.mpf(x.numerator) / x.denominator) / mpmath.log(2)


def _check_pos(name, v):
    if int(v) != v or v < 1:
        raise DomainError(f"{name} must be a positive integer, got {v!r}")


# --- single digits --------------------------------------------------------

def gauss_kuzmin(a):
    """Frequency of digit ``a``: log2(1 + 1/(a(a+2)))."""
    _check_pos("a", a)
    return FrequencyPrediction(float(_log2_1p(Fraction(1, a * (a + 2)))), "gauss-kuzmin")


def tail_mass(m):
    """Gauss measure of digits > m, log2(1 + 1/(m+1)) (the sum telescopes)."""
    return float(_log2_1p(Fraction(1, m + 1)))


# --- digit sets -----------------------------------------------------------

def primes_up_to(n):
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    sieve[4::2] = False
    for p in range(3, math.isqrt(n) + 1, 2):
        if sieve[p]:
            sieve[p * p::2 * p] = False
    return np.flatnonzero(sieve)


def _is_prime(n):
    return n >= 2 and bool(gmpy2.is_prime(n, 50))


def _is_kth_power(n, k):
    return bool(gmpy2.iroot(n, k)[1])


@dataclass(frozen=True)
class DigitSet:
    """A set of positive digits.

    kinds: ``explicit`` (``members``), ``shifted-primes`` ({p^k - 1}),
    ``shifted-squares`` ({n^2 - 1, n > 1}), ``shifted-powers``
    ({n^k - 1, n > 1}) and ``predicate`` (any callable; needs ``truncation``).
    """

    kind: str
    k: int = 1
    members: tuple = ()
    predicate: Optional[Callable[[int], bool]] = field(default=None, compare=False)
    truncation: Optional[int] = None

    def __post_init__(self):
        if self.kind == "explicit":
            members = tuple(sorted(set(int(a) for a in self.members)))
            if members and members[0] < 1:
                raise DomainError("digit sets hold positive integers only")
            object.__setattr__(self, "members", members)
        elif self.kind in ("shifted-primes", "shifted-powers"):
            _check_pos("k", self.k)
            if self.kind == "shifted-powers" and self.k < 2:
                raise DomainError("shifted powers need k >= 2")
        elif self.kind == "shifted-squares":
            object.__setattr__(self, "k", 2)
        elif self.kind == "predicate":
            if self.predicate is None:
                raise DomainError("predicate set needs a callable")
        else:
            raise DomainError(f"unknown digit set kind {self.kind!r}")

    @classmethod
    def explicit(cls, members):
        return cls("explicit", members=tuple(members))

    @classmethod
    def shifted_primes(cls, k=1):
        return cls("shifted-primes", k=k)

    @classmethod
    def shifted_squares(cls):
        return cls("shifted-squares", k=2)

    @classmethod
    def shifted_powers(cls, k):
        return cls("shifted-powers", k=k)

    @classmethod
    def parse(cls, spec):
        """``shifted-primes:k``, ``shifted-squares``, ``shifted-powers:k`` or ``explicit:1,2,5``."""
        kind, _, arg = spec.partition(":")
        if kind == "shifted-primes":
            return cls.shifted_primes(int(arg or 1))
        if kind == "shifted-squares":
            return cls.shifted_squares()
        if kind == "shifted-powers":
            return cls.shifted_powers(int(arg))
        if kind == "explicit":
            return cls.explicit(int(a) for a in arg.split(",") if a)
        raise DomainError(f"unknown digit set {spec!r}")

    @property
    def infinite(self):
        return self.kind not in ("explicit",)

    def __contains__(self, a):
        a = int(a)
        if a < 1:
            return False
        if self.kind == "explicit":
            return a in self.members
        if self.kind == "shifted-primes":
            if self.k == 1:
                return _is_prime(a + 1)
            root, exact = gmpy2.iroot(a + 1, self.k)
            return exact and _is_prime(int(root))
        if self.kind in ("shifted-squares", "shifted-powers"):
            return _is_kth_power(a + 1, self.k)
        return bool(self.predicate(a))

    def members_up_to(self, m):
        """Sorted members <= m."""
        if self.kind == "explicit":
            return [a for a in self.members if a <= m]
        if self.kind == "shifted-primes":
            root = int(round((m + 1) ** (1.0 / self.k))) + 2
            out = [int(p) ** self.k - 1 for p in primes_up_to(root)]
            return [a for a in out if a <= m]
        if self.kind in ("shifted-squares", "shifted-powers"):
            out = []
            n = 2
            while n ** self.k - 1 <= m:
                out.append(n ** self.k - 1)
                n += 1
            return out
        return [a for a in range(1, m + 1) if self.predicate(a)]

    def mask(self, digits):
        """Boolean membership array for an integer array of digits."""
        digits = np.asarray(digits)
        if digits.dtype == object or not len(digits):
            return np.fromiter((a in self for a in digits.tolist()), dtype=bool, count=len(digits))
        if self.kind == "explicit":
            return np.isin(digits, np.asarray(self.members, dtype=digits.dtype))
        if self.kind == "predicate":
            return np.fromiter((bool(self.predicate(int(a))) for a in digits), dtype=bool, count=len(digits))
        # lookup table for ordinary digits, exact tests for the rare huge ones
        limit = min(int(digits.max()), _TABLE_LIMIT)
        table = np.zeros(limit + 1, dtype=bool)
        members = self.members_up_to(limit)
        if members:
            table[np.asarray(members, dtype=np.int64)] = True
        small = digits <= limit
        out = np.zeros(len(digits), dtype=bool)
        out[small] = table[digits[small]]
        for i in np.flatnonzero(~small):
            out[i] = int(digits[i]) in self
        return out

    def __str__(self):
        if self.kind == "explicit":
            return "explicit:" + ",".join(map(str, self.members))
        if self.kind == "shifted-squares":
            return "shifted-squares"
        if self.kind == "predicate":
            return "predicate"
        return f"{self.kind}:{self.k}"


def subset_frequency(digit_set, truncation=None):
    """Frequency of digits from ``digit_set``: -log2 prod_{a in A} (1 - (a+1)^-2).

    Infinite sets are summed over members <= M (``truncation`` or the
    set's own); the neglected mass is at most log2(1 + 1/(M+1)) and is
    reported as ``abs_error_bound``.
    """
    m = truncation if truncation is not None else digit_set.truncation
    if digit_set.infinite and m is None:
        raise DomainError(f"{digit_set} is infinite: supply a truncation bound M")
    members = digit_set.members_up_to(m) if m is not None else list(digit_set.members)
    if not members:
        return FrequencyPrediction(0.0, "product-truncation", tail_mass(m) if digit_set.infinite else 0.0)
    with _mp():
        total = mpmath.fsum(mpmath.log1p(-mpmath.mpf(1) / (mpmath.mpf(a) + 1) ** 2) for a in members)
        value = -total / mpmath.log(2)
    bound = tail_mass(m) if digit_set.infinite else 0.0
    return FrequencyPrediction(min(float(value), 1.0), "product-truncation", bound)


@lru_cache(maxsize=None)
def bernoulli(n):
    """Exact Bernoulli number B_n (B_1 = -1/2), via the Akiyama-Tanigawa table."""
    a = [Fraction(0)] * (n + 1)
    for m in range(n + 1):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
    b = a[0]
    return -b if n == 1 else b


def zeta_even(k):
    """zeta(2k) at working precision, with an absolute error bound."""
    _check_pos("k", k)
    with _mp():
        if k <= BERNOULLI_MAX_K:
            b = abs(bernoulli(2 * k))
            coeff = mpmath.mpf(b.numerator) / (2 * b.denominator * math.factorial(2 * k))
            return +(coeff * (2 * mpmath.pi) ** (2 * k)), mpmath.mpf(0)
        s = 2 * k
        # tail sum_{n>N} n^-s <= N^(1-s)/(s-1) must fall below 2^-(prec+8)
        n_max = 2
        while (1 - s) * math.log2(n_max) - math.log2(s - 1) > -(WORKING_PREC + 8):
            n_max += 1
        total = mpmath.fsum(mpmath.mpf(j) ** -s for j in range(1, n_max + 1))
        tail = mpmath.mpf(n_max) ** (1 - s) / (s - 1)
        return total + tail / 2, tail / 2


def shifted_prime_powers(k):
    """Frequency of digits p^k - 1 (p prime): log2 zeta(2k)."""
    zeta, err = zeta_even(k)
    with _mp():
        value = mpmath.log(zeta) / mpmath.log(2)
        bound = err / zeta / mpmath.log(2)
    return FrequencyPrediction(float(value), "zeta", float(bound))


def shifted_squares():
    """Frequency of digits n^2 - 1: log2(8 pi / (e^pi - e^-pi))."""
    with _mp():
        pi = +mpmath.pi
        value = mpmath.log(8 * pi / (mpmath.exp(pi) - mpmath.exp(-pi))) / mpmath.log(2)
    return FrequencyPrediction(float(value), "sine-product")


def _csin_abs(x, y):
    """|sin(x + iy)| from sin x cosh y + i cos x sinh y."""
    re = mpmath.sin(x) * mpmath.cosh(y)
    im = mpmath.cos(x) * mpmath.sinh(y)
    return mpmath.hypot(re, im)


def shifted_kth_powers(k):
    """Frequency of digits n^k - 1 (n > 1), k >= 2, via the sine product over roots of unity."""
    if int(k) != k or k < 2:
        raise DomainError(f"k must be an integer >= 2, got {k!r}")
    with _mp():
        pi = +mpmath.pi
        prod = mpmath.mpf(1)
        for h in range(1, k):
            angle = pi * h / k
            # sin(pi * w_h) with w_h = cos(angle) + i sin(angle)
            prod *= _csin_abs(pi * mpmath.cos(angle), pi * mpmath.sin(angle))
        value = -mpmath.log(prod / (2 * k * pi ** (k - 1))) / mpmath.log(2)
    return FrequencyPrediction(float(value), "sine-product")


# --- strings --------------------------------------------------------------

@dataclass(frozen=True)
class RecurrenceSeq:
    """``t_n = coeff * t_{n-1} + sign * t_{n-2}`` with seeds ``t_1, t_2`` (1-based)."""

    coeff: int
    sign: int
    seeds: tuple

    def terms(self, n):
        """``[t_1, ..., t_n]``."""
        out = list(self.seeds[:n])
        while len(out) < n:
            out.append(self.coeff * out[-1] + self.sign * out[-2])
        return out

    def __getitem__(self, n):
        if n < 1:
            raise IndexError(n)
        return self.terms(n)[-1]


def fibonacci_like(a):
    """F^(a): seeds 1, 1 and F_n = a F_{n-1} + F_{n-2}."""
    return RecurrenceSeq(a, 1, (1, 1))


def run_frequency(a, k):
    """Frequency of k consecutive digits a: |log2(1 + (-1)^k / F^(a)_{k+2}^2)|."""
    _check_pos("a", a)
    _check_pos("k", k)
    f = fibonacci_like(a)[k + 2]
    value = abs(_log2_1p(Fraction((-1) ** k, f * f)))
    return FrequencyPrediction(float(value), "run-recurrence")


PHI = (1 + math.sqrt(5)) / 2


def run_frequency_approx(k):
    """Binet approximation 5 / (Phi^(2(k+2)) ln 2) of the frequency of k ones.

    The relative error is at most Phi^-(2(k+2)).
    """
    _check_pos("k", k)
    with _mp():
        phi = (1 + mpmath.sqrt(5)) / 2
        scale = phi ** (2 * (k + 2))
        value = 5 / (scale * mpmath.log(2))
        bound = value / scale
    return FrequencyPrediction(float(value), "binet-approx", float(bound))


def _string_denominator(s):
    stream = CFDigitStream(0, tuple(s))
    convs = convergents(stream, len(s))
    (p_k, q_k), q_prev = convs[-1][:2], convs[-2].q
    return (p_k + q_k) * (q_k + q_prev)


def string_frequency(s):
    """Frequency of the digit string ``s``: |log2(1 + (-1)^k / ((p_k+q_k)(q_k+q_{k-1})))|.

    ``p_i/q_i`` are the convergents of ``[0; s_1, ..., s_k]``.
    """
    s = tuple(int(a) for a in s)
    if not s:
        raise DomainError("string must be nonempty")
    for a in s:
        _check_pos("digit", a)
    denom = _string_denominator(s)
    value = abs(_log2_1p(Fraction((-1) ** len(s), denom)))
    return FrequencyPrediction(float(value), "convergent-formula")


def block_sequences(a, b, paper_seeds=False):
    """The two recurrences (coefficient ab + 2, sign -1) for repeated blocks (a, b).

    Default seeds ``F_1 = 1 - b, G_1 = 1 - a`` reproduce the string
    frequency exactly; ``paper_seeds=True`` gives the printed variant
    ``F_1 = b - 1, G_1 = a - 1`` (which does not, e.g. for (1, 2)).
    """
    c = a * b + 2
    if paper_seeds:
        return RecurrenceSeq(c, -1, (b - 1, 1)), RecurrenceSeq(c, -1, (a - 1, 1))
    return RecurrenceSeq(c, -1, (1 - b, 1)), RecurrenceSeq(c, -1, (1 - a, 1))


def repeated_block_frequency(a, b, k, paper_seeds=False):
    """Frequency of the block (a, b) repeated k times: |log2(1 + 1/(F_{k+2} G_{k+2}))|."""
    for name, v in (("a", a), ("b", b), ("k", k)):
        _check_pos(name, v)
    f, g = block_sequences(a, b, paper_seeds)
    value = abs(_log2_1p(Fraction(1, f[k + 2] * g[k + 2])))
    return FrequencyPrediction(float(value), "block-recurrence")


# --- Khinchin ---------------------------------------------------------------

def khinchin_constant(terms):
    """Truncated product prod_{k=1}^{terms} (1 + 1/(k(k+2)))^(log2 k).

    Increases with ``terms`` towards 2.685452...; the limit is at most
    ``value * (1 + khinchin_tail_estimate(terms))``.
    """
    _check_pos("terms", terms)
    total = 0.0
    for start in range(1, terms + 1, 1_000_000):
        k = np.arange(start, min(start + 1_000_000, terms + 1), dtype=np.float64)
        total += math.fsum(np.log2(k) * np.log1p(1.0 / (k * (k + 2))))
    return math.exp(total)


def khinchin_tail_estimate(terms):
    """Upper bound on the relative shortfall of the product truncated at ``terms``.

    The omitted log-factor is sum_{k>K} log2(k) ln(1 + 1/(k(k+2))), at most
    the integral of log2(x)/x^2 from K, i.e. T = (ln K + 1)/(K ln 2).
    """
    t = (math.log(terms) + 1) / (terms * math.log(2))
    return math.expm1(t)


def run_table(k_max=5, a=1):
    """Rows ``(k, exact, approx, rel_error_pct)`` for runs of ones, k = 1..k_max.

    The relative error is taken against the approximation,
    ``100 |exact - approx| / approx``.
    """
    rows = []
    for k in range(1, k_max + 1):
        exact = run_frequency(a, k).value
        approx = run_frequency_approx(k).value
        rows.append((k, exact, approx, 100 * abs(exact - approx) / approx))
    return rows
