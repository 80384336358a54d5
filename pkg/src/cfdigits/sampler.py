"""Gauss-measure random reals and their continued-fraction digits.

If ``u`` is uniform on (0, 1) then ``x = 2**u - 1`` has CDF
``log2(1 + t)``, the invariant measure of the Gauss map, so the digits of
``x`` form a stationary sequence.  ``u`` is an infinite stream of random
bits read lazily: knowing its first ``b`` bits ``U`` pins
``u`` to ``[U/2^b, (U+1)/2^b]`` and ``x`` to a certified interval that
the extractor in :mod:`cfdigits.sources` treats like any other real.
"""

import math
from dataclasses import dataclass

import gmpy2
import numpy as np
from gmpy2 import mpz

from . import sources
from .cf import CFDigitStream
from .errors import DomainError, EntropyError
from .sources import CertifiedInterval, RealSource

RNG_ALGORITHM = "philox4x64-10"
# Gauss-map entropy is pi^2/(6 ln 2) nats ~ 3.42 bits per digit of
# enclosure width; 3.5 leaves a small margin, grown on demand.
ENTROPY_PER_DIGIT = 3.5
DEFAULT_BLOCK = 64
MIN_BLOCK = 16


class RandomBitStream:
    """Seeded stream of random bits backed by numpy's Philox counter RNG.

    Bits are consumed most-significant first from successive 64-bit
    words.  ``limit`` caps the total bits drawn (for exercising the
    exhaustion path); ``spawn`` derives independent child streams.
    """

    def __init__(self, seed, path=(), limit=None):
        self.seed = int(seed)
        self.path = tuple(path)
        self.limit = limit
        ss = np.random.SeedSequence([self.seed, *self.path])
        self._gen = np.random.Generator(np.random.Philox(ss))
        self.drawn = 0

    def take(self, bits):
        """Next ``bits`` bits as a non-negative integer."""
        if bits < 0:
            raise DomainError("bits must be >= 0")
        if self.limit is not None and self.drawn + bits > self.limit:
            raise EntropyError(f"random bit budget of {self.limit} exhausted")
        words = -(-bits // 64)
        raw = self._gen.integers(0, 2**64, size=words, dtype=np.uint64, endpoint=False)
        value = mpz(int.from_bytes(raw.astype(">u8").tobytes(), "big")) if words else mpz(0)
        self.drawn += bits
        return value >> (64 * words - bits)

    def spawn(self, index):
        return RandomBitStream(self.seed, self.path + (int(index),), self.limit)


def _exp2_floor(num, bits, prec):
    """A lower bound for ``2**(num / 2**bits)`` as (numerator, denominator)."""
    ctx = gmpy2.context(precision=prec, round=gmpy2.RoundDown)
    with gmpy2.context(ctx):
        u = gmpy2.mul_2exp(gmpy2.mpfr(num), -bits)
        v = gmpy2.exp2(u)
    n, d = v.as_integer_ratio()
    return mpz(n), mpz(d)


def gauss_interval(prefix, bits, guard=64):
    """Enclosure of ``2**u - 1`` for ``u`` in ``[prefix/2^bits, (prefix+1)/2^bits]``.

    One directed-rounding evaluation gives ``v <= 2^u_lo < v (1 + 2^(1-p))``;
    the upper end uses ``2^(u_lo + h) <= 2^u_lo (1 + h)`` for ``0 <= h <= 1``.
    """
    prec = bits + guard
    vn, vd = _exp2_floor(prefix, bits, prec)
    # hi = v (1 + 2^(1-p)) (1 + 2^-bits)
    s = mpz(1) << (prec + bits - 1)
    hn = vn * ((mpz(1) << (prec - 1)) + 1) * ((mpz(1) << bits) + 1)
    hd = vd * s
    return CertifiedInterval(vn - vd, vd, hn - hd, hd)


def sample_gauss_real(rng, precision_bits):
    """Fresh Gauss-measure real pinned by ``precision_bits`` random bits."""
    if precision_bits < 8:
        raise DomainError("precision_bits must be >= 8")
    return gauss_interval(rng.take(precision_bits), precision_bits)


@dataclass(frozen=True)
class GaussSample:
    seed_bits: int
    x_enclosure: CertifiedInterval
    digits_emitted: int


class GaussRealSource(RealSource):
    """One Gauss-measure real whose random bits are drawn as precision demands.

    The bit prefix only ever grows, so enclosures at different precisions
    are nested and describe the same ``x``.
    """

    name = "gauss-sample"

    def __init__(self, rng):
        self.rng = rng
        self._prefix = mpz(0)
        self._bits = 0
        self._cache = (None, None)

    def _extend(self, bits):
        if bits > self._bits:
            more = bits - self._bits
            self._prefix = (self._prefix << more) | self.rng.take(more)
            self._bits = bits

    def enclosure(self, bits):
        # the extractor asks for the same precision once per segment
        if self._cache[0] == bits:
            return self._cache[1]
        self._extend(bits)
        if bits < self._bits:
            iv = gauss_interval(self._prefix >> (self._bits - bits), bits)
        else:
            iv = gauss_interval(self._prefix, self._bits)
        self._cache = (bits, iv)
        return iv

    def initial_bits(self, n):
        return math.ceil(ENTROPY_PER_DIGIT * n) + 64

    @property
    def seed_bits(self):
        return self._bits


def parse_mode(mode):
    """'exact' | 'block-restart[:m]' | ('block-restart', m) -> (kind, m)."""
    if isinstance(mode, tuple):
        kind, m = mode
    else:
        kind, _, m = str(mode).partition(":")
        m = int(m) if m else DEFAULT_BLOCK
    if kind == "exact":
        return "exact", None
    if kind != "block-restart":
        raise DomainError(f"unknown sampling mode {mode!r}")
    if m < MIN_BLOCK:
        raise DomainError(f"block-restart needs m >= {MIN_BLOCK}, got {m}")
    return kind, int(m)


def sample_exact(rng, n, progress=None):
    """``n`` digits of a single Gauss-measure real and its sample record."""
    src = GaussRealSource(rng)
    stream = sources.extract_digits(src, n, progress=progress)
    record = GaussSample(src.seed_bits, src.enclosure(src.seed_bits), n)
    return stream, record


def sample_digit_sequence(rng, n, mode="exact", progress=None):
    """``n`` digits from Gauss-measure reals.

    ``exact``: all digits belong to one sample.  ``block-restart:m``:
    independent samples of ``m`` digits each, drawn from child streams
    ``rng.spawn(i)`` and concatenated.  The concatenation is only
    approximately stationary across the seams.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    kind, m = parse_mode(mode)
    prov = {"const": "gauss-sample", "seed": rng.seed, "rng": RNG_ALGORITHM}
    if kind == "exact":
        stream, record = sample_exact(rng, n, progress)
        prov.update(mode="exact", entropy_bits=record.seed_bits)
        return CFDigitStream(0, stream.digits, False, prov)
    digits = []
    block = 0
    while len(digits) < n:
        part, _ = sample_exact(rng.spawn(block), m)
        digits.extend(part.digits)
        block += 1
        if progress is not None and block % 1000 == 0:
            progress(len(digits), None)
    prov.update(mode=f"block-restart:{m}")
    return CFDigitStream(0, tuple(digits[:n]), False, prov)
