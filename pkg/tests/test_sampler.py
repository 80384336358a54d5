import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from cfdigits import freq, sampler
from cfdigits.errors import DomainError, EntropyError
from cfdigits.sampler import RandomBitStream

P1 = freq.gauss_kuzmin(1).value
PRIMES1 = freq.shifted_prime_powers(1).value


def frac_mp(q):
    return mpmath.mpf(q.numerator) / q.denominator


@settings(max_examples=40)
@given(st.integers(8, 600), st.data())
def test_interval_encloses_image_of_dyadic_cell(bits, data):
    prefix = data.draw(st.integers(0, 2 ** bits - 1))
    iv = sampler.gauss_interval(prefix, bits)
    with mpmath.workprec(bits + 100):
        lo = mpmath.power(2, mpmath.mpf(prefix) / 2 ** bits) - 1
        hi = mpmath.power(2, mpmath.mpf(prefix + 1) / 2 ** bits) - 1
        assert frac_mp(iv.lo) <= lo
        assert frac_mp(iv.hi) >= hi
    assert iv.width <= Fraction(4, 2 ** bits)


def test_half_maps_to_sqrt2_minus_1():
    iv = sampler.gauss_interval(1 << 19, 20)
    assert iv.lo <= Fraction(math.sqrt(2) - 1) + Fraction(1, 10 ** 12)
    assert float(iv.hi) > math.sqrt(2) - 1
    assert float(iv.lo) == pytest.approx(0.414214, abs=1e-6)


def test_boundaries():
    assert sampler.gauss_interval(0, 32).lo == 0
    top = sampler.gauss_interval(2 ** 32 - 1, 32)
    assert 1 - 1e-9 < float(top.lo) < 1 <= top.hi


def test_exact_cdf_on_dyadic_grid():
    bits = 12
    cells = [sampler.gauss_interval(u, bits) for u in range(2 ** bits)]
    for j in range(0, 1025, 31):
        t = Fraction(j, 1024)
        below = sum(1 for iv in cells if iv.hi <= t)
        straddle = sum(1 for iv in cells if iv.lo <= t < iv.hi)
        target = math.log2(1 + j / 1024)
        # enclosures are a hair wider than the exact cells, so neighbours may overlap
        assert straddle <= 2
        assert below / 2 ** bits <= target + 1e-15
        assert target <= (below + straddle) / 2 ** bits + 1e-15


def test_ks_against_log2_cdf():
    rng = RandomBitStream(11)
    xs = np.array([float(sampler.sample_gauss_real(rng, 64).lo) for _ in range(100_000)])
    d = sps.kstest(xs, lambda t: np.log2(1 + t)).statistic
    assert d < 1.628 / math.sqrt(len(xs))


def test_precision_floor():
    with pytest.raises(DomainError):
        sampler.sample_gauss_real(RandomBitStream(0), 7)


def test_entropy_exhaustion():
    with pytest.raises(EntropyError):
        sampler.sample_gauss_real(RandomBitStream(0, limit=10), 16)
    with pytest.raises(EntropyError):
        sampler.sample_digit_sequence(RandomBitStream(0, limit=200), 100)


def test_bit_stream_is_prefix_stable():
    a = RandomBitStream(5)
    whole = a.take(1000)
    b = RandomBitStream(5)
    parts = b.take(64)
    parts = (parts << 936) | b.take(936)
    assert whole >> 936 == parts >> 936
    assert RandomBitStream(5).spawn(1).take(64) != RandomBitStream(5).spawn(2).take(64)


def test_enclosures_nest():
    src = sampler.GaussRealSource(RandomBitStream(3))
    wide = src.enclosure(100)
    narrow = src.enclosure(400)
    again = src.enclosure(100)
    assert wide.lo <= narrow.lo and narrow.hi <= wide.hi
    assert again == wide


def test_exact_digits_match_independent_expansion():
    n = 3000
    stream, rec = sampler.sample_exact(RandomBitStream(99), n)
    bits = rec.seed_bits
    src = sampler.GaussRealSource(RandomBitStream(99))
    src.enclosure(bits)
    prefix = src._prefix
    with mpmath.workprec(bits + 64):
        lo = mpmath.power(2, mpmath.mpf(prefix) / 2 ** bits) - 1
        hi = mpmath.power(2, mpmath.mpf(prefix + 1) / 2 ** bits) - 1
        scale = mpmath.mpf(2) ** (bits + 32)
        a = int(mpmath.floor(lo * scale))
        b = int(mpmath.ceil(hi * scale))
    den = 1 << (bits + 32)
    exp_lo, exp_hi = [], []
    for num, out in ((a, exp_lo), (b, exp_hi)):
        p, q = den, num
        while q and len(out) < n + 2:
            d, r = divmod(p, q)
            out.append(d)
            p, q = q, r
    k = 0
    while k < min(len(exp_lo), len(exp_hi)) and exp_lo[k] == exp_hi[k]:
        k += 1
    assert k >= n
    assert list(stream.digits) == exp_lo[:n]


def test_determinism():
    a = sampler.sample_digit_sequence(RandomBitStream(42), 5000)
    b = sampler.sample_digit_sequence(RandomBitStream(42), 5000)
    c = sampler.sample_digit_sequence(RandomBitStream(43), 5000)
    assert a.digits == b.digits != c.digits
    assert a.leading == 0
    d = sampler.sample_digit_sequence(RandomBitStream(42), 5000, "block-restart:64")
    e = sampler.sample_digit_sequence(RandomBitStream(42), 5000, ("block-restart", 64))
    assert d.digits == e.digits


def test_modes():
    assert sampler.parse_mode("exact") == ("exact", None)
    assert sampler.parse_mode("block-restart") == ("block-restart", 64)
    assert sampler.parse_mode("block-restart:16") == ("block-restart", 16)
    for bad in ("block-restart:15", "restart", ("block-restart", 4)):
        with pytest.raises(DomainError):
            sampler.parse_mode(bad)
    with pytest.raises(DomainError):
        sampler.sample_digit_sequence(RandomBitStream(0), 0)


@pytest.fixture(scope="module")
def exact_1e5():
    return np.array(sampler.sample_digit_sequence(RandomBitStream(2024), 100_000).digits)


def test_digit_one_frequency(exact_1e5):
    n = len(exact_1e5)
    sigma = math.sqrt(P1 * (1 - P1) / n)
    assert abs(np.mean(exact_1e5 == 1) - P1) < 3 * sigma


def test_shifted_prime_frequency(exact_1e5):
    n = len(exact_1e5)
    hits = freq.DigitSet.shifted_primes(1).mask(exact_1e5).mean()
    sigma = math.sqrt(PRIMES1 * (1 - PRIMES1) / n)
    assert abs(hits - PRIMES1) < 3 * sigma


def test_block_restart_agrees_with_exact(exact_1e5):
    blk = np.array(sampler.sample_digit_sequence(RandomBitStream(2024), 100_000, "block-restart:32").digits)
    f1, f2 = np.mean(exact_1e5 == 1), np.mean(blk == 1)
    se = math.sqrt(f1 * (1 - f1) / len(exact_1e5) + f2 * (1 - f2) / len(blk))
    assert abs(f1 - f2) < 3 * se


def test_positions_are_stationary():
    reps, m = 10_000, 50
    s = sampler.sample_digit_sequence(RandomBitStream(7), reps * m, f"block-restart:{m}")
    grid = np.array(s.digits).reshape(reps, m) == 1
    per_position = grid.mean(axis=0)
    sigma = math.sqrt(P1 * (1 - P1) / reps)
    assert np.all(np.abs(per_position - P1) < 4 * sigma)
    assert np.all(np.abs(per_position - per_position[0]) < 4 * math.sqrt(2) * sigma)
