from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfdigits import cf, fastcf
from cfdigits.cf import CFDigitStream, Convergent
from cfdigits.errors import DomainError, ShortfallError

fractions = st.builds(Fraction, st.integers(-10**40, 10**40), st.integers(1, 10**40))
digit_lists = st.lists(st.integers(1, 10**6), min_size=1, max_size=60)


def naive_expand(x):
    """Plain Euclid, one divmod per quotient."""
    a, b = x.numerator, x.denominator
    a0, r = divmod(a, b)
    a, b = b, r
    out = []
    while b:
        q, r = divmod(a, b)
        out.append(q)
        a, b = b, r
    return a0, out


def nested(leading, digits):
    x = Fraction(0)
    for a in reversed(digits):
        x = 1 / (a + x)
    return leading + x


def test_355_113():
    s = cf.expand_rational(355, 113)
    assert (s.leading, s.digits, s.finite) == (3, (7, 16), True)


def test_integer_and_negative():
    assert cf.expand_rational(5).digits == ()
    s = cf.expand_rational(-7, 3)
    assert s.leading == -3 and s.digits == (1, 2)
    assert cf.evaluate(s) == Fraction(-7, 3)


def test_zero_denominator():
    with pytest.raises(DomainError):
        cf.expand_rational(1, 0)


def test_canonical_form_enforced():
    with pytest.raises(DomainError):
        CFDigitStream(0, (2, 1), finite=True)
    with pytest.raises(DomainError):
        CFDigitStream(0, (0, 3))
    s = CFDigitStream.normalized(0, [2, 1])
    assert s.digits == (3,)
    assert CFDigitStream.normalized(4, [1]).leading == 5


@given(fractions)
def test_expand_matches_naive_euclid(x):
    s = cf.expand_rational(x.numerator, x.denominator)
    a0, digits = naive_expand(x)
    assert s.leading == a0 and list(s.digits) == digits


@given(fractions)
def test_roundtrip(x):
    s = cf.expand_rational(x.numerator, x.denominator)
    assert cf.evaluate(s) == x
    assert nested(s.leading, list(s.digits)) == x


@given(st.integers(-50, 50), digit_lists)
def test_evaluate_equals_nested(a0, digits):
    s = CFDigitStream(a0, tuple(digits))
    assert cf.evaluate(s) == nested(a0, digits)


@given(st.integers(-50, 50), digit_lists)
def test_convergent_determinant_and_coprime(a0, digits):
    convs = cf.convergents(CFDigitStream(a0, tuple(digits)), include_seed=True)
    for prev, cur in zip(convs, convs[1:]):
        assert cur.p * prev.q - prev.p * cur.q == (-1) ** (cur.index - 1)
    for c in convs[1:]:
        assert cf.evaluate(CFDigitStream(a0, tuple(digits)), c.index) == Fraction(c.p, c.q)


@given(st.integers(-50, 50), digit_lists)
def test_convergents_alternate_around_value(a0, digits):
    s = CFDigitStream(a0, tuple(digits))
    x = cf.evaluate(s)
    convs = cf.convergents(s)
    for c in convs[:-1]:
        v = c.as_fraction()
        assert (v <= x) if c.index % 2 == 0 else (v >= x)


@given(st.integers(-50, 50), digit_lists)
def test_from_convergents_inverts(a0, digits):
    s = CFDigitStream(a0, tuple(digits))
    back = cf.from_convergents(cf.convergents(s, include_seed=True))
    assert back == s


def test_pi_convergents_prefix():
    s = CFDigitStream(3, (7, 15, 1, 292, 1))
    got = [(c.p, c.q) for c in cf.convergents(s)]
    assert got == [(3, 1), (22, 7), (333, 106), (355, 113), (103993, 33102), (104348, 33215)]
    seeded = cf.convergents(s, 0, include_seed=True)
    assert seeded[0] == Convergent(1, 0, -1)


def test_convergents_shortfall():
    with pytest.raises(ShortfallError):
        cf.convergents(CFDigitStream(0, (1, 2)), 3)


@given(st.fractions(min_value=0, max_value=10, max_denominator=10**6))
def test_gauss_expand_agrees(x):
    s = cf.gauss_expand(x, 10**6)
    assert s == cf.expand_rational(x.numerator, x.denominator)


def test_gauss_map_step():
    assert cf.gauss_map_step(Fraction(3, 7)) == (2, Fraction(1, 3))
    with pytest.raises(DomainError):
        cf.gauss_map_step(Fraction(1))


@given(st.integers(1, 2**3000), st.integers(1, 2**3000))
def test_fastcf_quotients_match_naive(a, b):
    a0, digits = naive_expand(Fraction(a, b))
    leading, got = fastcf.expand(a, b)
    assert leading == a0 and got == digits


def test_fastcf_large_operands():
    import random
    rng = random.Random(7)
    a, b = rng.getrandbits(200_000), rng.getrandbits(199_990)
    leading, digits = fastcf.expand(a, b)
    x = cf.evaluate(CFDigitStream(leading, tuple(digits), True))
    assert x == Fraction(a, b)


@given(digit_lists, st.data())
def test_product_tree_ranges(digits, data):
    lo = data.draw(st.integers(0, len(digits)))
    hi = data.draw(st.integers(lo, len(digits)))
    m = fastcf.IDENTITY
    for a in digits[lo:hi]:
        m = fastcf.mat_mul(m, (a, 1, 1, 0))
    assert tuple(map(int, fastcf.product(digits, lo, hi))) == tuple(map(int, m))
