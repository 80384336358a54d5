import itertools
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfdigits import freq
from cfdigits.errors import DomainError
from cfdigits.freq import DigitSet, FrequencyPrediction

PHI = (1 + math.sqrt(5)) / 2


def log2(x):
    x = Fraction(x)
    with mpmath.workprec(200):
        return float(mpmath.log(mpmath.mpf(x.numerator) / x.denominator, 2))


def nested(digits):
    x = Fraction(0)
    for a in reversed(digits):
        x = 1 / (a + x)
    return x


def cylinder_measure(s):
    """Gauss measure of {x in (0,1): x starts [0; s]}, endpoints by direct nesting."""
    lo, hi = sorted([nested(list(s)), nested(list(s[:-1]) + [s[-1] + 1])])
    return log2((1 + hi) / (1 + lo))


def test_gauss_kuzmin_values():
    assert freq.gauss_kuzmin(1).value == pytest.approx(log2(Fraction(4, 3)), abs=1e-15)
    assert f"{freq.gauss_kuzmin(1).value:.6f}" == "0.415037"
    assert f"{freq.gauss_kuzmin(2).value:.6f}" == "0.169925"
    with pytest.raises(DomainError):
        freq.gauss_kuzmin(0)


def test_gauss_kuzmin_telescopes():
    total = math.fsum(freq.gauss_kuzmin(a).value for a in range(1, 2001))
    assert total + freq.tail_mass(2000) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("s", [s for k in range(1, 5) for s in itertools.product(range(1, 6), repeat=k)])
def test_string_frequency_matches_cylinder(s):
    assert abs(freq.string_frequency(s).value - cylinder_measure(s)) < 1e-12


@given(st.lists(st.integers(1, 50), min_size=1, max_size=12))
def test_string_frequency_cylinder_random(s):
    assert abs(freq.string_frequency(s).value - cylinder_measure(s)) < 1e-12


@given(st.lists(st.integers(1, 9), min_size=1, max_size=6))
def test_string_frequencies_split_over_next_digit(s):
    parent = freq.string_frequency(s).value
    children = math.fsum(freq.string_frequency(s + [b]).value for b in range(1, 2001))
    assert children <= parent + 1e-15
    assert parent - children <= 4 * parent / 2000


def test_string_examples():
    assert freq.string_frequency([1, 2]).value == pytest.approx(log2(Fraction(21, 20)), abs=1e-15)
    assert freq.string_frequency([1, 1, 1]).value == pytest.approx(log2(Fraction(25, 24)), abs=1e-15)
    for a in range(1, 101):
        assert freq.string_frequency([a]).value == freq.gauss_kuzmin(a).value
    with pytest.raises(DomainError):
        freq.string_frequency([])
    with pytest.raises(DomainError):
        freq.string_frequency([1, 0])


@pytest.mark.parametrize("a", range(1, 6))
@pytest.mark.parametrize("k", range(1, 11))
def test_run_matches_string(a, k):
    assert abs(freq.run_frequency(a, k).value - freq.string_frequency([a] * k).value) < 1e-12


def test_run_examples():
    assert freq.run_frequency(1, 1).value == pytest.approx(log2(Fraction(4, 3)), abs=1e-15)
    assert freq.run_frequency(1, 4).value == pytest.approx(log2(Fraction(65, 64)), abs=1e-15)
    assert freq.run_frequency(2, 2).value == pytest.approx(log2(Fraction(50, 49)), abs=1e-15)
    assert freq.fibonacci_like(2).terms(4) == [1, 1, 3, 7]
    assert freq.fibonacci_like(1).terms(10) == [1, 1, 2, 3, 5, 8, 13, 21, 34, 55]


@pytest.mark.parametrize("a,b,k", [(a, b, k) for a in range(1, 4) for b in range(1, 4) for k in range(1, 6)])
def test_block_matches_string(a, b, k):
    got = freq.repeated_block_frequency(a, b, k).value
    assert abs(got - freq.string_frequency([a, b] * k).value) < 1e-12


def test_block_examples():
    assert freq.repeated_block_frequency(1, 1, 1).value == pytest.approx(log2(Fraction(10, 9)), abs=1e-15)
    assert freq.repeated_block_frequency(1, 2, 1).value == pytest.approx(log2(Fraction(21, 20)), abs=1e-15)
    assert freq.repeated_block_frequency(1, 2, 2).value == pytest.approx(log2(Fraction(286, 285)), abs=1e-15)


def test_printed_block_seeds_disagree_with_cylinders():
    printed = freq.repeated_block_frequency(1, 2, 1, paper_seeds=True).value
    assert printed == pytest.approx(log2(Fraction(13, 12)), abs=1e-15)
    assert abs(printed - cylinder_measure((1, 2))) > 0.04


@given(st.integers(1, 20), st.integers(-3, 3), st.tuples(st.integers(-9, 9), st.integers(-9, 9)))
def test_recurrence_seq(coeff, sign, seeds):
    t = freq.RecurrenceSeq(coeff, sign, seeds).terms(12)
    for n in range(2, 12):
        assert t[n] == coeff * t[n - 1] + sign * t[n - 2]


def test_binet_approximation():
    for k in range(1, 31):
        exact = freq.run_frequency(1, k).value
        approx = freq.run_frequency_approx(k)
        assert abs(exact - approx.value) <= approx.abs_error_bound
        assert abs(exact - approx.value) / approx.value <= PHI ** (-2 * (k + 2))


TABLE1_EXACT = ["0.415037", "0.152003", "0.058893", "0.022367", "0.008562"]
TABLE1_APPROX = ["0.401993", "0.153548", "0.058650", "0.022402", "0.008556"]


def matches_display(value, shown):
    """True if ``shown`` is ``value`` rounded or truncated to the displayed decimals."""
    places = len(shown.split(".")[1])
    return abs(value - float(shown)) < 10.0 ** -places


@pytest.mark.parametrize("k", range(1, 6))
def test_table1_columns(k):
    assert matches_display(freq.run_frequency(1, k).value, TABLE1_EXACT[k - 1])
    assert matches_display(freq.run_frequency_approx(k).value, TABLE1_APPROX[k - 1])


def test_table1_relative_errors_up_to_last_place():
    # the printed column mixes rounding and truncation; see the acceptance suite
    shown = ["3.24", "1.00", "0.41", "0.15", "0.06"]
    for (k, _, _, rel), s in zip(freq.run_table(5), shown):
        assert matches_display(rel, s)


def test_bernoulli_known():
    assert freq.bernoulli(0) == 1
    assert freq.bernoulli(1) == Fraction(-1, 2)
    assert freq.bernoulli(2) == Fraction(1, 6)
    assert freq.bernoulli(12) == Fraction(-691, 2730)
    assert all(freq.bernoulli(n) == 0 for n in range(3, 40, 2))


@pytest.mark.parametrize("k", [1, 2, 3, 5, 10, 30, 31, 40])
def test_zeta_even_vs_mpmath(k):
    z, err = freq.zeta_even(k)
    with mpmath.workprec(200):
        ref = mpmath.zeta(2 * k)
        assert abs(z - ref) <= err + mpmath.mpf(2) ** -120


def test_shifted_primes_values():
    assert f"{freq.shifted_prime_powers(1).value:.6f}"[:7] == "0.71803"
    assert math.floor(freq.shifted_prime_powers(1).value * 1e6) == 718029
    assert freq.shifted_prime_powers(2).value == pytest.approx(math.log2(math.pi ** 4 / 90), abs=1e-14)
    vals = [freq.shifted_prime_powers(k).value for k in range(1, 40)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    with pytest.raises(DomainError):
        freq.shifted_prime_powers(0)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_shifted_primes_vs_truncated_product(k):
    closed = freq.shifted_prime_powers(k).value
    trunc = freq.subset_frequency(DigitSet.shifted_primes(k), 10 ** 6)
    assert 0 <= closed - trunc.value <= trunc.abs_error_bound + 1e-13


def test_shifted_squares():
    v = freq.shifted_squares().value
    assert math.floor(v * 1e6) == 121832
    assert v == pytest.approx(freq.shifted_kth_powers(2).value, abs=1e-15)
    trunc = freq.subset_frequency(DigitSet.shifted_squares(), 10 ** 6)
    assert 0 <= v - trunc.value <= trunc.abs_error_bound


@pytest.mark.parametrize("k", [3, 4, 5])
def test_kth_powers_vs_brute_force(k):
    with mpmath.workprec(200):
        prod = mpmath.fprod(1 - mpmath.mpf(n) ** (-2 * k) for n in range(2, 10 ** 4 + 1))
        ref = float(-mpmath.log(prod, 2))
    assert abs(freq.shifted_kth_powers(k).value - ref) < 1e-12
    with pytest.raises(DomainError):
        freq.shifted_kth_powers(1)


def test_subset_examples():
    assert freq.subset_frequency(DigitSet.explicit([1])).value == freq.gauss_kuzmin(1).value
    assert freq.subset_frequency(DigitSet.explicit([])).value == 0
    full = freq.subset_frequency(DigitSet.explicit(range(1, 5001))).value
    assert full == pytest.approx(1 - freq.tail_mass(5000), abs=1e-12)
    with pytest.raises(DomainError):
        freq.subset_frequency(DigitSet.shifted_primes(1))
    with pytest.raises(DomainError):
        DigitSet.explicit([0, 1])


@given(st.sets(st.integers(1, 300), max_size=30), st.sets(st.integers(1, 300), max_size=30))
def test_subset_additivity(a, b):
    b = b - a
    fa = freq.subset_frequency(DigitSet.explicit(a)).value
    fb = freq.subset_frequency(DigitSet.explicit(b)).value
    fab = freq.subset_frequency(DigitSet.explicit(a | b)).value
    assert abs(fab - fa - fb) < 1e-12


def test_predicate_set():
    odd = DigitSet("predicate", predicate=lambda a: a % 2 == 1, truncation=10 ** 4)
    p = freq.subset_frequency(odd)
    # odd digits: product over a = 1, 3, 5, ... of (1 - 1/(a+1)^2)
    assert p.value == pytest.approx(math.log2(math.pi / 2), abs=p.abs_error_bound + 1e-12)
    assert 7 in odd and 8 not in odd


def test_digit_set_membership():
    assert DigitSet.shifted_primes(1).members_up_to(12) == [1, 2, 4, 6, 10, 12]
    assert DigitSet.shifted_primes(2).members_up_to(50) == [3, 8, 24, 48]
    assert DigitSet.shifted_squares().members_up_to(30) == [3, 8, 15, 24]
    assert DigitSet.shifted_powers(3).members_up_to(100) == [7, 26, 63]
    assert DigitSet.parse("explicit:5,1,5").members == (1, 5)
    assert (2 ** 61 - 2) in DigitSet.shifted_primes(1)
    with pytest.raises(DomainError):
        DigitSet.parse("fibonacci")


@given(st.sampled_from(["shifted-primes:1", "shifted-primes:2", "shifted-squares", "shifted-powers:3",
                        "explicit:1,3,7"]),
       st.lists(st.one_of(st.integers(1, 2000), st.integers(1, 10 ** 12)), min_size=1, max_size=80))
def test_mask_matches_membership(spec, digits):
    ds = DigitSet.parse(spec)
    assert ds.mask(np.asarray(digits, dtype=np.int64)).tolist() == [a in ds for a in digits]


def test_prediction_validation():
    with pytest.raises(ValueError):
        FrequencyPrediction(1.5, "zeta")
    with pytest.raises(ValueError):
        FrequencyPrediction(0.5, "guess")
    with pytest.raises(ValueError):
        FrequencyPrediction(0.5, "zeta", float("inf"))


def test_khinchin():
    assert freq.khinchin_constant(1) == 1.0
    vals = [freq.khinchin_constant(n) for n in (10, 100, 1000, 10 ** 5)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    k0 = 2.6854520010653064
    for n in (10 ** 3, 10 ** 6):
        k = freq.khinchin_constant(n)
        assert k < k0 <= k * (1 + freq.khinchin_tail_estimate(n))
    assert f"{freq.khinchin_constant(3 * 10 ** 7):.5f}" == "2.68545"
