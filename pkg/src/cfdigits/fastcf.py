"""Subquadratic continued-fraction expansion of large rationals.

The expansion of ``a/b`` is the quotient sequence of the Euclidean
algorithm.  For numbers with millions of bits the schoolbook loop is
quadratic, so quotients are found on the leading half of the operands
(recursively, half-gcd style) and then lifted to the full operands.  A
lifted quotient sequence is accepted only if the exact cofactor pair
``(c, d)`` satisfies ``c > d >= 0``; otherwise trailing quotients are
popped until it does.  Correctness therefore never depends on how good
the truncation guess was, only speed does.

Matrices are 4-tuples ``(m00, m01, m10, m11)`` and always equal a product
of ``[[q, 1], [1, 0]]`` factors, so ``(a, b) = M (c, d)``.
"""

from gmpy2 import mpz

# Below this operand size the plain Euclidean loop is faster.
BASE_BITS = 1024

_ONE = mpz(1)
_ZERO = mpz(0)
IDENTITY = (_ONE, _ZERO, _ZERO, _ONE)


def mat_mul(A, B):
    a, b, c, d = A
    e, f, g, h = B
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


def _euclid(a, b, stop_bits, out):
    """Plain Euclid on ``a > b``; stop once ``b`` has at most ``stop_bits`` bits."""
    m00, m01, m10, m11 = IDENTITY
    while b and b.bit_length() > stop_bits:
        q, r = divmod(a, b)
        out.append(int(q))
        a, b = b, r
        m00, m01 = m00 * q + m01, m00
        m10, m11 = m10 * q + m11, m10
    return a, b, (m00, m01, m10, m11)


def _lift(a, b, quotients, M, out):
    """Apply quotients found on a truncated pair to the exact pair ``(a, b)``."""
    m00, m01, m10, m11 = M
    c = m11 * a - m01 * b
    d = m00 * b - m10 * a
    if len(quotients) & 1:
        c, d = -c, -d
    while not (c > d >= 0):
        q = quotients.pop()
        m00, m01 = m01, m00 - q * m01
        m10, m11 = m11, m10 - q * m11
        c, d = q * c + d, c
    out.extend(quotients)
    return c, d, (m00, m01, m10, m11)


def _half_reduce(a, b, out):
    """Reduce ``a > b >= 0`` until ``b`` has about half the bits of ``a``."""
    n = a.bit_length()
    half = n // 2
    if n <= BASE_BITS:
        return _euclid(a, b, half, out)
    M = IDENTITY
    if b.bit_length() <= half:
        return a, b, M

    c, d = a, b
    a1, b1 = a >> half, b >> half
    if b1 and a1 > b1:
        sub = []
        _, _, M1 = _half_reduce(a1, b1, sub)
        c, d, M = _lift(a, b, sub, M1, out)
        if d.bit_length() <= half:
            return c, d, M

    q, r = divmod(c, d)
    out.append(int(q))
    c, d = d, r
    M = (M[0] * q + M[1], M[0], M[2] * q + M[3], M[2])
    if d.bit_length() <= half:
        return c, d, M

    shift = 2 * half - c.bit_length()
    if shift > 0:
        c2, d2 = c >> shift, d >> shift
        if d2 and c2 > d2:
            sub = []
            _, _, M2 = _half_reduce(c2, d2, sub)
            c, d, M2 = _lift(c, d, sub, M2, out)
            M = mat_mul(M, M2)
    c, d, M3 = _euclid(c, d, half, out)
    return c, d, mat_mul(M, M3)


def quotients(a, b):
    """All Euclidean quotients of ``a/b`` for ``a > b > 0`` (the digits of a/b)."""
    a, b = mpz(a), mpz(b)
    out = []
    while b:
        if a.bit_length() <= BASE_BITS:
            a, b, _ = _euclid(a, b, 0, out)
        elif b.bit_length() <= a.bit_length() // 2:
            # a huge single quotient: _half_reduce would make no progress
            q, r = divmod(a, b)
            out.append(int(q))
            a, b = b, r
        else:
            a, b, _ = _half_reduce(a, b, out)
    return out


def expand(num, den):
    """Canonical expansion of ``num/den`` (den > 0) as ``(leading, digits)``."""
    num, den = mpz(num), mpz(den)
    a0, r = divmod(num, den)
    if not r:
        return int(a0), []
    return int(a0), quotients(den, r)


def product(digits, lo=0, hi=None):
    """Product of ``[[d, 1], [1, 0]]`` over ``digits[lo:hi]``, built as a tree."""
    if hi is None:
        hi = len(digits)
    if hi - lo <= 16:
        m00, m01, m10, m11 = IDENTITY
        for i in range(lo, hi):
            q = digits[i]
            m00, m01 = m00 * q + m01, m00
            m10, m11 = m10 * q + m11, m10
        return (m00, m01, m10, m11)
    mid = (lo + hi) // 2
    return mat_mul(product(digits, lo, mid), product(digits, mid, hi))
