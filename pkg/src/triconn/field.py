"""Scalar models for connection coefficients.

Two models are supported: exact rationals (``fractions.Fraction``) and
double-precision complex numbers.  Every container in the package carries a
field tag, one of ``RATIONAL`` or ``COMPLEX``, and the helpers here keep
comparisons, parsing, formatting and root extraction consistent between the
two models.
"""

import cmath
import math
from fractions import Fraction

from .errors import ParseError

RATIONAL = "rational"
COMPLEX = "complex"

DEFAULT_TOL = 1e-9

FIELDS = (RATIONAL, COMPLEX)


def check_field(field):
    if field not in FIELDS:
        raise ValueError(f"unknown field tag {field!r}")
    return field


def one(field):
    return Fraction(1) if field == RATIONAL else complex(1.0)


def as_scalar(value, field):
    """Coerce a number into the given scalar model."""
    if field == RATIONAL:
        if isinstance(value, Fraction):
            return value
        if isinstance(value, int):
            return Fraction(value)
        raise TypeError(f"cannot use {value!r} as a rational scalar")
    return complex(value)


def close(a, b, field, tol=DEFAULT_TOL):
    """Equality test: exact for rationals, relative tolerance for complex."""
    if field == RATIONAL:
        return a == b
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def max_relative_error(a, b):
    return abs(a - b) / max(1.0, abs(a), abs(b))


def random_scalar(rng, field):
    """Random nonzero scalar: sign*p/q with p,q in [1,100], or a complex
    number with modulus in [0.5, 2] and uniform phase."""
    if field == RATIONAL:
        sign = rng.choice((1, -1))
        return Fraction(sign * rng.randint(1, 100), rng.randint(1, 100))
    modulus = rng.uniform(0.5, 2.0)
    phase = rng.uniform(-math.pi, math.pi)
    return cmath.rect(modulus, phase)


def integer_nth_root(n, d):
    """Largest r >= 0 with r**d <= n, for n >= 0, d >= 1."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n in (0, 1) or d == 1:
        return n
    r = int(round(n ** (1.0 / d)))
    while r ** d > n:
        r -= 1
    while (r + 1) ** d <= n:
        r += 1
    return r


def rational_nth_root(value, d):
    """Exact d-th root of a Fraction, or None when none exists in Q."""
    if d == 1:
        return value
    if value == 0:
        return Fraction(0)
    negative = value < 0
    if negative and d % 2 == 0:
        return None
    p, q = abs(value.numerator), value.denominator
    rp = integer_nth_root(p, d)
    rq = integer_nth_root(q, d)
    if rp ** d != p or rq ** d != q:
        return None
    root = Fraction(rp, rq)
    return -root if negative else root


def principal_root(value, d, field):
    """d-th root: principal branch over C, exact root or None over Q."""
    if field == RATIONAL:
        return rational_nth_root(value, d)
    if value == 0:
        raise ZeroDivisionError("root of zero")
    return cmath.exp(cmath.log(value) / d)


def format_scalar(value, field):
    if field == RATIONAL:
        frac = as_scalar(value, field)
        return f"{frac.numerator}/{frac.denominator}"
    z = complex(value)
    return f"{z.real:.17g},{z.imag:.17g}"


def parse_scalar(text, field, line_number=0):
    try:
        if field == RATIONAL:
            if "/" in text:
                num, den = text.split("/")
                return Fraction(int(num), int(den))
            return Fraction(int(text))
        re_part, im_part = text.split(",")
        return complex(float(re_part), float(im_part))
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(line_number, f"bad {field} scalar {text!r}") from exc
