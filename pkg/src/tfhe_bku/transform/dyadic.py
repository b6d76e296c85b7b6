"""Dyadic (alpha / 2**beta) lifting coefficients and the integer lifting rotation."""

from __future__ import annotations

import dataclasses
from fractions import Fraction

import mpmath

BETA_MIN, BETA_MAX = 4, 64
_MP_DPS = 60


@dataclasses.dataclass(frozen=True)
class DyadicCoefficient:
    """alpha / 2**beta, with alpha written as a signed sum of powers of two.

    ``shift_recipe`` holds ``(shift, sign)`` pairs so that the value equals
    ``sum(sign * 2**-shift)``; multiplying by the coefficient is then a sum
    of right-shifted copies of the operand.
    """

    alpha: int
    beta: int
    shift_recipe: tuple[tuple[int, int], ...]

    @property
    def value(self) -> Fraction:
        return Fraction(self.alpha, 1 << self.beta)

    def recipe_value(self) -> Fraction:
        return sum((Fraction(s, 1) / Fraction(2) ** sh for sh, s in self.shift_recipe), Fraction(0))

    def apply(self, x: int) -> int:
        """round(alpha * x / 2**beta), ties upward, by shift-and-add.

        The shifted terms are accumulated at full width and rounded once.
        """
        acc = 0
        for shift, sign in self.shift_recipe:
            term = x << (self.beta - shift)
            acc += term if sign > 0 else -term
        return (acc + (1 << (self.beta - 1))) >> self.beta

    def negated(self) -> "DyadicCoefficient":
        return DyadicCoefficient(-self.alpha, self.beta, tuple((sh, -s) for sh, s in self.shift_recipe))


def csd_digits(alpha: int) -> list[tuple[int, int]]:
    """Canonical signed-digit (non-adjacent) form: [(exponent, sign)], high to low."""
    digits = []
    e = 0
    a = alpha
    while a:
        if a & 1:
            d = 2 - (a & 3)  # +1 if a = 1 mod 4, -1 if a = 3 mod 4
            digits.append((e, d))
            a -= d
        a >>= 1
        e += 1
    return digits[::-1]


def _round_half_up(x) -> int:
    if isinstance(x, Fraction):
        return (x.numerator * 2 + x.denominator) // (2 * x.denominator)
    return int(mpmath.floor(x + mpmath.mpf(1) / 2))


def quantize_dyadic(T, beta: int) -> DyadicCoefficient:
    """Nearest alpha / 2**beta to T, plus its CSD shift recipe."""
    if not BETA_MIN <= beta <= BETA_MAX:
        raise ValueError(f"beta must lie in [{BETA_MIN}, {BETA_MAX}], got {beta}")
    if isinstance(T, (int, float, Fraction)):
        Tf = Fraction(T)
        if abs(Tf) >= 2:
            raise ValueError("|T| must be < 2")
        alpha = _round_half_up(Tf * (1 << beta))
    else:
        with mpmath.workdps(_MP_DPS):
            Tm = mpmath.mpf(T)
            if abs(Tm) >= 2:
                raise ValueError("|T| must be < 2")
            alpha = _round_half_up(Tm * mpmath.mpf(2) ** beta)
    recipe = tuple((beta - e, s) for e, s in csd_digits(alpha))
    return DyadicCoefficient(alpha, beta, recipe)


def lifting_coefficients(theta, beta: int) -> tuple[DyadicCoefficient, DyadicCoefficient, DyadicCoefficient]:
    """Three-shear factorisation of a rotation by ``theta``.

    R(theta) = [[1, p], [0, 1]] [[1, 0], [u, 1]] [[1, p], [0, 1]] with
    p = -tan(theta/2) and u = sin(theta). Needs |theta| < pi for finite p;
    the transform only uses |theta| <= pi/4.
    """
    with mpmath.workdps(_MP_DPS):
        th = mpmath.mpf(theta)
        p = quantize_dyadic(-mpmath.tan(th / 2), beta)
        u = quantize_dyadic(mpmath.sin(th), beta)
    return p, u, p


def lifting_rotate(x: int, y: int, coeffs, direction: str = "forward") -> tuple[int, int]:
    """Rotate the integer pair (x, y) ~ x + iy with three rounded lifting steps.

    ``inverse`` undoes ``forward`` exactly: the same rounded terms are
    subtracted in reverse order.
    """
    p1, u, p2 = coeffs
    if direction == "forward":
        x = x + p1.apply(y)
        y = y + u.apply(x)
        x = x + p2.apply(y)
    elif direction == "inverse":
        x = x - p2.apply(y)
        y = y - u.apply(x)
        x = x - p1.apply(y)
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return x, y


def lifting_matrix(coeffs) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """Exact 2x2 matrix (a, b, c, d) realised by the unrounded lifting steps."""
    p1, u, p2 = (c.value for c in coeffs)
    # [[1,p2],[0,1]] @ [[1,0],[u,1]] @ [[1,p1],[0,1]]
    return 1 + p2 * u, p1 + p2 + p1 * p2 * u, u, 1 + u * p1
