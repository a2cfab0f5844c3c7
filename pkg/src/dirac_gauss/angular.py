"""Relativistic angular-momentum bookkeeping.

The relativistic quantum number kappa encodes both the total angular
momentum j and the orbital angular momenta of the large and small radial
components.  This module also evaluates the one Wigner 3j column needed
for average-of-configuration exchange weights, using exact rational
arithmetic so that moderate j values lose no precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

__all__ = [
    "AngularSymmetry",
    "threejm_half",
    "gamma_coefficient",
    "allowed_l_range",
]

L_LETTERS = "spdfghikl"


@dataclass(frozen=True, order=True)
class AngularSymmetry:
    """One kappa symmetry block.

    kappa > 0 corresponds to j = l - 1/2, kappa < 0 to j = l + 1/2.
    Half-integers are kept as doubled integers internally (two_j) so all
    derived quantities are exact.
    """

    kappa: int

    def __post_init__(self):
        if self.kappa == 0 or self.kappa != int(self.kappa):
            raise ValueError(f"kappa must be a nonzero integer, got {self.kappa!r}")

    @property
    def two_j(self) -> int:
        return 2 * abs(self.kappa) - 1

    @property
    def j(self) -> float:
        return abs(self.kappa) - 0.5

    @property
    def l_large(self) -> int:
        return self.kappa if self.kappa > 0 else -self.kappa - 1

    @property
    def l_small(self) -> int:
        # l of the -kappa symmetry
        return -self.kappa if self.kappa < 0 else self.kappa - 1

    @property
    def degeneracy(self) -> int:
        return self.two_j + 1

    @property
    def letter(self) -> str:
        return L_LETTERS[self.l_large]

    def label(self) -> str:
        """Level letter with the j = l - 1/2 branch marked by a minus."""
        return self.letter + ("-" if self.kappa > 0 and self.l_large > 0 else "")

    def __repr__(self):
        return f"AngularSymmetry(kappa={self.kappa})"


def _as_two_j(j) -> int:
    two_j = 2 * Fraction(j)
    if two_j.denominator != 1:
        raise ValueError(f"{j} is not a half-integer")
    return int(two_j)


@lru_cache(maxsize=None)
def _threejm_half_two_j(two_ja: int, l: int, two_jb: int) -> float:
    """3j symbol (ja l jb; 1/2 0 -1/2) from Racah's sum, exact rationals."""
    if two_ja < 1 or two_jb < 1 or two_ja % 2 == 0 or two_jb % 2 == 0:
        raise ValueError("j values must be positive half-odd-integers")
    if l < 0:
        raise ValueError("l must be nonnegative")
    two_l = 2 * l
    # triangle rule
    if two_l < abs(two_ja - two_jb) or two_l > two_ja + two_jb:
        return 0.0

    ja = Fraction(two_ja, 2)
    jb = Fraction(two_jb, 2)
    m1 = Fraction(1, 2)
    m3 = Fraction(-1, 2)

    def fact(x: Fraction) -> int:
        assert x.denominator == 1 and x >= 0
        return math.factorial(int(x))

    # Racah sum for (ja l jb; m1 0 m3)
    t1 = l - m1 - jb          # j2 - m1 - j3 with (j1,j2,j3) = (ja,l,jb)
    t2 = ja + 0 - jb          # j1 + m2 - j3
    t3 = ja + l - jb
    t4 = ja - m1
    t5 = l + 0

    tmin = max(Fraction(0), t1, t2)
    tmax = min(t3, t4, t5)
    total = Fraction(0)
    t = tmin
    while t <= tmax:
        term = Fraction((-1) ** int(t))
        term /= (
            fact(t) * fact(t - t1) * fact(t - t2)
            * fact(t3 - t) * fact(t4 - t) * fact(t5 - t)
        )
        total += term
        t += 1

    if total == 0:
        return 0.0

    norm2 = (
        Fraction(
            fact(ja + l - jb) * fact(ja - l + jb) * fact(-ja + l + jb),
            fact(ja + l + jb + 1),
        )
        * fact(ja + m1) * fact(ja - m1)
        * fact(l) * fact(l)
        * fact(jb + Fraction(1, 2)) * fact(jb - Fraction(1, 2))
    )
    phase = (-1) ** int(ja - l - m3)
    value2 = total * total * norm2
    sign = phase * (1 if total > 0 else -1)
    return sign * math.sqrt(float(value2))


def threejm_half(j_a, l: int, j_b) -> float:
    """Wigner 3j symbol (j_a, l, j_b; 1/2, 0, -1/2).

    Returns 0 when the triangle condition fails; j_a and j_b must be
    positive half-odd-integers.
    """
    return _threejm_half_two_j(_as_two_j(j_a), int(l), _as_two_j(j_b))


def gamma_coefficient(a: AngularSymmetry, b: AngularSymmetry, l: int) -> float:
    """Average-of-configuration exchange weight between symmetries a and b.

    Squared 3j symbol with the parity selection rule on l_large(a) +
    l_large(b) + l; zero outside the allowed range, always in [0, 1].
    """
    if l < 0:
        raise ValueError("l must be nonnegative")
    if (a.l_large + b.l_large + l) % 2 != 0:
        return 0.0
    w = _threejm_half_two_j(a.two_j, l, b.two_j)
    return w * w


def allowed_l_range(a: AngularSymmetry, b: AngularSymmetry) -> list[int]:
    """Multipole orders l with nonzero exchange weight, ascending."""
    lo = abs(a.two_j - b.two_j) // 2
    hi = (a.two_j + b.two_j) // 2
    return [l for l in range(lo, hi + 1) if (a.l_large + b.l_large + l) % 2 == 0]
