"""The mantissa-decade learning-rate grid.

Grid points are m * 10^e with integer mantissa 1..9: the search space walks
..., 8e-6, 9e-6, 1e-5, 2e-5, ... Stepping and snapping are done on exact
(mantissa, exponent) integer pairs so no float drift can reorder the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from functools import total_ordering


@total_ordering
@dataclass(frozen=True)
class LrGridPoint:
    """One learning-rate grid point, m * 10^exponent with m in 1..9."""

    mantissa: int
    exponent: int

    def __post_init__(self) -> None:
        if not 1 <= self.mantissa <= 9:
            raise ValueError(f"mantissa must be in 1..9, got {self.mantissa}")

    @property
    def value(self) -> float:
        return float(self.mantissa * Fraction(10) ** self.exponent)

    @property
    def label(self) -> str:
        """Canonical short form, e.g. '5e-6'."""
        return f"{self.mantissa}e{self.exponent}"

    @property
    def index(self) -> int:
        """Position on the global grid; consecutive points differ by 1."""
        return self.exponent * 9 + (self.mantissa - 1)

    def successor(self) -> "LrGridPoint":
        if self.mantissa < 9:
            return LrGridPoint(self.mantissa + 1, self.exponent)
        return LrGridPoint(1, self.exponent + 1)

    def predecessor(self) -> "LrGridPoint":
        if self.mantissa > 1:
            return LrGridPoint(self.mantissa - 1, self.exponent)
        return LrGridPoint(9, self.exponent - 1)

    def step(self, n: int) -> "LrGridPoint":
        """The point n grid steps away (positive n means larger LR)."""
        return from_index(self.index + n)

    def __lt__(self, other: "LrGridPoint") -> bool:
        return self.index < other.index

    def __str__(self) -> str:
        return self.label


def from_index(index: int) -> LrGridPoint:
    exponent, offset = divmod(index, 9)
    return LrGridPoint(offset + 1, exponent)


def as_fraction(value: float | int | str | Fraction) -> Fraction:
    """Exact rational reading of a value.

    Floats are read through their shortest round-tripping decimal form, so
    2.5e-4 means exactly 25/100000 rather than the nearest binary double.
    That keeps snap ties honest.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(Decimal(repr(value)))
    return Fraction(value)


def snap(value: float | Fraction | str) -> LrGridPoint:
    """Snap a positive real to the nearest grid point, ties toward the lower one."""
    exact = as_fraction(value)
    if exact <= 0:
        raise ValueError(f"grid values must be positive, got {value}")
    exponent = math.floor(math.log10(float(exact)))
    # float log10 can be off by one at decade borders; fix by direct comparison
    while Fraction(10) ** exponent > exact:
        exponent -= 1
    while Fraction(10) ** (exponent + 1) <= exact:
        exponent += 1
    decade = Fraction(10) ** exponent
    lower_m = int(exact / decade)  # 1..9 by construction
    lower = LrGridPoint(lower_m, exponent)
    upper = lower.successor()
    dist_lower = exact - Fraction(lower.mantissa) * decade
    dist_upper = Fraction(upper.mantissa) * (Fraction(10) ** upper.exponent) - exact
    return lower if dist_lower <= dist_upper else upper


def grid_distance(a: LrGridPoint, b: LrGridPoint) -> int:
    return b.index - a.index
