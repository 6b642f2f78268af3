from fractions import Fraction

import pytest

from frugaltext.grid import (
    LrGridPoint,
    as_fraction,
    from_index,
    grid_distance,
    snap,
)


class TestLrGridPoint:
    def test_value_and_label(self):
        p = LrGridPoint(5, -6)
        assert p.value == pytest.approx(5e-6)
        assert p.label == "5e-6"
        assert str(p) == "5e-6"

    def test_mantissa_bounds(self):
        with pytest.raises(ValueError):
            LrGridPoint(0, -6)
        with pytest.raises(ValueError):
            LrGridPoint(10, -6)

    def test_successor_within_decade(self):
        assert LrGridPoint(5, -6).successor() == LrGridPoint(6, -6)

    def test_successor_across_decade(self):
        assert LrGridPoint(9, -6).successor() == LrGridPoint(1, -5)

    def test_predecessor_within_decade(self):
        assert LrGridPoint(5, -6).predecessor() == LrGridPoint(4, -6)

    def test_predecessor_across_decade(self):
        assert LrGridPoint(1, -5).predecessor() == LrGridPoint(9, -6)

    def test_index_consecutive(self):
        p = LrGridPoint(3, -4)
        assert p.successor().index == p.index + 1
        assert p.predecessor().index == p.index - 1

    def test_step(self):
        p = LrGridPoint(9, -6)
        assert p.step(1) == LrGridPoint(1, -5)
        assert p.step(-8) == LrGridPoint(1, -6)
        assert p.step(0) == p

    def test_ordering(self):
        assert LrGridPoint(9, -6) < LrGridPoint(1, -5)
        assert LrGridPoint(2, -5) > LrGridPoint(1, -5)

    def test_from_index_round_trip(self):
        for index in range(-80, 20):
            assert from_index(index).index == index


class TestAsFraction:
    def test_float_reads_decimal_intent(self):
        assert as_fraction(2.5e-4) == Fraction(1, 4000)
        assert as_fraction(5e-5) == Fraction(1, 20000)

    def test_passthrough(self):
        assert as_fraction(Fraction(3, 7)) == Fraction(3, 7)
        assert as_fraction("1/4") == Fraction(1, 4)
        assert as_fraction(2) == Fraction(2)


class TestSnap:
    @pytest.mark.parametrize("value,label", [
        (5e-5, "5e-5"),
        (1e-6, "1e-6"),
        (3.0, "3e0"),
        (0.1, "1e-1"),
        (9.999e-6, "1e-5"),
        (1.04e-5, "1e-5"),
    ])
    def test_exact_and_near_values(self, value, label):
        assert snap(value).label == label

    def test_tie_goes_to_lower_point(self):
        # 2.5e-4 sits exactly between 2e-4 and 3e-4
        assert snap(2.5e-4).label == "2e-4"
        assert snap(Fraction(25, 100000)).label == "2e-4"

    def test_tie_at_decade_boundary(self):
        # 9.5e-6 is equidistant from 9e-6 and 1e-5
        assert snap(9.5e-6).label == "9e-6"

    def test_grid_values_snap_to_themselves(self):
        for index in range(-70, 10):
            point = from_index(index)
            assert snap(point.value) == point

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            snap(0.0)
        with pytest.raises(ValueError):
            snap(-1e-5)

    def test_fraction_input(self):
        assert snap(Fraction(1, 200000)).label == "5e-6"


class TestGridDistance:
    def test_signed_steps(self):
        a, b = snap(5e-6), snap(1e-5)
        assert grid_distance(a, b) == 5
        assert grid_distance(b, a) == -5
