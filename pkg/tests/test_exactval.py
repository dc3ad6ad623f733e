import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmshift.exactval import Interval, LogLinear, log_interval


positive_rationals = st.builds(
    Fraction,
    st.integers(min_value=1, max_value=10_000),
    st.integers(min_value=1, max_value=10_000),
)
small_rationals = st.builds(
    Fraction,
    st.integers(min_value=-500, max_value=500),
    st.integers(min_value=1, max_value=120),
)


class TestLogInterval:
    @pytest.mark.parametrize("x", [2, 3, 7, Fraction(3, 2), Fraction(1, 7), 10**24 + 1])
    def test_encloses_and_is_tight(self, x):
        for prec in (16, 48, 80):
            iv = log_interval(x, prec)
            assert iv.width <= Fraction(1, 2**prec)
            assert iv.lo <= Fraction(math.log(x)) + Fraction(1, 2**40)
            assert iv.hi >= Fraction(math.log(x)) - Fraction(1, 2**40)

    def test_log_one_is_zero(self):
        iv = log_interval(1, 64)
        assert iv.lo == iv.hi == 0

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            log_interval(0, 10)

    @given(x=positive_rationals)
    @settings(max_examples=60, deadline=None)
    def test_float_inside_enclosure(self, x):
        iv = log_interval(x, 60)
        assert float(iv.lo) <= math.log(x) + 1e-12
        assert float(iv.hi) >= math.log(x) - 1e-12


class TestInterval:
    def test_arithmetic(self):
        a = Interval(Fraction(1, 4), Fraction(1, 2))
        b = Interval(Fraction(1), Fraction(2))
        assert (a + b).lo == Fraction(5, 4)
        assert (a - b).hi == Fraction(1, 2) - 1
        assert a.scale(-2) == Interval(Fraction(-1), Fraction(-1, 2))
        assert (a - b).abs().lo == Fraction(1, 2)
        assert a.div_pos(b).lo == Fraction(1, 8)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            Interval(Fraction(1), Fraction(0))


class TestLogLinear:
    def test_log_product_identity(self):
        assert LogLinear.log_of(6) == LogLinear.log_of(2) + LogLinear.log_of(3)
        assert LogLinear.log_of(Fraction(3, 2)) == LogLinear.log_of(3) - LogLinear.log_of(2)

    def test_shared_factors_merge(self):
        lhs = LogLinear.log_of(12) + LogLinear.log_of(18)
        rhs = LogLinear.log_of(216)
        assert lhs == rhs
        assert (lhs - rhs).is_zero

    def test_coprime_normal_form(self):
        v = LogLinear.log_of(12) - LogLinear.log_of(18)
        bases = [b for b, _ in v.logs]
        for i, b1 in enumerate(bases):
            for b2 in bases[i + 1 :]:
                assert math.gcd(b1, b2) == 1

    def test_sign_and_order(self):
        assert LogLinear.log_of(5) > LogLinear.log_of(4)
        assert (LogLinear.log_of(2) - LogLinear.log_of(3)).sign() == -1
        assert LogLinear.log_of(2) > Fraction(1, 2)
        assert LogLinear.log_of(2) < Fraction(7, 10)
        assert LogLinear.from_rational(Fraction(3, 4)).sign() == 1

    def test_rational_round_trip(self):
        v = LogLinear.from_rational(Fraction(5, 3))
        assert v.is_rational and v.as_fraction() == Fraction(5, 3)
        with pytest.raises(ValueError):
            LogLinear.log_of(2).as_fraction()

    @given(a=positive_rationals, b=positive_rationals, q=small_rationals)
    @settings(max_examples=60, deadline=None)
    def test_algebra_matches_floats(self, a, b, q):
        x = LogLinear.log_of(a) + q * LogLinear.log_of(b)
        expected = math.log(a) + float(q) * math.log(b)
        assert math.isclose(float(x), expected, rel_tol=0, abs_tol=1e-9)
        iv = x.eval_interval(50)
        assert float(iv.lo) - 1e-12 <= expected <= float(iv.hi) + 1e-12
        assert iv.width <= Fraction(1, 2**50)

    @given(a=positive_rationals, b=positive_rationals)
    @settings(max_examples=40, deadline=None)
    def test_add_sub_cancels(self, a, b):
        x = LogLinear.log_of(a)
        y = LogLinear.log_of(b)
        assert ((x + y) - y) == x
        assert (x - x).is_zero

    def test_division_by_rational(self):
        half = LogLinear.log_of(4) / 2
        assert half == LogLinear.log_of(2)
        with pytest.raises(ZeroDivisionError):
            LogLinear.log_of(2) / 0

    def test_big_arguments(self):
        big = 1 + 10**24
        v = LogLinear.log_of(big)
        iv = v.eval_interval(64)
        assert iv.width <= Fraction(1, 2**64)
        assert math.isclose(iv.midpoint_float(), math.log(big), rel_tol=1e-12)
