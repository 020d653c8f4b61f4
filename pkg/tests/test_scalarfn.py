import math

import numpy as np
import pytest

from utils.custom_types import DerivativeKind, DomainError, GeneratorError, MonotonicityError
from utils.scalarfn import (
    FnPair,
    ScalarFn,
    check_increasing,
    compose_F,
    finite_difference_audit,
    invert,
    make_exp,
    make_generator,
    make_hariya_companion,
    make_linear,
    make_log1p,
    make_plog,
    make_power,
)


class TestBuilders:
    def test_power(self):
        square = make_power(2.0)
        assert square.value(3.0) == 9.0
        assert np.all(square.d2(np.array([0.1, 1.0, 50.0])) == 2.0)
        assert make_power(1.5).d1(4.0) == pytest.approx(3.0)
        assert square.elasticity(7.0) == pytest.approx(1.0)

    def test_power_rejects_nonpositive_exponent(self):
        with pytest.raises(DomainError):
            make_power(0.0)

    def test_exp(self):
        exp = make_exp()
        assert exp.value(0.0) == 1.0
        assert exp.d3(0.0) == 1.0
        assert exp.value(1.0) == pytest.approx(math.e)

    def test_plog_value(self):
        plog = make_plog(1.0)
        assert plog.value(1.0) == pytest.approx(0.25, abs=1e-12)
        assert plog.d1(0.0) == 0.0

    @pytest.mark.parametrize("t", [1.0, 10.0])
    def test_plog_elasticity(self, t):
        p = 1.5
        plog = make_plog(p)
        expected = p + t / ((t + 1) * math.log(t + 1))
        assert t * plog.d2(t) / plog.d1(t) == pytest.approx(expected, rel=1e-12)
        assert plog.elasticity(t) == pytest.approx(expected, rel=1e-12)

    def test_linear_combination(self):
        h = make_linear(2.0) + make_log1p()
        assert h.value(1.0) == pytest.approx(2.0 + math.log(2.0))
        assert h.d1(1.0) == pytest.approx(2.5)
        assert h.d2(1.0) == pytest.approx(-0.25)

    def test_numeric_derivatives(self):
        cube = ScalarFn("cube", lambda t: t**3)
        assert cube.derivative_kind == DerivativeKind.NUMERIC
        assert cube.d1(2.0) == pytest.approx(12.0, rel=1e-8)
        assert cube.d2(2.0) == pytest.approx(12.0, rel=1e-6)
        assert cube.d3(2.0) == pytest.approx(6.0, rel=1e-3)

    def test_declare_growth_is_a_copy(self):
        plog = make_plog(1.0)
        flagged = make_exp().declare_growth()
        assert flagged.growth_declared
        assert not make_exp().growth_declared
        assert plog.declare_growth(False).growth_declared is False
        assert plog.growth_declared


class TestAudits:
    @pytest.mark.parametrize("fn", [make_power(2.5), make_exp(), make_plog(1.0)], ids=["power", "exp", "plog"])
    def test_finite_difference_agreement(self, fn):
        audit = finite_difference_audit(fn, np.array([0.5, 1.0, 3.0, 20.0]))
        assert audit["d1"] < 1e-5
        assert audit["d2"] < 1e-5

    def test_check_increasing(self):
        check_increasing(make_plog(2.0))
        with pytest.raises(MonotonicityError):
            check_increasing(-make_power(2.0))


class TestInvert:
    def test_closed_form(self):
        assert invert(make_power(2.0), 9.0) == pytest.approx(3.0)
        assert invert(make_exp(), 1.0) == 0.0

    def test_numeric(self):
        assert invert(make_plog(1.0), 0.25) == pytest.approx(1.0, rel=1e-10)

    def test_below_value_at_zero(self):
        with pytest.raises(DomainError):
            invert(make_exp(), 0.5)

    def test_roundoff_below_zero_value(self):
        assert invert(make_exp(), 1.0 - 1e-15) == 0.0


class TestCompose:
    def test_power_ratio(self):
        F = compose_F(make_power(3.0), make_power(6.0))
        assert F.value(8.0) == pytest.approx(64.0)

    def test_same_function_is_identity(self):
        F = compose_F(make_plog(1.0), make_plog(1.0))
        assert F.value(5.0) == 5.0
        assert F.d2(5.0) == 0.0

    def test_derivative_against_finite_differences(self):
        F = compose_F(make_power(2.0), make_power(4.0))
        h = 1e-5
        fd = (F.value(4.0 + h) - F.value(4.0 - h)) / (2 * h)
        assert F.d1(4.0) == pytest.approx(fd, rel=1e-6)

    def test_chain_rule_path(self):
        # F(x) = exp(sqrt(x))
        F = compose_F(make_power(2.0), make_exp())
        e2 = math.exp(2.0)
        assert F.value(4.0) == pytest.approx(e2)
        assert F.d1(4.0) == pytest.approx(e2 / 4.0)
        assert F.d2(4.0) == pytest.approx(e2 / 32.0)

    def test_pair_inverse_and_consistency(self):
        pair = FnPair.from_PQ(make_power(2.0), make_power(4.0))
        assert pair.F_inverse(16.0) == pytest.approx(4.0)
        assert pair.check_consistency() < 1e-12

    def test_describe_records_derivative_kinds(self):
        described = FnPair.from_PQ(make_power(2.0), make_power(4.0)).describe()
        assert described["derivatives"] == {"P": "analytic", "Q": "analytic"}
        assert described["P"] == make_power(2.0).name

    def test_numeric_pair_consistency(self):
        pair = FnPair.from_PQ(make_plog(1.0), make_power(3.0))
        assert pair.check_consistency(np.array([0.01, 0.3, 1.0, 4.0, 25.0])) < 1e-8


class TestHariya:
    def test_unit_parameter_returns_p(self):
        Q = make_hariya_companion(make_power(2.0), 1.0)
        assert Q.value(3.0) == pytest.approx(9.0)

    def test_power_exponent(self):
        p, r = 3.0, 0.5
        Q = make_hariya_companion(make_power(p), r)
        assert Q.d1(2.0) == pytest.approx(p ** (1 / r**2) * 2.0 ** ((p - 1) / r**2))
        assert Q.elasticity(5.0) == pytest.approx((p - 1) / r**2)

    def test_exp(self):
        Q = make_hariya_companion(make_exp(), 0.5)
        assert Q.d1(0.7) == pytest.approx(math.exp(0.7 / 0.25))
        assert Q.value(0.0) == 0.0

    def test_elasticity_scaling(self):
        P, r = make_plog(1.0), 0.8
        Q = make_hariya_companion(P, r)
        for t in (0.2, 1.0, 6.0):
            assert r * r * Q.d2(t) / Q.d1(t) == pytest.approx(P.d2(t) / P.d1(t), rel=1e-10)

    def test_rejects_parameter(self):
        with pytest.raises(DomainError):
            make_hariya_companion(make_exp(), 0.0)


class TestGenerator:
    def test_power_family(self):
        p, q = 2.0, 4.0
        pair = make_generator(make_linear(p / (q - p)), make_linear(p - 1.0))
        assert pair.P.value(2.0) == pytest.approx(2.0**p / p, rel=1e-9)
        assert pair.P.elasticity(3.0) == pytest.approx(p - 1.0)
        assert pair.Q.elasticity(2.0) == pytest.approx(q - 1.0, rel=1e-8)

    def test_ratio_matches_h(self):
        h = make_linear(2.0) + make_log1p()
        pair = make_generator(h, make_linear(1.0))
        t, step = 1.5, 1e-4
        slope = (pair.F.d1(t + step) - pair.F.d1(t - step)) / (2 * step)
        assert pair.F.d1(t) / slope == pytest.approx(h.value(t), rel=1e-6)

    def test_identity_h(self):
        pair = make_generator(make_linear(1.0), make_linear(1.0))
        assert pair.F.d1(3.0) == pytest.approx(3.0)
        assert pair.F.value(2.0) == pytest.approx(2.0, rel=1e-9)

    @pytest.mark.parametrize("t", [1.0, 5.0])
    def test_example_two_elasticity(self, t):
        pair = make_generator(make_linear(2.0) + make_log1p(), make_linear(1.0))
        expected = 2.0 / (2.0 + 2.0 * math.log1p(t * t / 2.0) / (t * t)) + 1.0
        assert pair.Q.elasticity(t) == pytest.approx(expected, rel=1e-8)

    def test_example_two_limit(self):
        pair = make_generator(make_linear(2.0) + make_log1p(), make_linear(1.0))
        assert pair.Q.elasticity(1e3) == pytest.approx(2.0, abs=1e-4)

    def test_invalid_ingredients(self):
        with pytest.raises(GeneratorError):
            make_generator(make_linear(-1.0), make_linear(1.0))
        with pytest.raises(GeneratorError):
            make_generator(make_linear(1.0), make_linear(0.0, 1.0))
