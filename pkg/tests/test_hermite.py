
import pytest

from utils.custom_types import DomainError, PolyBasis, SpecParseError
from utils.hermite import (
    ComplexParam,
    CPoly,
    evaluate,
    evaluate_many,
    gaussian_smooth_imaginary,
    hermite_from_monomial,
    hermite_integral_oracle,
    hermite_table,
    lift_linear,
    mahler_transform,
    monomial_from_hermite,
    noise_semigroup_eval,
)
from utils.quad import gauss_rule

M = PolyBasis.MONOMIAL
H = PolyBasis.HERMITE


def random_poly(rng, dimension, degree, basis):
    terms = {}
    for _ in range(12):
        alpha = tuple(int(a) for a in rng.integers(0, degree + 1, size=dimension))
        if sum(alpha) <= degree:
            terms[alpha] = complex(*rng.standard_normal(2))
    return CPoly(dimension, terms, basis)


class TestComplexParam:
    def test_inside_disk(self):
        z = ComplexParam(0.6, 0.8)
        assert z.modulus == pytest.approx(1.0)
        assert z.value == complex(0.6, 0.8)

    def test_outside_disk_rejected(self):
        with pytest.raises(DomainError):
            ComplexParam(0.9, 0.9)

    def test_boundary_tolerance(self):
        ComplexParam(1.0 + 1e-13, 0.0)

    def test_parse(self):
        assert ComplexParam.parse("0.5,-0.25") == ComplexParam(0.5, -0.25)
        assert ComplexParam.parse("0.3") == ComplexParam(0.3, 0.0)
        with pytest.raises(SpecParseError):
            ComplexParam.parse("a,b")


class TestRecurrence:
    def test_table_rows(self):
        table = hermite_table(4)
        assert table[2].tolist() == [-1, 0, 1, 0, 0]
        assert table[3].tolist() == [0, -3, 0, 1, 0]
        assert table[4].tolist() == [3, 0, -6, 0, 1]

    def test_table_is_read_only(self):
        with pytest.raises(ValueError):
            hermite_table(3)[0, 0] = 2.0

    @pytest.mark.parametrize("n", [0, 1, 2, 5, 8])
    def test_integral_definition_agrees(self, n):
        rule = gauss_rule(32)
        p = CPoly(1, {(n,): 1.0}, H)
        for x in (-1.3, 0.0, 0.7, 2.5):
            assert evaluate(p, [x]) == pytest.approx(hermite_integral_oracle(n, x, rule), abs=1e-9)


class TestBasisConversion:
    def test_square(self):
        p = hermite_from_monomial(CPoly(1, {(2,): 1.0}))
        assert dict(p.terms) == {(2,): 1.0, (0,): 1.0}

    def test_constant(self):
        p = hermite_from_monomial(CPoly.constant(2, 3 - 1j))
        assert dict(p.terms) == {(0, 0): 3 - 1j}

    def test_tensor_product(self):
        p = hermite_from_monomial(CPoly(2, {(1, 1): 1.0}))
        assert dict(p.terms) == {(1, 1): 1.0}

    def test_h3(self):
        p = monomial_from_hermite(CPoly(1, {(3,): 1.0}, H))
        assert dict(p.terms) == {(3,): 1.0, (1,): -3.0}

    def test_inverse_of_square(self):
        p = monomial_from_hermite(CPoly(1, {(2,): 1.0, (0,): 1.0}, H))
        assert dict(p.terms) == {(2,): 1.0}

    def test_wrong_basis(self):
        with pytest.raises(DomainError):
            hermite_from_monomial(CPoly(1, {(1,): 1.0}, H))
        with pytest.raises(DomainError):
            monomial_from_hermite(CPoly(1, {(1,): 1.0}, M))

    @pytest.mark.parametrize("dimension,degree", [(1, 8), (2, 6), (3, 4)])
    def test_round_trip(self, rng, dimension, degree):
        for _ in range(5):
            p = random_poly(rng, dimension, degree, M)
            back = monomial_from_hermite(hermite_from_monomial(p))
            assert back.allclose(p, rel_tol=1e-12, abs_tol=1e-12)


class TestCPoly:
    def test_prunes_zero_coefficients(self):
        p = CPoly(1, {(0,): 1.0, (3,): 0.0, (2,): 1e-301})
        assert set(p.terms) == {(0,)}
        assert p.degree == 0

    def test_invalid_multi_index(self):
        with pytest.raises(DomainError):
            CPoly(2, {(1,): 1.0})
        with pytest.raises(DomainError):
            CPoly(1, {(-1,): 1.0})

    def test_arithmetic_cancels(self):
        p = CPoly(1, {(1,): 2.0, (0,): 1.0}, H)
        assert (p - p).is_zero()
        assert (2 * p).coefficient((1,)) == 4.0

    def test_mean_is_constant_hermite_coefficient(self):
        assert CPoly(1, {(2,): 1.0, (1,): 5.0}).mean() == pytest.approx(1.0)

    def test_mixed_basis_addition(self):
        p = CPoly(1, {(2,): 1.0}, M) + CPoly(1, {(0,): -1.0}, H)
        assert p.basis == M
        assert dict(p.terms) == {(2,): 1.0, (0,): -1.0}


class TestMahler:
    def test_square(self):
        z = ComplexParam(0.3, 0.4)
        p = mahler_transform(CPoly(1, {(2,): 1.0, (0,): 1.0}, H), z)
        assert p.coefficient((2,)) == pytest.approx(z.value**2)
        assert p.coefficient((0,)) == 1.0

    def test_identity_and_mean(self, rng):
        p = random_poly(rng, 2, 5, H)
        assert mahler_transform(p, ComplexParam(1.0, 0.0)) == p
        mean_only = mahler_transform(p, ComplexParam(0.0, 0.0))
        assert set(mean_only.terms) <= {(0, 0)}
        assert mean_only.coefficient((0, 0)) == p.coefficient((0, 0))

    def test_semigroup_law(self, rng):
        p = random_poly(rng, 2, 6, H)
        z1, z2 = ComplexParam(0.5, -0.25), ComplexParam(-0.3, 0.6)
        composed = mahler_transform(mahler_transform(p, z1), z2)
        direct = mahler_transform(p, ComplexParam.from_complex(z1.value * z2.value))
        assert composed.allclose(direct, rel_tol=1e-13, abs_tol=0.0)

    def test_semigroup_exact_for_dyadic(self, rng):
        p = random_poly(rng, 1, 6, H)
        composed = mahler_transform(mahler_transform(p, ComplexParam(0.5, 0.0)), ComplexParam(0.25, 0.0))
        assert composed == mahler_transform(p, ComplexParam(0.125, 0.0))


class TestEvaluate:
    def test_examples(self):
        assert evaluate(CPoly(1, {(2,): 1.0}), [1 + 1j]) == pytest.approx(2j)
        assert evaluate(CPoly(1, {(2,): 1.0}, H), [2.0]) == pytest.approx(3.0)
        assert evaluate(CPoly.constant(3, 5.0), [0.1, 2j, -4]) == 5.0

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            evaluate(CPoly(2, {(1, 0): 1.0}), [1.0])

    def test_many_matches_single(self, rng):
        p = random_poly(rng, 2, 5, H)
        points = rng.standard_normal((7, 2)) + 1j * rng.standard_normal((7, 2))
        values = evaluate_many(p, points)
        for point, value in zip(points, values):
            assert value == pytest.approx(evaluate(p, point), rel=1e-12)


class TestSmoothing:
    def test_u_squared(self):
        q = gaussian_smooth_imaginary(CPoly(1, {(2,): 1.0}), 0, 1.0)
        assert dict(q.terms) == {(2,): 1.0, (0,): -1.0}

    def test_u_cubed(self):
        q = gaussian_smooth_imaginary(CPoly(1, {(3,): 1.0}), 0, 1.0)
        assert dict(q.terms) == {(3,): 1.0, (1,): -3.0}

    def test_zero_sigma(self):
        p = CPoly(2, {(2, 1): 1.0 + 2j})
        assert gaussian_smooth_imaginary(p, 1, 0.0) is p

    @pytest.mark.parametrize("n", range(0, 9))
    def test_matches_hermite_expansion(self, n):
        smoothed = gaussian_smooth_imaginary(CPoly(1, {(n,): 1.0}), 0, 1.0)
        assert smoothed.allclose(monomial_from_hermite(CPoly(1, {(n,): 1.0}, H)))

    def test_direction_rotates(self):
        # real Gaussian shift
        q = gaussian_smooth_imaginary(CPoly(1, {(2,): 1.0}), 0, 1.0, direction=1j)
        assert q.allclose(CPoly(1, {(2,): 1.0, (0,): 1.0}))

    def test_rejects_hermite_input(self):
        with pytest.raises(DomainError):
            gaussian_smooth_imaginary(CPoly(1, {(2,): 1.0}, H), 0, 1.0)


class TestLift:
    def test_binomial(self):
        lifted = lift_linear(CPoly(1, {(2,): 1.0}), 2.0, 1j)
        assert dict(lifted.terms) == {(2, 0): 4.0, (1, 1): 4j, (0, 2): -1.0}

    def test_zero_coefficient_drops_variable(self):
        lifted = lift_linear(CPoly(2, {(1, 2): 3.0}), 1.0, 0.0)
        assert dict(lifted.terms) == {(1, 2, 0, 0): 3.0}


class TestNoiseSemigroup:
    def test_linear(self):
        value = noise_semigroup_eval(CPoly(1, {(1,): 1.0}), 0.5, [2.0], gauss_rule(8))
        assert value == pytest.approx(1.0)

    def test_square(self):
        r, x = 0.3, 1.7
        value = noise_semigroup_eval(CPoly(1, {(2,): 1.0}), r, [x], gauss_rule(8))
        assert value == pytest.approx(r * r * x * x + 1 - r * r)

    def test_zero_parameter_is_mean(self, rng):
        p = random_poly(rng, 1, 6, H)
        value = noise_semigroup_eval(p, 0.0, [3.3], gauss_rule(10))
        assert value == pytest.approx(p.coefficient((0,)), abs=1e-10)

    def test_matches_mahler(self, rng):
        rule = gauss_rule(16)
        for _ in range(3):
            p = random_poly(rng, 2, 6, H)
            r = float(rng.uniform(-1, 1))
            transformed = mahler_transform(p, ComplexParam(r, 0.0))
            for x in rng.standard_normal((20, 2)):
                assert noise_semigroup_eval(p, r, x, rule) == pytest.approx(
                    evaluate(transformed, x), abs=1e-8
                )

    def test_rejects_large_parameter(self):
        with pytest.raises(DomainError):
            noise_semigroup_eval(CPoly(1, {(1,): 1.0}), 1.5, [0.0], gauss_rule(4))
