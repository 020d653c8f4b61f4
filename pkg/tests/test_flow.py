import cmath
import math

import pytest

from utils.conditions import beckner_point, local_coefficients, local_form
from utils.custom_types import DomainError, PolyBasis
from utils.flow import (
    C_of_s,
    FlowConfig,
    build_g,
    default_s_grid,
    epsilon_sweep,
    flow_monotonicity,
    global_check,
    necessity_probe,
    probe_polynomial,
    random_hermite_poly,
    singular_at_zero,
)
from utils.hermite import ComplexParam, CPoly, evaluate
from utils.scalarfn import FnPair, make_plog, make_power

H = PolyBasis.HERMITE
NELSON_Z = ComplexParam(1 / math.sqrt(3), 0.0)
BAD_Z = ComplexParam(0.8, 0.0)


def power_pair(p, q):
    return FnPair.from_PQ(make_power(p), make_power(q))


def random_disk_point(rng, max_radius=1.0):
    radius = max_radius * math.sqrt(rng.uniform())
    return ComplexParam.from_complex(cmath.rect(radius, rng.uniform(0, 2 * math.pi)))


class TestBuildG:
    def test_constant(self):
        g = build_g(CPoly(1, {(0,): 2.0}, H), ComplexParam(0.3, 0.4), 0.7)
        assert dict(g.terms) == {(0, 0): 2.0}

    def test_linear(self):
        z, s = ComplexParam(0.3, 0.4), 0.36
        g = build_g(CPoly(1, {(1,): 1.0}, H), z, s)
        assert g.coefficient((1, 0)) == pytest.approx(0.6)
        assert g.coefficient((0, 1)) == pytest.approx(z.value * 0.8)
        assert set(g.terms) == {(1, 0), (0, 1)}

    def test_rejects_s(self):
        with pytest.raises(DomainError):
            build_g(CPoly(1, {(1,): 1.0}, H), NELSON_Z, 1.5)

    def test_h2_matches_double_integral(self, make_rng):
        z, s = ComplexParam(0.3, 0.4), 0.36
        g = build_g(CPoly(1, {(2,): 1.0}, H), z, s)
        exact = evaluate(g, (1.0, 1.0))
        v, y = make_rng(23).standard_normal((2, 200000))
        w = math.sqrt(s) * (1.0 + 1j * v) + z.value * math.sqrt(1.0 - s) * (1.0 + 1j * y)
        samples = w**2
        root_n = math.sqrt(samples.size)
        assert abs(exact.real - samples.real.mean()) <= 4 * samples.real.std(ddof=1) / root_n
        assert abs(exact.imag - samples.imag.mean()) <= 4 * samples.imag.std(ddof=1) / root_n

    def test_degree_preserved(self, make_rng):
        rng = make_rng(29)
        for _ in range(20):
            f = random_hermite_poly(1, int(rng.integers(1, 7)), rng)
            z = random_disk_point(rng, 0.9)
            for s in (0.2, 0.5, 0.8):
                assert build_g(f, z, s).degree == f.degree

    def test_continuous_in_s(self, make_rng):
        rng = make_rng(31)
        for _ in range(10):
            f = random_hermite_poly(1, int(rng.integers(0, 7)), rng)
            z = random_disk_point(rng, 0.9)
            s = float(rng.uniform(0.05, 0.95))
            here, there = build_g(f, z, s), build_g(f, z, s + 1e-6)
            for alpha in set(here.terms) | set(there.terms):
                assert abs(here.coefficient(alpha) - there.coefficient(alpha)) < 1e-4


class TestFlowConfig:
    def test_defaults(self):
        cfg = FlowConfig(CPoly(1, {(2,): 1.0}), power_pair(2.0, 4.0), NELSON_Z)
        assert cfg.f.basis == H
        assert cfg.s_grid == default_s_grid()
        assert cfg.order_u == 64

    @pytest.mark.parametrize("grid", [[0.0, 0.5], [0.0, 0.6, 0.5, 1.0], [1.0]])
    def test_invalid_grid(self, grid):
        with pytest.raises(DomainError):
            FlowConfig(CPoly(1, {(1,): 1.0}, H), power_pair(2.0, 4.0), NELSON_Z, s_grid=grid)

    def test_dimension(self):
        with pytest.raises(DomainError):
            FlowConfig(CPoly(3, {(1, 0, 0): 1.0}, H), power_pair(2.0, 4.0), NELSON_Z)


class TestFlow:
    def test_constant_f(self):
        cfg = FlowConfig(CPoly(1, {(0,): 1.5}, H), power_pair(2.0, 4.0), NELSON_Z)
        assert C_of_s(cfg, 0.4) == pytest.approx(1.5**4)
        report = flow_monotonicity(cfg)
        assert report["passed"]
        assert max(abs(d) for d in report["increments"]) < 1e-9

    def test_nelson_point(self):
        f = CPoly(1, {(0,): 1.0, (1,): 0.5}, H)
        report = flow_monotonicity(FlowConfig(f, power_pair(2.0, 4.0), NELSON_Z))
        assert report["passed"]
        assert report["endpoints"]["within_tolerance"]
        assert not report["flagged"]
        assert len(report["values"]) == 21

    @pytest.mark.slow
    def test_random_admissible(self, make_rng):
        rng = make_rng(3)
        pairs = [power_pair(2.0, 4.0), power_pair(4.0, 4.0), power_pair(2.0, 2.0)]
        for index in range(20):
            pair = pairs[index % len(pairs)]
            z = random_disk_point(rng, 0.5)
            f = random_hermite_poly(1, int(rng.integers(0, 6)), rng)
            report = flow_monotonicity(FlowConfig(f, pair, z))
            assert len(report["values"]) == 21
            assert report["passed"]
            assert report["endpoints"]["within_tolerance"]
            margin = global_check(f, pair, z)
            assert margin >= -1e-6 * (1.0 + abs(margin))

    def test_inadmissible_point(self):
        f = CPoly(1, {(0,): 1.0, (1,): 0.05}, H)
        pair = power_pair(2.0, 4.0)
        report = flow_monotonicity(FlowConfig(f, pair, BAD_Z))
        assert not report["passed"]
        assert report["values"][0] > report["values"][-1]
        assert global_check(f, pair, BAD_Z) < 0

    @pytest.mark.slow
    def test_two_dimensional(self):
        f = CPoly(2, {(0, 0): 1.0, (1, 0): 0.3, (0, 1): 0.2j, (1, 1): 0.1}, H)
        cfg = FlowConfig(f, power_pair(2.0, 4.0), NELSON_Z, s_grid=[0.0, 0.5, 1.0], order_u=12, order_x=12)
        report = flow_monotonicity(cfg)
        assert report["passed"]
        assert report["endpoints"]["within_tolerance"]

    def test_workers_do_not_change_values(self):
        f = CPoly(1, {(0,): 1.0, (2,): 0.3 - 0.2j}, H)
        cfg = FlowConfig(f, power_pair(2.0, 4.0), NELSON_Z, s_grid=default_s_grid(6))
        assert flow_monotonicity(cfg, workers=1)["values"] == flow_monotonicity(cfg, workers=3)["values"]

    def test_singular_flag(self):
        assert singular_at_zero(power_pair(0.4, 1.0))
        assert not singular_at_zero(power_pair(2.0, 4.0))


class TestGlobalCheck:
    def test_constant(self):
        margin = global_check(CPoly(1, {(0,): 1.3 - 0.4j}, H), power_pair(2.0, 4.0), BAD_Z)
        assert margin == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.slow
    def test_nelson_audit(self, rng):
        pair = power_pair(2.0, 4.0)
        for _ in range(100):
            f = random_hermite_poly(1, int(rng.integers(0, 7)), rng)
            assert global_check(f, pair, NELSON_Z) >= -1e-6

    @pytest.mark.slow
    def test_beckner_audit(self, rng):
        q, z = beckner_point(1.5)
        pair = power_pair(1.5, q)
        for _ in range(100):
            f = random_hermite_poly(1, int(rng.integers(0, 7)), rng)
            assert global_check(f, pair, z) >= -1e-6

    @pytest.mark.slow
    def test_lens_interior(self, rng):
        P = make_power(3.0)
        pair = FnPair.from_PQ(P, P)
        for _ in range(100):
            f = random_hermite_poly(1, int(rng.integers(0, 7)), rng)
            assert global_check(f, pair, ComplexParam(0.0, 0.5)) >= -1e-6

    def test_dimension_limit(self):
        with pytest.raises(DomainError):
            global_check(CPoly(4, {(1, 0, 0, 0): 1.0}, H), power_pair(2.0, 4.0), NELSON_Z)


class TestNecessity:
    def test_l2_case(self):
        assert necessity_probe(power_pair(2.0, 2.0), ComplexParam(0.6, 0.0), 1.0, 1.0) == pytest.approx(0.64)

    def test_inadmissible_point(self):
        assert necessity_probe(power_pair(2.0, 4.0), BAD_Z, 1.0, 1.0) == pytest.approx(-1.84)

    def test_rejects_zero_constant(self):
        with pytest.raises(DomainError):
            necessity_probe(power_pair(2.0, 4.0), BAD_Z, 0.0, 1.0)

    def test_proportional_to_local_form(self, rng):
        pair = FnPair.from_PQ(make_plog(1.0), make_power(3.5))
        for _ in range(100):
            z = ComplexParam.from_complex(cmath.rect(math.sqrt(rng.uniform()), rng.uniform(0, 2 * math.pi)))
            a = complex(*rng.uniform(0.2, 3.0, size=2))
            b = complex(*rng.standard_normal(2))
            t = abs(a)
            form = local_form(pair, z, t, a.conjugate() * b)
            probe = necessity_probe(pair, z, a, b)
            scale = pair.Q.d1(t) / (2.0 * t**3)
            assert probe == pytest.approx(scale * form, rel=1e-8, abs=1e-10)
            if abs(probe) > 1e-8 and abs(form) > 1e-8:
                assert (probe > 0) == (form > 0)

    def test_matches_local_coefficients(self):
        pair = power_pair(2.0, 4.0)
        assert local_coefficients(pair, 1.0) == pytest.approx((0.0, 2.0))


class TestEpsilonSweep:
    def test_inadmissible_second_order(self):
        report = epsilon_sweep(power_pair(2.0, 4.0), BAD_Z, 1.0, 1.0, [0.0, 0.05, 0.02, 0.01])
        assert report["rows"][0]["margin"] == pytest.approx(0.0, abs=1e-14)
        assert all(row["margin"] < 0 for row in report["rows"][1:])
        assert report["predicted_coefficient"] == pytest.approx(-0.46)
        assert report["relative_gap"] < 0.1

    def test_nelson_point(self):
        report = epsilon_sweep(power_pair(2.0, 4.0), NELSON_Z, 1.0, 0.5 + 0.5j, [0.05, 0.02, 0.01])
        assert all(row["margin"] >= -1e-8 for row in report["rows"])

    def test_probe_polynomial(self):
        f = probe_polynomial(2.0, 1j, 0.1)
        assert dict(f.terms) == {(0,): 2.0, (1,): 0.1j}


class TestRandomPolynomial:
    def test_deterministic(self, make_rng):
        first = random_hermite_poly(2, 3, make_rng(11))
        second = random_hermite_poly(2, 3, make_rng(11))
        assert first == second
        assert first.dimension == 2
        assert first.degree <= 3
        assert len(first.terms) == 10

    def test_scaling(self, make_rng):
        p = random_hermite_poly(1, 8, make_rng(5))
        assert abs(p.coefficient((8,))) < 1.0
