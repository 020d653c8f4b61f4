"""
The interpolation flow C(s), the direct global inequality margin and the
perturbative necessity probe.

    g(x, u, s) = E_{v,y} l(sqrt(s)(u + iv) + z sqrt(1-s)(x + iy))
    C(s)       = E_x F(E_u P(|g(x, u, s)|))

The inner (v, y) expectations are done exactly on polynomial coefficients;
only the (u, x) expectations use quadrature.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import List, Optional, Sequence
import logging
import math

import numpy as np

import config
from utils.custom_types import (
    DomainError,
    FlowEvaluationError,
    FlowReport,
    PolyBasis,
    SweepReport,
)
from utils.hermite import (
    ComplexParam,
    CPoly,
    evaluate_many,
    gaussian_smooth_imaginary,
    lift_linear,
    mahler_transform,
)
from utils.quad import expect, gauss_rule, tensor_grid
from utils.scalarfn import FnPair, invert

logger = logging.getLogger(__name__)


def default_s_grid(points: int = config.FLOW_S_POINTS) -> List[float]:
    return [i / (points - 1) for i in range(points)]


def default_order(dimension: int) -> int:
    return config.QUAD_ORDER if dimension == 1 else config.FLOW_ORDER_2D


@dataclass(frozen=True)
class FlowConfig:
    """Ingredients of C(s): f in the Hermite basis, the pair, z, the s-grid and quadrature orders."""

    f: CPoly
    pair: FnPair
    z: ComplexParam
    s_grid: List[float] = field(default_factory=default_s_grid)
    order_u: Optional[int] = None
    order_x: Optional[int] = None

    def __post_init__(self):
        if self.f.basis != PolyBasis.HERMITE:
            object.__setattr__(self, "f", self.f.to_hermite())
        if self.f.dimension not in (1, 2):
            raise DomainError(f"Flows support dimension 1 or 2, got {self.f.dimension}")
        grid = [float(s) for s in self.s_grid]
        if len(grid) < 2 or grid[0] != 0.0 or grid[-1] != 1.0:
            raise DomainError("s-grid must start at 0 and end at 1")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise DomainError("s-grid must be strictly increasing")
        object.__setattr__(self, "s_grid", grid)
        if self.order_u is None:
            object.__setattr__(self, "order_u", default_order(self.f.dimension))
        if self.order_x is None:
            object.__setattr__(self, "order_x", default_order(self.f.dimension))


def build_g(f: CPoly, z: ComplexParam, s: float) -> CPoly:
    """
    Exact polynomial g(x, u, s) in the 2k variables (u_1..u_k, x_1..x_k).

    Substitutes sqrt(s) u + z sqrt(1-s) x into l (the Hermite coefficients of
    f read as monomial coefficients) and integrates out the imaginary
    Gaussian shift of every u and x coordinate.
    """
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"s must lie in [0, 1], got {s}")
    if f.basis != PolyBasis.HERMITE:
        f = f.to_hermite()
    g = lift_linear(f.as_ell(), math.sqrt(s), z.value * math.sqrt(1.0 - s))
    for var in range(g.dimension):
        g = gaussian_smooth_imaginary(g, var, 1.0)
    return g


def _abs_values(f: CPoly, nodes: np.ndarray) -> np.ndarray:
    return np.abs(evaluate_many(f, nodes))


def C_of_s(config_: FlowConfig, s: float) -> float:
    """
    C(s) by tensor quadrature over u (inner) and x (outer).

    Raises:
        FlowEvaluationError: non-finite P or F value, with the offending s and x
    """
    k = config_.f.dimension
    g = build_g(config_.f, config_.z, s)
    u_nodes, u_weights = tensor_grid(gauss_rule(config_.order_u), k)
    x_nodes, x_weights = tensor_grid(gauss_rule(config_.order_x), k)

    n_x, n_u = len(x_nodes), len(u_nodes)
    points = np.concatenate(
        [np.tile(u_nodes, (n_x, 1)), np.repeat(x_nodes, n_u, axis=0)], axis=1
    )
    p_values = np.asarray(config_.pair.P.value(_abs_values(g, points)), dtype=float)
    p_values = p_values.reshape(n_x, n_u)
    bad = np.flatnonzero(~np.isfinite(p_values).all(axis=1))
    if bad.size:
        x = x_nodes[bad[0]].tolist()
        logger.error(f"Non-finite P(|g|) in C({s:g}) at x = {x}")
        raise FlowEvaluationError(f"Non-finite P(|g|) at s = {s:g}, x = {x}", s=s, x=x)

    inner = p_values @ u_weights
    outer = np.asarray(config_.pair.F.value(inner), dtype=float)
    bad = np.flatnonzero(~np.isfinite(outer))
    if bad.size:
        x = x_nodes[bad[0]].tolist()
        logger.error(f"Non-finite F value in C({s:g}) at x = {x}")
        raise FlowEvaluationError(f"Non-finite F value at s = {s:g}, x = {x}", s=s, x=x)
    return float(np.dot(x_weights, outer))


def _gaussian_mean(fn_values, f: CPoly, order: int) -> float:
    rule = gauss_rule(order)
    return expect(lambda nodes: fn_values(_abs_values(f, nodes)), rule, f.dimension, vectorized=True)


def singular_at_zero(pair: FnPair) -> bool:
    """P' blows up near 0 (e.g. t^p with p < 1), which degrades quadrature near zeros of g."""
    slope = pair.P.d1(config.SINGULAR_PROBE_T)
    return not math.isfinite(slope) or slope > config.SINGULAR_PROBE_LIMIT


def flow_monotonicity(config_: FlowConfig, workers: int = config.WORKERS) -> FlowReport:
    """
    Evaluate C on the s-grid and check it is nondecreasing.

    Passes iff every increment is >= -FLOW_REL_TOL * max(1, |C(1)|). The
    endpoints are compared against E Q(|T_z f|) and F(E P(|f|)).
    """
    grid = config_.s_grid
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(lambda s: C_of_s(config_, s), grid))
    else:
        values = [C_of_s(config_, s) for s in grid]

    increments = [b - a for a, b in zip(values, values[1:])]
    tol = config.FLOW_REL_TOL * max(1.0, abs(values[-1]))
    min_increment = min(increments)

    pair, f = config_.pair, config_.f
    expected_c0 = _gaussian_mean(pair.Q.value, mahler_transform(f, config_.z), config_.order_x)
    expected_c1 = float(pair.F.value(_gaussian_mean(pair.P.value, f, config_.order_u)))
    c0, c1 = values[0], values[-1]
    endpoints_ok = abs(c0 - expected_c0) <= 1e-6 * (1 + abs(c0)) and abs(
        c1 - expected_c1
    ) <= 1e-6 * (1 + abs(c1))

    flagged = singular_at_zero(pair)
    reason = None
    if flagged:
        reason = f"P = {pair.P.name} has unbounded derivative at 0; quadrature near zeros of g is unreliable"
        logger.warning(reason)

    passed = min_increment >= -tol
    logger.info(
        f"Flow over {len(grid)} points: min increment {min_increment:.3e}, "
        f"tolerance {tol:.1e}, {'pass' if passed else 'FAIL'}"
    )
    return {
        "s_grid": grid,
        "values": values,
        "increments": increments,
        "min_increment": min_increment,
        "tolerance": tol,
        "passed": bool(passed),
        "orders": {"u": config_.order_u, "x": config_.order_x},
        "endpoints": {
            "C0": c0,
            "expected_C0": expected_c0,
            "C1": c1,
            "expected_C1": expected_c1,
            "within_tolerance": bool(endpoints_ok),
        },
        "flagged": flagged,
        "flag_reason": reason,
    }


def global_check(
    f: CPoly, pair: FnPair, z: ComplexParam, order: int = config.QUAD_ORDER
) -> float:
    """
    P^{-1}(E P(|f|)) - Q^{-1}(E Q(|T_z f|)); the inequality holds iff >= -tol.
    """
    if f.basis != PolyBasis.HERMITE:
        f = f.to_hermite()
    if f.dimension > 3:
        raise DomainError(f"global_check supports dimension <= 3, got {f.dimension}")
    lhs = invert(pair.P, _gaussian_mean(pair.P.value, f, order))
    rhs = invert(pair.Q, _gaussian_mean(pair.Q.value, mahler_transform(f, z), order))
    return lhs - rhs


def necessity_probe(pair: FnPair, z: ComplexParam, a: complex, b: complex) -> float:
    """
    Second-order coefficient of the global inequality at f = a + b eps x.

    With x0 = |a|^2, M(x) = P(sqrt x) and J = F o M:

        F'(M)(2M''(Re conj(a)b)^2 + M'|b|^2) - 2J''(Re conj(a)bz)^2 - J'|bz|^2

    A negative value certifies failure of the local condition at t = |a|.
    """
    a, b = complex(a), complex(b)
    if a == 0:
        raise DomainError("necessity_probe needs a != 0")
    t = abs(a)
    p1, p2 = pair.P.d1(t), pair.P.d2(t)
    q1, q2 = pair.Q.d1(t), pair.Q.d2(t)

    m1 = p1 / (2.0 * t)
    m2 = p2 / (4.0 * t * t) - p1 / (4.0 * t**3)
    f1 = q1 / p1
    f2 = (q2 * p1 - q1 * p2) / p1**3
    j1 = f1 * m1
    j2 = f2 * m1 * m1 + f1 * m2

    re_ab = (a.conjugate() * b).real
    re_abz = (a.conjugate() * b * z.value).real
    probe = f1 * (2.0 * m2 * re_ab**2 + m1 * abs(b) ** 2) - 2.0 * j2 * re_abz**2 - j1 * abs(b * z.value) ** 2
    if not math.isfinite(probe):
        logger.warning(f"necessity_probe is not finite at |a| = {t:g}")
    return float(probe)


def epsilon_sweep(
    pair: FnPair,
    z: ComplexParam,
    a: complex,
    b: complex,
    eps_list: Sequence[float],
    order: int = config.QUAD_ORDER,
) -> SweepReport:
    """
    global_check margins for f = a + b eps H_1.

    The eps^2 coefficient is extracted by Richardson extrapolation from the two
    smallest nonzero eps (the margin is even in eps) and compared with
    necessity_probe / Q'(|a|).
    """
    rows = []
    for eps in eps_list:
        f = probe_polynomial(a, b, eps)
        rows.append({"eps": float(eps), "margin": global_check(f, pair, z, order)})

    probe = necessity_probe(pair, z, a, b)
    predicted = probe / pair.Q.d1(abs(complex(a)))

    usable = sorted({abs(r["eps"]) for r in rows if r["eps"] != 0})[:2]
    coefficient = None
    gap = None
    if len(usable) == 2:
        e1, e2 = usable
        m = {abs(r["eps"]): r["margin"] for r in rows}
        q1, q2 = m[e1] / e1**2, m[e2] / e2**2
        coefficient = (e2**2 * q1 - e1**2 * q2) / (e2**2 - e1**2)
        gap = abs(coefficient - predicted) / max(abs(predicted), 1e-300)
    elif len(usable) == 1:
        e1 = usable[0]
        coefficient = next(r["margin"] for r in rows if abs(r["eps"]) == e1) / e1**2
        gap = abs(coefficient - predicted) / max(abs(predicted), 1e-300)

    return {
        "rows": rows,
        "second_order_coefficient": coefficient,
        "predicted_coefficient": predicted,
        "probe": probe,
        "relative_gap": gap,
    }


def random_hermite_poly(dimension: int, degree: int, rng: np.random.Generator) -> CPoly:
    """Complex standard normal Hermite coefficients scaled by 1/(1 + |alpha|)."""
    alphas = [
        alpha
        for alpha in product(range(degree + 1), repeat=dimension)
        if sum(alpha) <= degree
    ]
    alphas.sort(key=lambda alpha: (sum(alpha), alpha))
    draws = rng.standard_normal((len(alphas), 2)) / math.sqrt(2.0)
    terms = {
        alpha: complex(re, im) / (1.0 + sum(alpha))
        for alpha, (re, im) in zip(alphas, draws)
    }
    return CPoly(dimension, terms, PolyBasis.HERMITE)


def probe_polynomial(a: complex, b: complex, eps: float) -> CPoly:
    """f = a + b eps H_1 in one variable."""
    return CPoly(1, {(0,): a, (1,): b * eps}, PolyBasis.HERMITE)
