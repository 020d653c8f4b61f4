"""
Increasing scalar functions P, Q and the composite F = Q o P^{-1}.

Every ScalarFn exposes value and derivatives up to order 3 (order 4 is
always numeric). Builders cover the closed-form families used by the
verification commands: powers, the exponential, the integrated
t^p log(1+t), Hariya companions and the (h, phi) generator.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Optional, Sequence
import copy
import logging
import math

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

import config
from utils.custom_types import (
    DerivativeKind,
    DivergenceError,
    DomainError,
    FnDomain,
    GeneratorError,
    MonotonicityError,
)

logger = logging.getLogger(__name__)

Fn = Callable[[object], object]


def log_grid(tmin: float, tmax: float, count: int) -> np.ndarray:
    return np.logspace(math.log10(tmin), math.log10(tmax), count)


def _integrate(integrand: Callable[[float], float], a: float, b: float) -> float:
    value, _ = quad(
        integrand,
        a,
        b,
        epsabs=config.INTEGRAL_ABS_TOL,
        epsrel=config.INTEGRAL_REL_TOL,
        limit=200,
    )
    return value


def _integrate_to_log(integrand_in_u: Callable[[float], float], t: float) -> float:
    """Integral over (-inf, log t] as a finite panel plus an infinite tail."""
    upper = math.log(t)
    lower = upper - config.INTEGRAL_PANEL_WIDTH
    return _integrate(integrand_in_u, lower, upper) + _integrate(integrand_in_u, -np.inf, lower)


class ScalarFn:
    """
    A real function with value and derivatives up to order 3.

    Missing derivatives are produced by central differences of the next
    lower derivative, with relative step FD_STEP (widened tenfold per
    nested numeric level).
    """

    def __init__(
        self,
        name: str,
        value: Fn,
        d1: Optional[Fn] = None,
        d2: Optional[Fn] = None,
        d3: Optional[Fn] = None,
        *,
        value_at_zero: Optional[float] = None,
        elasticity: Optional[Fn] = None,
        inverse: Optional[Fn] = None,
        domain: FnDomain = FnDomain.HALF_LINE,
        growth_declared: bool = False,
        vectorized: bool = True,
        family: Optional[str] = None,
        params: Optional[Dict[str, float]] = None,
        numeric_orders: Optional[Sequence[int]] = None,
    ):
        self.name = name
        self.domain = domain
        self.growth_declared = growth_declared
        self.family = family
        self.params = dict(params or {})
        self._vectorized = vectorized
        self._value_at_zero = value_at_zero
        self._elasticity = elasticity
        self._inverse = inverse

        supplied = [value, d1, d2, d3]
        self._derivs = [value]
        self._depth = [0]
        numeric = set(numeric_orders or ())
        for order in (1, 2, 3):
            if supplied[order] is None:
                numeric.add(order)
                self._depth.append(self._depth[order - 1] + 1)
                self._derivs.append(self._numeric_factory(order))
            else:
                self._depth.append(0)
                self._derivs.append(supplied[order])
        self.numeric_orders = frozenset(numeric)

    @property
    def derivative_kind(self) -> DerivativeKind:
        return DerivativeKind.NUMERIC if self.numeric_orders else DerivativeKind.ANALYTIC

    @property
    def key(self):
        if self.family is None:
            return ("anonymous", id(self))
        return (self.family, tuple(sorted(self.params.items())))

    @property
    def inverse(self) -> Optional[Fn]:
        return self._inverse

    def __repr__(self) -> str:
        return f"ScalarFn({self.name})"

    def _call(self, fn: Fn, t, vectorized: Optional[bool] = None):
        vectorized = self._vectorized if vectorized is None else vectorized
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            if np.ndim(t) == 0:
                return float(fn(float(t)))
            arr = np.asarray(t, dtype=float)
            if vectorized:
                return np.asarray(fn(arr), dtype=float) * np.ones_like(arr)
            flat = np.array([float(fn(float(x))) for x in arr.reshape(-1)])
            return flat.reshape(arr.shape)

    def _step(self, t):
        t = np.asarray(t, dtype=float)
        if self.domain == FnDomain.REAL_LINE:
            return config.FD_STEP * np.maximum(np.abs(t), 1.0)
        return np.where(t > 0, config.FD_STEP * np.abs(t), config.FD_STEP)

    def _difference(self, source: Fn, t, scale: float):
        t_arr = np.asarray(t, dtype=float)
        h = self._step(t_arr) * scale
        hi = t_arr + h
        lo = t_arr - h
        if self.domain == FnDomain.HALF_LINE:
            lo = np.maximum(lo, 0.0)
        result = (self._call(source, hi) - self._call(source, lo)) / (hi - lo)
        if np.ndim(t) == 0:
            return float(result)
        return result

    def _numeric_factory(self, order: int) -> Fn:
        def numeric(t):
            scale = 10.0 ** (self._depth[order] - 1)
            return self._difference(self._derivs[order - 1], t, scale)

        return numeric

    def value(self, t):
        if np.ndim(t) == 0 and float(t) == 0.0 and self._value_at_zero is not None:
            return float(self._value_at_zero)
        return self._call(self._derivs[0], t)

    def d1(self, t):
        return self._call(self._derivs[1], t, vectorized=self._vectorized or 1 in self.numeric_orders)

    def d2(self, t):
        return self._call(self._derivs[2], t, vectorized=self._vectorized or 2 in self.numeric_orders)

    def d3(self, t):
        return self._call(self._derivs[3], t, vectorized=self._vectorized or 3 in self.numeric_orders)

    def d4(self, t, step: float = config.FD4_STEP):
        """Fourth derivative by a central difference of d3 (relative step `step`)."""
        return self._difference(self.d3, t, step / config.FD_STEP)

    @property
    def value_at_zero(self) -> float:
        if self._value_at_zero is not None:
            return float(self._value_at_zero)
        return self.value(0.0)

    def elasticity(self, t):
        """t f''(t) / f'(t)."""
        if self._elasticity is not None:
            return self._call(self._elasticity, t)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            result = np.asarray(t, dtype=float) * self.d2(t) / self.d1(t)
        return float(result) if np.ndim(t) == 0 else result

    def declare_growth(self, flag: bool = True) -> "ScalarFn":
        clone = copy.copy(self)
        clone.growth_declared = flag
        return clone

    # Linear combinations (used for generator ingredients h and phi)
    def __add__(self, other) -> "ScalarFn":
        if not isinstance(other, ScalarFn):
            return self + make_linear(0.0, float(other))
        domain = (
            FnDomain.REAL_LINE
            if self.domain == FnDomain.REAL_LINE and other.domain == FnDomain.REAL_LINE
            else FnDomain.HALF_LINE
        )
        return ScalarFn(
            f"({self.name} + {other.name})",
            lambda t: self.value(t) + other.value(t),
            lambda t: self.d1(t) + other.d1(t),
            lambda t: self.d2(t) + other.d2(t),
            lambda t: self.d3(t) + other.d3(t),
            domain=domain,
            growth_declared=self.growth_declared and other.growth_declared,
            numeric_orders=self.numeric_orders | other.numeric_orders,
        )

    __radd__ = __add__

    def __mul__(self, c) -> "ScalarFn":
        if isinstance(c, ScalarFn):
            return NotImplemented
        c = float(c)
        inverse = None
        if self._inverse is not None and c > 0:
            inverse = lambda y: self._inverse(y / c)  # noqa: E731
        return ScalarFn(
            f"{c:g}*{self.name}",
            lambda t: c * self.value(t),
            lambda t: c * self.d1(t),
            lambda t: c * self.d2(t),
            lambda t: c * self.d3(t),
            value_at_zero=None if self._value_at_zero is None else c * self._value_at_zero,
            elasticity=self._elasticity if c > 0 else None,
            inverse=inverse,
            domain=self.domain,
            growth_declared=self.growth_declared,
            numeric_orders=self.numeric_orders,
        )

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarFn":
        return self * -1.0

    def __sub__(self, other) -> "ScalarFn":
        return self + (-other if isinstance(other, ScalarFn) else -float(other))


@dataclass(frozen=True)
class Generator:
    """The ingredients h (on [0, inf)) and phi (on R) of a generated pair."""

    h: ScalarFn
    phi: ScalarFn


@dataclass(frozen=True)
class FnPair:
    """P, Q and the composite F = Q o P^{-1}."""

    P: ScalarFn
    Q: ScalarFn
    F: ScalarFn
    generator: Optional[Generator] = None

    @classmethod
    def from_PQ(cls, P: ScalarFn, Q: ScalarFn) -> "FnPair":
        return cls(P, Q, compose_F(P, Q))

    def F_inverse(self, y: float) -> float:
        """F^{-1}(y) = P(Q^{-1}(y))."""
        return self.P.value(invert(self.Q, y))

    def check_consistency(self, ts: Optional[Sequence[float]] = None) -> float:
        """Max relative deviation |F(P(t)) - Q(t)| / max(1, |Q(t)|) on a log grid."""
        ts = log_grid(1e-4, 1e4, 50) if ts is None else ts
        worst = 0.0
        for t in ts:
            q = self.Q.value(t)
            fp = self.F.value(self.P.value(t))
            worst = max(worst, abs(fp - q) / max(1.0, abs(q)))
        return worst

    def describe(self) -> Dict[str, object]:
        return {
            "P": self.P.name,
            "Q": self.Q.name,
            "F": self.F.name,
            "growth_condition_P": self.P.growth_declared,
            "growth_condition_F": self.F.growth_declared,
            "derivatives": {"P": self.P.derivative_kind.value, "Q": self.Q.derivative_kind.value},
        }


def _power_derivative(p: float, order: int, scale: float = 1.0) -> Fn:
    coef = scale
    for j in range(order):
        coef *= p - j
    if coef == 0:
        return lambda t: np.zeros_like(np.asarray(t, dtype=float))
    return lambda t: coef * np.power(t, p - order)


def make_power(p: float, scale: float = 1.0) -> ScalarFn:
    """t -> scale * t^p with analytic derivatives."""
    if p <= 0:
        raise DomainError(f"Power exponent must be positive, got {p}")
    inverse = lambda y: np.power(np.asarray(y, dtype=float) / scale, 1.0 / p)  # noqa: E731
    return ScalarFn(
        f"power({p:g})" if scale == 1.0 else f"{scale:g}*power({p:g})",
        _power_derivative(p, 0, scale),
        _power_derivative(p, 1, scale),
        _power_derivative(p, 2, scale),
        _power_derivative(p, 3, scale),
        value_at_zero=0.0,
        elasticity=lambda t: np.full_like(np.asarray(t, dtype=float), p - 1.0),
        inverse=inverse,
        growth_declared=True,
        family="power" if scale == 1.0 else "scaled_power",
        params={"p": p} if scale == 1.0 else {"p": p, "scale": scale},
    )


def make_exp() -> ScalarFn:
    return ScalarFn(
        "exp",
        np.exp,
        np.exp,
        np.exp,
        np.exp,
        value_at_zero=1.0,
        elasticity=lambda t: np.asarray(t, dtype=float),
        inverse=np.log,
        growth_declared=False,
        family="exp",
    )


def make_plog(p: float) -> ScalarFn:
    """
    P(t) = integral_0^t s^p log(1+s) ds.

    The value is computed by adaptive quadrature; derivatives are analytic.
    """
    if p <= 0:
        raise DomainError(f"plog exponent must be positive, got {p}")

    @lru_cache(maxsize=8192)
    def value(t: float) -> float:
        if t <= 0:
            return 0.0
        return _integrate(lambda s: s**p * math.log1p(s), 0.0, t)

    def d1(t):
        return np.power(t, p) * np.log1p(t)

    def d2(t):
        return p * np.power(t, p - 1) * np.log1p(t) + np.power(t, p) / (1 + t)

    def d3(t):
        return (
            p * (p - 1) * np.power(t, p - 2) * np.log1p(t)
            + 2 * p * np.power(t, p - 1) / (1 + t)
            - np.power(t, p) / (1 + t) ** 2
        )

    def elasticity(t):
        t = np.asarray(t, dtype=float)
        safe = np.where(t > 0, t, 1.0)
        return np.where(t > 0, p + safe / ((1 + safe) * np.log1p(safe)), p + 1.0)

    return ScalarFn(
        f"plog({p:g})",
        value,
        d1,
        d2,
        d3,
        value_at_zero=0.0,
        elasticity=elasticity,
        growth_declared=True,
        vectorized=False,
        family="plog",
        params={"p": p},
    )


def make_linear(a: float, b: float = 0.0) -> ScalarFn:
    """t -> a t + b on the whole real line."""
    inverse = None
    if a > 0:
        inverse = lambda y: (np.asarray(y, dtype=float) - b) / a  # noqa: E731
    zeros = lambda t: np.zeros_like(np.asarray(t, dtype=float))  # noqa: E731
    return ScalarFn(
        f"linear({a:g},{b:g})",
        lambda t: a * np.asarray(t, dtype=float) + b,
        lambda t: np.full_like(np.asarray(t, dtype=float), a),
        zeros,
        zeros,
        value_at_zero=b,
        inverse=inverse,
        domain=FnDomain.REAL_LINE,
        growth_declared=True,
        family="linear",
        params={"a": a, "b": b},
    )


def make_log1p() -> ScalarFn:
    return ScalarFn(
        "log1p",
        np.log1p,
        lambda t: 1.0 / (1.0 + t),
        lambda t: -1.0 / (1.0 + t) ** 2,
        lambda t: 2.0 / (1.0 + t) ** 3,
        value_at_zero=0.0,
        inverse=np.expm1,
        growth_declared=True,
        family="log1p",
    )


def make_log1p_square() -> ScalarFn:
    """t -> log(1 + t^2), defined on the whole real line."""
    return ScalarFn(
        "log1psq",
        lambda t: np.log1p(np.square(t)),
        lambda t: 2.0 * t / (1.0 + np.square(t)),
        lambda t: 2.0 * (1.0 - np.square(t)) / (1.0 + np.square(t)) ** 2,
        lambda t: 4.0 * t * (np.square(t) - 3.0) / (1.0 + np.square(t)) ** 3,
        value_at_zero=0.0,
        domain=FnDomain.REAL_LINE,
        growth_declared=True,
        family="log1psq",
    )


def check_increasing(fn: ScalarFn, ts: Optional[Sequence[float]] = None) -> None:
    """Spot-check f' > 0 on a 50-point grid; raises MonotonicityError otherwise."""
    if ts is None:
        ts = log_grid(1e-4, 1e4, 50) if fn.domain == FnDomain.HALF_LINE else np.linspace(-10, 10, 50)
    slopes = fn.d1(np.asarray(ts, dtype=float))
    bad = np.flatnonzero(~(slopes > 0))
    if bad.size:
        t = float(np.asarray(ts)[bad[0]])
        logger.error(f"{fn.name} is not increasing: f'({t:g}) = {float(slopes[bad[0]]):g}")
        raise MonotonicityError(f"{fn.name} is not increasing: f'({t:g}) = {float(slopes[bad[0]]):g}")


def finite_difference_audit(fn: ScalarFn, ts: Optional[Sequence[float]] = None) -> Dict[str, float]:
    """
    Max relative disagreement of d1 and d2 with central differences of
    value and d1 (step FD_STEP relative).
    """
    ts = np.asarray(log_grid(1e-3, 1e3, 50) if ts is None else ts, dtype=float)
    h = fn._step(ts)
    fd1 = (fn.value(ts + h) - fn.value(ts - h)) / (2 * h)
    fd2 = (fn.d1(ts + h) - fn.d1(ts - h)) / (2 * h)
    d1 = fn.d1(ts)
    d2 = fn.d2(ts)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel1 = np.abs(d1 - fd1) / np.maximum(np.abs(d1), 1e-300)
        rel2 = np.abs(d2 - fd2) / np.maximum(np.abs(d2), 1e-300)
    return {"d1": float(np.max(rel1)), "d2": float(np.max(rel2))}


def invert(f: ScalarFn, y: float) -> float:
    """
    Solve f(t) = y for an increasing f on [0, inf).

    Uses the closed-form inverse when the builder provides one; otherwise
    brackets the root by doubling, solves with Brent's method and polishes
    with Newton steps.

    Raises:
        DomainError: y < f(0)
        DivergenceError: no bracket below 2^INVERT_MAX_DOUBLINGS
    """
    y = float(y)
    f0 = f.value_at_zero
    if y < f0:
        # roundoff below f(0) is treated as f(0)
        if f0 - y <= config.INVERT_REL_TOL * max(1.0, abs(f0)):
            return 0.0
        raise DomainError(f"Cannot invert {f.name} at {y:g}: below f(0) = {f0:g}")
    if y == f0:
        return 0.0
    if f.inverse is not None:
        return float(f.inverse(y))

    tol = config.INVERT_REL_TOL * max(1.0, abs(y))
    hi = 1.0
    doublings = 0
    while f.value(hi) < y:
        hi *= 2.0
        doublings += 1
        if doublings > config.INVERT_MAX_DOUBLINGS:
            logger.error(f"Could not bracket {f.name}^-1({y:g}) below 2^{config.INVERT_MAX_DOUBLINGS}")
            raise DivergenceError(f"Could not bracket {f.name}^-1({y:g})")
    lo = 0.0 if hi == 1.0 else hi / 2.0

    t = brentq(lambda s: f.value(s) - y, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)

    for _ in range(3):
        residual = f.value(t) - y
        if abs(residual) <= tol:
            break
        slope = f.d1(t)
        if not slope > 0:
            break
        candidate = t - residual / slope
        if lo <= candidate <= hi and abs(f.value(candidate) - y) < abs(residual):
            t = candidate
        else:
            break

    if abs(f.value(t) - y) > tol:
        logger.warning(f"Inversion of {f.name} at {y:g} reached residual {abs(f.value(t) - y):.3e}")
    return float(t)


def _is_power_shaped(fn: ScalarFn) -> bool:
    return fn.family in ("power", "scaled_power")


def compose_F(P: ScalarFn, Q: ScalarFn) -> ScalarFn:
    """
    F = Q o P^{-1} with derivatives from the chain rule at t = P^{-1}(x):

        F'   = Q'/P'
        F''  = (Q''P' - Q'P'') / P'^3
        F''' = (N' P' - 3 N P'') / P'^5,  N = Q''P' - Q'P'', N' = Q'''P' - Q'P'''
    """
    if P.key == Q.key:
        return make_power(1.0)
    if _is_power_shaped(P) and _is_power_shaped(Q):
        # s_Q (x / s_P)^{q/p}
        p, sp = P.params["p"], P.params.get("scale", 1.0)
        q, sq = Q.params["p"], Q.params.get("scale", 1.0)
        ratio = q / p
        return make_power(ratio, scale=sq / sp**ratio)

    def at(x: float) -> float:
        return invert(P, x)

    def value(x):
        return Q.value(at(x))

    def d1(x):
        t = at(x)
        return Q.d1(t) / P.d1(t)

    def d2(x):
        t = at(x)
        p1, p2 = P.d1(t), P.d2(t)
        return (Q.d2(t) * p1 - Q.d1(t) * p2) / p1**3

    def d3(x):
        t = at(x)
        p1, p2, p3 = P.d1(t), P.d2(t), P.d3(t)
        q1, q2, q3 = Q.d1(t), Q.d2(t), Q.d3(t)
        n = q2 * p1 - q1 * p2
        n_prime = q3 * p1 - q1 * p3
        return (n_prime * p1 - 3.0 * n * p2) / p1**5

    def elasticity(x):
        t = at(x)
        if t <= 0:
            return float("nan")
        return P.value(t) / (t * P.d1(t)) * (Q.elasticity(t) - P.elasticity(t))

    def inverse(y):
        return P.value(invert(Q, y))

    return ScalarFn(
        f"compose({Q.name}, {P.name})",
        value,
        d1,
        d2,
        d3,
        value_at_zero=Q.value_at_zero,
        elasticity=elasticity,
        inverse=inverse,
        growth_declared=P.growth_declared and Q.growth_declared,
        vectorized=False,
        family="compose",
        params={},
    )


def make_hariya_companion(P: ScalarFn, r: float) -> ScalarFn:
    """
    Q(t) = integral_0^t P'(s)^{1/r^2} ds, so that r^2 Q''/Q' = P''/P'.

    Power and exponential P get closed forms; other P use quadrature for the
    value and the chain rule for derivatives.
    """
    if not 0 < r <= 1:
        raise DomainError(f"Hariya companion needs r in (0, 1], got {r}")
    k = 1.0 / (r * r)
    name = f"hariya({P.name},{r:g})"

    if _is_power_shaped(P):
        # (s p t^{p-1})^k integrates to s^k p^k t^e / e
        p, s = P.params["p"], P.params.get("scale", 1.0)
        exponent = (p - 1.0) * k + 1.0
        companion = make_power(exponent, scale=(s * p) ** k / exponent)
        companion.name = name
        companion.growth_declared = P.growth_declared
        return companion

    if P.family == "exp":
        return ScalarFn(
            name,
            lambda t: np.expm1(k * np.asarray(t, dtype=float)) / k,
            lambda t: np.exp(k * np.asarray(t, dtype=float)),
            lambda t: k * np.exp(k * np.asarray(t, dtype=float)),
            lambda t: k * k * np.exp(k * np.asarray(t, dtype=float)),
            value_at_zero=0.0,
            elasticity=lambda t: k * np.asarray(t, dtype=float),
            inverse=lambda y: np.log1p(k * np.asarray(y, dtype=float)) / k,
            growth_declared=P.growth_declared,
            family="hariya",
            params={"P": P.key, "r": r},
        )

    @lru_cache(maxsize=8192)
    def value(t: float) -> float:
        if t <= 0:
            return 0.0
        return _integrate(lambda s: P.d1(s) ** k, 0.0, t)

    def d2(t):
        return k * P.d1(t) ** (k - 1.0) * P.d2(t)

    def d3(t):
        p1 = P.d1(t)
        return k * ((k - 1.0) * p1 ** (k - 2.0) * P.d2(t) ** 2 + p1 ** (k - 1.0) * P.d3(t))

    return ScalarFn(
        name,
        value,
        lambda t: P.d1(t) ** k,
        d2,
        d3,
        value_at_zero=0.0,
        elasticity=lambda t: k * P.elasticity(t),
        growth_declared=P.growth_declared,
        vectorized=False,
        family="hariya",
        params={"P": P.key, "r": r},
    )


def _check_generator(h: ScalarFn, phi: ScalarFn) -> None:
    ts = log_grid(1e-4, 1e4, 50)
    hv = h.value(ts)
    if np.any(hv < 0) or not np.any(hv > 0):
        bad = float(ts[np.argmin(hv)])
        logger.error(f"Generator h = {h.name} is negative or identically zero (t = {bad:g})")
        raise GeneratorError(f"h = {h.name} must be nonnegative and not identically 0 (t = {bad:g})")
    curvature = h.d2(ts)
    if np.any(curvature > 1e-8 * np.maximum(1.0, np.abs(hv))):
        logger.warning(f"Generator h = {h.name} fails the concavity spot-check")

    ss = np.linspace(-20.0, 20.0, 50)
    slopes = phi.d1(ss)
    if not np.all(slopes > 0):
        bad = float(ss[np.argmin(slopes)])
        logger.error(f"Generator phi = {phi.name} has phi'({bad:g}) <= 0")
        raise GeneratorError(f"phi = {phi.name} must have phi' > 0 (violated at s = {bad:g})")


def make_generator(h: ScalarFn, phi: ScalarFn, growth_declared: bool = False) -> FnPair:
    """
    Build (P, Q, F) from the generator ingredients.

        F(t) = integral_0^t exp(integral_1^s dtheta/h(theta)) ds   (F'/F'' = h)
        P(t) = integral_{-inf}^{log t} exp(phi(s) + s) ds
        Q    = F o P

    Args:
        h: nonnegative concave function, not identically 0
        phi: function on R with inf phi' > 0
        growth_declared: caller's declaration that P and F satisfy the growth condition

    Raises:
        GeneratorError: h negative or phi' <= 0 at a diagnostic point
    """
    _check_generator(h, phi)

    @lru_cache(maxsize=65536)
    def log_fprime(t: float) -> float:
        # integral_1^t dtheta / h(theta), substituted theta = e^u
        if t == 1.0:
            return 0.0
        return _integrate(lambda u: math.exp(u) / h.value(math.exp(u)), 0.0, math.log(t))

    @lru_cache(maxsize=65536)
    def f_value(t: float) -> float:
        if t <= 0:
            return 0.0
        return _integrate_to_log(lambda u: math.exp(log_fprime(math.exp(u)) + u), t)

    def f_d1(t: float) -> float:
        return math.exp(log_fprime(t))

    def f_d2(t: float) -> float:
        return f_d1(t) / h.value(t)

    def f_d3(t: float) -> float:
        hv = h.value(t)
        return f_d1(t) * (1.0 - h.d1(t)) / (hv * hv)

    F = ScalarFn(
        f"genF({h.name})",
        f_value,
        f_d1,
        f_d2,
        f_d3,
        value_at_zero=0.0,
        elasticity=lambda t: t / h.value(t),
        growth_declared=growth_declared,
        vectorized=False,
        family="generator_F",
        params={"h": h.name},
    )

    @lru_cache(maxsize=65536)
    def p_value(t: float) -> float:
        if t <= 0:
            return 0.0
        return _integrate_to_log(lambda s: math.exp(phi.value(s) + s), t)

    def p_d1(t):
        return np.exp(phi.value(np.log(t)))

    def p_d2(t):
        s = np.log(t)
        return np.exp(phi.value(s)) * phi.d1(s) / t

    def p_d3(t):
        s = np.log(t)
        slope = phi.d1(s)
        return np.exp(phi.value(s)) * (slope * slope + phi.d2(s) - slope) / (t * t)

    P = ScalarFn(
        f"genP({phi.name})",
        p_value,
        p_d1,
        p_d2,
        p_d3,
        value_at_zero=0.0,
        elasticity=lambda t: phi.d1(np.log(t)),
        growth_declared=growth_declared,
        vectorized=False,
        family="generator_P",
        params={"phi": phi.name},
    )

    def q_value(t: float) -> float:
        return F.value(P.value(t))

    def q_d1(t: float) -> float:
        # F'(P(t)) P'(t) combined in log space
        return math.exp(log_fprime(P.value(t)) + phi.value(math.log(t)))

    def q_d2(t: float) -> float:
        x = P.value(t)
        return F.d2(x) * P.d1(t) ** 2 + F.d1(x) * P.d2(t)

    def q_d3(t: float) -> float:
        x = P.value(t)
        p1, p2, p3 = P.d1(t), P.d2(t), P.d3(t)
        return F.d3(x) * p1**3 + 3.0 * F.d2(x) * p1 * p2 + F.d1(x) * p3

    def q_elasticity(t: float) -> float:
        s = math.log(t)
        return t * P.d1(t) / h.value(P.value(t)) + phi.d1(s)

    Q = ScalarFn(
        f"genQ({h.name},{phi.name})",
        q_value,
        q_d1,
        q_d2,
        q_d3,
        value_at_zero=0.0,
        elasticity=q_elasticity,
        growth_declared=growth_declared,
        vectorized=False,
        family="generator_Q",
        params={"h": h.name, "phi": phi.name},
    )
    return FnPair(P, Q, F, generator=Generator(h, phi))
