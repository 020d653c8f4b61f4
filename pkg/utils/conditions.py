"""
Pointwise and regional admissibility conditions.

All margins use the w-optimized closed form of the local condition with
K = tP''/P' - 1 and L = tQ''/Q' - 1:

    margin(t) = (K + 2) - (L + 2)|z|^2 - |L z^2 - K|

which is nonnegative exactly when the local condition holds at t.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Tuple
import cmath
import logging
import math

import numpy as np
from scipy.optimize import minimize_scalar

import config
from utils.custom_types import (
    ConditionError,
    ConvexityReport,
    DomainError,
    LensReport,
    LocalReport,
    MonotonicityError,
    RegionCell,
    RegionGrid,
    RStarReport,
    TGridSpec,
    VerificationError,
)
from utils.hermite import ComplexParam
from utils.scalarfn import FnPair, ScalarFn, log_grid, make_generator

logger = logging.getLogger(__name__)

CONVEXITY_NOTE = (
    "The weak convexity hypothesis is stated as concavity of (t, y) -> y^2 F''/F' "
    "while the Jensen step needs its convexity; the report checks convexity, which "
    "for F'' > 0 is equivalent to concavity of F'/F''."
)


def make_t_grid(
    tmin: float = config.T_MIN, tmax: float = config.T_MAX, count: int = config.T_POINTS
) -> Tuple[np.ndarray, TGridSpec]:
    if not (0 < tmin < tmax) or count < 2:
        raise DomainError(f"Invalid t-grid: tmin={tmin}, tmax={tmax}, count={count}")
    spec: TGridSpec = {"tmin": tmin, "tmax": tmax, "count": count, "spacing": "log"}
    return log_grid(tmin, tmax, count), spec


def _grid_spec(ts: np.ndarray) -> TGridSpec:
    return {"tmin": float(ts[0]), "tmax": float(ts[-1]), "count": int(len(ts)), "spacing": "log"}


def _margin_formula(K, L, z: complex):
    z2 = z * z
    az2 = abs(z) ** 2
    return (K + 2.0) - (L + 2.0) * az2 - np.abs(L * z2 - K)


def local_coefficients(pair: FnPair, t):
    """
    K = tP''/P' - 1 and L = tQ''/Q' - 1 at t (scalar or array).

    Raises:
        MonotonicityError: P'(t) <= 0 or Q'(t) <= 0
    """
    with np.errstate(over="ignore"):
        p1 = np.asarray(pair.P.d1(t))
        q1 = np.asarray(pair.Q.d1(t))
    for name, slope in (("P", p1), ("Q", q1)):
        bad = np.flatnonzero(~(slope.reshape(-1) > 0))
        if bad.size:
            where = float(np.asarray(t, dtype=float).reshape(-1)[bad[0]])
            logger.error(f"{name}'({where:g}) <= 0 for {getattr(pair, name).name}")
            raise MonotonicityError(f"{name}'({where:g}) <= 0: {name} must be increasing")
    K = np.asarray(pair.P.elasticity(t), dtype=float) - 1.0
    L = np.asarray(pair.Q.elasticity(t), dtype=float) - 1.0
    if np.ndim(t) == 0:
        return float(K), float(L)
    return K, L


def local_margin(pair: FnPair, z: ComplexParam, t: float) -> float:
    """
    Closed-form local condition margin at t.

    Args:
        pair: the functions P, Q
        z: complex parameter
        t: point in (0, inf)

    Returns:
        (K+2) - (L+2)|z|^2 - |L z^2 - K|
    """
    if not t > 0:
        raise DomainError(f"local_margin needs t > 0, got {t}")
    K, L = local_coefficients(pair, float(t))
    return float(_margin_formula(K, L, z.value))


def local_form(pair: FnPair, z: ComplexParam, t: float, w: complex) -> float:
    """|w|^2 (1 - |z|^2) + K (Re w)^2 - L (Re wz)^2; its minimum over |w| = 1 is local_margin / 2."""
    K, L = local_coefficients(pair, float(t))
    w = complex(w)
    zv = z.value
    return abs(w) ** 2 * (1.0 - abs(zv) ** 2) + K * w.real**2 - L * (w * zv).real ** 2


def worst_direction(pair: FnPair, z: ComplexParam, t: float) -> complex:
    """Unit w minimizing local_form at t."""
    K, L = local_coefficients(pair, float(t))
    c = K - L * z.value * z.value
    if abs(c) == 0:
        return 1.0 + 0j
    # e^{2i theta} = -conj(c)/|c|
    angle = cmath.phase(-c.conjugate())
    return cmath.exp(0.5j * angle)


def _refine_minimum(fun: Callable[[float], float], ts: np.ndarray, index: int) -> Tuple[float, float]:
    """Bounded scalar minimization of fun(log t) around ts[index]."""
    lo = math.log(ts[max(index - 1, 0)])
    hi = math.log(ts[min(index + 1, len(ts) - 1)])
    if hi <= lo:
        return float(ts[index]), fun(math.log(ts[index]))
    result = minimize_scalar(fun, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    return float(math.exp(result.x)), float(result.fun)


def _min_margin(
    pair: FnPair, z: ComplexParam, ts: np.ndarray, K: np.ndarray, L: np.ndarray
) -> Tuple[float, float]:
    margins = _margin_formula(K, L, z.value)
    index = int(np.argmin(margins))
    best_t, best = float(ts[index]), float(margins[index])
    refined_t, refined = _refine_minimum(
        lambda u: local_margin(pair, z, math.exp(u)), ts, index
    )
    if refined < best:
        best_t, best = refined_t, refined
    return best, best_t


def check_local(pair: FnPair, z: ComplexParam, ts: Optional[np.ndarray] = None) -> LocalReport:
    """
    Minimum of local_margin over a log t-grid, refined near the grid argmin.

    Returns:
        LocalReport; holds iff min_margin >= -MARGIN_TOL
    """
    if ts is None:
        ts, _ = make_t_grid()
    ts = np.asarray(ts, dtype=float)
    if ts.size == 0:
        raise DomainError("check_local needs a nonempty t-grid")
    K, L = local_coefficients(pair, ts)
    min_margin, argmin_t = _min_margin(pair, z, ts, K, L)
    return {
        "min_margin": min_margin,
        "argmin_t": argmin_t,
        "t_grid": _grid_spec(ts),
        "holds": bool(min_margin >= -config.MARGIN_TOL),
    }


def weissler_margin(p: float, q: float, z: ComplexParam) -> float:
    """p - |z|^2 q - |p - 2 - z^2 (q - 2)|."""
    if p <= 0 or q <= 0:
        raise DomainError(f"Exponents must be positive, got p={p}, q={q}")
    zv = z.value
    return p - abs(zv) ** 2 * q - abs(p - 2.0 - zv * zv * (q - 2.0))


def nelson_exponent(p: float, r: float) -> float:
    """Target exponent (p-1)/r^2 + 1 of the real noise operator T_r."""
    return (p - 1.0) / (r * r) + 1.0


def beckner_point(p: float) -> Tuple[float, ComplexParam]:
    """Dual exponent q = p/(p-1) and z = i sqrt(p-1), for 1 < p <= 2."""
    if not 1 < p <= 2:
        raise DomainError(f"Beckner point needs 1 < p <= 2, got {p}")
    return p / (p - 1.0), ComplexParam(0.0, math.sqrt(p - 1.0))


def _ratio_second_difference(F: ScalarFn, ts: np.ndarray) -> np.ndarray:
    """(F'/F'')'' by a second difference with step RATIO_STEP*t, scaled by t^2/rho(t)."""
    h = config.RATIO_STEP * ts

    def rho(t):
        return F.d1(t) / F.d2(t)

    center = rho(ts)
    second = (rho(ts + h) - 2.0 * center + rho(ts - h)) / (h * h)
    return second * ts * ts / center


def _hessian_expression(F: ScalarFn, ts: np.ndarray) -> Tuple[np.ndarray, int]:
    """F1 F2 F4 + F2^2 F3 - 2 F1 F3^2, divided by the sum of its term magnitudes."""
    f1, f2, f3 = F.d1(ts), F.d2(ts), F.d3(ts)
    f4 = F.d4(ts)
    f4_wide = F.d4(ts, step=2.0 * config.FD4_STEP)
    unstable = int(
        np.count_nonzero(np.abs(f4 - f4_wide) > 1e-3 * np.maximum(np.abs(f4), 1e-300))
    )
    terms = (f1 * f2 * f4, f2 * f2 * f3, -2.0 * f1 * f3 * f3)
    scale = sum(np.abs(term) for term in terms)
    with np.errstate(divide="ignore", invalid="ignore"):
        normalized = np.where(scale > 0, sum(terms) / np.where(scale > 0, scale, 1.0), 0.0)
    return normalized, unstable


def convexity_report(F: ScalarFn, ts: Optional[np.ndarray] = None) -> ConvexityReport:
    """
    Convexity hypotheses on F over a grid.

    Checks F'' > 0, concavity of F'/F'' (numeric second difference), the sign
    of the Hessian determinant of (t, y) -> y^2 F''/F', and the degenerate
    branch F'' == 0.
    """
    if ts is None:
        ts = log_grid(config.CONVEXITY_T_MIN, config.CONVEXITY_T_MAX, config.CONVEXITY_T_POINTS)
    ts = np.asarray(ts, dtype=float)
    f2 = np.asarray(F.d2(ts), dtype=float)
    degenerate = bool(np.max(np.abs(f2)) < config.DEGENERATE_TOL)

    if degenerate:
        logger.info(f"{F.name}: F'' vanishes on the grid, using the degenerate branch")
        return {
            "Fpp_positive": False,
            "ratio_concave": None,
            "hessian_psd": True,
            "degenerate": True,
            "sign_agreement": None,
            "min_Fpp": float(np.min(f2)),
            "max_ratio_second_diff": 0.0,
            "min_hessian_det": 0.0,
            "unstable_points": 0,
            "note": CONVEXITY_NOTE,
        }

    ratio_dd = _ratio_second_difference(F, ts)
    hessian, unstable = _hessian_expression(F, ts)
    if unstable:
        logger.warning(f"{F.name}: numeric fourth derivative unstable at {unstable} grid points")

    tol = config.CONVEXITY_TOL
    significant = (np.abs(ratio_dd) > tol) & (np.abs(hessian) > tol)
    agreement = bool(np.all(np.sign(hessian[significant]) == np.sign(-ratio_dd[significant])))
    return {
        "Fpp_positive": bool(np.all(f2 > 0)),
        "ratio_concave": bool(np.max(ratio_dd) <= tol),
        "hessian_psd": bool(np.min(hessian) >= -tol),
        "degenerate": False,
        "sign_agreement": agreement,
        "min_Fpp": float(np.min(f2)),
        "max_ratio_second_diff": float(np.max(ratio_dd)),
        "min_hessian_det": float(np.min(hessian)),
        "unstable_points": unstable,
        "note": CONVEXITY_NOTE,
    }


def _positive_elasticity(fn: ScalarFn, ts: np.ndarray, label: str) -> np.ndarray:
    e = np.asarray(fn.elasticity(ts), dtype=float)
    bad = np.flatnonzero(~(e > 0))
    if bad.size:
        logger.error(f"{label}'' <= 0 at t = {ts[bad[0]]:g} for {fn.name}")
        raise ConditionError(f"{label}'' must be positive: violated at t = {ts[bad[0]]:g}")
    return e


def lens_report(P: ScalarFn, ts: Optional[np.ndarray] = None) -> LensReport:
    """c_P = sup_t K + 1/K with K = tP''/P', refined near the grid argmax."""
    if ts is None:
        ts, _ = make_t_grid()
    ts = np.asarray(ts, dtype=float)
    K = _positive_elasticity(P, ts, "P")
    values = K + 1.0 / K
    index = int(np.argmax(values))
    best_t, best = float(ts[index]), float(values[index])

    def negated(u: float) -> float:
        k = float(P.elasticity(math.exp(u)))
        return -(k + 1.0 / k)

    refined_t, refined = _refine_minimum(negated, ts, index)
    if -refined > best:
        best_t, best = refined_t, -refined
    return {"c_P": best, "argsup_t": best_t, "t_grid": _grid_spec(ts)}


def lens_cP(P: ScalarFn, ts: Optional[np.ndarray] = None) -> float:
    return lens_report(P, ts)["c_P"]


def lens_contains(c_P: float, z: ComplexParam) -> Tuple[bool, float]:
    """
    Membership of z in the lens |2z +- i sqrt(c_P - 2)| <= sqrt(c_P + 2).

    Returns:
        (contained, margin) with margin = sqrt(c_P+2) - max over both signs
    """
    if c_P < 2.0 - config.LENS_TOL:
        raise DomainError(f"c_P must be >= 2, got {c_P}")
    shift = 1j * math.sqrt(max(c_P - 2.0, 0.0))
    zv = z.value
    margin = math.sqrt(c_P + 2.0) - max(abs(2.0 * zv + shift), abs(2.0 * zv - shift))
    return margin >= -config.LENS_TOL, margin


def r_star_components(pair: FnPair, ts: Optional[np.ndarray] = None) -> RStarReport:
    """
    The three candidates of r* = min{1, sqrt(inf tP''/P'), sqrt(inf Q'/(tQ''))}.

    Raises:
        ConditionError: P'' or Q'' is not positive on the grid
    """
    if ts is None:
        ts, _ = make_t_grid()
    ts = np.asarray(ts, dtype=float)
    eP = _positive_elasticity(pair.P, ts, "P")
    eQ = _positive_elasticity(pair.Q, ts, "Q")

    i = int(np.argmin(eP))
    _, refined = _refine_minimum(lambda u: float(pair.P.elasticity(math.exp(u))), ts, i)
    inf_eP = min(float(eP[i]), refined)

    j = int(np.argmax(eQ))
    _, refined = _refine_minimum(lambda u: -float(pair.Q.elasticity(math.exp(u))), ts, j)
    sup_eQ = max(float(eQ[j]), -refined)

    candidates = {
        "one": 1.0,
        "sqrt_inf_elasticity_P": math.sqrt(inf_eP),
        "sqrt_inv_sup_elasticity_Q": 1.0 / math.sqrt(sup_eQ),
    }
    binding = min(candidates, key=candidates.get)
    return {
        "r_star": candidates[binding],
        "sqrt_inf_elasticity_P": candidates["sqrt_inf_elasticity_P"],
        "sqrt_inv_sup_elasticity_Q": candidates["sqrt_inv_sup_elasticity_Q"],
        "binding": binding,
        "t_grid": _grid_spec(ts),
    }


def r_star(pair: FnPair, ts: Optional[np.ndarray] = None) -> float:
    return r_star_components(pair, ts)["r_star"]


def polar_grid(n_r: int, n_theta: int) -> List[Tuple[float, float]]:
    """(radius, angle) pairs, row-major: radius i/(n_r - 1) outer, angle 2*pi*j/n_theta inner."""
    if n_r < 2 or n_theta < 1:
        raise DomainError(f"Polar grid needs n_r >= 2 and n_theta >= 1, got {n_r} x {n_theta}")
    return [
        (i / (n_r - 1), 2.0 * math.pi * j / n_theta) for i in range(n_r) for j in range(n_theta)
    ]


def scan_region(
    pair: FnPair,
    n_r: int,
    n_theta: int,
    ts: Optional[np.ndarray] = None,
    workers: int = config.WORKERS,
) -> RegionGrid:
    """
    Run check_local over a polar grid of the closed unit disk.

    Per-cell failures are recorded in the cell (min_margin NaN, admissible
    False, error message) instead of aborting the scan.
    """
    if ts is None:
        ts, _ = make_t_grid()
    ts = np.asarray(ts, dtype=float)
    K, L = local_coefficients(pair, ts)
    points = polar_grid(n_r, n_theta)

    def scan_cell(point: Tuple[float, float]) -> RegionCell:
        radius, angle = point
        z = ComplexParam.from_complex(cmath.rect(radius, angle))
        cell: RegionCell = {
            "re": z.re,
            "im": z.im,
            "radius": radius,
            "angle": angle,
            "min_margin": float("nan"),
            "admissible": False,
            "error": None,
        }
        try:
            margin, _ = _min_margin(pair, z, ts, K, L)
            cell["min_margin"] = margin
            cell["admissible"] = bool(margin >= -config.MARGIN_TOL)
        except (VerificationError, ArithmeticError, ValueError) as e:
            logger.warning(f"Cell z = ({z.re:.6g}, {z.im:.6g}) failed: {e}")
            cell["error"] = str(e)
        return cell

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(scan_cell, points))
    else:
        cells = [scan_cell(point) for point in points]

    admissible = sum(1 for cell in cells if cell["admissible"])
    errors = sum(1 for cell in cells if cell["error"] is not None)
    logger.info(
        f"Scanned {len(cells)} cells for ({pair.P.name}, {pair.Q.name}): "
        f"{admissible} admissible, {errors} errors"
    )
    return {
        "n_r": n_r,
        "n_theta": n_theta,
        "t_grid": _grid_spec(ts),
        "tolerance": config.MARGIN_TOL,
        "cells": cells,
        "admissible_fraction": admissible / len(cells),
        "error_cells": errors,
    }


def radial_inclusion_failures(region: RegionGrid) -> List[Dict[str, float]]:
    """
    Cells admissible at radius r whose ray contains a non-admissible cell of
    smaller radius (failures of the empirical star-shape property).
    """
    n_r, n_theta = region["n_r"], region["n_theta"]
    cells = region["cells"]
    failures = []
    for j in range(n_theta):
        first_bad: Optional[RegionCell] = None
        for i in range(n_r):
            cell = cells[i * n_theta + j]
            if not cell["admissible"] and first_bad is None:
                first_bad = cell
            elif cell["admissible"] and first_bad is not None:
                failures.append(
                    {
                        "re": cell["re"],
                        "im": cell["im"],
                        "inner_re": first_bad["re"],
                        "inner_im": first_bad["im"],
                    }
                )
    if failures:
        logger.warning(f"Radial inclusion fails at {len(failures)} cells")
    return failures


def generator_margin(
    h: ScalarFn,
    phi: ScalarFn,
    z: ComplexParam,
    s: float,
    pair: Optional[FnPair] = None,
) -> float:
    """
    Generator form of the local condition at s in R:

        (1 - |z|^2)(phi'(s) + 1) - |z|^2 R - |(1 - z^2)(phi'(s) - 1) - z^2 R|,
        R = e^{phi(s) + s} / h(P(e^s)).

    Args:
        pair: generated pair to reuse (built from h, phi when omitted)
    """
    if pair is None:
        pair = make_generator(h, phi)
    zv = z.value
    z2 = zv * zv
    az2 = abs(zv) ** 2
    slope = float(phi.d1(s))
    ratio = math.exp(float(phi.value(s)) + s) / float(h.value(pair.P.value(math.exp(s))))
    return (1.0 - az2) * (slope + 1.0) - az2 * ratio - abs((1.0 - z2) * (slope - 1.0) - z2 * ratio)


