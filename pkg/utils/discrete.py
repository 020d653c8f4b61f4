"""
Hamming cube counterpart of the Gaussian flow.

Functions on {-1, 1}^m are stored as 2^m values; index bit j set means
eps_{j+1} = -1. Walsh coefficients use the same layout with the bitmask of S.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np

import config
from utils.custom_types import DiscreteMapTable, DomainError, PolyBasis
from utils.hermite import ComplexParam, CPoly
from utils.scalarfn import FnPair, ScalarFn, invert

logger = logging.getLogger(__name__)


def _check_dimension(m: int):
    if not 0 <= m <= config.MAX_CUBE_DIM:
        raise DomainError(f"Cube dimension must be in [0, {config.MAX_CUBE_DIM}], got {m}")


def _dimension_of(values: np.ndarray) -> int:
    n = len(values)
    m = n.bit_length() - 1
    if n < 1 or n != 1 << m:
        raise DomainError(f"Length {n} is not a power of two")
    _check_dimension(m)
    return m


def _popcounts(m: int) -> np.ndarray:
    idx = np.arange(1 << m)
    counts = np.zeros(1 << m, dtype=int)
    for j in range(m):
        counts += (idx >> j) & 1
    return counts


def subset_mask(S: Iterable[int]) -> int:
    """Bitmask of a subset of {1..m} given by 1-based coordinates."""
    mask = 0
    for j in S:
        if j < 1:
            raise DomainError(f"Coordinates are 1-based, got {j}")
        mask |= 1 << (j - 1)
    return mask


def mask_subset(mask: int) -> Tuple[int, ...]:
    return tuple(j + 1 for j in range(mask.bit_length()) if mask >> j & 1)


def cube_points(m: int) -> np.ndarray:
    """All 2^m points as a (2^m, m) array of +-1 in the index layout."""
    _check_dimension(m)
    idx = np.arange(1 << m)[:, None]
    bits = (idx >> np.arange(m)[None, :]) & 1
    return 1 - 2 * bits


def _butterfly(values: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform: sum_i v_i (-1)^{|i & S|}."""
    m = _dimension_of(values)
    x = np.asarray(values, dtype=complex).reshape((2,) * m) if m else np.asarray(values, dtype=complex)
    for axis in range(m):
        a = np.take(x, 0, axis=axis)
        b = np.take(x, 1, axis=axis)
        x = np.stack([a + b, a - b], axis=axis)
    return x.reshape(-1)


@dataclass(frozen=True, eq=False)
class CubeFn:
    """A complex function on {-1, 1}^m (m <= MAX_CUBE_DIM)."""

    m: int
    values: np.ndarray

    def __post_init__(self):
        _check_dimension(self.m)
        values = np.array(self.values, dtype=complex).reshape(-1)
        if len(values) != 1 << self.m:
            raise DomainError(f"Expected {1 << self.m} values for m = {self.m}, got {len(values)}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], complex], m: int, vectorized: bool = False) -> "CubeFn":
        points = cube_points(m)
        if vectorized:
            return cls(m, np.asarray(fn(points), dtype=complex))
        return cls(m, np.array([fn(row) for row in points], dtype=complex))

    @cached_property
    def walsh(self) -> np.ndarray:
        coeffs = _butterfly(self.values) / (1 << self.m)
        coeffs.setflags(write=False)
        return coeffs

    def coefficient(self, S: Iterable[int]) -> complex:
        return complex(self.walsh[subset_mask(S)])

    def mean_square(self) -> float:
        return float(np.mean(np.abs(self.values) ** 2))


def walsh_expand(g: CubeFn) -> np.ndarray:
    """Walsh coefficients g^(S) = E g W_S, indexed by the bitmask of S."""
    return g.walsh


def inverse_walsh(coeffs: Sequence[complex]) -> CubeFn:
    coeffs = np.asarray(coeffs, dtype=complex)
    return CubeFn(_dimension_of(coeffs), _butterfly(coeffs))


def walsh_dict(coeffs: Sequence[complex], tol: float = 0.0) -> Dict[Tuple[int, ...], complex]:
    """Nonzero coefficients keyed by 1-based subsets."""
    return {mask_subset(mask): complex(c) for mask, c in enumerate(coeffs) if abs(c) > tol}


def coefficients_from_dict(m: int, terms: Dict[Tuple[int, ...], complex]) -> np.ndarray:
    _check_dimension(m)
    coeffs = np.zeros(1 << m, dtype=complex)
    for S, c in terms.items():
        mask = subset_mask(S)
        if mask >= 1 << m:
            raise DomainError(f"Subset {S} is not contained in {{1..{m}}}")
        coeffs[mask] += c
    return coeffs


def _z_powers(z: ComplexParam, exponents: np.ndarray) -> np.ndarray:
    table = np.array([z.value**n for n in range(int(exponents.max(initial=0)) + 1)], dtype=complex)
    return table[exponents]


def cube_substitute(coeffs: Sequence[complex], z: ComplexParam) -> CubeFn:
    """eps -> sum_S g^(S) z^{|S|} W_S(eps)."""
    coeffs = np.asarray(coeffs, dtype=complex)
    m = _dimension_of(coeffs)
    return inverse_walsh(coeffs * _z_powers(z, _popcounts(m)))


def two_point_margin(F: ScalarFn, P: ScalarFn, z: ComplexParam, a: complex, b: complex) -> float:
    """
    F((P(|a+b|) + P(|a-b|))/2) - (F(P(|a+bz|)) + F(P(|a-bz|)))/2.

    The m = 1 case of the discrete inequality; nonnegative at admissible z.
    """
    a, b = complex(a), complex(b)
    bz = b * z.value
    left = F.value((P.value(abs(a + b)) + P.value(abs(a - b))) / 2.0)
    right = (F.value(P.value(abs(a + bz))) + F.value(P.value(abs(a - bz)))) / 2.0
    return float(left - right)


def discrete_map(
    coeffs: Sequence[complex],
    pair: FnPair,
    z: ComplexParam,
    k: int,
    workers: int = config.WORKERS,
) -> float:
    """
    phi(k) = E_{eps_1..eps_k} F^{-1}(E_{eps_{k+1}..eps_m} Q(|g(eps_1..eps_k, z eps_{k+1}..z eps_m)|)).

    Exhaustive enumeration; z multiplies the last m - k coordinates.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    m = _dimension_of(coeffs)
    if not 0 <= k <= m:
        raise DomainError(f"k must lie in [0, {m}], got {k}")

    noised = _popcounts(m) - _popcounts(k)[np.arange(1 << m) & ((1 << k) - 1)]
    g = inverse_walsh(coeffs * _z_powers(z, noised)).values

    q_values = np.asarray(pair.Q.value(np.abs(g)), dtype=float)
    inner = q_values.reshape(1 << (m - k), 1 << k).mean(axis=0)
    if workers > 1 and len(inner) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outer = list(pool.map(pair.F_inverse, inner.tolist()))
    else:
        outer = [pair.F_inverse(y) for y in inner.tolist()]
    return float(np.mean(outer))


def discrete_map_table(
    coeffs: Sequence[complex],
    pair: FnPair,
    z: ComplexParam,
    workers: int = config.WORKERS,
) -> DiscreteMapTable:
    coeffs = np.asarray(coeffs, dtype=complex)
    m = _dimension_of(coeffs)
    values = [discrete_map(coeffs, pair, z, k, workers) for k in range(m + 1)]
    increments = [b - a for a, b in zip(values, values[1:])]
    tol = config.DISCRETE_TOL * max(1.0, abs(values[-1]))
    monotone = all(inc >= -tol for inc in increments)
    if not monotone:
        logger.warning(f"Discrete map is not monotone for m = {m}: min increment {min(increments):.3e}")
    return {
        "m": m,
        "values": values,
        "increments": increments,
        "monotone": monotone,
        "tolerance": tol,
    }


def mfunctional(F: ScalarFn, h: Sequence[float], weights: Sequence[float]) -> float:
    """The quasi-mean F^{-1}(sum_i w_i F(h_i))."""
    h = np.asarray(h, dtype=float)
    w = np.asarray(weights, dtype=float)
    return invert(F, float(np.dot(w, np.asarray(F.value(h), dtype=float))))


def mfunctional_midpoint(
    F: ScalarFn,
    h0: Sequence[float],
    h1: Sequence[float],
    weights: Sequence[float],
) -> float:
    """
    (M_F(h0) + M_F(h1))/2 - M_F((h0 + h1)/2), nonnegative when F'/F'' is concave.
    """
    h0 = np.asarray(h0, dtype=float)
    h1 = np.asarray(h1, dtype=float)
    w = np.asarray(weights, dtype=float)
    if not (h0.shape == h1.shape == w.shape):
        raise DomainError("h0, h1 and weights must have the same shape")
    if (h0 < 0).any() or (h1 < 0).any():
        raise DomainError("mfunctional_midpoint expects nonnegative vectors")
    if (w < 0).any() or abs(math.fsum(w) - 1.0) > 1e-12:
        raise DomainError("weights must be a probability vector")
    mid = (h0 + h1) / 2.0
    return (mfunctional(F, h0, w) + mfunctional(F, h1, w)) / 2.0 - mfunctional(F, mid, w)


def cube_coefficients_from_hermite(f: CPoly, m: int) -> np.ndarray:
    """
    Leading-order cube coefficients of a one-variable Hermite polynomial:
    g^(S) = |S|! / m^{|S|/2} c_{|S|}, so that g(eps) approximates f at the
    normalized sum of the coordinates.
    """
    if f.dimension != 1:
        raise DomainError(f"Expected a one-variable polynomial, got dimension {f.dimension}")
    if f.basis != PolyBasis.HERMITE:
        f = f.to_hermite()
    _check_dimension(m)
    if f.degree > m:
        raise DomainError(f"Degree {f.degree} exceeds the cube dimension {m}")
    sizes = _popcounts(m)
    coeffs = np.array(
        [math.factorial(n) / m ** (n / 2) * f.coefficient((n,)) for n in sizes],
        dtype=complex,
    )
    return coeffs


def flow_comparison_table(
    f: CPoly,
    pair: FnPair,
    z: ComplexParam,
    m: int,
    s_grid: Optional[Sequence[float]] = None,
) -> List[Dict[str, float]]:
    """
    phi(floor(s m)) next to C(s) and F^{-1}(C(s)). No convergence is asserted.
    """
    from utils.flow import C_of_s, FlowConfig, default_s_grid

    s_grid = default_s_grid(m + 1) if s_grid is None else list(s_grid)
    coeffs = cube_coefficients_from_hermite(f, m)
    flow_config = FlowConfig(f, pair, z, s_grid=s_grid)
    phis = {}
    rows = []
    for s in flow_config.s_grid:
        k = min(m, int(math.floor(s * m + 1e-12)))
        if k not in phis:
            phis[k] = discrete_map(coeffs, pair, z, k)
        c = C_of_s(flow_config, s)
        rows.append({"s": s, "k": k, "phi": phis[k], "C": c, "C_on_phi_scale": pair.F_inverse(c)})
    return rows
