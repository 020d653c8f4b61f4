"""
Complex-coefficient multivariate polynomials in the monomial and the
(probabilists') Hermite basis.

Hermite polynomials are built from the recurrence H_0 = 1, H_1 = x,
H_{n+1} = x H_n - n H_{n-1} and tensorized across coordinates.
"""

from collections import defaultdict
from dataclasses import dataclass
from functools import cached_property, lru_cache
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple
import logging

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import comb, factorial2

import config
from utils.custom_types import DomainError, PolyBasis, SpecParseError

logger = logging.getLogger(__name__)

MultiIndex = Tuple[int, ...]


def multi_index_order(alpha: MultiIndex) -> int:
    return sum(alpha)


@dataclass(frozen=True)
class ComplexParam:
    """The parameter z of the Mahler transform, restricted to the closed unit disk."""

    re: float
    im: float

    def __post_init__(self):
        if not (np.isfinite(self.re) and np.isfinite(self.im)):
            raise DomainError(f"Complex parameter must be finite, got ({self.re}, {self.im})")
        if self.re * self.re + self.im * self.im > 1.0 + config.DISK_TOL:
            raise DomainError(
                f"Complex parameter ({self.re}, {self.im}) lies outside the closed unit disk"
            )

    @classmethod
    def from_complex(cls, z: complex) -> "ComplexParam":
        z = complex(z)
        return cls(float(z.real), float(z.imag))

    @classmethod
    def parse(cls, text: str) -> "ComplexParam":
        """Parse "re,im" (a bare "re" means im = 0)."""
        parts = [part.strip() for part in text.split(",")]
        if len(parts) not in (1, 2):
            raise SpecParseError(f"Expected \"re,im\", got {text!r}")
        try:
            re_, im_ = float(parts[0]), float(parts[1]) if len(parts) == 2 else 0.0
        except ValueError as e:
            raise SpecParseError(f"Invalid complex parameter {text!r}: {e}") from e
        return cls(re_, im_)

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    @property
    def modulus(self) -> float:
        return abs(self.value)

    def conjugate(self) -> "ComplexParam":
        return ComplexParam(self.re, -self.im)

    def __neg__(self) -> "ComplexParam":
        return ComplexParam(-self.re, -self.im)


@lru_cache(maxsize=None)
def hermite_table(n: int) -> np.ndarray:
    """
    Coefficient table of H_0..H_n.

    Returns:
        (n+1, n+1) read-only array T with T[k, j] = coefficient of x^j in H_k
    """
    table = np.zeros((n + 1, n + 1))
    table[0, 0] = 1.0
    if n >= 1:
        table[1, 1] = 1.0
    for k in range(1, n):
        table[k + 1, 1:] += table[k, :-1]
        table[k + 1, :] -= k * table[k - 1, :]
    table.setflags(write=False)
    return table


def _gaussian_moment(m: int) -> int:
    """E v^m for a standard Gaussian v (m even)."""
    if m == 0:
        return 1
    return int(factorial2(m - 1, exact=True))


def _hermite_to_monomial_1d(vec: np.ndarray) -> np.ndarray:
    table = hermite_table(len(vec) - 1)
    return table.T @ vec


def _monomial_to_hermite_1d(vec: np.ndarray) -> np.ndarray:
    upper = hermite_table(len(vec) - 1).T
    real = solve_triangular(upper, vec.real, lower=False)
    imag = solve_triangular(upper, vec.imag, lower=False)
    return real + 1j * imag


def _convert_axis(terms: Mapping[MultiIndex, complex], axis: int, kernel) -> Dict[MultiIndex, complex]:
    # dense only along one coordinate at a time
    columns: Dict[MultiIndex, Dict[int, complex]] = defaultdict(dict)
    for alpha, c in terms.items():
        rest = alpha[:axis] + alpha[axis + 1 :]
        columns[rest][alpha[axis]] = c

    out: Dict[MultiIndex, complex] = {}
    for rest, column in columns.items():
        vec = np.zeros(max(column) + 1, dtype=complex)
        for d, c in column.items():
            vec[d] = c
        for d, c in enumerate(kernel(vec)):
            if c != 0:
                alpha = rest[:axis] + (d,) + rest[axis:]
                out[alpha] = out.get(alpha, 0j) + complex(c)
    return out


class CPoly:
    """
    Immutable sparse polynomial f: R^k -> C with an explicit basis tag.

    Terms map a MultiIndex to its complex coefficient; coefficients whose
    modulus does not exceed COEF_PRUNE are dropped on construction.
    """

    def __init__(
        self,
        dimension: int,
        terms: Mapping[Sequence[int], complex],
        basis: PolyBasis = PolyBasis.MONOMIAL,
    ):
        if dimension < 1:
            raise DomainError(f"Polynomial dimension must be positive, got {dimension}")
        collected: Dict[MultiIndex, complex] = {}
        for alpha, c in terms.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != dimension or any(a < 0 for a in alpha):
                raise DomainError(f"Invalid multi-index {alpha} for dimension {dimension}")
            collected[alpha] = collected.get(alpha, 0j) + complex(c)

        self._dimension = dimension
        self._basis = PolyBasis(basis)
        self._terms = {a: c for a, c in collected.items() if abs(c) > config.COEF_PRUNE}

    @classmethod
    def constant(cls, dimension: int, c: complex, basis: PolyBasis = PolyBasis.MONOMIAL) -> "CPoly":
        return cls(dimension, {(0,) * dimension: c}, basis)

    @property
    def dimension(self) -> int:
        return self._dimension

    @property
    def basis(self) -> PolyBasis:
        return self._basis

    @property
    def terms(self) -> Mapping[MultiIndex, complex]:
        return MappingProxyType(self._terms)

    @property
    def degree(self) -> int:
        """Max order of stored terms (0 for the zero polynomial)."""
        return max((multi_index_order(a) for a in self._terms), default=0)

    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, alpha: Sequence[int]) -> complex:
        return self._terms.get(tuple(alpha), 0j)

    def mean(self) -> complex:
        """Integral against the standard Gaussian measure."""
        return self.to_hermite().coefficient((0,) * self._dimension)

    def _check_compatible(self, other: "CPoly"):
        if self._dimension != other._dimension:
            raise DomainError(
                f"Dimension mismatch: {self._dimension} vs {other._dimension}"
            )

    def __add__(self, other: "CPoly") -> "CPoly":
        self._check_compatible(other)
        other = other.in_basis(self._basis)
        merged = dict(self._terms)
        for alpha, c in other._terms.items():
            merged[alpha] = merged.get(alpha, 0j) + c
        return CPoly(self._dimension, merged, self._basis)

    def __neg__(self) -> "CPoly":
        return CPoly(self._dimension, {a: -c for a, c in self._terms.items()}, self._basis)

    def __sub__(self, other: "CPoly") -> "CPoly":
        return self + (-other)

    def __mul__(self, scalar: complex) -> "CPoly":
        if isinstance(scalar, CPoly):
            return NotImplemented
        return CPoly(
            self._dimension, {a: c * scalar for a, c in self._terms.items()}, self._basis
        )

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CPoly):
            return NotImplemented
        return (
            self._dimension == other._dimension
            and self._basis == other._basis
            and self._terms == other._terms
        )

    def __hash__(self):
        return hash((self._dimension, self._basis, frozenset(self._terms.items())))

    def __repr__(self) -> str:
        return f"CPoly(dimension={self._dimension}, basis={self._basis.value}, terms={self._terms})"

    def allclose(self, other: "CPoly", rel_tol: float = 1e-12, abs_tol: float = 1e-12) -> bool:
        """Coefficientwise comparison after bringing other to this basis."""
        self._check_compatible(other)
        other = other.in_basis(self._basis)
        for alpha in set(self._terms) | set(other._terms):
            a = self.coefficient(alpha)
            b = other.coefficient(alpha)
            if abs(a - b) > max(abs_tol, rel_tol * max(abs(a), abs(b))):
                return False
        return True

    def in_basis(self, basis: PolyBasis) -> "CPoly":
        if basis == self._basis:
            return self
        if basis == PolyBasis.HERMITE:
            return hermite_from_monomial(self)
        return monomial_from_hermite(self)

    def to_monomial(self) -> "CPoly":
        return self.in_basis(PolyBasis.MONOMIAL)

    def to_hermite(self) -> "CPoly":
        return self.in_basis(PolyBasis.HERMITE)

    def as_ell(self) -> "CPoly":
        """The Hermite coefficients of self reinterpreted as monomial coefficients."""
        if self._basis != PolyBasis.HERMITE:
            raise DomainError("as_ell expects a polynomial in the Hermite basis")
        return CPoly(self._dimension, self._terms, PolyBasis.MONOMIAL)

    @cached_property
    def _power_plan(self) -> Tuple[np.ndarray, np.ndarray, int]:
        monomial = self.to_monomial()
        if monomial.is_zero():
            return np.zeros((0, self._dimension), dtype=int), np.zeros(0, dtype=complex), 0
        alphas = np.array(list(monomial._terms.keys()), dtype=int)
        coefs = np.array(list(monomial._terms.values()), dtype=complex)
        return alphas, coefs, int(alphas.max())

    def to_records(self) -> List[Dict[str, object]]:
        return [
            {"alpha": list(alpha), "re": c.real, "im": c.imag}
            for alpha, c in sorted(self._terms.items())
        ]


def hermite_from_monomial(p: CPoly) -> CPoly:
    """
    Rewrite a monomial-basis polynomial in the Hermite basis.

    Args:
        p: polynomial in the monomial basis

    Returns:
        The same function as a combination of tensor Hermite polynomials
    """
    if p.basis != PolyBasis.MONOMIAL:
        raise DomainError("hermite_from_monomial expects a monomial-basis polynomial")
    terms: Mapping[MultiIndex, complex] = p.terms
    for axis in range(p.dimension):
        terms = _convert_axis(terms, axis, _monomial_to_hermite_1d)
    return CPoly(p.dimension, terms, PolyBasis.HERMITE)


def monomial_from_hermite(p: CPoly) -> CPoly:
    """
    Expand a Hermite-basis polynomial into monomials.

    Args:
        p: polynomial in the Hermite basis

    Returns:
        The same function in the monomial basis
    """
    if p.basis != PolyBasis.HERMITE:
        raise DomainError("monomial_from_hermite expects a Hermite-basis polynomial")
    terms: Mapping[MultiIndex, complex] = p.terms
    for axis in range(p.dimension):
        terms = _convert_axis(terms, axis, _hermite_to_monomial_1d)
    return CPoly(p.dimension, terms, PolyBasis.MONOMIAL)


def mahler_transform(p: CPoly, z: ComplexParam) -> CPoly:
    """Multiply the coefficient of H_alpha by z^|alpha|."""
    if p.basis != PolyBasis.HERMITE:
        raise DomainError("mahler_transform expects a Hermite-basis polynomial")
    zv = z.value
    return CPoly(
        p.dimension,
        {alpha: c * zv ** multi_index_order(alpha) for alpha, c in p.terms.items()},
        PolyBasis.HERMITE,
    )


def evaluate_many(p: CPoly, points) -> np.ndarray:
    """
    Evaluate p at many points at once.

    Args:
        p: polynomial in either basis (Hermite input is expanded once and cached)
        points: array of shape (N, k) (or (k,) for a single point), real or complex

    Returns:
        complex array of shape (N,)
    """
    pts = np.asarray(points, dtype=complex)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.shape[1] != p.dimension:
        raise DomainError(
            f"Point dimension {pts.shape[1]} does not match polynomial dimension {p.dimension}"
        )
    alphas, coefs, max_degree = p._power_plan
    n_points = pts.shape[0]
    if len(coefs) == 0:
        return np.zeros(n_points, dtype=complex)

    # powers[i][:, d] = x_i ** d, built by repeated multiplication
    result = np.zeros(n_points, dtype=complex)
    powers = []
    for i in range(p.dimension):
        table = np.ones((n_points, max_degree + 1), dtype=complex)
        for d in range(1, max_degree + 1):
            table[:, d] = table[:, d - 1] * pts[:, i]
        powers.append(table)
    for alpha, c in zip(alphas, coefs):
        term = np.full(n_points, c, dtype=complex)
        for i, a in enumerate(alpha):
            if a:
                term = term * powers[i][:, a]
        result += term
    return result


def evaluate(p: CPoly, point: Sequence[complex]) -> complex:
    point = list(point)
    if len(point) != p.dimension:
        raise DomainError(
            f"Point dimension {len(point)} does not match polynomial dimension {p.dimension}"
        )
    return complex(evaluate_many(p, np.asarray(point, dtype=complex).reshape(1, -1))[0])


def gaussian_smooth_imaginary(
    p: CPoly, var: int, sigma: float, direction: complex = 1.0
) -> CPoly:
    """
    Integrate out an imaginary Gaussian perturbation of one variable.

    Returns q(..., w, ...) = E_v p(..., w + i*direction*sigma*v, ...) for a
    standard Gaussian v, computed from E v^m = (m-1)!! on every term.

    Args:
        p: polynomial in the monomial basis
        var: index of the smoothed variable
        sigma: nonnegative scale
        direction: complex unit multiplying the perturbation (1 for the
            purely imaginary direction)
    """
    if p.basis != PolyBasis.MONOMIAL:
        raise DomainError("gaussian_smooth_imaginary expects a monomial-basis polynomial")
    if not 0 <= var < p.dimension:
        raise DomainError(f"Variable index {var} out of range for dimension {p.dimension}")
    if sigma < 0:
        raise DomainError(f"sigma must be nonnegative, got {sigma}")
    if sigma == 0:
        return p

    step = 1j * complex(direction) * sigma
    out: Dict[MultiIndex, complex] = {}
    for alpha, c in p.terms.items():
        n = alpha[var]
        for m in range(0, n + 1, 2):
            weight = comb(n, m, exact=True) * _gaussian_moment(m) * step**m
            target = alpha[:var] + (n - m,) + alpha[var + 1 :]
            out[target] = out.get(target, 0j) + c * weight
    return CPoly(p.dimension, out, PolyBasis.MONOMIAL)


def lift_linear(p: CPoly, coef_u: complex, coef_x: complex) -> CPoly:
    """
    Substitute x_j -> coef_u*u_j + coef_x*x_j in every coordinate.

    Args:
        p: monomial-basis polynomial in k variables

    Returns:
        monomial-basis polynomial in 2k variables ordered (u_1..u_k, x_1..x_k)
    """
    if p.basis != PolyBasis.MONOMIAL:
        raise DomainError("lift_linear expects a monomial-basis polynomial")
    k = p.dimension
    out: Dict[MultiIndex, complex] = {}
    for alpha, c in p.terms.items():
        partial: Dict[MultiIndex, complex] = {(): c}
        # binomial expansion one coordinate at a time
        for n in alpha:
            expanded: Dict[MultiIndex, complex] = {}
            for prefix, coef in partial.items():
                for j in range(n + 1):
                    weight = comb(n, j, exact=True) * coef_u**j * coef_x ** (n - j)
                    if weight == 0:
                        continue
                    key = prefix + (j, n - j)
                    expanded[key] = expanded.get(key, 0j) + coef * weight
            partial = expanded
        for key, coef in partial.items():
            # key interleaves (u_1, x_1, u_2, x_2, ...)
            target = tuple(key[0::2]) + tuple(key[1::2])
            out[target] = out.get(target, 0j) + coef
    return CPoly(2 * k, out, PolyBasis.MONOMIAL)


def noise_semigroup_eval(p: CPoly, r: float, x: Sequence[float], rule) -> complex:
    """
    T_r p(x) = integral of p(r x + sqrt(1 - r^2) y) dgamma(y), by quadrature.

    Args:
        p: polynomial in either basis
        r: real parameter in [-1, 1]
        x: evaluation point (length k)
        rule: QuadRule used per dimension
    """
    from utils.quad import tensor_grid

    if abs(r) > 1.0:
        raise DomainError(f"Noise parameter must satisfy |r| <= 1, got {r}")
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != p.dimension:
        raise DomainError(
            f"Point dimension {x.shape[0]} does not match polynomial dimension {p.dimension}"
        )
    nodes, weights = tensor_grid(rule, p.dimension)
    shifted = r * x[None, :] + np.sqrt(1.0 - r * r) * nodes
    return complex(np.dot(weights, evaluate_many(p, shifted)))


def hermite_integral_oracle(n: int, x: complex, rule) -> complex:
    """H_n(x) from its integral definition, integral of (x + iy)^n dgamma(y)."""
    return complex(np.dot(rule.weights, (x + 1j * rule.nodes) ** n))


def iter_terms_sorted(p: CPoly) -> Iterable[Tuple[MultiIndex, complex]]:
    return sorted(p.terms.items(), key=lambda item: (multi_index_order(item[0]), item[0]))
