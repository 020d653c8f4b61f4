"""
Expectations against the standard Gaussian measure.

Gauss-Hermite rules for the weight exp(-x^2/2)/sqrt(2*pi), their tensor
products, and a seeded Monte Carlo oracle for non-smooth integrands.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Tuple
import logging
import math

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

import config
from utils.custom_types import DomainError, QuadratureError

logger = logging.getLogger(__name__)

NEWTON_POLISH_STEPS = 3


@dataclass(frozen=True, eq=False)
class QuadRule:
    """Nodes and positive weights of an n-point rule for dgamma (weights sum to 1)."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def scaled(self, variance: float) -> "QuadRule":
        """Rule for the centered Gaussian of the given variance (dgamma^(s) for s = variance)."""
        if variance < 0:
            raise DomainError(f"Variance must be nonnegative, got {variance}")
        nodes = self.nodes * math.sqrt(variance)
        nodes.setflags(write=False)
        return QuadRule(self.order, nodes, self.weights)


def _normalized_hermite_pair(n: int, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """psi_n(x), psi_{n-1}(x) with psi_k = He_k / sqrt(k!)."""
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    for k in range(n):
        nxt = (x * cur - math.sqrt(k) * prev) / math.sqrt(k + 1)
        prev, cur = cur, nxt
    return cur, prev


def gauss_rule(n: int) -> QuadRule:
    """
    Probabilists' Gauss-Hermite rule, exact for polynomials of degree <= 2n-1.

    Nodes come from the eigenvalues of the Jacobi matrix of the recurrence
    (Golub-Welsch), polished by Newton steps; weights follow from
    w_i = 1 / (n psi_{n-1}(x_i)^2).

    Args:
        n: number of nodes (n >= 1)

    Returns:
        QuadRule with ascending symmetric nodes and weights summing to 1
    """
    if n < 1:
        raise DomainError(f"Quadrature order must be >= 1, got {n}")
    if n == 1:
        nodes = np.zeros(1)
        weights = np.ones(1)
    else:
        try:
            nodes = eigh_tridiagonal(
                np.zeros(n), np.sqrt(np.arange(1, n, dtype=float)), eigvals_only=True
            )
        except LinAlgError as e:
            logger.error(f"Eigen-solver failed for Gauss-Hermite order {n}: {e}")
            raise

        for _ in range(NEWTON_POLISH_STEPS):
            psi_n, psi_prev = _normalized_hermite_pair(n, nodes)
            nodes = nodes - psi_n / (math.sqrt(n) * psi_prev)

        _, psi_prev = _normalized_hermite_pair(n, nodes)
        weights = 1.0 / (n * psi_prev**2)

        nodes = 0.5 * (nodes - nodes[::-1])
        weights = 0.5 * (weights + weights[::-1])
        weights = weights / math.fsum(weights)

    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadRule(n, nodes, weights)


def tensor_grid(rule: QuadRule, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Product grid of a 1-D rule.

    Returns:
        nodes of shape (n^k, k) in row-major order, weights of shape (n^k,)
    """
    if k < 1:
        raise DomainError(f"Dimension must be positive, got {k}")
    axes = np.meshgrid(*([rule.nodes] * k), indexing="ij")
    nodes = np.stack([a.reshape(-1) for a in axes], axis=1)
    weight_axes = np.meshgrid(*([rule.weights] * k), indexing="ij")
    weights = np.prod(np.stack([w.reshape(-1) for w in weight_axes], axis=1), axis=1)
    return nodes, weights


def _evaluate_rows(integrand: Callable, nodes: np.ndarray, vectorized: bool) -> np.ndarray:
    if vectorized:
        return np.asarray(integrand(nodes), dtype=float).reshape(-1)
    return np.array([integrand(row) for row in nodes], dtype=float)


def _raise_on_non_finite(values: np.ndarray, nodes: np.ndarray, what: str):
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        node = nodes[bad[0]].tolist()
        logger.error(f"Non-finite integrand value in {what} at node {node}")
        raise QuadratureError(f"Non-finite integrand value in {what} at node {node}", node=node)


def expect(
    integrand: Callable,
    rule: QuadRule,
    k: int = 1,
    vectorized: bool = False,
    workers: int = 1,
) -> float:
    """
    Tensor-product quadrature of an integrand over R^k.

    Args:
        integrand: maps a length-k node to a real (or an (N, k) array to N reals
            when vectorized=True)
        rule: 1-D rule used in every coordinate
        k: dimension
        vectorized: evaluate all nodes in a single call
        workers: threads used to evaluate node blocks (result does not depend on it)

    Returns:
        The weighted sum of integrand values
    """
    nodes, weights = tensor_grid(rule, k)
    if workers > 1 and len(nodes) > 1:
        blocks = np.array_split(np.arange(len(nodes)), workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(lambda idx: _evaluate_rows(integrand, nodes[idx], vectorized), blocks)
            )
        values = np.concatenate(parts)
    else:
        values = _evaluate_rows(integrand, nodes, vectorized)
    _raise_on_non_finite(values, nodes, "expect")
    return float(np.dot(weights, values))


def mc_expect(
    integrand: Callable,
    k: int,
    samples: int,
    seed: int = config.DEFAULT_SEED,
    vectorized: bool = False,
    workers: int = 1,
) -> Tuple[float, float]:
    """
    Seeded Monte Carlo estimate of an expectation under dgamma on R^k.

    Draws are generated in fixed-size chunks, each with its own counter-based
    seed, so the estimate does not depend on the worker count.

    Returns:
        (mean, standard error); the standard error is 0 for a single sample
    """
    if samples < 1:
        raise DomainError(f"Monte Carlo needs at least one sample, got {samples}")
    chunk = config.MC_CHUNK
    sizes = [min(chunk, samples - start) for start in range(0, samples, chunk)]

    def run_chunk(index: int) -> np.ndarray:
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
        draws = rng.standard_normal((sizes[index], k))
        values = _evaluate_rows(integrand, draws, vectorized)
        _raise_on_non_finite(values, draws, "mc_expect")
        return values

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_chunk, range(len(sizes))))
    else:
        parts = [run_chunk(i) for i in range(len(sizes))]
    values = np.concatenate(parts)

    mean = float(np.mean(values))
    if samples == 1:
        return mean, 0.0
    stderr = float(np.std(values, ddof=1) / math.sqrt(samples))
    return mean, stderr
