"""Order-2 smooth Sobolev discrepancy via its MMD kernel form.

For the reproducing kernel kappa_sigma the squared discrepancy between
weighted empirical measures is the signed quadratic form

    d2^2 = sum_ij w_i w_j kappa(x_i, x_j) + sum_ij v_i v_j kappa(y_i, y_j)
           - 2 sum_ij w_i v_j kappa(x_i, y_j),

evaluated blockwise so that large reference samples never materialize a full
Gram matrix. The one-sample identity

    E[d2^2(mu_hat_n, mu)] = (E[kappa(X,X)] - E[kappa(X,X')]) / n

is estimated by Monte Carlo over independent pairs, and with the comparison
constant p * exp(E|X|^2 / (2 q sigma^2)) it yields an n^{-1/2} upper bound on
the smooth p-Wasserstein empirical error.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidSpecError,
    RangeOverflowError,
)
from .measures import DistributionSpec, EmpiricalMeasure, SeedSpec, sample
from .specialfn import KernelParams, kernel_from_inner

_BLOCK_ENTRIES = 1 << 21  # ~16 MB of float64 per row block

_MC_CHUNK = 1 << 15


@dataclass(frozen=True)
class MMDResult:
    d2_squared: float
    d2: float
    estimator_kind: str


@dataclass(frozen=True)
class IdentityEstimate:
    """Monte Carlo estimate with its standard error."""

    value: float
    std_error: float
    mc: int


def mean_kernel(m1: EmpiricalMeasure, m2: EmpiricalMeasure, params: KernelParams) -> float:
    """Weighted mean cross-kernel sum_ij w_i v_j kappa(x_i, y_j), blockwise."""
    if m1.dim != m2.dim:
        raise DimensionMismatchError(f"dim {m1.dim} != dim {m2.dim}")
    x, y = m1.points, m2.points
    rows = max(1, _BLOCK_ENTRIES // max(1, m2.n))
    total = 0.0
    for start in range(0, m1.n, rows):
        stop = min(start + rows, m1.n)
        inner = x[start:stop] @ y.T
        k = kernel_from_inner(inner, params)
        total += float(m1.weights[start:stop] @ k @ m2.weights)
    return total


def _self_diagonal(m: EmpiricalMeasure, params: KernelParams) -> np.ndarray:
    inner = np.einsum("ij,ij->i", m.points, m.points)
    return kernel_from_inner(inner, params)


def d2_squared(
    m1: EmpiricalMeasure,
    m2: EmpiricalMeasure,
    params: KernelParams,
    kind: str = "v_statistic",
) -> MMDResult:
    """Squared smooth Sobolev discrepancy between two empirical measures.

    The V-statistic (default) is the plug-in quadratic form and is
    nonnegative up to rounding; the U-statistic drops the self-pairs of both
    within-sample terms (uniform weights, >= 2 points each) and may go
    negative.
    """
    if m1.dim != m2.dim:
        raise DimensionMismatchError(f"dim {m1.dim} != dim {m2.dim}")
    cross = mean_kernel(m1, m2, params)
    if kind == "v_statistic":
        d2s = mean_kernel(m1, m1, params) + mean_kernel(m2, m2, params) - 2.0 * cross
    elif kind == "u_statistic":
        if m1.n < 2 or m2.n < 2:
            raise InvalidSpecError("u_statistic requires >= 2 points per measure")
        if not (
            np.allclose(m1.weights, 1.0 / m1.n, rtol=0, atol=1e-12)
            and np.allclose(m2.weights, 1.0 / m2.n, rtol=0, atol=1e-12)
        ):
            raise InvalidSpecError("u_statistic requires uniform weights")
        s1 = (m1.n**2 * mean_kernel(m1, m1, params) - _self_diagonal(m1, params).sum()) / (
            m1.n * (m1.n - 1)
        )
        s2 = (m2.n**2 * mean_kernel(m2, m2, params) - _self_diagonal(m2, params).sum()) / (
            m2.n * (m2.n - 1)
        )
        d2s = float(s1 + s2 - 2.0 * cross)
    else:
        raise InvalidSpecError(f"unknown estimator kind {kind!r}")
    return MMDResult(d2_squared=d2s, d2=math.sqrt(max(d2s, 0.0)), estimator_kind=kind)


def one_sample_identity(
    spec: DistributionSpec,
    params: KernelParams,
    n: int,
    mc: int,
    seed: SeedSpec,
) -> IdentityEstimate:
    """Monte Carlo estimate of (E[kappa(X,X)] - E[kappa(X,X')]) / n.

    Pairs (X, X') are drawn in fixed-size chunks on derived streams, so the
    estimate is deterministic given the seed no matter how chunks are
    scheduled. The standard error is that of the paired difference.
    """
    if n < 1:
        raise InvalidSpecError("n must be >= 1")
    if mc < 2:
        raise InvalidSpecError("mc must be >= 2")
    count = 0
    acc = 0.0
    acc_sq = 0.0
    chunk_idx = 0
    while count < mc:
        size = min(_MC_CHUNK, mc - count)
        x = sample(spec, size, seed.derive("mc", chunk_idx, 0)).points
        x2 = sample(spec, size, seed.derive("mc", chunk_idx, 1)).points
        k_self = kernel_from_inner(np.einsum("ij,ij->i", x, x), params)
        k_pair = kernel_from_inner(np.einsum("ij,ij->i", x, x2), params)
        diff = k_self - k_pair
        acc += float(diff.sum())
        acc_sq += float(diff @ diff)
        count += size
        chunk_idx += 1
    mean_diff = acc / count
    var_diff = max(acc_sq / count - mean_diff**2, 0.0)
    se = math.sqrt(var_diff / count)
    return IdentityEstimate(value=mean_diff / n, std_error=se / n, mc=count)


def gw_upper_bound(d_value: float, second_moment: float, p: float, sigma: float) -> float:
    """Comparison bound p * exp(E|X|^2 / (2 q sigma^2)) * d_value, q = p/(p-1).

    Valid when the first measure is centered; centering is the caller's duty.
    """
    if p <= 1:
        raise InvalidSpecError(f"p must be > 1, got {p}")
    if sigma <= 0:
        raise InvalidSpecError("sigma must be positive")
    if second_moment < 0:
        raise InvalidSpecError("second_moment must be >= 0")
    q = p / (p - 1.0)
    exponent = second_moment / (2.0 * q * sigma**2)
    if exponent > 700.0:
        raise RangeOverflowError(f"comparison exponent {exponent:.3g} overflows float64")
    return float(p * math.exp(exponent) * d_value)
