"""Entire exponential integral Ein and the smooth Sobolev reproducing kernel.

The kernel of the order-2 smooth Sobolev discrepancy with smoothing sigma is

    kappa_sigma(x, y) = -sigma^2 * Ein(-<x, y> / sigma^2),

where Ein(z) = sum_{k>=1} (-1)^{k+1} z^k / (k * k!). Ein is evaluated by a
Taylor series near the origin and by the identities

    Ein(z) = gamma + log(z)  + E1(z)    (z > 0)
    Ein(z) = gamma + log(-z) - Ei(-z)   (z < 0)

away from it; the series loses float64 accuracy past |z| ~ 12 on the positive
side (alternating-sum cancellation), so the switch happens there rather than
deeper in.
"""

from dataclasses import dataclass

import numpy as np

from ._backend import use_numba
from .errors import DimensionMismatchError, NonFiniteError, RangeOverflowError

# Euler-Mascheroni constant, 20 digits.
EULER_GAMMA = 0.57721566490153286061

# |z| beyond which ein/kernel refuse to evaluate: the kernel grows like
# sigma^2 * e^|z| / |z| for z -> -inf, and e^690 sits just inside float64.
OVERFLOW_THRESHOLD = 690.0

# Branch point between the Taylor series and the E1/Ei identities.
_SERIES_CUT = 12.0
# Fixed iteration count; the |z| <= 12 series is converged to < 1e-16
# relative well before 72 terms.
_SERIES_ITERS = 72


@dataclass(frozen=True)
class KernelParams:
    """Smoothing parameter of the reproducing kernel (same units as data)."""

    sigma: float

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma <= 0:
            raise NonFiniteError(f"sigma must be a positive finite real, got {self.sigma}")


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------


def _ein_series_np(z: np.ndarray) -> np.ndarray:
    # Ein(z) = -sum_k w^k/(k*k!) with w = -z; term recurrence in float64.
    w = -z
    term = np.ones_like(w)
    acc = np.zeros_like(w)
    for k in range(1, _SERIES_ITERS + 1):
        term = term * (w / k)
        acc += term / k
    return -acc


def _ein_array_np(z: np.ndarray) -> np.ndarray:
    from scipy.special import exp1, expi

    out = np.empty_like(z)
    small = np.abs(z) <= _SERIES_CUT
    pos = z > _SERIES_CUT
    neg = z < -_SERIES_CUT
    if small.any():
        out[small] = _ein_series_np(z[small])
    if pos.any():
        zp = z[pos]
        out[pos] = EULER_GAMMA + np.log(zp) + exp1(zp)
    if neg.any():
        zn = -z[neg]
        out[neg] = EULER_GAMMA + np.log(zn) - expi(zn)
    return out


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

if use_numba():
    from numba import njit

    @njit(cache=True)
    def _e1_cf_nb(z: float) -> float:
        # Continued fraction for E1(z), modified Lentz; fast for z > ~2.
        tiny = 1e-300
        b = z + 1.0
        c = 1e300
        d = 1.0 / b
        h = d
        for i in range(1, 200):
            a = -float(i) * float(i)
            b += 2.0
            d = a * d + b
            if abs(d) < tiny:
                d = tiny
            c = b + a / c
            if abs(c) < tiny:
                c = tiny
            d = 1.0 / d
            delta = c * d
            h *= delta
            if abs(delta - 1.0) < 1e-16:
                break
        return h * np.exp(-z)

    @njit(cache=True)
    def _ei_pos_nb(t: float) -> float:
        # Ei(t) for t > _SERIES_CUT; power series up to 40, asymptotic after.
        if t < 40.0:
            term = 1.0
            acc = 0.0
            for k in range(1, 200):
                term *= t / k
                contrib = term / k
                acc += contrib
                if contrib < 1e-17 * acc:
                    break
            return EULER_GAMMA + np.log(t) + acc
        # e^t/t * sum k!/t^k, truncated where terms stop shrinking
        acc = 1.0
        term = 1.0
        for k in range(1, 60):
            nxt = term * k / t
            if nxt >= term or nxt < 1e-17 * acc:
                if nxt < term:
                    acc += nxt
                break
            term = nxt
            acc += term
        return np.exp(t) / t * acc

    @njit(cache=True)
    def _ein_array_nb(z: np.ndarray) -> np.ndarray:
        out = np.empty_like(z)
        for idx in range(z.size):
            v = z[idx]
            if abs(v) <= _SERIES_CUT:
                w = -v
                term = 1.0
                acc = 0.0
                for k in range(1, _SERIES_ITERS + 1):
                    term *= w / k
                    acc += term / k
                out[idx] = -acc
            elif v > 0.0:
                out[idx] = EULER_GAMMA + np.log(v) + _e1_cf_nb(v)
            else:
                out[idx] = EULER_GAMMA + np.log(-v) - _ei_pos_nb(-v)
        return out


def _ein_core(z: np.ndarray) -> np.ndarray:
    """Branch-dispatched Ein on a float64 array; no input validation."""
    if use_numba():
        flat = np.ascontiguousarray(z, dtype=np.float64).ravel()
        return _ein_array_nb(flat).reshape(z.shape)
    return _ein_array_np(np.asarray(z, dtype=np.float64))


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def ein(z):
    """Entire exponential integral Ein(z) for real z, scalar or array.

    Relative accuracy is ~1e-13 or better for |z| <= 690. Raises
    NonFiniteError on NaN/inf input and RangeOverflowError past the
    evaluation threshold.
    """
    arr = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("ein requires finite input")
    if np.any(np.abs(arr) > OVERFLOW_THRESHOLD):
        raise RangeOverflowError(
            f"|z| > {OVERFLOW_THRESHOLD:g}: Ein would overflow float64"
        )
    out = _ein_core(np.atleast_1d(arr))
    if np.isscalar(z) or arr.ndim == 0:
        return float(out[0])
    return out


def kernel(x, y, params: KernelParams) -> float:
    """Reproducing-kernel value kappa_sigma(x, y) = -sigma^2 Ein(-<x,y>/sigma^2)."""
    xv = np.asarray(x, dtype=np.float64).ravel()
    yv = np.asarray(y, dtype=np.float64).ravel()
    if xv.shape != yv.shape:
        raise DimensionMismatchError(f"dim(x)={xv.size} != dim(y)={yv.size}")
    if not (np.all(np.isfinite(xv)) and np.all(np.isfinite(yv))):
        raise NonFiniteError("kernel requires finite inputs")
    s2 = params.sigma**2
    t = float(xv @ yv) / s2
    if abs(t) > OVERFLOW_THRESHOLD:
        raise RangeOverflowError(
            f"|<x,y>|/sigma^2 = {abs(t):.3g} exceeds {OVERFLOW_THRESHOLD:g}"
        )
    return float(-s2 * _ein_core(np.array([-t]))[0])


def kernel_from_inner(inner: np.ndarray, params: KernelParams) -> np.ndarray:
    """Apply the kernel transform elementwise to precomputed inner products."""
    s2 = params.sigma**2
    t = np.asarray(inner, dtype=np.float64) / s2
    amax = float(np.max(np.abs(t))) if t.size else 0.0
    if amax > OVERFLOW_THRESHOLD:
        raise RangeOverflowError(
            f"max |<x,y>|/sigma^2 = {amax:.3g} exceeds {OVERFLOW_THRESHOLD:g}"
        )
    return -s2 * _ein_core(-t)


def gram(points, params: KernelParams) -> np.ndarray:
    """Kernel Gram matrix of a point set; exactly symmetric, PSD up to rounding."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise DimensionMismatchError("points must be an (n, d) array")
    inner = pts @ pts.T
    g = kernel_from_inner(inner, params)
    # mirror the upper triangle so G[i,j] == G[j,i] bit for bit
    return np.triu(g) + np.triu(g, 1).T
