"""Weighted empirical measures, declarative samplers, and noise augmentation.

Sampling is driven by counter-based Philox streams keyed by
(master_seed, stream_id), so every experiment cell can own a statistically
independent stream while staying bit-reproducible across runs and platforms
that share a floating environment.
"""

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionMismatchError, InvalidSpecError

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _tag64(tag) -> int:
    if isinstance(tag, (int, np.integer)):
        return int(tag) & _MASK64
    if isinstance(tag, str):
        # FNV-1a over utf-8
        h = 0xCBF29CE484222325
        for b in tag.encode("utf-8"):
            h = ((h ^ b) * 0x100000001B3) & _MASK64
        return h
    raise InvalidSpecError(f"stream tag must be int or str, got {type(tag)!r}")


@dataclass(frozen=True)
class SeedSpec:
    """Stream address: distinct (master_seed, stream_id) pairs are independent."""

    master_seed: int
    stream_id: int = 0

    def derive(self, *tags) -> "SeedSpec":
        """Child stream obtained by hashing tags into the stream id.

        Absorbing tags one at a time or all at once yields the same stream:
        s.derive(a).derive(b) == s.derive(a, b)."""
        h = self.stream_id & _MASK64
        for tag in tags:
            h = _splitmix64(h ^ _tag64(tag))
        return SeedSpec(self.master_seed, h)

    def generator(self) -> np.random.Generator:
        k0 = _splitmix64((self.master_seed & _MASK64) ^ _splitmix64(self.stream_id & _MASK64))
        k1 = _splitmix64(k0)
        key = np.array([k0, k1], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Finite weighted point set in R^d; weights sum to one."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise InvalidSpecError("points must be a nonempty (n, d) array")
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        if w.shape[0] != pts.shape[0]:
            raise InvalidSpecError("weights length must match point count")
        if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(w)):
            raise InvalidSpecError("points and weights must be finite")
        if np.any(w < 0):
            raise InvalidSpecError("weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise InvalidSpecError(f"weights must sum to 1, got {w.sum()!r}")
        object.__setattr__(self, "points", _freeze(pts))
        object.__setattr__(self, "weights", _freeze(w))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @classmethod
    def uniform(cls, points) -> "EmpiricalMeasure":
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        return cls(pts, np.full(pts.shape[0], 1.0 / pts.shape[0]))

    def to_csv(self, path) -> None:
        header = [f"x{i + 1}" for i in range(self.dim)] + ["w"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row, w in zip(self.points, self.weights):
                writer.writerow([repr(float(v)) for v in row] + [repr(float(w))])

    @classmethod
    def from_csv(cls, path) -> "EmpiricalMeasure":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if not header or header[-1] != "w":
                raise InvalidSpecError(f"{path}: expected header x1,...,xd,w")
            rows = [[float(v) for v in row] for row in reader if row]
        data = np.asarray(rows, dtype=np.float64)
        return cls(data[:, :-1], data[:, -1])


@dataclass(frozen=True)
class DistributionSpec:
    """Declarative sampler config: uniform cube, Gaussian, or Gaussian mixture."""

    kind: str
    dim: int
    half_width: float | None = None
    center: tuple | None = None
    mean: tuple | None = None
    scale: float | None = None
    means: tuple = field(default=())
    scales: tuple = field(default=())
    mixture_weights: tuple = field(default=())

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidSpecError("dim must be >= 1")
        if self.kind == "uniform_cube":
            if self.half_width is None or self.half_width <= 0:
                raise InvalidSpecError("uniform_cube needs half_width > 0")
            center = self._as_vec(self.center if self.center is not None else 0.0)
            object.__setattr__(self, "center", tuple(float(v) for v in center))
        elif self.kind == "gaussian":
            if self.scale is None or self.scale <= 0:
                raise InvalidSpecError("gaussian needs scale > 0")
            mean = self._as_vec(self.mean if self.mean is not None else 0.0)
            object.__setattr__(self, "mean", tuple(float(v) for v in mean))
        elif self.kind == "gaussian_mixture":
            if not self.means:
                raise InvalidSpecError("gaussian_mixture needs at least one component")
            k = len(self.means)
            if len(self.scales) != k or len(self.mixture_weights) != k:
                raise InvalidSpecError("means, scales, mixture_weights must share length")
            if any(s <= 0 for s in self.scales):
                raise InvalidSpecError("mixture scales must be positive")
            w = np.asarray(self.mixture_weights, dtype=np.float64)
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
                raise InvalidSpecError("mixture weights must be nonnegative and sum to 1")
            means = tuple(tuple(float(v) for v in self._as_vec(m)) for m in self.means)
            object.__setattr__(self, "means", means)
        else:
            raise InvalidSpecError(f"unknown distribution kind {self.kind!r}")

    def _as_vec(self, v) -> np.ndarray:
        arr = np.atleast_1d(np.asarray(v, dtype=np.float64))
        if arr.size == 1 and self.dim > 1:
            arr = np.full(self.dim, float(arr[0]))
        if arr.size != self.dim:
            raise InvalidSpecError(f"vector of size {arr.size} does not match dim {self.dim}")
        return arr

    @classmethod
    def uniform_cube(cls, half_width: float, dim: int, center=0.0) -> "DistributionSpec":
        return cls(kind="uniform_cube", dim=dim, half_width=float(half_width),
                   center=tuple(float(v) for v in np.atleast_1d(center)))

    @classmethod
    def gaussian(cls, mean, scale: float, dim: int | None = None) -> "DistributionSpec":
        mean_arr = np.atleast_1d(np.asarray(mean, dtype=np.float64))
        if dim is None:
            dim = mean_arr.size
        return cls(kind="gaussian", dim=dim, mean=tuple(float(v) for v in mean_arr),
                   scale=float(scale))

    @classmethod
    def gaussian_mixture(cls, means, scales, weights, dim: int | None = None) -> "DistributionSpec":
        first = np.atleast_1d(np.asarray(means[0], dtype=np.float64))
        if dim is None:
            dim = first.size
        return cls(
            kind="gaussian_mixture",
            dim=dim,
            means=tuple(tuple(float(v) for v in np.atleast_1d(m)) for m in means),
            scales=tuple(float(s) for s in scales),
            mixture_weights=tuple(float(w) for w in weights),
        )

    def mean_vector(self) -> np.ndarray:
        """Analytic mean of the spec'd distribution."""
        if self.kind == "uniform_cube":
            return self._as_vec(self.center)
        if self.kind == "gaussian":
            return self._as_vec(self.mean)
        comp = np.stack([self._as_vec(m) for m in self.means])
        w = np.asarray(self.mixture_weights, dtype=np.float64)
        return w @ comp

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "dim": self.dim}
        if self.kind == "uniform_cube":
            out["half_width"] = self.half_width
            if any(self.center):
                out["center"] = list(self.center)
        elif self.kind == "gaussian":
            out["mean"] = list(self.mean)
            out["scale"] = self.scale
        else:
            out["means"] = [list(m) for m in self.means]
            out["scales"] = list(self.scales)
            out["mixture_weights"] = list(self.mixture_weights)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "DistributionSpec":
        kind = d.get("kind")
        dim = d.get("dim")
        if kind == "uniform_cube":
            return cls(kind=kind, dim=dim, half_width=d["half_width"],
                       center=tuple(float(v) for v in np.atleast_1d(d.get("center", 0.0))))
        if kind == "gaussian":
            return cls(kind=kind, dim=dim, mean=tuple(float(v) for v in np.atleast_1d(d["mean"])),
                       scale=d["scale"])
        if kind == "gaussian_mixture":
            return cls.gaussian_mixture(d["means"], d["scales"], d["mixture_weights"], dim=dim)
        raise InvalidSpecError(f"unknown distribution kind {kind!r}")


def sample(spec: DistributionSpec, n: int, seed: SeedSpec) -> EmpiricalMeasure:
    """Draw n i.i.d. points from the spec; uniform weights 1/n."""
    if n < 1:
        raise InvalidSpecError("n must be >= 1")
    rng = seed.generator()
    if spec.kind == "uniform_cube":
        pts = spec._as_vec(spec.center) + rng.uniform(
            -spec.half_width, spec.half_width, size=(n, spec.dim)
        )
    elif spec.kind == "gaussian":
        mean = spec._as_vec(spec.mean)
        pts = mean + spec.scale * rng.standard_normal((n, spec.dim))
    else:
        w = np.asarray(spec.mixture_weights, dtype=np.float64)
        comp = rng.choice(len(w), size=n, p=w)
        z = rng.standard_normal((n, spec.dim))
        means = np.stack([spec._as_vec(m) for m in spec.means])
        scales = np.asarray(spec.scales, dtype=np.float64)
        pts = means[comp] + scales[comp, None] * z
    return EmpiricalMeasure.uniform(pts)


def augment(m: EmpiricalMeasure, sigma: float, k: int, seed: SeedSpec) -> EmpiricalMeasure:
    """Replicate each point k times with independent N(0, sigma^2 I) offsets.

    The result approximates the convolution of m with an isotropic Gaussian;
    replicate i*k + j inherits weight w_i / k, so total mass is preserved.
    """
    if k < 1:
        raise InvalidSpecError("k must be >= 1")
    if sigma < 0:
        raise InvalidSpecError("sigma must be >= 0")
    rng = seed.generator()
    base = np.repeat(m.points, k, axis=0)
    noise = sigma * rng.standard_normal(base.shape)
    return EmpiricalMeasure(base + noise, np.repeat(m.weights / k, k))


def center(m: EmpiricalMeasure, a) -> EmpiricalMeasure:
    """Shift every point by -a; weights unchanged."""
    av = np.asarray(a, dtype=np.float64).ravel()
    if av.size != m.dim:
        raise DimensionMismatchError(f"shift dim {av.size} != measure dim {m.dim}")
    return EmpiricalMeasure(m.points - av, m.weights)


def mean(m: EmpiricalMeasure) -> np.ndarray:
    return m.weights @ m.points


def cov_trace(m: EmpiricalMeasure) -> float:
    """Trace of the weighted covariance: sum_i w_i |x_i - mean|^2."""
    centered = m.points - mean(m)
    return float(m.weights @ np.einsum("ij,ij->i", centered, centered))


def second_moment(m: EmpiricalMeasure) -> float:
    """Weighted second moment about the origin: sum_i w_i |x_i|^2."""
    return float(m.weights @ np.einsum("ij,ij->i", m.points, m.points))


def pool(m1: EmpiricalMeasure, m2: EmpiricalMeasure) -> EmpiricalMeasure:
    """Concatenate supports; mass proportional to the input sizes m and n."""
    if m1.dim != m2.dim:
        raise DimensionMismatchError(f"dim {m1.dim} != dim {m2.dim}")
    total = m1.n + m2.n
    w = np.concatenate([m1.weights * (m1.n / total), m2.weights * (m2.n / total)])
    return EmpiricalMeasure(np.vstack([m1.points, m2.points]), w)


def resample(m: EmpiricalMeasure, n: int, rng: np.random.Generator) -> EmpiricalMeasure:
    """n i.i.d. draws from the (weighted) empirical measure, uniform weights."""
    idx = rng.choice(m.n, size=n, p=m.weights)
    return EmpiricalMeasure.uniform(m.points[idx])
