"""Experiment orchestration: seeded grids in, CSV/SVG/manifest artifacts out.

Five experiment kinds are supported:

* ``convergence``        empirical smooth-W_p error curves over (sigma, n);
* ``bound``              the closed-form n^{-1/2} upper bound on the same;
* ``limit_distribution`` samples of sqrt(n) * d2(mu_hat_n, mu_hat_ref);
* ``level_curve``        two-sample rejection rate vs nominal level;
* ``mswe_error``         sqrt(n)-scaled parametric estimation errors.

Every grid cell draws from its own derived stream, so results are
independent of execution order; reruns of the same config produce
byte-identical outputs.
"""

import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidSpecError
from .measures import DistributionSpec, SeedSpec, sample
from .mmd import d2_squared, gw_upper_bound, one_sample_identity
from .mswe import FitConfig, ParamFamily, error_experiment
from .ot import OTConfig, smooth_wasserstein
from .specialfn import KernelParams
from .svgplot import Series, kde_curve, line_plot
from .twosample import TestConfig, _critical_index, bootstrap_critical_value, statistic

_KINDS = ("convergence", "bound", "limit_distribution", "level_curve", "mswe_error")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int = 0
    spec: DistributionSpec | None = None
    spec_b: DistributionSpec | None = None
    sigmas: tuple = ()
    sigma: float = 1.0
    n_grid: tuple = ()
    trials: int = 10
    ref_n: int | None = None
    k: int = 16
    p: float = 2.0
    mc: int = 1_000_000
    n: int = 256
    m: int | None = None
    B: int = 500
    alphas: tuple = (0.05, 0.1, 0.2, 0.3)
    reps: int = 200
    family: str = "two_mode_means"
    true_theta: tuple = (-1.0, 1.0)
    ot: dict = field(default_factory=dict)
    fit: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidSpecError(f"unknown experiment kind {self.kind!r}; expected {_KINDS}")
        grid = tuple(int(v) for v in self.n_grid)
        if grid and any(b <= a for a, b in zip(grid, grid[1:])):
            raise InvalidSpecError("n_grid must be strictly increasing")
        object.__setattr__(self, "n_grid", grid)
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "true_theta", tuple(float(t) for t in self.true_theta))

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        for key in ("spec", "spec_b"):
            if d.get(key) is not None:
                d[key] = DistributionSpec.from_dict(d[key])
        return cls(**d)

    def to_dict(self) -> dict:
        out = {}
        for key, val in self.__dict__.items():
            if isinstance(val, DistributionSpec):
                val = val.to_dict()
            elif isinstance(val, tuple):
                val = list(val)
            if val is not None and val != {} :
                out[key] = val
        return out

    def ot_config(self) -> OTConfig:
        return OTConfig(p=self.p, **self.ot)


@dataclass(frozen=True)
class CurveRow:
    sigma: float
    n: int
    mean_value: float
    std_error: float
    trials: int


@dataclass(frozen=True)
class SlopeFit:
    sigma: float
    slope: float
    stderr: float
    n_used: int


@dataclass
class CurveTable:
    rows: list
    slopes: list
    failures: list = field(default_factory=list)

    def slope_for(self, sigma: float) -> "SlopeFit":
        for s in self.slopes:
            if s.sigma == sigma:
                return s
        raise KeyError(f"no slope fit for sigma={sigma}")

    def values(self, sigma: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        rows = sorted((r for r in self.rows if r.sigma == sigma), key=lambda r: r.n)
        return (
            np.array([r.n for r in rows], dtype=float),
            np.array([r.mean_value for r in rows]),
            np.array([r.std_error for r in rows]),
        )

    def to_csv(self, path) -> None:
        lines = ["sigma,n,mean_value,std_error,trials"]
        for r in sorted(self.rows, key=lambda r: (r.sigma, r.n)):
            lines.append(
                f"{r.sigma!r},{r.n},{r.mean_value!r},{r.std_error!r},{r.trials}"
            )
        for s in self.slopes:
            lines.append(
                f"# loglog_slope sigma={s.sigma!r} slope={s.slope!r} "
                f"stderr={s.stderr!r} n_used={s.n_used}"
            )
        for msg in self.failures:
            lines.append(f"# failure {msg}")
        Path(path).write_text("\n".join(lines) + "\n")


def fit_loglog_slope(ns, means, std_errors) -> tuple[float, float]:
    """Weighted least-squares slope of log(mean) on log(n).

    Weights are inverse variances of log(mean) (delta method); falls back to
    an unweighted fit when standard errors are degenerate."""
    ns = np.asarray(ns, dtype=float)
    means = np.asarray(means, dtype=float)
    ses = np.asarray(std_errors, dtype=float)
    ok = (means > 0) & np.isfinite(means)
    ns, means, ses = ns[ok], means[ok], ses[ok]
    if ns.size < 2:
        return float("nan"), float("nan")
    x = np.log(ns)
    y = np.log(means)
    rel = np.where(means > 0, ses / means, np.inf)
    if np.any(~np.isfinite(rel)) or np.any(rel <= 0):
        w = np.ones_like(x)
    else:
        w = 1.0 / rel**2
    xb = (w * x).sum() / w.sum()
    yb = (w * y).sum() / w.sum()
    sxx = (w * (x - xb) ** 2).sum()
    slope = (w * (x - xb) * (y - yb)).sum() / sxx
    return float(slope), float(1.0 / math.sqrt(sxx))


def _default_ref_n(dim: int, n_max: int) -> int:
    if dim <= 2:
        return 10_000
    return min(1000 * n_max, 100_000)


def convergence_curve(cfg: ExperimentConfig) -> CurveTable:
    """Mean smooth W_p distance to a fixed reference sample over (sigma, n)."""
    if cfg.spec is None or not cfg.n_grid or not cfg.sigmas:
        raise InvalidSpecError("convergence requires spec, sigmas, n_grid")
    if cfg.trials < 2:
        raise InvalidSpecError("trials must be >= 2 for a variance estimate")
    n_max = max(cfg.n_grid)
    ref_n = cfg.ref_n if cfg.ref_n is not None else _default_ref_n(cfg.spec.dim, n_max)
    if ref_n < 10 * n_max:
        raise InvalidSpecError(f"ref_n={ref_n} must be >= 10 * max(n_grid)={10 * n_max}")
    seed = SeedSpec(cfg.seed)
    ref = sample(cfg.spec, ref_n, seed.derive("reference"))
    ot_cfg = cfg.ot_config()
    rows, failures = [], []
    for si, sigma in enumerate(cfg.sigmas):
        for n in cfg.n_grid:
            vals = []
            for trial in range(cfg.trials):
                try:
                    data = sample(cfg.spec, n, seed.derive("data", si, n, trial))
                    vals.append(
                        smooth_wasserstein(
                            data, ref, sigma, ot_cfg, cfg.k,
                            seed.derive("noise", si, n, trial),
                        )
                    )
                except Exception as exc:  # per-cell failures are recorded, not fatal
                    failures.append(f"sigma={sigma} n={n} trial={trial}: {exc}")
            if vals:
                arr = np.asarray(vals)
                se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else float("nan")
                rows.append(CurveRow(sigma, n, float(arr.mean()), se, arr.size))
    slopes = []
    table = CurveTable(rows=rows, slopes=[], failures=failures)
    for sigma in cfg.sigmas:
        ns, means, ses = table.values(sigma)
        half = ns.size // 2
        slope, stderr = fit_loglog_slope(ns[half:], means[half:], ses[half:])
        slopes.append(SlopeFit(sigma, slope, stderr, int(ns.size - half)))
    table.slopes = slopes
    return table


def _centered_spec(spec: DistributionSpec) -> DistributionSpec:
    mu = spec.mean_vector()
    if not np.any(mu):
        return spec
    if spec.kind == "uniform_cube":
        return DistributionSpec.uniform_cube(spec.half_width, spec.dim)
    if spec.kind == "gaussian":
        return DistributionSpec.gaussian(mean=np.zeros(spec.dim), scale=spec.scale, dim=spec.dim)
    means = [np.asarray(m) - mu for m in spec.means]
    return DistributionSpec.gaussian_mixture(
        means, spec.scales, spec.mixture_weights, dim=spec.dim
    )


def bound_curve(cfg: ExperimentConfig) -> CurveTable:
    """Closed-form n^{-1/2} upper bound on the smooth W_2 one-sample error.

    Kernel expectations and the second moment are Monte Carlo estimates under
    the centered spec; the n-dependence is exactly 1/sqrt(n) by construction."""
    if cfg.spec is None or not cfg.n_grid:
        raise InvalidSpecError("bound requires spec and n_grid")
    if cfg.p <= 1:
        raise InvalidSpecError("the comparison constant requires p > 1")
    cspec = _centered_spec(cfg.spec)
    params = KernelParams(cfg.sigma)
    seed = SeedSpec(cfg.seed)
    ident = one_sample_identity(cspec, params, n=1, mc=cfg.mc, seed=seed.derive("kernel_mc"))
    # second moment of the centered spec, same MC budget
    acc = acc_sq = 0.0
    count = 0
    chunk_idx = 0
    while count < cfg.mc:
        size = min(1 << 15, cfg.mc - count)
        x = sample(cspec, size, seed.derive("m2", chunk_idx)).points
        sq = np.einsum("ij,ij->i", x, x)
        acc += float(sq.sum())
        acc_sq += float(sq @ sq)
        count += size
        chunk_idx += 1
    m2 = acc / count
    m2_se = math.sqrt(max(acc_sq / count - m2**2, 0.0) / count)
    q = cfg.p / (cfg.p - 1.0)
    rel_se = math.sqrt(
        (0.5 * ident.std_error / ident.value) ** 2 + (m2_se / (2 * q * cfg.sigma**2)) ** 2
    ) if ident.value > 0 else float("nan")
    rows = []
    for n in cfg.n_grid:
        d_val = math.sqrt(max(ident.value, 0.0) / n)
        bound = gw_upper_bound(d_val, m2, cfg.p, cfg.sigma)
        rows.append(CurveRow(cfg.sigma, int(n), bound, bound * rel_se, cfg.mc))
    ns = np.array(cfg.n_grid, dtype=float)
    slope, stderr = fit_loglog_slope(ns, [r.mean_value for r in rows], [r.std_error for r in rows])
    return CurveTable(rows=rows, slopes=[SlopeFit(cfg.sigma, slope, stderr, len(rows))])


@dataclass(frozen=True)
class LimitRow:
    n: int
    trial: int
    value: float


@dataclass
class LimitTable:
    rows: list
    medians: dict
    kde: list  # (n, grid, density)
    drift: float
    growth_ratio: float

    def to_csv(self, path) -> None:
        lines = ["n,trial,value"]
        for r in self.rows:
            lines.append(f"{r.n},{r.trial},{r.value!r}")
        for n, med in sorted(self.medians.items()):
            lines.append(f"# median n={n} value={med!r}")
        lines.append(f"# median_drift {self.drift!r}")
        lines.append(f"# growth_ratio {self.growth_ratio!r}")
        Path(path).write_text("\n".join(lines) + "\n")


def limit_distribution(cfg: ExperimentConfig) -> LimitTable:
    """Samples of sqrt(n) * d2_sigma(mu_hat_n, mu_hat_ref) with KDE summaries.

    The median-vs-n diagnostics flag non-convergence: drift is the relative
    spread of the medians, growth_ratio compares the largest-n median to the
    smallest-n one."""
    if cfg.spec is None or not cfg.n_grid:
        raise InvalidSpecError("limit_distribution requires spec and n_grid")
    ref_n = cfg.ref_n if cfg.ref_n is not None else 1000
    params = KernelParams(cfg.sigma)
    seed = SeedSpec(cfg.seed)
    rows = []
    for n in cfg.n_grid:
        for trial in range(cfg.trials):
            data = sample(cfg.spec, n, seed.derive("data", n, trial))
            ref = sample(cfg.spec, ref_n, seed.derive("ref", n, trial))
            val = math.sqrt(n) * d2_squared(data, ref, params).d2
            rows.append(LimitRow(int(n), trial, float(val)))
    medians = {}
    kde = []
    for n in cfg.n_grid:
        vals = np.array([r.value for r in rows if r.n == n])
        medians[int(n)] = float(np.median(vals))
        grid, dens = kde_curve(vals)
        kde.append((int(n), grid, dens))
    med_vals = np.array([medians[int(n)] for n in cfg.n_grid])
    drift = float((med_vals.max() - med_vals.min()) / np.median(med_vals))
    growth = float(med_vals[-1] / med_vals[0])
    return LimitTable(rows=rows, medians=medians, kde=kde, drift=drift, growth_ratio=growth)


@dataclass(frozen=True)
class LevelRow:
    alpha: float
    rejection_rate: float
    reps: int


def level_curve(cfg: ExperimentConfig) -> list[LevelRow]:
    """Empirical rejection rate versus nominal level alpha.

    One bootstrap per repetition serves every alpha: the critical value for
    each level is the corresponding order statistic of the same sorted
    replicate values."""
    if cfg.spec is None:
        raise InvalidSpecError("level_curve requires spec")
    spec_b = cfg.spec_b if cfg.spec_b is not None else cfg.spec
    m = cfg.m if cfg.m is not None else cfg.n
    tcfg = TestConfig(
        p=cfg.p, sigma=cfg.sigma, alpha=min(cfg.alphas), B=cfg.B, k=cfg.k,
        ot=cfg.ot_config() if cfg.ot else None,
    )
    seed = SeedSpec(cfg.seed)
    rejections = {alpha: 0 for alpha in cfg.alphas}
    for rep in range(cfg.reps):
        m1 = sample(cfg.spec, cfg.n, seed.derive("x", rep))
        m2 = sample(spec_b, m, seed.derive("y", rep))
        stat = statistic(m1, m2, tcfg, seed.derive("stat", rep))
        _, values = bootstrap_critical_value(m1, m2, tcfg, seed.derive("boot", rep))
        for alpha in cfg.alphas:
            crit = values[_critical_index(alpha, cfg.B)]
            if stat > crit:
                rejections[alpha] += 1
    return [
        LevelRow(alpha, rejections[alpha] / cfg.reps, cfg.reps) for alpha in cfg.alphas
    ]


def _level_csv(rows: list[LevelRow], path) -> None:
    lines = ["alpha,rejection_rate,reps"]
    for r in rows:
        lines.append(f"{r.alpha!r},{r.rejection_rate!r},{r.reps}")
    Path(path).write_text("\n".join(lines) + "\n")


def _mswe_records(cfg: ExperimentConfig):
    family = ParamFamily(cfg.family)
    fit_cfg = FitConfig(**cfg.fit) if cfg.fit else None
    return error_experiment(
        family,
        np.asarray(cfg.true_theta),
        cfg.p,
        cfg.sigma,
        cfg.n_grid,
        cfg.trials,
        SeedSpec(cfg.seed),
        opt_cfg=fit_cfg,
        k=cfg.k,
    )


def _mswe_csv(records, path) -> None:
    lines = ["n,trial,coord,scaled_error,failed"]
    for r in records:
        lines.append(f"{r.n},{r.trial},{r.coord},{r.scaled_error!r},{int(r.failed)}")
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# dispatch + artifacts
# ---------------------------------------------------------------------------


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _curve_svg(table: CurveTable, cfg: ExperimentConfig, ylabel: str) -> str:
    series = []
    for sigma in sorted({r.sigma for r in table.rows}):
        ns, means, ses = table.values(sigma)
        series.append(Series(x=ns, y=means, yerr=ses, label=f"sigma={sigma:g}"))
    return line_plot(series, xlabel="n", ylabel=ylabel, logx=True, logy=True,
                     title=cfg.kind)


def _limit_svg(table: LimitTable) -> str:
    series = [
        Series(x=grid, y=dens, label=f"n={n}", marker=False)
        for n, grid, dens in table.kde
    ]
    return line_plot(series, xlabel="sqrt(n) d2", ylabel="density", title="limit_distribution")


def _level_svg(rows: list[LevelRow]) -> str:
    alphas = np.array([r.alpha for r in rows])
    series = [
        Series(x=alphas, y=np.array([r.rejection_rate for r in rows]), label="empirical"),
        Series(x=alphas, y=alphas, label="diagonal", marker=False),
    ]
    return line_plot(series, xlabel="alpha", ylabel="rejection rate", title="level_curve")


def _mswe_svg(records) -> str:
    series = []
    for coord in sorted({r.coord for r in records}):
        pts = [(r.n, r.scaled_error) for r in records if r.coord == coord and not r.failed]
        xs = np.array([p[0] for p in pts], dtype=float)
        ys = np.array([p[1] for p in pts])
        series.append(Series(x=xs, y=ys, label=f"coord {coord}"))
    return line_plot(series, xlabel="n", ylabel="sqrt(n) error", logx=True,
                     title="mswe_error", scatter=True)


def run(cfg: ExperimentConfig, out_dir) -> dict:
    """Execute the configured experiment; write CSV/SVG plus a manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.monotonic()
    outputs: list[Path] = []
    failures: list[str] = []
    if cfg.kind == "convergence":
        table = convergence_curve(cfg)
        failures = table.failures
        table.to_csv(out / "convergence.csv")
        (out / "convergence.svg").write_text(_curve_svg(table, cfg, "smooth W_p"))
        outputs = [out / "convergence.csv", out / "convergence.svg"]
    elif cfg.kind == "bound":
        table = bound_curve(cfg)
        table.to_csv(out / "bound.csv")
        (out / "bound.svg").write_text(_curve_svg(table, cfg, "upper bound"))
        outputs = [out / "bound.csv", out / "bound.svg"]
    elif cfg.kind == "limit_distribution":
        table = limit_distribution(cfg)
        table.to_csv(out / "limit_samples.csv")
        (out / "limit_kde.svg").write_text(_limit_svg(table))
        outputs = [out / "limit_samples.csv", out / "limit_kde.svg"]
    elif cfg.kind == "level_curve":
        rows = level_curve(cfg)
        _level_csv(rows, out / "level_curve.csv")
        (out / "level_curve.svg").write_text(_level_svg(rows))
        outputs = [out / "level_curve.csv", out / "level_curve.svg"]
    else:
        records = _mswe_records(cfg)
        failures = [
            f"n={r.n} trial={r.trial}" for r in records if r.failed and r.coord == 0
        ]
        _mswe_csv(records, out / "mswe_errors.csv")
        (out / "mswe_errors.svg").write_text(_mswe_svg(records))
        outputs = [out / "mswe_errors.csv", out / "mswe_errors.svg"]
    config_dict = cfg.to_dict()
    canonical = json.dumps(config_dict, sort_keys=True, separators=(",", ":"))
    manifest = {
        "kind": cfg.kind,
        "config": config_dict,
        "config_sha256": hashlib.sha256(canonical.encode()).hexdigest(),
        "master_seed": cfg.seed,
        "runtime_seconds": round(time.monotonic() - t0, 3),
        "outputs": [
            {"name": p.name, "sha256": _sha256(p), "bytes": p.stat().st_size}
            for p in outputs
        ],
        "failures": failures,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
