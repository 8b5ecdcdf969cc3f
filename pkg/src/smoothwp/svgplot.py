"""Minimal deterministic SVG rendering for experiment outputs.

Hand-rolled so that byte-identical inputs give byte-identical files (no
timestamps, ids, or library version strings). Supports line plots with error
bars (optionally log-log), scatter plots, and precomputed density curves.
"""

from dataclasses import dataclass, field

import numpy as np

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#17becf")

_MARGIN = (56.0, 14.0, 24.0, 44.0)  # left, right, top, bottom


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str = ""
    yerr: np.ndarray | None = None
    marker: bool = True


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        lo10 = int(np.floor(np.log10(lo)))
        hi10 = int(np.ceil(np.log10(hi)))
        return [10.0**e for e in range(lo10, hi10 + 1) if lo <= 10.0**e <= hi]
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / 5
    mag = 10.0 ** np.floor(np.log10(raw))
    for mult in (1, 2, 2.5, 5, 10):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = np.ceil(lo / step) * step
    return list(np.arange(start, hi + step * 1e-9, step))


def _tick_label(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.0e}"
    return f"{v:g}"


class _Frame:
    def __init__(self, xlim, ylim, logx, logy, width, height):
        self.logx, self.logy = logx, logy
        self.width, self.height = width, height
        self.x0, self.x1 = (np.log10(xlim) if logx else np.asarray(xlim, dtype=float))
        self.y0, self.y1 = (np.log10(ylim) if logy else np.asarray(ylim, dtype=float))
        if self.x1 == self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 == self.y0:
            self.y1 = self.y0 + 1.0
        left, right, top, bottom = _MARGIN
        self.px0, self.px1 = left, width - right
        self.py0, self.py1 = height - bottom, top

    def sx(self, x):
        t = (np.log10(x) if self.logx else x)
        return self.px0 + (t - self.x0) / (self.x1 - self.x0) * (self.px1 - self.px0)

    def sy(self, y):
        t = (np.log10(y) if self.logy else y)
        return self.py0 + (t - self.y0) / (self.y1 - self.y0) * (self.py1 - self.py0)


def _axes_svg(frame: _Frame, xticks, yticks, xlabel, ylabel, title) -> list[str]:
    parts = [
        f'<rect x="{_fmt(frame.px0)}" y="{_fmt(frame.py1)}" '
        f'width="{_fmt(frame.px1 - frame.px0)}" height="{_fmt(frame.py0 - frame.py1)}" '
        'fill="none" stroke="#333333" stroke-width="1"/>'
    ]
    for tx in xticks:
        px = frame.sx(tx)
        parts.append(
            f'<line x1="{_fmt(px)}" y1="{_fmt(frame.py0)}" x2="{_fmt(px)}" '
            f'y2="{_fmt(frame.py0 + 4)}" stroke="#333333" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(px)}" y="{_fmt(frame.py0 + 16)}" font-size="10" '
            f'text-anchor="middle" fill="#333333">{_tick_label(tx)}</text>'
        )
    for ty in yticks:
        py = frame.sy(ty)
        parts.append(
            f'<line x1="{_fmt(frame.px0 - 4)}" y1="{_fmt(py)}" x2="{_fmt(frame.px0)}" '
            f'y2="{_fmt(py)}" stroke="#333333" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(frame.px0 - 6)}" y="{_fmt(py + 3)}" font-size="10" '
            f'text-anchor="end" fill="#333333">{_tick_label(ty)}</text>'
        )
    cx = (frame.px0 + frame.px1) / 2
    parts.append(
        f'<text x="{_fmt(cx)}" y="{_fmt(frame.py0 + 34)}" font-size="11" '
        f'text-anchor="middle" fill="#111111">{xlabel}</text>'
    )
    cy = (frame.py0 + frame.py1) / 2
    parts.append(
        f'<text x="14" y="{_fmt(cy)}" font-size="11" text-anchor="middle" '
        f'fill="#111111" transform="rotate(-90 14 {_fmt(cy)})">{ylabel}</text>'
    )
    if title:
        parts.append(
            f'<text x="{_fmt(cx)}" y="16" font-size="12" text-anchor="middle" '
            f'fill="#111111">{title}</text>'
        )
    return parts


def _legend_svg(frame: _Frame, labels: list[str]) -> list[str]:
    parts = []
    x = frame.px1 - 150
    y = frame.py1 + 12
    for i, label in enumerate(labels):
        if not label:
            continue
        color = PALETTE[i % len(PALETTE)]
        parts.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y - 8)}" width="10" height="10" fill="{color}"/>'
        )
        parts.append(
            f'<text x="{_fmt(x + 14)}" y="{_fmt(y + 1)}" font-size="10" fill="#333333">{label}</text>'
        )
        y += 14
    return parts


def _finite_positive(vals, log):
    vals = vals[np.isfinite(vals)]
    return vals[vals > 0] if log else vals


def line_plot(
    series: list[Series],
    xlabel: str = "",
    ylabel: str = "",
    title: str = "",
    logx: bool = False,
    logy: bool = False,
    width: int = 640,
    height: int = 440,
    scatter: bool = False,
) -> str:
    """Render series as an SVG string; error bars drawn when yerr is given."""
    xs = np.concatenate([_finite_positive(np.asarray(s.x, dtype=float), logx) for s in series])
    ys_all = []
    for s in series:
        y = np.asarray(s.y, dtype=float)
        if s.yerr is not None:
            ys_all.append(y + np.asarray(s.yerr, dtype=float))
            ys_all.append(y - np.asarray(s.yerr, dtype=float))
        ys_all.append(y)
    ys = np.concatenate([_finite_positive(v, logy) for v in ys_all])
    if xs.size == 0 or ys.size == 0:
        xs, ys = np.array([1.0, 2.0]), np.array([1.0, 2.0])
    pad = 0.06
    if logx:
        lo, hi = xs.min(), xs.max()
        xlim = (lo / (hi / lo + 1e-12) ** pad if hi > lo else lo / 2, hi * (hi / lo + 1e-12) ** pad if hi > lo else hi * 2)
    else:
        span = xs.max() - xs.min() or 1.0
        xlim = (xs.min() - pad * span, xs.max() + pad * span)
    if logy:
        lo, hi = ys.min(), ys.max()
        ylim = (lo / (hi / lo + 1e-12) ** pad if hi > lo else lo / 2, hi * (hi / lo + 1e-12) ** pad if hi > lo else hi * 2)
    else:
        span = ys.max() - ys.min() or 1.0
        ylim = (ys.min() - pad * span, ys.max() + pad * span)
    frame = _Frame(xlim, ylim, logx, logy, width, height)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    parts += _axes_svg(
        frame, _ticks(*xlim, logx), _ticks(*ylim, logy), xlabel, ylabel, title
    )
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        x = np.asarray(s.x, dtype=float)
        y = np.asarray(s.y, dtype=float)
        ok = np.isfinite(x) & np.isfinite(y)
        if logx:
            ok &= x > 0
        if logy:
            ok &= y > 0
        x, y = x[ok], y[ok]
        if x.size == 0:
            continue
        px = [frame.sx(v) for v in x]
        py = [frame.sy(v) for v in y]
        if not scatter and x.size > 1:
            pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(px, py))
            parts.append(
                f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
            )
        if s.yerr is not None:
            err = np.asarray(s.yerr, dtype=float)[ok]
            for a, v, e in zip(px, y, err):
                lo, hi = v - e, v + e
                if logy:
                    lo = max(lo, ylim[0])
                parts.append(
                    f'<line x1="{_fmt(a)}" y1="{_fmt(frame.sy(lo))}" x2="{_fmt(a)}" '
                    f'y2="{_fmt(frame.sy(hi))}" stroke="{color}" stroke-width="1"/>'
                )
        if s.marker or scatter:
            for a, b in zip(px, py):
                parts.append(f'<circle cx="{_fmt(a)}" cy="{_fmt(b)}" r="2.5" fill="{color}"/>')
    parts += _legend_svg(frame, [s.label for s in series])
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def kde_curve(samples: np.ndarray, grid_size: int = 200) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian kernel density with Silverman bandwidth on a padded grid."""
    s = np.asarray(samples, dtype=float)
    s = s[np.isfinite(s)]
    n = s.size
    if n == 0:
        return np.array([0.0, 1.0]), np.array([0.0, 0.0])
    sd = float(np.std(s, ddof=1)) if n > 1 else 1.0
    q75, q25 = np.percentile(s, [75, 25])
    iqr = q75 - q25
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    bw = 0.9 * max(spread, 1e-12) * n ** (-0.2)
    grid = np.linspace(s.min() - 3 * bw, s.max() + 3 * bw, grid_size)
    z = (grid[:, None] - s[None, :]) / bw
    dens = np.exp(-0.5 * z**2).sum(axis=1) / (n * bw * np.sqrt(2 * np.pi))
    return grid, dens
