"""Minimal dependency-free SVG charts for eyeballing runs.

CSV files are the record; these are only for inspection.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


class _Canvas:
    def __init__(self, xlim, ylim, title, xlabel, ylabel, log_y=False):
        self.log_y = log_y
        self.x0, self.x1 = xlim
        self.y0, self.y1 = (math.log10(v) for v in ylim) if log_y else ylim
        if self.x1 == self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 == self.y0:
            self.y1 = self.y0 + 1.0
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'font-family="sans-serif" font-size="12">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
            f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>',
            f'<text x="16" y="{HEIGHT / 2}" text-anchor="middle" '
            f'transform="rotate(-90 16 {HEIGHT / 2})">{escape(ylabel)}</text>',
            f'<rect x="{MARGIN}" y="{MARGIN / 2}" width="{WIDTH - 1.5 * MARGIN}" '
            f'height="{HEIGHT - 1.5 * MARGIN}" fill="none" stroke="black"/>',
        ]
        self._ticks()

    def px(self, x):
        return MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 1.5 * MARGIN)

    def py(self, y):
        if self.log_y:
            y = math.log10(max(y, 10.0 ** self.y0))
        return HEIGHT - MARGIN + (self.y0 - y) / (self.y1 - self.y0) * (HEIGHT - 1.5 * MARGIN)

    def _ticks(self):
        for x in np.linspace(self.x0, self.x1, 6):
            self.parts.append(
                f'<text x="{self.px(x):.1f}" y="{HEIGHT - MARGIN + 16}" text-anchor="middle">{x:.3g}</text>'
            )
        if self.log_y:
            exps = range(math.floor(self.y0), math.ceil(self.y1) + 1)
            values = [10.0 ** e for e in exps if self.y0 <= e <= self.y1]
        else:
            values = list(np.linspace(self.y0, self.y1, 6))
        for y in values:
            self.parts.append(
                f'<text x="{MARGIN - 6}" y="{self.py(y) + 4:.1f}" text-anchor="end">{y:.3g}</text>'
            )

    def polyline(self, xs, ys, color, dashed=False, label=None, slot=0):
        pts = " ".join(f"{self.px(x):.2f},{self.py(y):.2f}" for x, y in zip(xs, ys))
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        self.parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}"{dash}/>')
        if label:
            y = MARGIN / 2 + 16 + 16 * slot
            self.parts.append(
                f'<line x1="{WIDTH - 200}" y1="{y - 4}" x2="{WIDTH - 175}" y2="{y - 4}" stroke="{color}"{dash}/>'
                f'<text x="{WIDTH - 170}" y="{y}">{escape(label)}</text>'
            )

    def error_bars(self, xs, lo, hi, color):
        for x, a, b in zip(xs, lo, hi):
            self.parts.append(
                f'<line x1="{self.px(x):.2f}" y1="{self.py(a):.2f}" x2="{self.px(x):.2f}" '
                f'y2="{self.py(b):.2f}" stroke="{color}"/>'
            )

    def dots(self, xs, ys, color):
        for x, y in zip(xs, ys):
            self.parts.append(f'<circle cx="{self.px(x):.2f}" cy="{self.py(y):.2f}" r="2" fill="{color}"/>')

    def render(self):
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def trajectory_svg(report) -> str:
    agg, se = report.aggregate, report.state_evolution
    t = np.arange(agg.num_iterations + 1)
    series = [agg.mse_mean, agg.taur_mean, se.mse, se.taur]
    positive = np.concatenate([s[s > 0] for s in series] + [np.array([1e-12])])
    canvas = _Canvas(
        (0, agg.num_iterations),
        (positive.min(), positive.max()),
        f"n={report.config.n}, trials={agg.trial_count}",
        "iteration",
        "value",
        log_y=True,
    )
    for slot, (mean, std, se_vals, name, color) in enumerate((
        (agg.mse_mean, agg.mse_std, se.mse, "MSE", COLORS[0]),
        (agg.taur_mean, agg.taur_std, se.taur, "tau_r", COLORS[1]),
    )):
        canvas.polyline(t, mean, color, dashed=True, label=f"{name} AMP", slot=2 * slot)
        canvas.error_bars(t, mean - std, mean + std, color)
        canvas.polyline(t, se_vals, color, label=f"{name} SE", slot=2 * slot + 1)
    return canvas.render()


def qq_svg(series, title: str) -> str:
    xs, ys = series.normal_quantiles, series.empirical_quantiles
    lo = float(min(xs.min(), ys.min()))
    hi = float(max(xs.max(), ys.max()))
    canvas = _Canvas((lo, hi), (lo, hi), f"{title} (KS {series.ks:.4f})",
                     "standard normal quantile", "sample quantile")
    canvas.polyline([lo, hi], [lo, hi], "#888888", dashed=True)
    canvas.dots(xs, ys, COLORS[0])
    return canvas.render()
