"""Minimal static SVG plots (no plotting library)."""
from __future__ import annotations

from typing import Iterable, Sequence
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 360
MARGIN = dict(left=56, right=16, top=32, bottom=44)
GROUP_COLORS = {"low": "#1f77b4", "middle": "#2ca02c", "high": "#d62728", "global": "#9467bd"}


class Canvas:
    def __init__(self, title: str, xlim, ylim, xlabel: str = "QF", ylabel: str = ""):
        self.xlim, self.ylim = xlim, ylim
        self.parts: list[str] = []
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel

    def px(self, x):
        x0, x1 = self.xlim
        return MARGIN["left"] + (x - x0) / (x1 - x0) * (WIDTH - MARGIN["left"] - MARGIN["right"])

    def py(self, y):
        y0, y1 = self.ylim
        return HEIGHT - MARGIN["bottom"] - (y - y0) / (y1 - y0) * (HEIGHT - MARGIN["top"] - MARGIN["bottom"])

    def add(self, s: str):
        self.parts.append(s)

    def _axes(self) -> list[str]:
        out = []
        x0, x1 = self.xlim
        y0, y1 = self.ylim
        out.append(
            f'<line x1="{self.px(x0):.2f}" y1="{self.py(y0):.2f}" x2="{self.px(x1):.2f}" y2="{self.py(y0):.2f}" stroke="black"/>'
        )
        out.append(
            f'<line x1="{self.px(x0):.2f}" y1="{self.py(y0):.2f}" x2="{self.px(x0):.2f}" y2="{self.py(y1):.2f}" stroke="black"/>'
        )
        for t in np.linspace(x0, x1, 6):
            out.append(
                f'<text x="{self.px(t):.2f}" y="{self.py(y0) + 16:.2f}" font-size="11" text-anchor="middle">{t:g}</text>'
            )
        for t in np.linspace(y0, y1, 5):
            out.append(
                f'<text x="{self.px(x0) - 6:.2f}" y="{self.py(t) + 4:.2f}" font-size="11" text-anchor="end">{t:.3g}</text>'
            )
        out.append(
            f'<text x="{WIDTH / 2:.0f}" y="{HEIGHT - 8}" font-size="12" text-anchor="middle">{escape(self.xlabel)}</text>'
        )
        out.append(
            f'<text x="14" y="{HEIGHT / 2:.0f}" font-size="12" text-anchor="middle" '
            f'transform="rotate(-90 14 {HEIGHT / 2:.0f})">{escape(self.ylabel)}</text>'
        )
        out.append(f'<text x="{WIDTH / 2:.0f}" y="20" font-size="14" text-anchor="middle">{escape(self.title)}</text>')
        return out

    def render(self) -> str:
        body = "\n".join(self._axes() + self.parts)
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">\n<rect width="100%" height="100%" fill="white"/>\n{body}\n</svg>\n'
        )


def histogram_svg(
    mass: Sequence[float],
    boundaries: Iterable[int] = (),
    densities: dict[str, np.ndarray] | None = None,
    density_x: np.ndarray | None = None,
    title: str = "JND histogram",
) -> str:
    """Bars for QF 1..100, dashed group boundaries, optional density curves."""
    mass = np.asarray(mass, dtype=float)
    top = max(mass.max(), max((d.max() for d in (densities or {}).values()), default=0), 1.0)
    c = Canvas(title, (0.5, 100.5), (0, top * 1.05), ylabel="count")
    for qf, m in enumerate(mass, start=1):
        x0, x1 = c.px(qf - 0.45), c.px(qf + 0.45)
        y = c.py(m)
        c.add(
            f'<rect class="bin" data-qf="{qf}" data-mass="{m:g}" x="{x0:.2f}" y="{y:.2f}" '
            f'width="{x1 - x0:.2f}" height="{c.py(0) - y:.2f}" fill="#bbbbbb"/>'
        )
    for label, dens in (densities or {}).items():
        pts = " ".join(f"{c.px(x):.2f},{c.py(y):.2f}" for x, y in zip(density_x, dens))
        c.add(
            f'<polyline class="density" data-group="{label}" points="{pts}" fill="none" '
            f'stroke="{GROUP_COLORS.get(label, "black")}" stroke-width="1.5"/>'
        )
    for b in boundaries:
        c.add(
            f'<line class="boundary" data-qf="{b}" x1="{c.px(b):.2f}" y1="{c.py(0):.2f}" '
            f'x2="{c.px(b):.2f}" y2="{c.py(top * 1.05):.2f}" stroke="black" stroke-dasharray="4 3"/>'
        )
    return c.render()


def spectrum_svg(positions, heights, groups, title: str = "JND spectrum") -> str:
    heights = np.asarray(heights, dtype=float)
    c = Canvas(title, (0.5, 100.5), (0, heights.max() * 1.1), ylabel="height")
    for q, h, g in zip(positions, heights, groups):
        color = GROUP_COLORS.get(g, "black")
        c.add(
            f'<line class="jump" data-qf="{q:.6g}" data-height="{h:.6g}" x1="{c.px(q):.2f}" y1="{c.py(0):.2f}" '
            f'x2="{c.px(q):.2f}" y2="{c.py(h):.2f}" stroke="{color}" stroke-width="2"/>'
        )
        c.add(f'<circle cx="{c.px(q):.2f}" cy="{c.py(h):.2f}" r="3" fill="{color}"/>')
    return c.render()


def stair_svg(positions, values, title: str = "SQF") -> str:
    """Right-continuous step curve from 0 to 1 over QF 0..100.

    ``values[i]`` is the stair level on ``[positions[i], positions[i+1])``.
    """
    c = Canvas(title, (0, 100), (0, 1), ylabel="SQF")
    xs = [0.0] + [float(p) for p in positions] + [100.0]
    ys = [0.0] + [float(v) for v in values]
    pts = []
    for i, y in enumerate(ys):
        pts.append((xs[i], y))
        pts.append((xs[i + 1], y))
    path = " ".join(f"{c.px(x):.2f},{c.py(y):.2f}" for x, y in pts)
    c.add(f'<polyline class="stair" points="{path}" fill="none" stroke="black" stroke-width="1.5"/>')
    for p, v in zip(positions, values):
        # filled dot marks the value taken at the jump itself
        c.add(f'<circle class="step" data-qf="{p:.6g}" data-value="{v:.6g}" cx="{c.px(p):.2f}" cy="{c.py(v):.2f}" r="3"/>')
    return c.render()
