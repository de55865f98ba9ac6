"""Minimal standalone SVG line charts with error bars."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

PALETTE = ["#1f4e79", "#c0504d", "#4f8a3c", "#8064a2", "#d88c1a", "#2c9cae", "#7f7f7f", "#b5498b"]

WIDTH, HEIGHT = 720, 480
MARGIN = dict(left=70, right=170, top=40, bottom=60)


@dataclass
class Series:
    label: str
    xs: list[float]
    ys: list[float]
    yerr: list[float] | None = None
    markers: bool = True
    line: bool = True
    dash: str | None = None


@dataclass
class Chart:
    title: str
    xlabel: str
    ylabel: str
    series: list[Series] = field(default_factory=list)
    hlines: list[tuple[float, str]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def _bounds(self):
        xs = [x for s in self.series for x in s.xs]
        ys = []
        for s in self.series:
            errs = s.yerr or [0.0] * len(s.ys)
            for y, e in zip(s.ys, errs):
                ys += [y - e, y + e]
        ys += [y for y, _ in self.hlines]
        if not xs:
            raise ValueError("nothing to plot")
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
        if x0 == x1:
            x0, x1 = x0 - 1, x1 + 1
        if y0 == y1:
            y0, y1 = y0 - 0.5, y1 + 0.5
        pad = 0.05 * (y1 - y0)
        return x0, x1, y0 - pad, y1 + pad

    def render(self) -> str:
        x0, x1, y0, y1 = self._bounds()
        left, top = MARGIN["left"], MARGIN["top"]
        pw = WIDTH - MARGIN["left"] - MARGIN["right"]
        ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

        def sx(x):
            return left + (x - x0) / (x1 - x0) * pw

        def sy(y):
            return top + (y1 - y) / (y1 - y0) * ph

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(self.title)}</text>',
            f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        ]
        for tick in nice_ticks(x0, x1):
            px = sx(tick)
            out.append(f'<line x1="{px:.1f}" y1="{top + ph}" x2="{px:.1f}" y2="{top + ph + 5}" stroke="black"/>')
            out.append(f'<text x="{px:.1f}" y="{top + ph + 18}" text-anchor="middle">{fmt_tick(tick)}</text>')
        for tick in nice_ticks(y0, y1):
            py = sy(tick)
            out.append(f'<line x1="{left - 5}" y1="{py:.1f}" x2="{left}" y2="{py:.1f}" stroke="black"/>')
            out.append(f'<text x="{left - 8}" y="{py + 4:.1f}" text-anchor="end">{fmt_tick(tick)}</text>')
        out.append(
            f'<text x="{left + pw / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle">{escape(self.xlabel)}</text>'
        )
        out.append(
            f'<text x="18" y="{top + ph / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 18 {top + ph / 2:.1f})">{escape(self.ylabel)}</text>'
        )
        for y, label in self.hlines:
            py = sy(y)
            out.append(
                f'<line x1="{left}" y1="{py:.1f}" x2="{left + pw}" y2="{py:.1f}" stroke="black" '
                f'stroke-dasharray="8,3,2,3"><title>{escape(label)}</title></line>'
            )

        for i, s in enumerate(self.series):
            color = PALETTE[i % len(PALETTE)]
            pts = [(sx(x), sy(y)) for x, y in zip(s.xs, s.ys)]
            if s.line and len(pts) > 1:
                path = " ".join(f"{px:.1f},{py:.1f}" for px, py in pts)
                dash = f' stroke-dasharray="{s.dash}"' if s.dash else ""
                out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
            if s.yerr:
                for x, y, e in zip(s.xs, s.ys, s.yerr):
                    if e:
                        out.append(
                            f'<line x1="{sx(x):.1f}" y1="{sy(y - e):.1f}" x2="{sx(x):.1f}" '
                            f'y2="{sy(y + e):.1f}" stroke="{color}"/>'
                        )
            if s.markers:
                for px, py in pts:
                    out.append(f'<circle cx="{px:.1f}" cy="{py:.1f}" r="2.5" fill="{color}"/>')
            ly = top + 14 + 18 * i
            lx = left + pw + 15
            out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
            out.append(f'<text x="{lx + 26}" y="{ly}">{escape(s.label)}</text>')

        base = top + 14 + 18 * len(self.series) + 10
        for j, note in enumerate(self.notes):
            out.append(f'<text x="{left + pw + 15}" y="{base + 16 * j}" font-size="11">{escape(note)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"


def nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    span = hi - lo
    raw = span / target
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * span:
        ticks.append(round(t, 12))
        t += step
    return ticks


def fmt_tick(value: float) -> str:
    return f"{value:g}"
