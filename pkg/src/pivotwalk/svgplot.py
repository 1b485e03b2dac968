"""Tiny dependency-free SVG emitters for experiment reports.

Deterministic output: no timestamps, fixed float formatting, elements
written in input order.
"""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple


def _fmt(x: float) -> str:
    return ("%.3f" % x).rstrip("0").rstrip(".")


class SvgCanvas:
    def __init__(self, width: int = 640, height: int = 400, margin: int = 45):
        self.width = width
        self.height = height
        self.margin = margin
        self._parts: List[str] = []

    def _scale(self, xlim, ylim):
        m, w, h = self.margin, self.width, self.height
        sx = (w - 2 * m) / max(xlim[1] - xlim[0], 1e-12)
        sy = (h - 2 * m) / max(ylim[1] - ylim[0], 1e-12)

        def to_px(x, y):
            return m + (x - xlim[0]) * sx, h - m - (y - ylim[0]) * sy

        return to_px

    def polyline(self, pts: Sequence[Tuple[float, float]], color: str = "#1f6fb2", width: float = 1.5):
        joined = " ".join("%s,%s" % (_fmt(x), _fmt(y)) for x, y in pts)
        self._parts.append(
            '<polyline fill="none" stroke="%s" stroke-width="%s" points="%s"/>'
            % (color, _fmt(width), joined)
        )

    def circle(self, x: float, y: float, r: float = 2.5, color: str = "#c1392b"):
        self._parts.append(
            '<circle cx="%s" cy="%s" r="%s" fill="%s"/>' % (_fmt(x), _fmt(y), _fmt(r), color)
        )

    def rect(self, x, y, w, h, color="#888888", opacity=1.0):
        self._parts.append(
            '<rect x="%s" y="%s" width="%s" height="%s" fill="%s" fill-opacity="%s"/>'
            % (_fmt(x), _fmt(y), _fmt(w), _fmt(h), color, _fmt(opacity))
        )

    def text(self, x: float, y: float, s: str, size: int = 12, anchor: str = "start"):
        self._parts.append(
            '<text x="%s" y="%s" font-size="%d" font-family="monospace" text-anchor="%s">%s</text>'
            % (_fmt(x), _fmt(y), size, anchor, _escape(s))
        )

    def line(self, x1, y1, x2, y2, color="#444444", width=1.0, dash: Optional[str] = None):
        d = ' stroke-dasharray="%s"' % dash if dash else ""
        self._parts.append(
            '<line x1="%s" y1="%s" x2="%s" y2="%s" stroke="%s" stroke-width="%s"%s/>'
            % (_fmt(x1), _fmt(y1), _fmt(x2), _fmt(y2), color, _fmt(width), d)
        )

    def render(self) -> str:
        head = (
            '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
            'viewBox="0 0 %d %d">' % (self.width, self.height, self.width, self.height)
        )
        return head + '<rect width="100%" height="100%" fill="white"/>' + "".join(self._parts) + "</svg>"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def line_plot(
    series: Sequence[Tuple[str, Sequence[float], Sequence[float]]],
    title: str,
    xlabel: str = "",
    ylabel: str = "",
    path: Optional[str] = None,
) -> str:
    """Multi-series line plot; series = [(label, xs, ys), ...]."""

    canvas = SvgCanvas()
    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    if not xs_all:
        xs_all, ys_all = [0.0, 1.0], [0.0, 1.0]
    xlim = (min(xs_all), max(xs_all))
    ylim = (min(ys_all), max(ys_all))
    if xlim[0] == xlim[1]:
        xlim = (xlim[0] - 0.5, xlim[1] + 0.5)
    if ylim[0] == ylim[1]:
        ylim = (ylim[0] - 0.5, ylim[1] + 0.5)
    to_px = canvas._scale(xlim, ylim)
    m, w, h = canvas.margin, canvas.width, canvas.height
    canvas.line(m, h - m, w - m, h - m)
    canvas.line(m, m, m, h - m)
    canvas.text(w / 2, 20, title, size=13, anchor="middle")
    canvas.text(w / 2, h - 8, xlabel, anchor="middle")
    canvas.text(12, m - 10, ylabel)
    canvas.text(m, h - m + 16, _fmt(xlim[0]), size=10)
    canvas.text(w - m, h - m + 16, _fmt(xlim[1]), size=10, anchor="end")
    canvas.text(m - 4, h - m, _fmt(ylim[0]), size=10, anchor="end")
    canvas.text(m - 4, m, _fmt(ylim[1]), size=10, anchor="end")
    palette = ["#1f6fb2", "#c1392b", "#2a8f5c", "#8e5bb5", "#b2731f"]
    for i, (label, xs, ys) in enumerate(series):
        color = palette[i % len(palette)]
        canvas.polyline([to_px(x, y) for x, y in zip(xs, ys)], color=color)
        canvas.text(w - m - 4, m + 14 * (i + 1), label, size=10, anchor="end")
        canvas.line(w - m - 80, m + 14 * (i + 1) - 4, w - m - 64, m + 14 * (i + 1) - 4, color=color, width=2.0)
    out = canvas.render()
    if path:
        with open(path, "w") as fh:
            fh.write(out)
    return out


def histogram(
    values: Sequence[float],
    bins: int,
    title: str,
    path: Optional[str] = None,
    overlay: Optional[Sequence[Tuple[float, float]]] = None,
) -> str:
    """Histogram with optional (x, density) overlay curve."""

    canvas = SvgCanvas()
    if not values:
        values = [0.0]
    lo, hi = min(values), max(values)
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    step = (hi - lo) / bins
    counts = [0] * bins
    for v in values:
        idx = min(int((v - lo) / step), bins - 1)
        counts[idx] += 1
    total = len(values)
    dens = [c / (total * step) for c in counts]
    ymax = max(dens + ([y for _, y in overlay] if overlay else [0.0]))
    to_px = canvas._scale((lo, hi), (0.0, max(ymax, 1e-9)))
    m, h, w = canvas.margin, canvas.height, canvas.width
    canvas.line(m, h - m, w - m, h - m)
    canvas.line(m, m, m, h - m)
    canvas.text(w / 2, 20, title, size=13, anchor="middle")
    canvas.text(m, h - m + 16, _fmt(lo), size=10)
    canvas.text(w - m, h - m + 16, _fmt(hi), size=10, anchor="end")
    for i, d in enumerate(dens):
        x0, y0 = to_px(lo + i * step, 0.0)
        x1, y1 = to_px(lo + (i + 1) * step, d)
        canvas.rect(x0, y1, x1 - x0, y0 - y1, color="#6ca0c8", opacity=0.8)
    if overlay:
        canvas.polyline([to_px(x, y) for x, y in overlay], color="#c1392b", width=2.0)
    out = canvas.render()
    if path:
        with open(path, "w") as fh:
            fh.write(out)
    return out


def step_cdf_plot(
    empirical: Sequence[Tuple[float, float]],
    reference: Sequence[Tuple[float, float]],
    title: str,
    path: Optional[str] = None,
) -> str:
    return line_plot(
        [
            ("empirical", [x for x, _ in empirical], [y for _, y in empirical]),
            ("reference", [x for x, _ in reference], [y for _, y in reference]),
        ],
        title=title,
        xlabel="value",
        ylabel="cdf",
        path=path,
    )
