"""Minimal SVG output: tessellations, traces, heatmaps, QQ plots,
histograms and scatterplots.  No plotting library involved."""

import math
from xml.sax.saxutils import escape

import numpy as np

SIZE = 480
MARGIN = 48


def _f(v):
    return ("%.3f" % v).rstrip("0").rstrip(".")


class Canvas:
    def __init__(self, width=SIZE, height=SIZE):
        self.width = width
        self.height = height
        self.items = []

    def add(self, s):
        self.items.append(s)

    def line(self, x1, y1, x2, y2, stroke="black", width=1.0):
        self.add('<line x1="%s" y1="%s" x2="%s" y2="%s" stroke="%s" stroke-width="%s"/>'
                 % (_f(x1), _f(y1), _f(x2), _f(y2), stroke, _f(width)))

    def polyline(self, xs, ys, stroke="black", width=1.0):
        pts = " ".join("%s,%s" % (_f(x), _f(y)) for x, y in zip(xs, ys))
        self.add('<polyline points="%s" fill="none" stroke="%s" stroke-width="%s"/>'
                 % (pts, stroke, _f(width)))

    def polygon(self, xs, ys, fill="none", stroke="black", width=1.0):
        pts = " ".join("%s,%s" % (_f(x), _f(y)) for x, y in zip(xs, ys))
        self.add('<polygon points="%s" fill="%s" stroke="%s" stroke-width="%s"/>'
                 % (pts, fill, stroke, _f(width)))

    def circle(self, x, y, r, fill="black", stroke="none"):
        self.add('<circle cx="%s" cy="%s" r="%s" fill="%s" stroke="%s"/>'
                 % (_f(x), _f(y), _f(r), fill, stroke))

    def rect(self, x, y, w, h, fill="none", stroke="none"):
        self.add('<rect x="%s" y="%s" width="%s" height="%s" fill="%s" stroke="%s"/>'
                 % (_f(x), _f(y), _f(w), _f(h), fill, stroke))

    def text(self, x, y, s, size=12, anchor="middle"):
        self.add('<text x="%s" y="%s" font-size="%d" font-family="sans-serif" '
                 'text-anchor="%s">%s</text>' % (_f(x), _f(y), size, anchor, escape(str(s))))

    def render(self):
        head = ('<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
                'viewBox="0 0 %d %d">' % (self.width, self.height, self.width, self.height))
        return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>']
                         + self.items + ["</svg>"]) + "\n"

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.render())


class Axes:
    """Maps data coordinates to a rectangle of the canvas."""

    def __init__(self, canvas, xlim, ylim, box=None):
        self.c = canvas
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 == self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 == self.y0:
            self.y1 = self.y0 + 1.0
        self.box = box or (MARGIN, MARGIN / 2, canvas.width - MARGIN / 2,
                           canvas.height - MARGIN)

    def X(self, x):
        l, _, r, _ = self.box
        return l + (np.asarray(x, dtype=float) - self.x0) / (self.x1 - self.x0) * (r - l)

    def Y(self, y):
        _, t, _, b = self.box
        return b - (np.asarray(y, dtype=float) - self.y0) / (self.y1 - self.y0) * (b - t)

    def frame(self, xlabel="", ylabel="", title="", ticks=True):
        l, t, r, b = self.box
        c = self.c
        c.rect(l, t, r - l, b - t, stroke="black")
        if ticks:
            for v in _ticks(self.x0, self.x1):
                c.line(self.X(v), b, self.X(v), b + 4)
                c.text(self.X(v), b + 16, _label(v), size=10)
            for v in _ticks(self.y0, self.y1):
                c.line(l - 4, self.Y(v), l, self.Y(v))
                c.text(l - 6, self.Y(v) + 3, _label(v), size=10, anchor="end")
        if xlabel:
            c.text((l + r) / 2, b + 32, xlabel)
        if ylabel:
            c.add('<text x="12" y="%s" font-size="12" font-family="sans-serif" '
                  'text-anchor="middle" transform="rotate(-90 12 %s)">%s</text>'
                  % (_f((t + b) / 2), _f((t + b) / 2), escape(ylabel)))
        if title:
            c.text((l + r) / 2, t - 6, title)


def _ticks(lo, hi, n=5):
    span = hi - lo
    if not math.isfinite(span) or span <= 0:
        return []
    step = 10 ** math.floor(math.log10(span / n))
    for m in (1, 2, 5, 10):
        if span / (step * m) <= n:
            step *= m
            break
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def _label(v):
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return "%.1e" % v
    return "%g" % round(v, 6)


def _limits(v, pad=0.05):
    v = np.asarray(v, dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return 0.0, 1.0
    lo, hi = float(v.min()), float(v.max())
    d = (hi - lo) or max(abs(lo), 1.0)
    return lo - pad * d, hi + pad * d


# ---------------------------------------------------------------------------
# figures

def tessellation(tess, mode="voronoi", marked=None, title="", size=SIZE):
    """Draw the Voronoi cells, the Delaunay triangles, or both.

    Elements are drawn in the unit square and clipped to it; points in
    ``marked`` (dense indices) are circled.
    """
    c = Canvas(size, size)
    m = 8
    ax = Axes(c, (0, 1), (0, 1), box=(m, m + (14 if title else 0), size - m, size - m))
    l, t, r, b = ax.box
    c.add('<defs><clipPath id="sq"><rect x="%s" y="%s" width="%s" height="%s"/></clipPath></defs>'
          % (_f(l), _f(t), _f(r - l), _f(b - t)))
    c.add('<g clip-path="url(#sq)">')
    shifts = [(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)]
    if mode in ("delaunay", "both"):
        for tri in tess.tri_coords:
            for sx, sy in shifts:
                c.polygon(ax.X(tri[:, 0] + sx), ax.Y(tri[:, 1] + sy),
                          stroke="#1f4e9a" if mode == "both" else "black", width=0.6)
    if mode in ("voronoi", "both"):
        for poly in tess.polygons:
            for sx, sy in shifts:
                c.polygon(ax.X(poly[:, 0] + sx), ax.Y(poly[:, 1] + sy), width=0.8)
    c.add("</g>")
    pts = tess.points
    for p in pts:
        c.circle(ax.X(p[0]), ax.Y(p[1]), 1.6)
    if marked is not None:
        for i in np.atleast_1d(marked):
            c.circle(ax.X(pts[i, 0]), ax.Y(pts[i, 1]), 5.0, fill="none", stroke="red")
    c.rect(l, t, r - l, b - t, stroke="black")
    if title:
        c.text(size / 2, 16, title)
    return c


def points(pts, title="", size=SIZE):
    c = Canvas(size, size)
    ax = Axes(c, (0, 1), (0, 1))
    ax.frame(title=title)
    for p in np.asarray(pts).reshape(-1, 2):
        c.circle(ax.X(p[0]), ax.Y(p[1]), 1.6)
    return c


def trace(trace, title=""):
    """Monitoring control: moves, births, deaths and total per block."""
    arr = trace.as_array()
    c = Canvas(SIZE, 4 * 130 + 30)
    names = ("moves", "births", "deaths", "total")
    cols = (3, 1, 2, 4)
    for k, (name, col) in enumerate(zip(names, cols)):
        top = 20 + k * 130
        box = (MARGIN + 10, top + 10, SIZE - 10, top + 100)
        x = arr[:, 0] if len(arr) else np.zeros(1)
        y = arr[:, col] if len(arr) else np.zeros(1)
        ax = Axes(c, _limits(x, 0), _limits(y), box=box)
        ax.frame(ylabel="", title=name if k else (title or name))
        if len(arr):
            c.polyline(ax.X(x), ax.Y(y), width=0.8)
    c.text(SIZE / 2, 4 * 130 + 22, "block")
    return c


def heatmap(values, window=None, title=""):
    """Grid of residuals; blue negative, red positive, symmetric scale."""
    v = np.asarray(values, dtype=float)
    ny, nx = v.shape
    c = Canvas(SIZE, SIZE)
    x0, y0, x1, y1 = (0, 0, 1, 1) if window is None else (window.x0, window.y0, window.x1, window.y1)
    ax = Axes(c, (x0, x1), (y0, y1))
    scale = np.nanmax(np.abs(v)) if v.size else 1.0
    scale = scale if scale > 0 and np.isfinite(scale) else 1.0
    dx = (x1 - x0) / nx
    dy = (y1 - y0) / ny
    for j in range(ny):
        for i in range(nx):
            s = v[j, i] / scale
            if not np.isfinite(s) or s == 0:
                continue
            # colour intensity on a square-root scale so small values show
            a = math.sqrt(min(abs(s), 1.0))
            lvl = int(round(255 * (1 - a)))
            col = "rgb(255,%d,%d)" % (lvl, lvl) if s > 0 else "rgb(%d,%d,255)" % (lvl, lvl)
            X0, X1 = ax.X(x0 + i * dx), ax.X(x0 + (i + 1) * dx)
            Y0, Y1 = ax.Y(y0 + (j + 1) * dy), ax.Y(y0 + j * dy)
            c.rect(X0, Y0, X1 - X0 + 0.05, Y1 - Y0 + 0.05, fill=col)
    ax.frame(title=title or "max |residual| = %.3g" % scale)
    return c


def qq(envelope, title=""):
    mean = envelope.mean
    lo, hi = envelope.band()
    obs = envelope.observed
    c = Canvas()
    allv = np.concatenate([mean, lo, hi, obs])
    lim = _limits(allv)
    xl = _limits(mean)
    ax = Axes(c, xl, lim)
    order = np.arange(len(mean))
    c.polyline(ax.X(mean[order]), ax.Y(lo[order]), stroke="grey")
    c.polyline(ax.X(mean[order]), ax.Y(hi[order]), stroke="grey")
    c.line(ax.X(xl[0]), ax.Y(xl[0]), ax.X(xl[1]), ax.Y(xl[1]), stroke="#999999", width=0.5)
    out = envelope.outside()
    for m, o, bad in zip(mean, obs, out):
        x, y = ax.X(m), ax.Y(o)
        col = "red" if bad else "black"
        c.line(x - 2.5, y - 2.5, x + 2.5, y + 2.5, stroke=col, width=0.7)
        c.line(x - 2.5, y + 2.5, x + 2.5, y - 2.5, stroke=col, width=0.7)
    ax.frame(xlabel="mean bootstrap quantile", ylabel="observed quantile",
             title=title or "outside band: %.1f%%" % (100 * envelope.fraction_outside))
    return c


def histogram(values, bins=20, xlabel="", title="", truth=None):
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    c = Canvas()
    if v.size == 0:
        Axes(c, (0, 1), (0, 1)).frame(xlabel=xlabel, title=title or "no data")
        return c
    counts, edges = np.histogram(v, bins=bins)
    ax = Axes(c, (edges[0], edges[-1]), (0, counts.max() * 1.1 or 1))
    for k, n in enumerate(counts):
        X0, X1 = ax.X(edges[k]), ax.X(edges[k + 1])
        c.rect(X0, ax.Y(n), X1 - X0, ax.Y(0) - ax.Y(n), fill="#c8c8c8", stroke="black")
    if truth is not None and edges[0] <= truth <= edges[-1]:
        c.line(ax.X(truth), ax.Y(0), ax.X(truth), ax.Y(counts.max() * 1.1), stroke="red")
    ax.frame(xlabel=xlabel, title=title or "mean %.4g, sd %.3g" % (v.mean(), v.std(ddof=1) if v.size > 1 else 0))
    return c


def scatter(x, y, xlabel="", ylabel="", title=""):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(x) & np.isfinite(y)
    c = Canvas()
    ax = Axes(c, _limits(x[ok]), _limits(y[ok]))
    for a, b in zip(x[ok], y[ok]):
        c.circle(ax.X(a), ax.Y(b), 2.0)
    ax.frame(xlabel=xlabel, ylabel=ylabel, title=title)
    return c
