"""Analytic initial tumour shapes and their boundary polylines."""

from dataclasses import dataclass, field

import numpy as np

VARIANTS = ("circle", "bullet", "semi_annulus", "polygon_file")


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class ShapeSpec:
    """Initial tumour shape.

    ``radius`` is the disc radius (circle), the outer radius (semi_annulus)
    or the cap radius (bullet, whose body is a ``2r x 3r`` rectangle below
    the cap).  ``None`` selects the variant default.  ``polygons`` holds
    explicit anticlockwise loops for the ``polygon_file`` variant; use
    :func:`read_polygon_file` to fill it from disk.
    """
    variant: str = "circle"
    radius: float | None = None
    inner_radius: float | None = None
    centre: tuple = (0.0, 0.0)
    n_nodes: int = 64
    polygon_file: str | None = None
    polygons: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ShapeError(f"unknown shape variant {self.variant!r}")
        if self.radius is not None and self.radius <= 0:
            raise ShapeError("radius must be positive")
        if self.inner_radius is not None and self.inner_radius <= 0:
            raise ShapeError("inner_radius must be positive")
        if self.variant == "semi_annulus" and self.r_inner >= self.r_outer:
            raise ShapeError("inner radius must be smaller than outer radius")
        if self.n_nodes < 8:
            raise ShapeError("n_nodes must be at least 8")
        if self.variant == "polygon_file" and not self.polygons:
            if self.polygon_file is None:
                raise ShapeError("polygon_file variant needs a file or explicit polygons")
            object.__setattr__(self, "polygons", tuple(read_polygon_file(self.polygon_file)))

    @property
    def r_outer(self):
        if self.radius is not None:
            return float(self.radius)
        return 0.5 if self.variant == "bullet" else 1.0

    @property
    def r_inner(self):
        return 0.5 * self.r_outer if self.inner_radius is None else float(self.inner_radius)

    def loops(self):
        """Anticlockwise boundary polylines, one (n, 2) array per loop."""
        c = np.asarray(self.centre, dtype=float)
        if self.variant == "polygon_file":
            return [np.asarray(p, dtype=float) for p in self.polygons]
        R = self.r_outer
        if self.variant == "circle":
            pieces = [_arc((0, 0), R, 0.0, 2 * np.pi)]
        elif self.variant == "semi_annulus":
            r = self.r_inner
            pieces = [_arc((0, 0), R, -0.5 * np.pi, 0.5 * np.pi),
                      _line((0, R), (0, r)),
                      _arc((0, 0), r, 0.5 * np.pi, -0.5 * np.pi),
                      _line((0, -r), (0, -R))]
        else:
            # cap centre sits at height R; body spans y in [-2R, R]
            pieces = [_line((-R, -2 * R), (R, -2 * R)),
                      _line((R, -2 * R), (R, R)),
                      _arc((0, R), R, 0.0, np.pi),
                      _line((-R, R), (-R, -2 * R))]
        return [c + _sample(pieces, self.n_nodes)]

    def contains(self, pts):
        """Strict interior membership of points ``pts`` (shape (m, 2))."""
        p = np.asarray(pts, dtype=float).reshape(-1, 2) - np.asarray(self.centre, dtype=float)
        x, y = p[:, 0], p[:, 1]
        r2 = x * x + y * y
        R = self.r_outer
        if self.variant == "circle":
            return r2 < R * R
        if self.variant == "semi_annulus":
            r = self.r_inner
            return (r2 > r * r) & (r2 < R * R) & (x > 0)
        if self.variant == "bullet":
            body = (np.abs(x) < R) & (y > -2 * R) & (y <= R)
            cap = x * x + (y - R) ** 2 < R * R
            return body | cap
        inside = np.zeros(len(p), dtype=bool)
        for loop in self.loops():
            inside ^= points_in_polygon(p + np.asarray(self.centre, dtype=float), loop)
        return inside


def _arc(c, r, t0, t1):
    def f(s):
        t = t0 + (t1 - t0) * s
        return np.c_[c[0] + r * np.cos(t), c[1] + r * np.sin(t)]
    return f, abs(t1 - t0) * r


def _line(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)

    def f(s):
        return a + np.outer(s, b - a)
    return f, float(np.hypot(*(b - a)))


def _sample(pieces, n):
    """``n`` nodes spread by arc length, with every piece endpoint kept as a node."""
    lengths = np.array([L for _, L in pieces])
    if len(pieces) > n:
        raise ShapeError("too few boundary nodes for the shape's corners")
    share = lengths / lengths.sum() * n
    counts = np.maximum(np.floor(share).astype(int), 1)
    # largest remainders receive the leftover nodes
    for k in np.argsort(-(share - np.floor(share)), kind="stable"):
        if counts.sum() >= n:
            break
        counts[k] += 1
    while counts.sum() > n:
        counts[np.argmax(counts)] -= 1
    out = [f(np.arange(m) / m) for (f, _), m in zip(pieces, counts)]
    return np.vstack(out)


def points_in_polygon(pts, poly):
    """Strict inside test (points on the boundary count as outside)."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    poly = np.asarray(poly, dtype=float)
    a = poly
    b = np.roll(poly, -1, axis=0)
    x = pts[:, 0][:, None]
    y = pts[:, 1][:, None]
    crosses = (a[:, 1] > y) != (b[:, 1] > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = a[:, 0] + (y - a[:, 1]) * (b[:, 0] - a[:, 0]) / (b[:, 1] - a[:, 1])
    inside = (np.count_nonzero(crosses & (x < xint), axis=1) % 2) == 1
    # distance to the polyline, to exclude boundary points
    d = b - a
    t = ((x - a[:, 0]) * d[:, 0] + (y - a[:, 1]) * d[:, 1]) / (d ** 2).sum(1)
    t = np.clip(t, 0.0, 1.0)
    dist = np.hypot(a[:, 0] + t * d[:, 0] - x, a[:, 1] + t * d[:, 1] - y).min(axis=1)
    scale = np.abs(poly).max() + 1.0
    return inside & (dist > 1e-12 * scale)


def read_polygon_file(path):
    """Read loops stored one per line as ``n x1 y1 ... xn yn``."""
    loops = []
    try:
        fh = open(path)
    except OSError as exc:
        raise ShapeError(f"{path}: cannot read polygon file ({exc.strerror})") from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            try:
                n = int(tok[0])
                vals = [float(v) for v in tok[1:]]
            except ValueError as exc:
                raise ShapeError(f"{path}:{lineno}: {exc}") from exc
            if n < 3 or len(vals) != 2 * n:
                raise ShapeError(f"{path}:{lineno}: expected {n} coordinate pairs")
            loop = np.array(vals).reshape(n, 2)
            if _signed_area(loop) < 0:
                loop = loop[::-1]
            loops.append(loop)
    if not loops:
        raise ShapeError(f"{path}: no polygons")
    return loops


def write_polygon_file(loops, path):
    with open(path, "w") as fh:
        for loop in loops:
            loop = np.asarray(loop, dtype=float)
            fh.write(" ".join([str(len(loop))] + [f"{v:.17g}" for v in loop.ravel()]) + "\n")


def _signed_area(loop):
    x, y = loop[:, 0], loop[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def circle_polygon(centre, radius, n):
    t = 2 * np.pi * np.arange(n) / n
    return np.c_[centre[0] + radius * np.cos(t), centre[1] + radius * np.sin(t)]


def three_blob_shape(n_nodes=32, radius=0.6, gap=0.4):
    """Three disjoint discs on an equilateral layout, separated by ``gap``."""
    side = 2 * radius + gap
    rc = side / np.sqrt(3.0)
    angles = np.pi / 2 + 2 * np.pi * np.arange(3) / 3
    polys = tuple(circle_polygon((rc * np.cos(a), rc * np.sin(a)), radius, n_nodes)
                  for a in angles)
    return ShapeSpec(variant="polygon_file", polygons=polys, n_nodes=max(n_nodes, 8))
