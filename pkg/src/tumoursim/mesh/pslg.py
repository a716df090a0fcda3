"""Planar straight-line graphs describing the box and the initial tumour outline."""

from dataclasses import dataclass, field

import numpy as np

from .core import MeshError


@dataclass
class Pslg:
    """Points, required segments and anticlockwise boundary loops.

    Loops are index chains without repetition of the first index; the
    closing segment from the last to the first index is implied.  Every loop
    edge must also be listed in ``segments``.
    """
    points: np.ndarray
    segments: np.ndarray
    boundary_loops: list = field(default_factory=list)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        self.segments = np.asarray(self.segments, dtype=np.int64).reshape(-1, 2)
        self.boundary_loops = [np.asarray(l, dtype=np.int64) for l in self.boundary_loops]

    def loop_segments(self):
        out = []
        for loop in self.boundary_loops:
            out.extend(zip(loop, np.roll(loop, -1)))
        return np.array(out, dtype=np.int64).reshape(-1, 2)

    def validate(self):
        n = len(self.points)
        s = self.segments
        if s.size and (s.min() < 0 or s.max() >= n):
            raise MeshError("segment references a point index out of range")
        if np.any(s[:, 0] == s[:, 1]):
            raise MeshError("zero-length segment")
        if len(np.unique(self.points, axis=0)) != n:
            raise MeshError("duplicate points in PSLG")
        seg_keys = {tuple(sorted(e)) for e in s.tolist()}
        for i, loop in enumerate(self.boundary_loops):
            if len(loop) < 3:
                raise MeshError(f"loop {i} has fewer than 3 points")
            if len(set(loop.tolist())) != len(loop):
                raise MeshError(f"loop {i} is not simple")
            for a, b in zip(loop, np.roll(loop, -1)):
                if tuple(sorted((int(a), int(b)))) not in seg_keys:
                    raise MeshError(f"loop {i} edge ({a}, {b}) is not a segment")
        _check_intersections(self.points, s)
        return self


def _check_intersections(points, segments):
    """Raise if two segments cross or overlap away from a shared endpoint."""
    if len(segments) < 2:
        return
    a = points[segments[:, 0]]
    b = points[segments[:, 1]]
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    scale = np.abs(points).max() + 1.0
    eps = 1e-12 * scale

    def orient(p, q, r):
        return (q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1]) - \
               (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0])

    for i in range(len(segments) - 1):
        j = np.arange(i + 1, len(segments))
        box = np.all(lo[j] <= hi[i] + eps, axis=1) & np.all(hi[j] >= lo[i] - eps, axis=1)
        j = j[box]
        if j.size == 0:
            continue
        shared = (segments[j, 0] == segments[i, 0]) | (segments[j, 0] == segments[i, 1]) | \
                 (segments[j, 1] == segments[i, 0]) | (segments[j, 1] == segments[i, 1])
        d1 = orient(a[i], b[i], a[j])
        d2 = orient(a[i], b[i], b[j])
        d3 = orient(a[j], b[j], a[i])
        d4 = orient(a[j], b[j], b[i])
        tol = eps * scale
        d1, d2, d3, d4 = (np.where(np.abs(d) <= tol, 0.0, d) for d in (d1, d2, d3, d4))
        # closed segments meet (bounding boxes already overlap, which settles
        # the collinear case)
        meet = (d1 * d2 <= 0) & (d3 * d4 <= 0)
        collinear = (d1 == 0) & (d2 == 0)
        d = b[i] - a[i]
        t0 = ((a[j] - a[i]) @ d) / (d @ d)
        t1 = ((b[j] - a[i]) @ d) / (d @ d)
        overlap = collinear & (np.maximum(t0, t1) > 1e-12) & (np.minimum(t0, t1) < 1 - 1e-12)
        bad = np.where(shared, overlap, meet)
        if np.any(bad):
            k = int(j[np.flatnonzero(bad)[0]])
            raise MeshError(f"segments {i} and {k} intersect")


def box_pslg(ell, loops=()):
    """PSLG of the box ``(-ell, ell)^2`` with optional anticlockwise point loops."""
    corners = np.array([[-ell, -ell], [ell, -ell], [ell, ell], [-ell, ell]], dtype=float)
    points = [corners]
    segments = [np.array([[0, 1], [1, 2], [2, 3], [3, 0]])]
    boundary_loops = []
    offset = 4
    for loop in loops:
        loop = np.asarray(loop, dtype=float)
        n = len(loop)
        idx = offset + np.arange(n)
        points.append(loop)
        segments.append(np.c_[idx, np.roll(idx, -1)])
        boundary_loops.append(idx)
        offset += n
    return Pslg(np.vstack(points), np.vstack(segments), boundary_loops)


def read_pslg(path):
    """Read the ``NP NS NL`` text format."""
    with open(path) as fh:
        tokens = [line.split() for line in fh if line.strip() and not line.lstrip().startswith("#")]
    try:
        npnt, nseg, nloop = (int(x) for x in tokens[0])
        pts = np.array([[float(x) for x in t[:2]] for t in tokens[1:1 + npnt]])
        segs = np.array([[int(x) for x in t[:2]] for t in tokens[1 + npnt:1 + npnt + nseg]],
                        dtype=np.int64)
        loops = []
        for t in tokens[1 + npnt + nseg:1 + npnt + nseg + nloop]:
            n = int(t[0])
            if len(t) != n + 1:
                raise ValueError(f"loop line declares {n} indices but has {len(t) - 1}")
            loops.append([int(x) for x in t[1:]])
    except (IndexError, ValueError) as exc:
        raise MeshError(f"{path}: malformed PSLG file ({exc})") from exc
    if len(pts) != npnt or len(segs) != nseg or len(loops) != nloop:
        raise MeshError(f"{path}: truncated PSLG file")
    return Pslg(pts, segs.reshape(-1, 2), loops)


def write_pslg(pslg, path):
    with open(path, "w") as fh:
        fh.write(f"{len(pslg.points)} {len(pslg.segments)} {len(pslg.boundary_loops)}\n")
        for x, y in pslg.points:
            fh.write(f"{x:.17g} {y:.17g}\n")
        for a, b in pslg.segments:
            fh.write(f"{a} {b}\n")
        for loop in pslg.boundary_loops:
            fh.write(" ".join(str(v) for v in [len(loop), *loop.tolist()]) + "\n")
