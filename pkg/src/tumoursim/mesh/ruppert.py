"""Ruppert's Delaunay refinement for box meshes conforming to tumour outlines.

The point set is retriangulated with Qhull after every batch of insertions;
encroached subsegments are split at their midpoints and skinny (or too large)
triangles receive their circumcentre, exactly as in Ruppert's algorithm.
Loop segments (the piecewise affine initial tumour boundary) are protected:
they are never split, so each of them survives verbatim as a mesh edge, and
circumcentres that would encroach upon them are replaced by the apex of the
equilateral triangle built on the segment.
"""

import logging

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from .core import MeshError, TriMesh

logger = logging.getLogger(__name__)


class RefinementStalled(MeshError):
    pass


def _circumcentres(P, T):
    a = P[T[:, 0]]
    b = P[T[:, 1]] - a
    c = P[T[:, 2]] - a
    d = 2.0 * (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])
    b2 = (b ** 2).sum(1)
    c2 = (c ** 2).sum(1)
    ux = (c[:, 1] * b2 - b[:, 1] * c2) / d
    uy = (b[:, 0] * c2 - c[:, 0] * b2) / d
    cc = np.c_[ux, uy]
    return a + cc, np.hypot(ux, uy)


def _min_angles(P, T):
    p = P[T]
    u = p[:, [1, 2, 0]] - p
    w = p[:, [2, 0, 1]] - p
    dot = np.einsum("tki,tki->tk", u, w)
    cross = np.abs(u[..., 0] * w[..., 1] - u[..., 1] * w[..., 0])
    return np.arctan2(cross, dot).min(axis=1)


def _areas(P, T):
    p = P[T]
    return 0.5 * np.abs((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                        - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))


def _triangulate(P):
    tri = Delaunay(P)
    if len(tri.coplanar):
        raise MeshError(f"Delaunay dropped {len(tri.coplanar)} nearly coincident points")
    T = tri.simplices.astype(np.int64)
    keep = _areas(P, T) > 1e-14 * np.ptp(P, axis=0).prod()
    return tri, T[keep]


def _encroaching(P, mids, radii, seg, query_pts, query_ids=None):
    """For each query point, the subsegments whose open diametral disc contains it."""
    tree = cKDTree(mids)
    rmax = radii.max()
    hits = tree.query_ball_point(query_pts, rmax)
    out = []
    for k, cand in enumerate(hits):
        if not cand:
            out.append([])
            continue
        cand = np.asarray(cand)
        d2 = ((mids[cand] - query_pts[k]) ** 2).sum(1)
        inside = d2 < radii[cand] ** 2 * (1.0 - 1e-10)
        if query_ids is not None:
            inside &= (seg[cand, 0] != query_ids[k]) & (seg[cand, 1] != query_ids[k])
        out.append(cand[inside].tolist())
    return out


def _edge_set(T):
    e = np.sort(np.vstack([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]]), axis=1)
    return set(map(tuple, e.tolist()))


def _recover_segments(P, T, segs):
    """Flip diagonals so every subsegment is an edge (cocircular ties only)."""
    T = T.copy()
    for _ in range(3):
        edges = _edge_set(T)
        missing = [s for s in segs.tolist() if tuple(sorted(s)) not in edges]
        if not missing:
            return T
        for a, b in missing:
            around = np.flatnonzero(np.any(T == a, axis=1))
            done = False
            for t in around:
                others = [v for v in T[t] if v != a]
                c, d = others
                # neighbour across (c, d) with apex b
                nb = np.flatnonzero(np.all(np.isin(T, [c, d, b]), axis=1)
                                    & (np.sum(np.isin(T, [c, d, b]), axis=1) == 3))
                if nb.size:
                    T[t] = [a, c, b]
                    T[nb[0]] = [a, b, d]
                    done = True
                    break
            if not done:
                raise MeshError(f"segment ({a}, {b}) cannot be recovered as a mesh edge")
    edges = _edge_set(T)
    if any(tuple(sorted(s)) not in edges for s in segs.tolist()):
        raise MeshError("segment recovery failed")
    return T


def ruppert_refine(pslg, params, max_insertions=None):
    """Quality conforming Delaunay triangulation of the PSLG's convex hull.

    Parameters
    ----------
    pslg : Pslg
        Box plus initial-boundary loops; the domain is the convex hull of the
        points (the box, when built by :func:`box_pslg`).
    params : MeshParams
        ``theta_min`` (degrees) and optional ``max_area``.
    max_insertions : int, optional
        Insertion cap; defaults to ``50 * len(pslg.points)`` plus the number of
        vertices an area bound of ``max_area`` can require.

    Returns
    -------
    TriMesh
        Every triangle has minimum angle at least ``theta_min`` and every
        PSLG segment is covered by mesh edges; loop segments appear verbatim.
    """
    pslg.validate()
    P = [p for p in pslg.points]
    n_in = len(P)
    theta = np.radians(params.theta_min)
    hull_area = float(np.prod(np.ptp(pslg.points, axis=0)))
    if max_insertions is None:
        max_insertions = 50 * n_in
        if params.max_area is not None:
            max_insertions += int(4.0 * hull_area / params.max_area)

    protected_keys = {tuple(sorted(s)) for s in pslg.loop_segments().tolist()}
    seg = np.array(pslg.segments, dtype=np.int64).reshape(-1, 2)
    if seg.size == 0:
        # refine the convex hull itself
        seg = np.sort(Delaunay(pslg.points).convex_hull, axis=1).astype(np.int64)
    prot = np.array([tuple(sorted(s)) in protected_keys for s in seg.tolist()], dtype=bool)
    scale = float(np.ptp(pslg.points, axis=0).max())
    inserted = 0

    while True:
        Parr = np.asarray(P)
        tri, T = _triangulate(Parr)

        a = Parr[seg[:, 0]]
        b = Parr[seg[:, 1]]
        mids = 0.5 * (a + b)
        radii = 0.5 * np.hypot(*(b - a).T)

        # 1. split encroached (unprotected) subsegments
        tree = cKDTree(Parr)
        near = tree.query_ball_point(mids[~prot], radii[~prot])
        split = []
        for s, cand in zip(np.flatnonzero(~prot), near):
            cand = [v for v in cand if v != seg[s, 0] and v != seg[s, 1]]
            if not cand:
                continue
            d2 = ((Parr[cand] - mids[s]) ** 2).sum(1)
            if np.any(d2 < radii[s] ** 2 * (1.0 - 1e-10)):
                split.append(s)
        if split:
            seg, prot, n_new = _split_segments(P, seg, prot, split, scale)
            inserted += n_new
            _check_cap(inserted, max_insertions)
            continue

        # 2. skinny or oversized triangles
        minang = _min_angles(Parr, T)
        area = _areas(Parr, T)
        skinny = minang < theta
        big = np.zeros_like(skinny) if params.max_area is None else area >= params.max_area
        bad = np.flatnonzero(skinny | big)
        if bad.size == 0:
            break
        # worst angles first, then largest areas
        key = np.where(skinny[bad], minang[bad], np.pi + 1.0 / (1.0 + area[bad]))
        bad = bad[np.argsort(key, kind="stable")]
        cc, rad = _circumcentres(Parr, T[bad])
        enc = _encroaching(Parr, mids, radii, seg, cc)
        inside = tri.find_simplex(cc) >= 0

        accepted = []
        accepted_r = []
        to_split = set()
        for k in range(len(bad)):
            hit = enc[k]
            free_hits = [s for s in hit if not prot[s]]
            if free_hits:
                to_split.update(free_hits)
                continue
            c = cc[k]
            if hit:
                c = _apex_point(Parr, seg[hit[0]], cc[k])
                if c is None:
                    continue
            elif not inside[k]:
                continue
            if accepted:
                acc = np.asarray(accepted)
                d = np.hypot(*(acc - c).T)
                if np.any(d < 0.5 * np.minimum(rad[k], np.asarray(accepted_r))):
                    continue
            accepted.append(c)
            accepted_r.append(rad[k])

        if to_split:
            seg, prot, n_new = _split_segments(P, seg, prot, sorted(to_split), scale)
            inserted += n_new
        # drop candidates colliding with existing vertices
        if accepted:
            acc = np.asarray(accepted)
            dist, _ = tree.query(acc)
            ok = dist > 1e-9 * scale
            P.extend(acc[ok])
            inserted += int(ok.sum())
            if not ok.any() and not to_split:
                raise RefinementStalled("refinement stalled: no admissible insertion point")
        elif not to_split:
            raise RefinementStalled(
                f"refinement stalled: {bad.size} bad triangles cannot be improved")
        _check_cap(inserted, max_insertions)

    Parr = np.asarray(P)
    T = _recover_segments(Parr, T, seg)
    pinned = np.zeros(len(Parr), dtype=bool)
    pinned[np.unique(seg)] = True
    pinned[:n_in] = True
    mesh = TriMesh(Parr, T, pinned=pinned)
    logger.info("ruppert_refine: %d inserted, %s", inserted, mesh)
    return mesh


def _check_cap(inserted, cap):
    if inserted > cap:
        raise RefinementStalled(f"refinement stalled: {inserted} insertions exceed cap {cap}")


def _split_segments(P, seg, prot, which, scale):
    which = np.asarray(which, dtype=np.int64)
    Parr = np.asarray(P)
    a = Parr[seg[which, 0]]
    b = Parr[seg[which, 1]]
    if np.any(np.hypot(*(b - a).T) < 1e-9 * scale):
        raise RefinementStalled("refinement stalled: subsegment length underflow")
    mids = 0.5 * (a + b)
    start = len(P)
    P.extend(mids)
    new_idx = start + np.arange(len(which))
    keep = np.ones(len(seg), dtype=bool)
    keep[which] = False
    first = np.c_[seg[which, 0], new_idx]
    second = np.c_[new_idx, seg[which, 1]]
    seg = np.vstack([seg[keep], first, second])
    prot = np.concatenate([prot[keep], prot[which], prot[which]])
    return seg, prot, len(which)


def _apex_point(P, s, c):
    """Replacement for a circumcentre encroaching on protected segment ``s``.

    Returns the apex of the equilateral triangle on ``s`` lying on the side of
    ``c``, which sits outside the segment's diametral circle.
    """
    a, b = P[s[0]], P[s[1]]
    m = 0.5 * (a + b)
    d = b - a
    n = np.array([-d[1], d[0]])
    side = np.sign(n @ (c - m))
    if side == 0:
        return None
    return m + side * (np.sqrt(3.0) / 2.0) * n
