"""Box meshes: Ruppert-refined, structured criss-cross and radially aligned."""

import numpy as np
from scipy.spatial import Delaunay

from .core import MeshError, MeshParams, TriMesh, jitter_and_rotate
from .pslg import box_pslg
from .ruppert import ruppert_refine

DEFAULT_MAX_AREA = 0.04


def shape_mesh(shape, ell=5.0, params=None, seed=None):
    """Quality mesh of the box conforming to the boundary loops of ``shape``."""
    if params is None:
        params = MeshParams(max_area=DEFAULT_MAX_AREA)
    loops = shape.loops() if shape is not None else []
    for loop in loops:
        if np.abs(loop).max() >= ell:
            raise MeshError("initial shape does not fit inside the box")
    mesh = ruppert_refine(box_pslg(ell, loops), params)
    return jitter_and_rotate(mesh, params, seed=seed)


def structured_mesh(n, ell=5.0):
    """``n x n`` squares, each split into four triangles by its centre."""
    if n < 1:
        raise MeshError("n must be positive")
    g = np.linspace(-ell, ell, n + 1)
    X, Y = np.meshgrid(g, g, indexing="xy")
    corners = np.c_[X.ravel(), Y.ravel()]
    h = g[1] - g[0]
    cx, cy = np.meshgrid(g[:-1] + 0.5 * h, g[:-1] + 0.5 * h, indexing="xy")
    centres = np.c_[cx.ravel(), cy.ravel()]
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    i, j = i.ravel(), j.ravel()
    v00 = j * (n + 1) + i
    v10 = v00 + 1
    v01 = v00 + n + 1
    v11 = v01 + 1
    c = len(corners) + j * n + i
    tris = np.vstack([np.c_[v00, v10, c], np.c_[v10, v11, c],
                      np.c_[v11, v01, c], np.c_[v01, v00, c]])
    verts = np.vstack([corners, centres])
    pinned = np.zeros(len(verts), dtype=bool)
    pinned[:len(corners)] = (np.abs(corners) == ell).any(axis=1)
    return TriMesh(verts, tris, pinned=pinned)


def radial_mesh(ell=5.0, h=0.2, stagger=True):
    """Mesh whose vertices lie on concentric circles ``r_k = k h`` about the origin.

    Each ring carries ``round(2 pi k)`` equally spaced nodes, alternate rings
    offset by half a spacing; rings are clipped to the box and the box edges
    receive nodes at spacing ``h``.
    """
    pts = [np.zeros((1, 2))]
    kmax = int(np.ceil(np.sqrt(2.0) * ell / h))
    for k in range(1, kmax + 1):
        r = k * h
        m = max(6, int(round(2 * np.pi * r / h)))
        off = 0.5 * (k % 2) if stagger else 0.0
        t = 2 * np.pi * (np.arange(m) + off) / m
        ring = np.c_[r * np.cos(t), r * np.sin(t)]
        ring = ring[np.all(np.abs(ring) < ell - 0.5 * h, axis=1)]
        pts.append(ring)
    nb = int(round(2 * ell / h))
    s = np.linspace(-ell, ell, nb + 1)
    box = np.vstack([np.c_[s, -ell + 0 * s], np.c_[s, ell + 0 * s],
                     np.c_[-ell + 0 * s[1:-1], s[1:-1]], np.c_[ell + 0 * s[1:-1], s[1:-1]]])
    pts.append(box)
    P = np.vstack(pts)
    T = Delaunay(P).simplices
    pinned = np.zeros(len(P), dtype=bool)
    pinned[-len(box):] = True
    return TriMesh(P, T, pinned=pinned)


def write_mesh(mesh, path):
    """Write the ``NV NT`` text format with full double precision."""
    with open(path, "w") as fh:
        fh.write(f"{mesh.n_vertices} {mesh.n_triangles}\n")
        for x, y in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"{i} {j} {k}\n")


def read_mesh(path):
    with open(path) as fh:
        lines = [l.split() for l in fh if l.strip()]
    try:
        nv, nt = int(lines[0][0]), int(lines[0][1])
        V = np.array([[float(a), float(b)] for a, b in (l[:2] for l in lines[1:1 + nv])])
        T = np.array([[int(a) for a in l[:3]] for l in lines[1 + nv:1 + nv + nt]], dtype=np.int64)
    except (IndexError, ValueError) as exc:
        raise MeshError(f"{path}: malformed mesh file ({exc})") from exc
    if len(V) != nv or len(T) != nt:
        raise MeshError(f"{path}: truncated mesh file")
    return TriMesh(V.reshape(-1, 2), T.reshape(-1, 3))
