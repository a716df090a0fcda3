"""Static triangulation with the geometric and adjacency data the solvers use."""

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class MeshParams:
    """Mesh generation / perturbation controls.

    ``theta_min`` is in degrees; ``rotation`` in radians about the origin.
    """
    theta_min: float = 20.0
    max_area: float | None = None
    jitter: float = 0.0
    rotation: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.theta_min <= 20.7:
            raise ValueError(f"theta_min must lie in (0, 20.7], got {self.theta_min}")
        if self.jitter < 0.0:
            raise ValueError("jitter must be non-negative")
        if self.max_area is not None and self.max_area <= 0.0:
            raise ValueError("max_area must be positive")


def _signed_areas(vertices, triangles):
    p0 = vertices[triangles[:, 0]]
    p1 = vertices[triangles[:, 1]]
    p2 = vertices[triangles[:, 2]]
    return 0.5 * ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
                  - (p1[:, 1] - p0[:, 1]) * (p2[:, 0] - p0[:, 0]))


class TriMesh:
    """Immutable triangulation of the box plus derived connectivity.

    Local edge ``k`` of triangle ``j`` is the edge opposite local vertex ``k``.
    Every edge has an owner (the lower-indexed incident triangle) and a
    neighbour (``-1`` on the boundary); ``edge_normals`` point out of the owner.

    Attributes
    ----------
    vertices : (NV, 2) float array
    triangles : (NT, 3) int array, anticlockwise
    areas, centroids : per-triangle area and centroid
    edges : (NE, 2) int array of endpoint indices
    edge_tris : (NE, 2) int array, owner then neighbour (or -1)
    edge_lengths, edge_midpoints, edge_normals : per-edge geometry
    tri_edges : (NT, 3) edge index of local edge k
    tri_neighbors : (NT, 3) triangle across local edge k, or -1
    tri_normals : (NT, 3, 2) outward unit normal of local edge k
    boundary_edges : indices of edges with a single incident triangle
    pinned : (NV,) bool, vertices that perturbations must not move
    is_delaunay : bool
    """

    def __init__(self, vertices, triangles, pinned=None):
        vertices = np.array(vertices, dtype=float)
        triangles = np.array(triangles, dtype=np.int64).reshape(-1, 3)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise MeshError("vertices must have shape (NV, 2)")
        nv = len(vertices)
        if triangles.size and (triangles.min() < 0 or triangles.max() >= nv):
            raise MeshError("triangle references a vertex index out of range")
        if np.any((triangles[:, 0] == triangles[:, 1]) | (triangles[:, 1] == triangles[:, 2])
                  | (triangles[:, 0] == triangles[:, 2])):
            raise MeshError("triangle with repeated vertex")

        sa = _signed_areas(vertices, triangles)
        flip = sa < 0
        if np.any(flip):
            triangles[flip] = triangles[flip][:, [0, 2, 1]]
            sa = np.abs(sa)
        if np.any(sa <= 0):
            raise MeshError(f"degenerate triangle {int(np.flatnonzero(sa <= 0)[0])}")

        key = np.sort(triangles, axis=1)
        _, first, counts = np.unique(key, axis=0, return_index=True, return_counts=True)
        if np.any(counts > 1):
            raise MeshError(f"duplicate triangle {int(first[counts > 1][0])}")

        self.vertices = vertices
        self.triangles = triangles
        self.areas = sa
        self.centroids = vertices[triangles].mean(axis=1)
        self.pinned = np.zeros(nv, dtype=bool) if pinned is None else np.array(pinned, dtype=bool)
        self._build_edges()
        self.is_delaunay = bool(self._delaunay_check())
        self._lumped = None
        for arr in (self.vertices, self.triangles, self.areas, self.centroids, self.edges,
                    self.edge_tris, self.edge_lengths, self.edge_midpoints, self.edge_normals,
                    self.tri_edges, self.tri_neighbors, self.tri_normals, self.pinned):
            arr.flags.writeable = False

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_edges(self):
        return len(self.edges)

    def _build_edges(self):
        t = self.triangles
        nt = len(t)
        # local edge k joins the two vertices other than k
        loc = np.array([[1, 2], [2, 0], [0, 1]])
        half = t[:, loc].reshape(-1, 2)
        key = np.sort(half, axis=1)
        edges, inverse, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
        inverse = inverse.ravel()
        if np.any(counts > 2):
            bad = edges[np.flatnonzero(counts > 2)[0]]
            raise MeshError(f"non-manifold edge ({bad[0]}, {bad[1]}) has {counts.max()} triangles")
        ne = len(edges)
        tri_of_half = np.repeat(np.arange(nt), 3)
        order = np.lexsort((tri_of_half, inverse))
        edge_tris = -np.ones((ne, 2), dtype=np.int64)
        sorted_edges = inverse[order]
        starts = np.searchsorted(sorted_edges, np.arange(ne))
        edge_tris[:, 0] = tri_of_half[order][starts]
        second = counts == 2
        edge_tris[second, 1] = tri_of_half[order][starts[second] + 1]

        tri_edges = inverse.reshape(nt, 3)
        other = np.where(edge_tris[tri_edges, 0] == np.arange(nt)[:, None],
                         edge_tris[tri_edges, 1], edge_tris[tri_edges, 0])

        v = self.vertices
        a = v[edges[:, 0]]
        b = v[edges[:, 1]]
        lengths = np.hypot(*(b - a).T)
        mids = 0.5 * (a + b)

        # outward normals per triangle-local edge: rotate the anticlockwise
        # edge vector (from vertex k+1 to k+2) clockwise by 90 degrees
        p = v[t]
        ev = p[:, [2, 0, 1]] - p[:, [1, 2, 0]]
        tri_normals = np.stack([ev[..., 1], -ev[..., 0]], axis=-1)
        tri_normals /= np.linalg.norm(tri_normals, axis=-1, keepdims=True)

        owner = edge_tris[:, 0]
        k_owner = np.argmax(tri_edges[owner] == np.arange(ne)[:, None], axis=1)
        normals = tri_normals[owner, k_owner]

        self.edges = edges
        self.edge_tris = edge_tris
        self.edge_lengths = lengths
        self.edge_midpoints = mids
        self.edge_normals = normals
        self.tri_edges = tri_edges
        self.tri_neighbors = other
        self.tri_normals = tri_normals
        self.boundary_edges = np.flatnonzero(edge_tris[:, 1] < 0)
        self.boundary_edges.flags.writeable = False
        bv = np.zeros(len(v), dtype=bool)
        bv[edges[self.boundary_edges].ravel()] = True
        self.is_boundary_vertex = bv
        bv.flags.writeable = False

    def _delaunay_check(self, tol=1e-10):
        interior = np.flatnonzero(self.edge_tris[:, 1] >= 0)
        if interior.size == 0:
            return True
        # sum of the two angles facing the edge must not exceed pi
        cot = self._opposite_cotangents()
        s = cot[self.edge_tris[interior, 0], self._local_index(interior, 0)] + \
            cot[self.edge_tris[interior, 1], self._local_index(interior, 1)]
        return np.all(s >= -tol)

    def _local_index(self, edges, side):
        tris = self.edge_tris[edges, side]
        return np.argmax(self.tri_edges[tris] == edges[:, None], axis=1)

    def _opposite_cotangents(self):
        """cot of the angle at local vertex k (facing local edge k)."""
        p = self.vertices[self.triangles]
        u = p[:, [1, 2, 0]] - p
        w = p[:, [2, 0, 1]] - p
        dot = np.einsum("tki,tki->tk", u, w)
        cross = u[..., 0] * w[..., 1] - u[..., 1] * w[..., 0]
        return dot / cross

    def angles(self):
        """Interior angles (radians), shape (NT, 3), angle k at local vertex k."""
        p = self.vertices[self.triangles]
        u = p[:, [1, 2, 0]] - p
        w = p[:, [2, 0, 1]] - p
        dot = np.einsum("tki,tki->tk", u, w)
        cross = np.abs(u[..., 0] * w[..., 1] - u[..., 1] * w[..., 0])
        return np.arctan2(cross, dot)

    def min_angle(self):
        return float(np.degrees(self.angles().min()))

    @property
    def lumped_weights(self):
        if self._lumped is None:
            self._lumped = lumped_weights(self)
            self._lumped.flags.writeable = False
        return self._lumped

    def bounding_box(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def find_edge(self, a, b):
        """Index of the edge joining vertices ``a`` and ``b``, or -1."""
        lo, hi = min(a, b), max(a, b)
        cand = np.flatnonzero(self.edges[:, 0] == lo)
        hit = cand[self.edges[cand, 1] == hi]
        return int(hit[0]) if hit.size else -1

    def __repr__(self):
        return (f"TriMesh(NV={self.n_vertices}, NT={self.n_triangles}, NE={self.n_edges}, "
                f"delaunay={self.is_delaunay})")


def build_adjacency(vertices, triangles, pinned=None):
    """Construct a :class:`TriMesh` from raw arrays, reorienting clockwise triangles."""
    return TriMesh(vertices, triangles, pinned=pinned)


def lumped_weights(mesh, triangles=None):
    """Row-sum lumped mass: a third of each incident triangle's area per vertex.

    If ``triangles`` (indices or boolean mask) is given, only those triangles
    contribute.
    """
    t = mesh.triangles
    a = mesh.areas
    if triangles is not None:
        t = t[triangles]
        a = a[triangles]
    return np.bincount(t.ravel(), weights=np.repeat(a / 3.0, 3), minlength=mesh.n_vertices)


def jitter_and_rotate(mesh, params, seed=None, max_retries=5):
    """Randomly perturb free vertices and rotate the mesh about the origin.

    Pinned vertices (box boundary, initial-shape loops) are not jittered.
    If a perturbation inverts a triangle the amplitude is halved and the
    draw repeated, at most ``max_retries`` times.
    """
    if params.jitter == 0.0 and params.rotation == 0.0:
        return mesh
    v = mesh.vertices.copy()
    if params.jitter > 0.0:
        rng = np.random.default_rng(seed)
        free = ~(mesh.pinned | mesh.is_boundary_vertex)
        amp = params.jitter
        for attempt in range(max_retries + 1):
            trial = mesh.vertices.copy()
            trial[free] += rng.uniform(-amp, amp, size=(int(free.sum()), 2))
            if np.all(_signed_areas(trial, mesh.triangles) > 0):
                v = trial
                break
            logger.info("jitter %.3g inverted a triangle, halving (attempt %d)", amp, attempt + 1)
            amp *= 0.5
        else:
            raise MeshError(f"jitter inverted triangles after {max_retries} retries")
    if params.rotation != 0.0:
        c, s = _cos_sin(params.rotation)
        v = v @ np.array([[c, s], [-s, c]])
    return TriMesh(v, mesh.triangles, pinned=mesh.pinned)


def _cos_sin(angle):
    # quarter turns are applied exactly so that the rotated mesh is an exact
    # relabelling of the original coordinates
    q = angle / (0.5 * np.pi)
    if abs(q - round(q)) < 1e-12:
        return [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)][int(round(q)) % 4]
    return np.cos(angle), np.sin(angle)


def rotate(mesh, angle):
    return jitter_and_rotate(mesh, MeshParams(rotation=angle))
