"""The discrete tumour domain: a set of triangles captured by thresholding."""

import logging
from typing import NamedTuple

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

logger = logging.getLogger(__name__)


class DomainError(ValueError):
    pass


class TumourExtinct(RuntimeError):
    """The tumour domain became empty; a legitimate end of a run."""


class MaskMetrics(NamedTuple):
    area: float
    radius: float
    n_components: int
    centroid: np.ndarray


class DomainMask:
    """Immutable membership snapshot with boundary, components and metrics.

    Attributes
    ----------
    member : (NT,) bool
    boundary_edges : edge indices with exactly one member side (box-boundary
        edges of member triangles included)
    labels : (NT,) int, component label of member triangles, -1 elsewhere
    n_components, area, radius, centroid
    """

    def __init__(self, mesh, member):
        member = np.array(member, dtype=bool)
        if member.shape != (mesh.n_triangles,):
            raise DomainError(f"membership needs {mesh.n_triangles} flags, got {member.shape}")
        self.mesh = mesh
        self.member = member
        self.member.flags.writeable = False
        owner, nbr = mesh.edge_tris[:, 0], mesh.edge_tris[:, 1]
        m_own = member[owner]
        m_nbr = np.where(nbr >= 0, member[np.maximum(nbr, 0)], False)
        self.boundary_edges = np.flatnonzero(m_own != m_nbr)
        self.labels, self.n_components = _components(mesh, member, m_own & m_nbr)
        self.area = float(mesh.areas[member].sum())
        self.radius = float(np.sqrt(self.area / np.pi))
        if self.area > 0:
            w = mesh.areas[member]
            self.centroid = (mesh.centroids[member] * w[:, None]).sum(axis=0) / w.sum()
        else:
            self.centroid = np.full(2, np.nan)

    @property
    def triangles(self):
        return np.flatnonzero(self.member)

    @property
    def is_empty(self):
        return not self.member.any()

    def boundary_vertices(self):
        v = np.zeros(self.mesh.n_vertices, dtype=bool)
        v[self.mesh.edges[self.boundary_edges].ravel()] = True
        return v

    def active_vertices(self):
        v = np.zeros(self.mesh.n_vertices, dtype=bool)
        v[self.mesh.triangles[self.member].ravel()] = True
        return v

    def metrics(self):
        return metrics(self)

    def __eq__(self, other):
        return isinstance(other, DomainMask) and other.mesh is self.mesh and \
            np.array_equal(other.member, self.member)

    def __repr__(self):
        return (f"DomainMask(n={int(self.member.sum())}, area={self.area:.4g}, "
                f"components={self.n_components})")


def _components(mesh, member, both):
    nt = mesh.n_triangles
    e = mesh.edge_tris[both]
    g = sparse.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(nt, nt))
    _, lab = connected_components(g, directed=False)
    labels = -np.ones(nt, dtype=np.int64)
    if not member.any():
        return labels, 0
    # renumber member components 0..k-1 in order of their lowest triangle index
    uniq, first = np.unique(lab[member], return_index=True)
    order = np.argsort(first)
    remap = np.empty(lab.max() + 1, dtype=np.int64)
    remap[uniq[order]] = np.arange(len(uniq))
    labels[member] = remap[lab[member]]
    return labels, len(uniq)


def initial_mask(mesh, shape):
    """Triangles whose centroid lies strictly inside the analytic shape."""
    member = shape.contains(mesh.centroids)
    if not member.any():
        raise DomainError("initial tumour mask is empty; the shape misses every centroid")
    return DomainMask(mesh, member)


def _exposed(mesh, member):
    """Member triangles with at least one edge on the mask boundary."""
    nb = mesh.tri_neighbors
    outside = (nb < 0) | ~member[np.maximum(nb, 0)]
    return member & outside.any(axis=1)


def update_mask(prev, alpha, params):
    """Threshold update of the tumour domain.

    1. Non-member triangles sharing an edge with the previous mask join it
       when ``alpha >= alpha_thr``.
    2. Member triangles with an edge on the boundary of the enlarged set and
       ``alpha < alpha_thr`` are removed.
    3. Step 2 is repeated until no boundary member lies below the threshold.

    Raises
    ------
    TumourExtinct
        If no triangle survives.
    """
    mesh = prev.mesh
    alpha = np.asarray(alpha, dtype=float)
    thr = params.alpha_thr
    member = prev.member.copy()
    nb = mesh.tri_neighbors
    touches = ((nb >= 0) & prev.member[np.maximum(nb, 0)]).any(axis=1)
    member |= ~prev.member & touches & (alpha >= thr)
    low = alpha < thr
    for _ in range(mesh.n_triangles + 1):
        drop = _exposed(mesh, member) & low
        if not drop.any():
            break
        member &= ~drop
    if not member.any():
        raise TumourExtinct("tumour extinct: every triangle fell below the threshold")
    return DomainMask(mesh, member)


def metrics(mask):
    if mask.is_empty:
        raise DomainError("metrics of an empty mask")
    return MaskMetrics(mask.area, mask.radius, mask.n_components, mask.centroid.copy())
