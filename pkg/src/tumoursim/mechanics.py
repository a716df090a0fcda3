"""Taylor-Hood P2-P1 velocity-pressure solve on the current tumour domain.

Velocity dofs are numbered ``2 * node + component`` over the P2 nodes of the
whole mesh (vertices first, then edge midpoints); pressure dofs are vertex
indices.  Constraints are applied through a sparse map ``T`` from reduced
to full velocity dofs: free nodes keep both components, boundary nodes with a
single tangent direction keep only the normal component, corner nodes are
pinned.  Pressure vanishes on the domain boundary.
"""

import logging
import weakref
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .fields import clamp_alpha, stress_potential
from .linalg import TripletBuffer, direct_solve, finalize

logger = logging.getLogger(__name__)

TANGENT_TOL = 1e-8

# 6-point degree-4 rule on the reference triangle (barycentric, weights sum to 1)
_A1, _W1 = 0.445948490915965, 0.223381589678011
_A2, _W2 = 0.091576213509771, 0.109951743655322
QUAD_BARY = np.array([
    [_A1, _A1, 1 - 2 * _A1], [_A1, 1 - 2 * _A1, _A1], [1 - 2 * _A1, _A1, _A1],
    [_A2, _A2, 1 - 2 * _A2], [_A2, 1 - 2 * _A2, _A2], [1 - 2 * _A2, _A2, _A2],
])
QUAD_W = np.array([_W1] * 3 + [_W2] * 3)


class MechanicsError(ValueError):
    pass


def p2_values(L):
    """P2 basis values at barycentric points ``L`` (m, 3) -> (m, 6)."""
    L = np.atleast_2d(L)
    out = np.empty((len(L), 6))
    for k in range(3):
        i, j = (k + 1) % 3, (k + 2) % 3
        out[:, k] = L[:, k] * (2 * L[:, k] - 1)
        out[:, 3 + k] = 4 * L[:, i] * L[:, j]
    return out


def p2_grad_coeffs(L):
    """``C[m, a, k]`` with grad phi_a = sum_k C[m, a, k] grad lambda_k at point m."""
    L = np.atleast_2d(L)
    C = np.zeros((len(L), 6, 3))
    for k in range(3):
        i, j = (k + 1) % 3, (k + 2) % 3
        C[:, k, k] = 4 * L[:, k] - 1
        C[:, 3 + k, i] = 4 * L[:, j]
        C[:, 3 + k, j] = 4 * L[:, i]
    return C


_PHI = p2_values(QUAD_BARY)
_C = p2_grad_coeffs(QUAD_BARY)
# reference tensors for the element integrals (to be scaled by the area)
_S = np.einsum("m,mak,mbl->abkl", QUAD_W, _C, _C)           # grad-grad
_P = np.einsum("m,mq,mak->qak", QUAD_W, QUAD_BARY, _C)       # lambda_q * grad phi_a
_D = np.einsum("m,mak->ak", QUAD_W, _C)                       # grad phi_a


def bary_gradients(mesh):
    """Constant gradients of the barycentric coordinates, shape (NT, 3, 2)."""
    p = mesh.vertices[mesh.triangles]
    g = np.empty((mesh.n_triangles, 3, 2))
    for k in range(3):
        i, j = (k + 1) % 3, (k + 2) % 3
        g[:, k, 0] = p[:, i, 1] - p[:, j, 1]
        g[:, k, 1] = p[:, j, 0] - p[:, i, 0]
    return g / (2.0 * mesh.areas)[:, None, None]


@dataclass
class _ElementCache:
    G: np.ndarray      # (NT, 6, 6, 2, 2)  int d_i phi_a d_j phi_b
    Bq: np.ndarray     # (NT, 3, 6, 2)     int lambda_q d_d phi_a
    Dv: np.ndarray     # (NT, 6, 2)        int d_d phi_a
    K1: np.ndarray     # (NT, 3, 3)        int grad lambda_q . grad lambda_r
    nodes: np.ndarray  # (NT, 6) global P2 node per local node


_cache = weakref.WeakKeyDictionary()


def element_cache(mesh):
    ec = _cache.get(mesh)
    if ec is None:
        gl = bary_gradients(mesh)
        a = mesh.areas
        G = a[:, None, None, None, None] * np.einsum("abkl,tki,tlj->tabij", _S, gl, gl)
        Bq = a[:, None, None, None] * np.einsum("qak,tkd->tqad", _P, gl)
        Dv = a[:, None, None] * np.einsum("ak,tkd->tad", _D, gl)
        K1 = a[:, None, None] * np.einsum("tqi,tri->tqr", gl, gl)
        nodes = np.c_[mesh.triangles, mesh.n_vertices + mesh.tri_edges]
        ec = _ElementCache(G, Bq, Dv, K1, nodes)
        _cache[mesh] = ec
    return ec


@dataclass
class THSpace:
    """Dof maps and constraints for one tumour domain.

    Attributes
    ----------
    mesh, mask
    active_tris : member triangle indices
    active_nodes : (NV + NE,) bool, P2 nodes of member triangles
    pinned : (NV + NE,) bool, corner nodes with u = 0
    normal : (NV + NE, 2) unit normal for single-tangent boundary nodes, zero elsewhere
    constrained : (NV + NE,) bool, single-tangent boundary nodes
    pressure_dofs : vertex indices carrying a pressure unknown
    T : sparse (2 (NV + NE), n_u) map from reduced to full velocity dofs
    """
    mesh: object
    mask: object
    active_tris: np.ndarray
    active_nodes: np.ndarray
    pinned: np.ndarray
    constrained: np.ndarray
    normal: np.ndarray
    pressure_dofs: np.ndarray
    T: sparse.csr_matrix

    @property
    def n_velocity(self):
        return self.T.shape[1]

    @property
    def n_pressure(self):
        return len(self.pressure_dofs)


def build_space(mask, mesh=None):
    """Dof maps and boundary constraint records for the tumour domain ``mask``."""
    mesh = mask.mesh if mesh is None else mesh
    if mask.is_empty:
        raise MechanicsError("empty tumour domain")
    nv, ne = mesh.n_vertices, mesh.n_edges
    nn = nv + ne
    tris = mask.triangles
    active = np.zeros(nn, dtype=bool)
    active[mesh.triangles[tris].ravel()] = True
    active[nv + mesh.tri_edges[tris].ravel()] = True

    be = mask.boundary_edges
    ends = mesh.edges[be]
    tau = mesh.vertices[ends[:, 1]] - mesh.vertices[ends[:, 0]]
    tau /= np.hypot(tau[:, 0], tau[:, 1])[:, None]

    # vertex nodes: compare every incident boundary tangent with one reference
    ref = np.zeros((nv, 2))
    ref[ends[:, 0]] = tau
    ref[ends[:, 1]] = tau
    pinned = np.zeros(nn, dtype=bool)
    for side in (0, 1):
        r = ref[ends[:, side]]
        cross = np.abs(r[:, 0] * tau[:, 1] - r[:, 1] * tau[:, 0])
        pinned[ends[cross > TANGENT_TOL, side]] = True
    on_bnd = np.zeros(nn, dtype=bool)
    on_bnd[ends.ravel()] = True
    on_bnd[nv + be] = True
    constrained = on_bnd & ~pinned

    tangent = np.zeros((nn, 2))
    tangent[:nv] = ref
    tangent[nv + be] = tau
    normal = np.where(constrained[:, None], np.c_[-tangent[:, 1], tangent[:, 0]], 0.0)

    free = active & ~on_bnd
    rows, cols, vals = [], [], []
    col = 0
    idx_free = np.flatnonzero(free)
    k = np.arange(len(idx_free))
    rows += [2 * idx_free, 2 * idx_free + 1]
    cols += [col + 2 * k, col + 2 * k + 1]
    vals += [np.ones(len(k)), np.ones(len(k))]
    col += 2 * len(k)
    idx_con = np.flatnonzero(constrained & active)
    k = np.arange(len(idx_con))
    rows += [2 * idx_con, 2 * idx_con + 1]
    cols += [col + k, col + k]
    vals += [normal[idx_con, 0], normal[idx_con, 1]]
    col += len(k)
    T = sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(2 * nn, col))

    if not np.any(free):
        raise MechanicsError("degenerate tumour domain: no interior edge")
    bverts = mask.boundary_vertices()
    pdofs = np.flatnonzero(active[:nv] & ~bverts)
    return THSpace(mesh, mask, tris, active, pinned & active, constrained & active,
                   normal, pdofs, T)


@dataclass
class SaddleSystem:
    """Full-space blocks and the reduced block system ``[[A1, -B^T], [B, A2]]``.

    ``A1``, ``B``, ``A2``, ``L`` act on the full velocity and vertex pressure
    spaces; ``K`` and ``rhs`` are the constrained, reduced operator and load
    (velocity dofs first, then pressure dofs).
    """
    space: THSpace
    A1: sparse.csr_matrix
    B: sparse.csr_matrix
    A2: sparse.csr_matrix
    L: np.ndarray
    G: np.ndarray
    K: sparse.csr_matrix
    rhs: np.ndarray

    def energy_terms(self, u, p):
        """``(a1(u, u), a2(p, p), L(u))`` for full-space fields."""
        uf = np.asarray(u, dtype=float).ravel()
        pf = np.asarray(p, dtype=float)
        return float(uf @ (self.A1 @ uf)), float(pf @ (self.A2 @ pf)), float(self.L @ uf)


def assemble(space, alpha, params, body_force=None, pressure_source=None):
    """Assemble the velocity-pressure system for the cell fraction ``alpha``.

    ``alpha`` is piecewise constant and clamped before use.  The optional
    callables ``body_force(x, y) -> (fx, fy)`` and ``pressure_source(x, y)``
    add ``int f.v`` and ``int g z`` to the loads (used by verification tests).
    """
    mesh = space.mesh
    ec = element_cache(mesh)
    t = space.active_tris
    a = clamp_alpha(np.asarray(alpha, dtype=float)[t])
    nn = mesh.n_vertices + mesh.n_edges
    nv = mesh.n_vertices
    mu, lam = params.mu, params.lam

    G = ec.G[t]
    trace = G[..., 0, 0] + G[..., 1, 1]
    eye = np.eye(2)
    loc = mu * (np.einsum("tab,cd->tacbd", trace, eye) + G.transpose(0, 1, 4, 2, 3)) \
        + lam * G.transpose(0, 1, 3, 2, 4)
    loc *= a[:, None, None, None, None]
    dofs = (2 * ec.nodes[t][:, :, None] + np.arange(2)).reshape(-1, 12)
    buf = TripletBuffer((2 * nn, 2 * nn))
    buf.add_block(dofs, dofs, loc.reshape(-1, 12, 12))
    A1 = finalize(buf)

    buf = TripletBuffer((nv, 2 * nn))
    buf.add_block(mesh.triangles[t], dofs, ec.Bq[t].reshape(-1, 3, 12))
    B = finalize(buf)

    coef = (1.0 - a) / (params.k * a)
    buf = TripletBuffer((nv, nv))
    buf.add_block(mesh.triangles[t], mesh.triangles[t], coef[:, None, None] * ec.K1[t])
    A2 = finalize(buf)

    H = stress_potential(a, params)
    L = np.bincount(dofs.ravel(), weights=(H[:, None, None] * ec.Dv[t]).ravel(),
                    minlength=2 * nn)
    G_p = np.zeros(nv)
    if body_force is not None or pressure_source is not None:
        xq = np.einsum("mk,tki->tmi", QUAD_BARY, mesh.vertices[mesh.triangles[t]])
        wq = mesh.areas[t][:, None] * QUAD_W
        if body_force is not None:
            fx, fy = body_force(xq[..., 0], xq[..., 1])
            f = np.stack([np.broadcast_to(fx, wq.shape), np.broadcast_to(fy, wq.shape)], -1)
            floc = np.einsum("tm,ma,tmd->tad", wq, _PHI, f)
            L = L + np.bincount(dofs.ravel(), weights=floc.ravel(), minlength=2 * nn)
        if pressure_source is not None:
            g = np.broadcast_to(pressure_source(xq[..., 0], xq[..., 1]), wq.shape)
            gloc = np.einsum("tm,mq,tm->tq", wq, QUAD_BARY, g)
            G_p = np.bincount(mesh.triangles[t].ravel(), weights=gloc.ravel(), minlength=nv)

    T = space.T
    pd = space.pressure_dofs
    Br = (B[pd] @ T).tocsr()
    K = sparse.bmat([[T.T @ A1 @ T, -Br.T], [Br, A2[pd][:, pd]]], format="csr")
    rhs = np.concatenate([T.T @ L, G_p[pd]])
    return SaddleSystem(space, A1, B, A2, L, G_p, K, rhs)


def solve_up(system):
    """Solve and extend by zero: returns P2 velocity (NV + NE, 2) and vertex pressure."""
    sp = system.space
    mesh = sp.mesh
    x = direct_solve(system.K, system.rhs)
    nu = sp.n_velocity
    u = (sp.T @ x[:nu]).reshape(-1, 2)
    u[~sp.active_nodes] = 0.0
    p = np.zeros(mesh.n_vertices)
    p[sp.pressure_dofs] = x[nu:]
    return u, p


def solve_mechanics(mask, alpha, params):
    """Velocity and pressure for the domain ``mask`` and cell fraction ``alpha``."""
    space = build_space(mask)
    return solve_up(assemble(space, alpha, params))
