"""Backward-Euler, mass-lumped P1 nutrient solve."""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .linalg import TripletBuffer, direct_solve, finalize
from .mechanics import bary_gradients

logger = logging.getLogger(__name__)

BOUND_TOL = 1e-12


class NutrientError(ValueError):
    pass


@dataclass
class NutrientSystem:
    """Lumped mass, stiffness, reaction and Dirichlet data on the active vertices.

    ``active`` marks the vertices of the active triangles; ``dirichlet`` the
    subset carrying prescribed values ``c_dir`` (full length, only those
    entries are used).  ``exterior_value`` fills inactive vertices (1 for
    NUM, unused for NLM where every vertex is active).
    """
    mesh: object
    mass: np.ndarray
    K: sparse.csr_matrix
    reaction: np.ndarray
    active: np.ndarray
    dirichlet: np.ndarray
    c_dir: np.ndarray
    c_prev: np.ndarray
    delta: float
    exterior_value: float = 1.0
    source: np.ndarray | None = None


def stiffness(mesh, triangles, eta):
    gl = bary_gradients(mesh)[triangles]
    loc = eta * mesh.areas[triangles][:, None, None] * np.einsum("tqi,tri->tqr", gl, gl)
    buf = TripletBuffer((mesh.n_vertices, mesh.n_vertices))
    t = mesh.triangles[triangles]
    buf.add_block(t, t, loc)
    return finalize(buf)


def box_dirichlet_values(mesh, params):
    """NLM edge data: ``cb_low`` on x = -ell or y = -ell, else ``cb_high``.

    Corners touching a low edge take ``cb_low``.
    """
    v = mesh.vertices
    tol = 1e-9 * params.ell
    low = (np.abs(v[:, 0] + params.ell) < tol) | (np.abs(v[:, 1] + params.ell) < tol)
    return np.where(low, params.cb_low, params.cb_high)


def vertex_alpha(mesh, alpha, triangles):
    """Area-weighted average of the piecewise-constant ``alpha`` at each vertex."""
    t = mesh.triangles[triangles]
    a = mesh.areas[triangles]
    num = np.bincount(t.ravel(), weights=np.repeat(a * np.asarray(alpha)[triangles], 3),
                      minlength=mesh.n_vertices)
    den = np.bincount(t.ravel(), weights=np.repeat(a, 3), minlength=mesh.n_vertices)
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def assemble_nutrient(mesh, mask, alpha, c_prev, params, source=None, dirichlet=None, eta=None):
    """Assemble the lumped system for one nutrient step.

    Parameters
    ----------
    mesh : TriMesh
    mask : DomainMask
        Tumour domain; the active region for NUM (ignored for NLM, which
        uses the whole box).
    alpha : (NT,) cell volume fraction at the new step
    c_prev : (NV,) nutrient at the previous step
    params : ModelParams
    source : (NV,) optional nodal source added to the right-hand side
        (verification hook)
    dirichlet : (NV,) optional override for the boundary values
    eta : optional diffusivity overriding ``params.eta``; unlike the
        configuration value it may be zero (verification hook)
    """
    c_prev = np.asarray(c_prev, dtype=float)
    if params.variant == "NUM":
        tris = mask.triangles
        dir_nodes = mask.boundary_vertices()
        c_dir = np.ones(mesh.n_vertices)
    else:
        tris = np.arange(mesh.n_triangles)
        dir_nodes = mesh.is_boundary_vertex.copy()
        c_dir = box_dirichlet_values(mesh, params)
    if dirichlet is not None:
        c_dir = np.asarray(dirichlet, dtype=float)
    active = np.zeros(mesh.n_vertices, dtype=bool)
    active[mesh.triangles[tris].ravel()] = True
    w = np.bincount(mesh.triangles[tris].ravel(), weights=np.repeat(mesh.areas[tris] / 3.0, 3),
                    minlength=mesh.n_vertices)
    eta = params.eta if eta is None else float(eta)
    if eta < 0:
        raise NutrientError(f"eta = {eta!r} must be non-negative")
    K = stiffness(mesh, tris, eta)
    av = vertex_alpha(mesh, alpha, tris)
    reaction = params.Q * av / (1.0 + params.Qhat * c_prev) * w
    return NutrientSystem(mesh, w, K, reaction, active, dir_nodes & active, c_dir, c_prev,
                          params.delta, 1.0, None if source is None else np.asarray(source))


def solve_nutrient(system):
    """Solve ``(M + dK + dR) c = M c_prev`` with Dirichlet elimination.

    Returns the full nodal field; inactive vertices get ``exterior_value``.
    Values outside [0, 1] by more than roundoff raise on Delaunay meshes and
    are clipped with a warning otherwise.
    """
    s = system
    dt = s.delta
    unk = np.flatnonzero(s.active & ~s.dirichlet)
    dn = np.flatnonzero(s.dirichlet)
    c = np.full(s.mesh.n_vertices, s.exterior_value, dtype=float)
    c[dn] = s.c_dir[dn]
    if unk.size:
        A = (dt * s.K[unk][:, unk] + sparse.diags(s.mass[unk] + dt * s.reaction[unk])).tocsr()
        rhs = s.mass[unk] * s.c_prev[unk] - dt * (s.K[unk][:, dn] @ s.c_dir[dn])
        if s.source is not None:
            rhs = rhs + dt * s.mass[unk] * s.source[unk]
        c[unk] = direct_solve(A, rhs)
    if s.source is None:
        c = _check_bounds(c, s.mesh.is_delaunay)
    return c


def _check_bounds(c, delaunay):
    lo, hi = c.min(), c.max()
    if lo >= 0.0 and hi <= 1.0:
        return c
    if lo >= -BOUND_TOL and hi <= 1.0 + BOUND_TOL:
        return np.clip(c, 0.0, 1.0)
    msg = f"nutrient left [0, 1]: min {lo:.3e}, max {hi:.3e}"
    if delaunay:
        raise NutrientError(msg)
    logger.warning("%s on a non-Delaunay mesh; clipping", msg)
    return np.clip(c, 0.0, 1.0)
