"""Upwind finite-volume update of the cell volume fraction."""

import logging
from dataclasses import dataclass

import numpy as np

from .fields import birth_rate, death_rate, discrete_average

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FluxTable:
    """Edge fluxes seen from the owner triangle (``mesh.edge_tris[:, 0]``).

    The flux seen from the neighbour is the negation, so only one value per
    edge is stored.  Box-boundary edges carry the outflow ``(u.n)^+ alpha``.
    """
    values: np.ndarray

    def from_side(self, mesh, edge, tri):
        sign = 1.0 if mesh.edge_tris[edge, 0] == tri else -1.0
        return sign * self.values[edge]


@dataclass(frozen=True)
class CflReport:
    q_max: float
    q_min: float
    C_cfl: float
    C_icfl: float

    @property
    def cfl_ok(self):
        return self.q_max <= self.C_cfl

    @property
    def icfl_ok(self):
        return self.q_min >= self.C_icfl


def edge_normal_velocity(u, mesh):
    """``u . n`` at each edge midpoint, with ``n`` pointing out of the owner."""
    u = np.asarray(u, dtype=float).reshape(-1, 2)
    um = u[mesh.n_vertices:mesh.n_vertices + mesh.n_edges]
    return np.einsum("ei,ei->e", um, mesh.edge_normals)


def compute_fluxes(alpha, u, mesh):
    """Upwind fluxes ``(u.n)^+ a_owner - (u.n)^- a_nbr``, with ``a_nbr = 0`` outside the box."""
    alpha = np.asarray(alpha, dtype=float)
    un = edge_normal_velocity(u, mesh)
    owner, nbr = mesh.edge_tris[:, 0], mesh.edge_tris[:, 1]
    a_out = np.where(nbr >= 0, alpha[np.maximum(nbr, 0)], 0.0)
    F = np.maximum(un, 0.0) * alpha[owner] - np.maximum(-un, 0.0) * a_out
    return FluxTable(F)


def flux_divergence(fluxes, mesh):
    """``sum_i l_ji F_ji`` per triangle (net outflow)."""
    F = fluxes.values if isinstance(fluxes, FluxTable) else np.asarray(fluxes, dtype=float)
    lf = mesh.edge_lengths * F
    nt = mesh.n_triangles
    owner, nbr = mesh.edge_tris[:, 0], mesh.edge_tris[:, 1]
    inner = nbr >= 0
    return (np.bincount(owner, weights=lf, minlength=nt)
            - np.bincount(nbr[inner], weights=lf[inner], minlength=nt))


def advance_alpha(alpha_prev, fluxes, c_prev, params, mesh, counters=None):
    """One explicit-flux, semi-implicit-death step for the volume fraction.

    The death term is implicit and active only above the threshold; the
    resulting piecewise-linear scalar equation per cell is solved in closed
    form.  Negative results (a CFL violation symptom) are clamped to zero and
    counted in ``counters["alpha_clamped"]`` when a dict is supplied.
    """
    a = np.asarray(alpha_prev, dtype=float)
    thr = params.alpha_thr
    dt = params.delta
    b = discrete_average(c_prev, lambda c: birth_rate(c, params), mesh)
    d = discrete_average(c_prev, lambda c: death_rate(c, params), mesh)
    R = a - dt / mesh.areas * flux_divergence(fluxes, mesh) \
        + dt * np.maximum(a - thr, 0.0) * (1.0 - a) * b
    new = np.where(R <= thr, R, (R + dt * d * thr) / (1.0 + dt * d))
    neg = new < 0.0
    if np.any(neg):
        n = int(neg.sum())
        logger.warning("advance_alpha: %d negative volume fractions clamped to 0", n)
        if counters is not None:
            counters["alpha_clamped"] = counters.get("alpha_clamped", 0) + n
        new = np.where(neg, 0.0, new)
    return new


def cfl_report(u, params, mesh, C_cfl=0.5, C_icfl=0.0):
    """``max|u| delta / a_min`` and ``max|u| delta / a_max`` (diagnostic only)."""
    u = np.asarray(u, dtype=float).reshape(-1, 2)
    vmax = float(np.hypot(u[:, 0], u[:, 1]).max()) if len(u) else 0.0
    return CflReport(q_max=vmax * params.delta / float(mesh.areas.min()),
                     q_min=vmax * params.delta / float(mesh.areas.max()),
                     C_cfl=C_cfl, C_icfl=C_icfl)
