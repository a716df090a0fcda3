"""Time stepping: transport, domain update, mechanics, nutrient."""

import logging
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .domain import TumourExtinct, initial_mask, update_mask
from .mesh import jitter_and_rotate, radial_mesh, shape_mesh
from .linalg import SingularSystemError
from .mechanics import MechanicsError, solve_mechanics
from .nutrient import NutrientError, assemble_nutrient, solve_nutrient
from .transport import advance_alpha, cfl_report, compute_fluxes

logger = logging.getLogger(__name__)

SERIES_COLUMNS = ("t", "radius", "area", "cell_volume", "components",
                  "max_speed", "min_c", "max_c")


class TimeSeriesRow(NamedTuple):
    t: float
    radius: float
    area: float
    cell_volume: float
    components: int
    max_speed: float
    min_c: float
    max_c: float


@dataclass
class SimState:
    """Fields at step ``n``.

    ``u`` is the P2 velocity (vertices then edge midpoints), ``p`` and ``c``
    are vertex fields, ``alpha`` is per triangle.  ``extinct`` is set when the
    tumour domain vanished; the fields are then those of the last step.
    """
    mesh: object
    n: int
    t: float
    alpha: np.ndarray
    mask: object
    u: np.ndarray
    p: np.ndarray
    c: np.ndarray
    counters: dict = field(default_factory=dict)
    extinct: bool = False


def initialize(mesh, shape, params):
    """Geometric initial domain, initial fractions and the first mechanics solve."""
    mask = initial_mask(mesh, shape)
    alpha = np.where(mask.member, params.alpha0_value, 0.0)
    if params.variant == "NUM":
        c = np.ones(mesh.n_vertices)
        inner = mask.active_vertices() & ~mask.boundary_vertices()
        c[inner] = params.c0_value
    else:
        c = np.zeros(mesh.n_vertices)
    u, p = solve_mechanics(mask, alpha, params)
    return SimState(mesh, 0, 0.0, alpha, mask, u, p, c)


def step(state, params, C_cfl=0.5, C_icfl=0.0):
    """Advance by ``params.delta`` through ``params.substeps`` scheme steps."""
    inner = params.with_(delta=params.inner_delta, substeps=1)
    n = state.n + 1
    for k in range(params.substeps):
        try:
            state = scheme_step(state, inner, C_cfl, C_icfl)
        except (SingularSystemError, MechanicsError, NutrientError) as exc:
            exc.args = (f"step {n} (substep {k + 1}): {exc}",) + exc.args[1:]
            raise
        if state.extinct:
            break
    state.n = n
    state.t = n * params.delta
    return state


def scheme_step(state, params, C_cfl=0.5, C_icfl=0.0):
    """One step of the scheme with step length ``params.delta``.

    Every coefficient is lagged as the scheme prescribes: transport uses the
    previous velocity and nutrient, the domain update the new fraction,
    mechanics the new domain and fraction, and the nutrient solve the new
    domain and fraction with the previous nutrient.
    """
    mesh = state.mesh
    counters = dict(state.counters)
    cfl = cfl_report(state.u, params, mesh, C_cfl, C_icfl)
    if not cfl.cfl_ok:
        counters["cfl_violations"] = counters.get("cfl_violations", 0) + 1
        logger.debug("step %d: CFL quantity %.3g above %.3g", state.n + 1, cfl.q_max, C_cfl)
    if not cfl.icfl_ok:
        counters["icfl_violations"] = counters.get("icfl_violations", 0) + 1
    fluxes = compute_fluxes(state.alpha, state.u, mesh)
    alpha = advance_alpha(state.alpha, fluxes, state.c, params, mesh, counters)
    n = state.n + 1
    t = state.t + params.delta
    try:
        mask = update_mask(state.mask, alpha, params)
    except TumourExtinct:
        logger.info("tumour extinct at t = %.6g", t)
        return replace(state, n=n, t=t, alpha=alpha, counters=counters, extinct=True,
                       u=np.zeros_like(state.u), p=np.zeros_like(state.p))
    u, p = solve_mechanics(mask, alpha, params)
    system = assemble_nutrient(mesh, mask, alpha, state.c, params)
    c = solve_nutrient(system)
    return SimState(mesh, n, t, alpha, mask, u, p, c, counters)


def series_row(state):
    mesh = state.mesh
    speed = np.hypot(state.u[:, 0], state.u[:, 1])
    if state.extinct:
        area, radius, comps = 0.0, 0.0, 0
    else:
        area, radius, comps = state.mask.area, state.mask.radius, state.mask.n_components
    return TimeSeriesRow(float(state.t), float(radius), float(area),
                         float(mesh.areas @ state.alpha), int(comps), float(speed.max()),
                         float(state.c.min()), float(state.c.max()))


def run(mesh, shape, params, snapshot_every=10, on_snapshot=None, C_cfl=0.5, C_icfl=0.0):
    """Run to ``params.T_final``.

    Returns the list of :class:`TimeSeriesRow` (one per step, including the
    initial state) and the final state.  ``on_snapshot(state)`` is called for
    the initial state and every ``snapshot_every`` steps.
    """
    ratio = params.T_final / params.delta
    if abs(ratio - round(ratio)) > 1e-9:
        logger.warning("T_final %.6g is not a multiple of delta; truncating to %d steps",
                       params.T_final, params.n_steps)
    state = initialize(mesh, shape, params)
    rows = [series_row(state)]
    if on_snapshot is not None:
        on_snapshot(state)
    for _ in range(params.n_steps):
        state = step(state, params, C_cfl, C_icfl)
        rows.append(series_row(state))
        if state.extinct:
            break
        if on_snapshot is not None and snapshot_every and state.n % snapshot_every == 0:
            on_snapshot(state)
    if state.counters:
        logger.info("run finished with counters %s", state.counters)
    return rows, state


def build_mesh(cfg):
    """Background mesh described by a :class:`~tumoursim.config.Config`."""
    ell = cfg.model.ell
    if cfg.run.mesh_kind == "radial":
        return jitter_and_rotate(radial_mesh(ell, cfg.run.radial_h), cfg.mesh, seed=cfg.run.seed)
    return shape_mesh(cfg.shape, ell, cfg.mesh, seed=cfg.run.seed)


def run_config(cfg, mesh=None, on_snapshot=None):
    """:func:`run` with every setting taken from ``cfg``; builds the mesh if not given."""
    if mesh is None:
        mesh = build_mesh(cfg)
    return run(mesh, cfg.shape, cfg.model, snapshot_every=cfg.run.snapshot_every,
               on_snapshot=on_snapshot, C_cfl=cfg.run.C_cfl, C_icfl=cfg.run.C_icfl)
