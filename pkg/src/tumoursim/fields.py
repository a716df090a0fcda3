"""Model parameters, field containers and the pointwise model functions."""

from dataclasses import dataclass, fields as dc_fields, replace

import numpy as np

ALPHA_FLOOR = 1e-6
ALPHA_CEIL = 0.999


class ParameterError(ValueError):
    pass


# variant-dependent defaults: (Q, eta, T_final, c0_value)
VARIANT_DEFAULTS = {
    "NUM": {"Q": 0.5, "eta": 1.0, "T_final": 20.0, "c0_value": 1.0},
    "NLM": {"Q": 0.01, "eta": 2.0, "T_final": 30.0, "c0_value": 0.0},
}


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless model constants.

    ``Q``, ``eta``, ``T_final`` and ``c0_value`` default to ``None`` and are
    then filled from the variant (see :func:`for_variant`).  ``cb_low`` is the
    nutrient value supplied on the edges ``x = -ell`` and ``y = -ell`` of the
    NLM box, ``cb_high`` the value on ``x = ell`` and ``y = ell``.
    """
    variant: str = "NUM"
    s1: float = 10.0
    s2: float = 0.5
    s3: float = 0.5
    s4: float = 10.0
    Q: float | None = None
    Qhat: float = 0.0
    eta: float | None = None
    k: float = 1.0
    mu: float = 1.0
    lam: float = -2.0 / 3.0
    alpha_star: float = 0.8
    alpha_thr: float = 0.01
    delta: float = 0.1
    T_final: float | None = None
    ell: float = 5.0
    alpha0_value: float = 0.8
    c0_value: float | None = None
    cb_low: float = 1.0
    cb_high: float = 0.0
    substeps: int = 4

    def __post_init__(self):
        v = str(self.variant).upper()
        if v not in VARIANT_DEFAULTS:
            raise ParameterError(f"variant must be NUM or NLM, got {self.variant!r}")
        object.__setattr__(self, "variant", v)
        for key, val in VARIANT_DEFAULTS[v].items():
            if getattr(self, key) is None:
                object.__setattr__(self, key, val)
        self.validate()

    def validate(self):
        checks = [
            ("s1", self.s1 > 0), ("s2", self.s2 > 0), ("s3", self.s3 > 0), ("s4", self.s4 > 0),
            ("mu", self.mu > 0), ("eta", self.eta > 0), ("k", self.k > 0),
            ("Q", self.Q >= 0), ("Qhat", self.Qhat >= 0),
            ("alpha_thr", 0 < self.alpha_thr < 1), ("alpha_star", 0 < self.alpha_star < 1),
            ("delta", self.delta > 0), ("T_final", self.T_final >= 0), ("ell", self.ell > 0),
            ("alpha0_value", 0 < self.alpha0_value < 1),
            ("c0_value", 0 <= self.c0_value <= 1),
            ("cb_low", 0 <= self.cb_low <= 1), ("cb_high", 0 <= self.cb_high <= 1),
            # a1 stays coercive only if the bulk term does not overwhelm shear
            ("lam", self.mu + self.lam > 0),
            ("substeps", int(self.substeps) == self.substeps and self.substeps >= 1),
        ]
        for name, ok in checks:
            if not ok:
                raise ParameterError(f"{name} = {getattr(self, name)!r} violates its invariant")

    @property
    def inner_delta(self):
        """Time step of the scheme itself: ``delta`` split into ``substeps``."""
        return self.delta / self.substeps

    @property
    def n_steps(self):
        return int(np.floor(self.T_final / self.delta + 1e-9))

    def with_(self, **kw):
        return replace(self, **kw)


def for_variant(variant, **overrides):
    return ModelParams(variant=variant, **overrides)


def param_names():
    return [f.name for f in dc_fields(ModelParams)]


def birth_rate(c, params):
    c = np.asarray(c, dtype=float)
    s1 = params.s1
    return (1.0 + s1) * c / (1.0 + s1 * c)


def death_rate(c, params):
    c = np.asarray(c, dtype=float)
    return (params.s2 + params.s3 * c) / (1.0 + params.s4 * c)


def net_growth(alpha, c, params):
    return (1.0 - np.asarray(alpha, dtype=float)) * birth_rate(c, params) - death_rate(c, params)


def clamp_alpha(alpha):
    return np.clip(np.asarray(alpha, dtype=float), ALPHA_FLOOR, ALPHA_CEIL)


def stress_potential(alpha, params):
    """``a (a - a*)^+ / (1 - a)^2`` evaluated at the clamped fraction."""
    a = clamp_alpha(alpha)
    return a * np.maximum(a - params.alpha_star, 0.0) / (1.0 - a) ** 2


def discrete_average(nodal, g, mesh, triangles=None):
    """Mean of ``g`` over the three vertex values of each triangle.

    ``g`` is applied to the nodal values first and then averaged.  Returns one
    value per triangle (or per entry of ``triangles``).
    """
    gv = np.asarray(g(np.asarray(nodal, dtype=float)), dtype=float)
    t = mesh.triangles if triangles is None else mesh.triangles[triangles]
    return gv[t].sum(axis=1) / 3.0


class _Field:
    size_attr = None

    def __init__(self, mesh, values):
        n = getattr(mesh, self.size_attr)
        values = np.array(values, dtype=float)
        if values.shape[0] != n:
            raise ValueError(f"{type(self).__name__} needs {n} values, got {values.shape[0]}")
        self.mesh = mesh
        self.values = values

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __len__(self):
        return len(self.values)

    def copy(self):
        return type(self)(self.mesh, self.values.copy())


class CellField(_Field):
    """One value per triangle."""
    size_attr = "n_triangles"


class NodalScalarField(_Field):
    """One value per vertex (P1)."""
    size_attr = "n_vertices"


class TH2VectorField:
    """P2 velocity: one 2-vector per vertex, then one per edge midpoint."""

    def __init__(self, mesh, values, active=None):
        values = np.array(values, dtype=float).reshape(-1, 2)
        n = mesh.n_vertices + mesh.n_edges
        if len(values) != n:
            raise ValueError(f"TH2VectorField needs {n} nodes, got {len(values)}")
        self.mesh = mesh
        self.values = values
        self.active = active

    @classmethod
    def zeros(cls, mesh):
        return cls(mesh, np.zeros((mesh.n_vertices + mesh.n_edges, 2)))

    @property
    def vertex_values(self):
        return self.values[:self.mesh.n_vertices]

    @property
    def midpoint_values(self):
        return self.values[self.mesh.n_vertices:]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)
