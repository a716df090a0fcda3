"""Run configuration: ``key = value`` text files."""

from dataclasses import dataclass, field, fields as dc_fields

from .fields import ModelParams, ParameterError, VARIANT_DEFAULTS
from .mesh import MeshParams
from .mesh.generators import DEFAULT_MAX_AREA
from .shapes import ShapeError, ShapeSpec

MESH_KINDS = ("refined", "radial")


class ConfigError(ValueError):
    """Unknown key, unparsable value or violated invariant."""


@dataclass(frozen=True)
class RunOptions:
    """Settings that belong to neither the model, the mesh nor the shape."""
    out_dir: str = "out"
    snapshot_every: int = 10
    seed: int = 0
    mesh_kind: str = "refined"
    radial_h: float = 0.2
    C_cfl: float = 0.5
    C_icfl: float = 0.0


@dataclass(frozen=True)
class Config:
    model: ModelParams = field(default_factory=ModelParams)
    mesh: MeshParams = field(default_factory=lambda: MeshParams(max_area=DEFAULT_MAX_AREA))
    shape: ShapeSpec = field(default_factory=ShapeSpec)
    run: RunOptions = field(default_factory=RunOptions)


def _float(s):
    return float(s)


def _opt_float(s):
    return None if s.lower() == "none" else float(s)


def _int(s):
    return int(s)


def _str(s):
    return s


def _opt_str(s):
    return None if s.lower() == "none" else s


# config key -> (section, attribute, parser)
_MODEL_TYPES = {"variant": _str, "substeps": _int}
_KEYS = {}
for _f in dc_fields(ModelParams):
    _KEYS[_f.name] = ("model", _f.name, _MODEL_TYPES.get(_f.name, _float))
_KEYS.update({
    "theta_min": ("mesh", "theta_min", _float),
    "max_area": ("mesh", "max_area", _opt_float),
    "jitter": ("mesh", "jitter", _float),
    "rotation": ("mesh", "rotation", _float),
    "shape": ("shape", "variant", _str),
    "radius": ("shape", "radius", _opt_float),
    "inner_radius": ("shape", "inner_radius", _opt_float),
    "centre_x": ("shape", "centre_x", _float),
    "centre_y": ("shape", "centre_y", _float),
    "n_nodes": ("shape", "n_nodes", _int),
    "polygon_file": ("shape", "polygon_file", _opt_str),
    "out_dir": ("run", "out_dir", _str),
    "snapshot_every": ("run", "snapshot_every", _int),
    "seed": ("run", "seed", _int),
    "mesh_kind": ("run", "mesh_kind", _str),
    "radial_h": ("run", "radial_h", _float),
    "C_cfl": ("run", "C_cfl", _float),
    "C_icfl": ("run", "C_icfl", _float),
})
CONFIG_KEYS = tuple(_KEYS)


def parse_config(text):
    """Parse ``key = value`` lines into a :class:`Config`.

    Blank lines and ``#`` comments are ignored.  Keys not given take their
    defaults; ``variant`` selects the variant-dependent defaults of ``Q``,
    ``eta``, ``T_final`` and ``c0_value``.

    Raises
    ------
    ConfigError
        Naming the offending key and its line number.
    """
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: key {key!r} repeated (first on line {lines[key]})")
        try:
            values[key] = _KEYS[key][2](val)
        except ValueError:
            raise ConfigError(f"line {lineno}: key {key!r}: cannot parse {val!r}") from None
        lines[key] = lineno
    return _build(values, lines)


def _where(key, lines):
    return f"line {lines[key]}" if key in lines else "default"


def _build(values, lines):
    sections = {"model": {}, "mesh": {}, "shape": {}, "run": {}}
    for key, val in values.items():
        sec, attr, _ = _KEYS[key]
        sections[sec][attr] = val
    try:
        model = ModelParams(**sections["model"])
    except ParameterError as exc:
        key = str(exc).split(" ", 1)[0]
        raise ConfigError(f"{_where(key, lines)}: key {key!r}: {exc}") from None
    mesh_kw = {"max_area": DEFAULT_MAX_AREA, **sections["mesh"]}
    try:
        mesh = MeshParams(**mesh_kw)
    except ValueError as exc:
        key = str(exc).split(" ", 1)[0]
        raise ConfigError(f"{_where(key, lines)}: key {key!r}: {exc}") from None
    shape_kw = dict(sections["shape"])
    cx = shape_kw.pop("centre_x", 0.0)
    cy = shape_kw.pop("centre_y", 0.0)
    try:
        shape = ShapeSpec(centre=(cx, cy), **shape_kw)
    except (ShapeError, OSError) as exc:
        key = "shape" if "variant" in str(exc) else _guess_shape_key(str(exc))
        raise ConfigError(f"{_where(key, lines)}: key {key!r}: {exc}") from None
    run = RunOptions(**sections["run"])
    _check_run(run, lines)
    return Config(model, mesh, shape, run)


def _guess_shape_key(msg):
    for key in ("inner_radius", "radius", "n_nodes", "polygon_file"):
        if key.replace("_", " ") in msg or key in msg:
            return key
    return "shape"


def _check_run(run, lines):
    checks = [
        ("snapshot_every", run.snapshot_every >= 0),
        ("mesh_kind", run.mesh_kind in MESH_KINDS),
        ("radial_h", run.radial_h > 0),
        ("C_cfl", run.C_cfl > 0),
        ("C_icfl", run.C_icfl >= 0),
    ]
    for key, ok in checks:
        if not ok:
            raise ConfigError(f"{_where(key, lines)}: key {key!r}: "
                              f"{getattr(run, key)!r} violates its invariant")


def config_values(cfg):
    """Flat ``{key: value}`` mapping of every configuration key."""
    out = {}
    for key, (sec, attr, _) in _KEYS.items():
        obj = getattr(cfg, sec)
        if attr == "centre_x":
            out[key] = obj.centre[0]
        elif attr == "centre_y":
            out[key] = obj.centre[1]
        else:
            out[key] = getattr(obj, attr)
    return out


def serialize_config(cfg):
    """Text that :func:`parse_config` maps back to an equal :class:`Config`."""
    lines = []
    for key, val in config_values(cfg).items():
        if val is None:
            s = "none"
        elif isinstance(val, float):
            s = repr(val)
        else:
            s = str(val)
        lines.append(f"{key} = {s}")
    return "\n".join(lines) + "\n"


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def default_config(variant="NUM"):
    if variant.upper() not in VARIANT_DEFAULTS:
        raise ConfigError(f"unknown variant {variant!r}")
    return parse_config(f"variant = {variant}\n")
