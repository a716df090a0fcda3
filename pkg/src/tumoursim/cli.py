"""Command-line entry point: ``tumoursim mesh | run | report``."""

import argparse
import logging
import os
import sys
from dataclasses import replace

from .config import ConfigError, Config, load_config, serialize_config
from .driver import build_mesh, run_config
from .fields import ParameterError
from .linalg import AssemblyError, SingularSystemError
from .mechanics import MechanicsError
from .mesh import MeshError, read_mesh, read_pslg, ruppert_refine, write_mesh
from .domain import DomainError
from .nutrient import NutrientError
from .output import (OutputError, snapshot_name, write_final_state, write_report,
                     write_series_csv, write_vtk)
from .shapes import ShapeError

logger = logging.getLogger("tumoursim")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3

SOLVER_ERRORS = (SingularSystemError, MechanicsError, NutrientError, MeshError,
                 AssemblyError, DomainError, FloatingPointError)


class InputFileError(Exception):
    """A mesh or PSLG file could not be read."""


def _load(args):
    cfg = load_config(args.config) if args.config else Config()
    if args.seed is not None:
        cfg = replace(cfg, run=replace(cfg.run, seed=args.seed))
    if getattr(args, "out", None):
        cfg = replace(cfg, run=replace(cfg.run, out_dir=args.out))
    return cfg


def _read(reader, path):
    try:
        return reader(path)
    except MeshError as exc:
        raise InputFileError(str(exc)) from exc


def cmd_mesh(args):
    cfg = _load(args)
    if args.pslg:
        mesh = ruppert_refine(_read(read_pslg, args.pslg), cfg.mesh)
    else:
        mesh = build_mesh(cfg)
    os.makedirs(cfg.run.out_dir, exist_ok=True)
    path = os.path.join(cfg.run.out_dir, "mesh.txt")
    write_mesh(mesh, path)
    logger.info("wrote %s (%d vertices, %d triangles, min angle %.2f deg)", path,
                mesh.n_vertices, mesh.n_triangles, mesh.min_angle())
    return EXIT_OK


def cmd_run(args):
    cfg = _load(args)
    mesh = _read(read_mesh, args.mesh) if args.mesh else build_mesh(cfg)
    out = cfg.run.out_dir
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "config.txt"), "w") as fh:
        fh.write(serialize_config(cfg))

    def snap(state):
        write_vtk(state, os.path.join(out, snapshot_name(state.n)))

    rows, state = run_config(cfg, mesh=mesh, on_snapshot=snap)
    write_series_csv(rows, os.path.join(out, "series.csv"))
    write_final_state(state, os.path.join(out, "final_state.npz"))
    last = rows[-1]
    logger.info("t = %.4g: radius %.4f, components %d%s", last.t, last.radius, last.components,
                " (extinct)" if state.extinct else "")
    return EXIT_OK


def cmd_report(args):
    out = args.out or "."
    path = out if out.endswith(".svg") else os.path.join(out, "radius_curve.svg")
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    write_report(args.csv, path)
    logger.info("wrote %s", path)
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="tumoursim", description="Moving-boundary tumour growth "
                                 "on a fixed triangulation.")
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    m = sub.add_parser("mesh", help="generate a background mesh")
    m.add_argument("--config", help="configuration file")
    m.add_argument("--out", help="output directory (mesh.txt)")
    m.add_argument("--seed", type=int, help="jitter seed")
    m.add_argument("--pslg", help="refine this PSLG file instead of the configured shape")
    m.set_defaults(func=cmd_mesh)

    r = sub.add_parser("run", help="run a simulation")
    r.add_argument("--config", help="configuration file")
    r.add_argument("--out", help="output directory")
    r.add_argument("--mesh", help="mesh file to use instead of generating one")
    r.add_argument("--seed", type=int, help="jitter seed")
    r.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="plot radius curves from series CSVs")
    p.add_argument("csv", nargs="+", help="series.csv files")
    p.add_argument("--out", help="output directory or .svg path")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ParameterError, ShapeError) as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (OSError, OutputError, InputFileError) as exc:
        logger.error("I/O error: %s", exc)
        return EXIT_IO
    except SOLVER_ERRORS as exc:
        logger.error("solver error: %s", exc)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
