"""Background triangulations of the box."""

from .core import (MeshError, MeshParams, TriMesh, build_adjacency, jitter_and_rotate,
                   lumped_weights, rotate)
from .generators import (DEFAULT_MAX_AREA, radial_mesh, read_mesh, shape_mesh,
                         structured_mesh, write_mesh)
from .pslg import Pslg, box_pslg, read_pslg, write_pslg
from .ruppert import RefinementStalled, ruppert_refine

__all__ = [
    "MeshError", "MeshParams", "TriMesh", "build_adjacency", "jitter_and_rotate",
    "lumped_weights", "rotate", "DEFAULT_MAX_AREA", "radial_mesh", "read_mesh",
    "shape_mesh", "structured_mesh", "write_mesh", "Pslg", "box_pslg", "read_pslg",
    "write_pslg", "RefinementStalled", "ruppert_refine",
]
