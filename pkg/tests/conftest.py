import numpy as np
import pytest

from tumoursim.mesh import TriMesh, shape_mesh, structured_mesh
from tumoursim.shapes import ShapeSpec


@pytest.fixture(scope="session")
def circle_shape():
    return ShapeSpec("circle")


@pytest.fixture(scope="session")
def circle_mesh(circle_shape):
    """Default Ruppert mesh of the box conforming to the unit circle."""
    return shape_mesh(circle_shape)


@pytest.fixture(scope="session")
def unit_square_meshes():
    """Criss-cross meshes of [0, 1]^2 with n = 4, 8, 16 cells per side."""
    out = []
    for n in (4, 8, 16):
        m = structured_mesh(n, ell=0.5)
        out.append(TriMesh(m.vertices + 0.5, m.triangles))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_delaunay_mesh(rng, n_points=30, ell=1.0):
    """Delaunay triangulation of the box corners plus random interior points."""
    from scipy.spatial import Delaunay
    corners = ell * np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=float)
    pts = np.vstack([corners, rng.uniform(-0.95 * ell, 0.95 * ell, size=(n_points, 2))])
    return TriMesh(pts, Delaunay(pts).simplices)


def strip_mesh(n):
    """``n`` triangles in a row, each sharing an edge with the next."""
    top = np.c_[np.arange(n // 2 + 2), np.ones(n // 2 + 2)]
    bot = np.c_[np.arange(n // 2 + 2), np.zeros(n // 2 + 2)]
    V = np.vstack([bot, top])
    m = len(bot)
    tris = []
    for i in range(m - 1):
        tris.append([i, i + 1, m + i])
        tris.append([i + 1, m + i + 1, m + i])
    return TriMesh(V, tris[:n])


ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Callable recording one pass/fail line per acceptance criterion."""
    def record(number, title, ok, detail):
        line = f"criterion {number:2d} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
