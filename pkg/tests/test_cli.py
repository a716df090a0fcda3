import subprocess
import sys

import numpy as np
import pytest

from tumoursim.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_SOLVER, main
from tumoursim import cli
from tumoursim.linalg import SingularSystemError
from tumoursim.mesh import read_mesh
from tumoursim.output import read_series_csv, read_vtk

SMALL = "ell = 2.5\nmax_area = 0.1\nT_final = 0.2\nsnapshot_every = 1\n"


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(SMALL)
    return path


def test_run_writes_outputs(config, tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", str(config), "--out", str(out)]) == EXIT_OK
    names = sorted(p.name for p in out.iterdir())
    assert names == ["config.txt", "fields_0000.vtk", "fields_0001.vtk", "fields_0002.vtk",
                     "final_state.npz", "series.csv"]
    series = read_series_csv(out / "series.csv")
    assert np.allclose(series["t"], [0.0, 0.1, 0.2])
    vtk = read_vtk(out / "fields_0002.vtk")
    assert "alpha" in vtk["cell_data"]
    assert "T_final = 0.2" in (out / "config.txt").read_text()


def test_mesh_then_run_with_mesh_file(config, tmp_path):
    out = tmp_path / "m"
    assert main(["mesh", "--config", str(config), "--out", str(out)]) == EXIT_OK
    mesh = read_mesh(out / "mesh.txt")
    assert mesh.min_angle() >= 20.0
    run_out = tmp_path / "r"
    assert main(["run", "--config", str(config), "--out", str(run_out),
                 "--mesh", str(out / "mesh.txt")]) == EXIT_OK
    assert (run_out / "series.csv").exists()


def test_report(config, tmp_path):
    out = tmp_path / "out"
    main(["run", "--config", str(config), "--out", str(out)])
    assert main(["report", str(out / "series.csv"), "--out", str(tmp_path / "rep")]) == EXIT_OK
    assert (tmp_path / "rep" / "radius_curve.svg").read_text().count("<polyline") == 1


def test_exit_codes(config, tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("bogus = 1\n")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "x")]) == EXIT_CONFIG
    assert main(["run", "--config", str(tmp_path / "missing.cfg")]) == EXIT_IO
    assert main(["report", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == EXIT_IO
    garbage = tmp_path / "mesh.txt"
    garbage.write_text("not a mesh\n")
    assert main(["run", "--config", str(config), "--mesh", str(garbage),
                 "--out", str(tmp_path / "y")]) == EXIT_IO


def test_solver_failure_exit_code(config, tmp_path, monkeypatch):
    def boom(*a, **k):
        raise SingularSystemError("zero pivot at velocity dof 3")

    monkeypatch.setattr(cli, "run_config", boom)
    assert main(["run", "--config", str(config), "--out", str(tmp_path / "z")]) == EXIT_SOLVER


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "tumoursim.cli", "run", "--config",
                        str(tmp_path / "nope.cfg")], capture_output=True, text=True)
    assert r.returncode == EXIT_IO
    assert "I/O error" in r.stderr
