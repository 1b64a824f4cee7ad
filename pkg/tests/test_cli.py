import json
import subprocess
import sys

import numpy as np
import pytest

from swarmcov import __version__
from swarmcov import io as sio
from swarmcov.cli import main
from swarmcov.metric import SwarmConfig


def run(capsys, *argv):
    code = main(["--quiet", "--threads", "1", *argv])
    out = capsys.readouterr().out
    return code, dict(line.split(",", 1) for line in out.splitlines() if "," in line)


@pytest.fixture
def swarm_file(tmp_path):
    g = np.random.default_rng(0)
    p = tmp_path / "swarm.csv"
    sio.write_swarm(p, SwarmConfig(g.uniform(0, 1, (30, 2)) * [48, 70], 3.0))
    return p


def test_error_command(capsys, swarm_file):
    code, out = run(capsys, "error", "--config", str(swarm_file), "--partition", "4x4")
    assert code == 0
    e, eh = float(out["e"]), float(out["e_hat"])
    assert 0 <= e <= 2 and e == pytest.approx(2 * eh, abs=1e-3)
    assert 0 <= float(out["mu"]) <= 2


def test_bad_config_is_input_error(capsys, tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("2,2,gaussian\n1,1\n")
    assert main(["--quiet", "error", "--config", str(p)]) == 2
    assert "bad.csv:2:" in capsys.readouterr().err


def test_unknown_flag_is_input_error(capsys):
    assert main(["error", "--bogus"]) == 2


def test_extrema_writes_outputs_and_manifest(capsys, tmp_path):
    prefix = tmp_path / "ex"
    code, out = run(capsys, "--grid", "48x70", "extrema", "--n", "6", "--delta", "4", "--starts", "2",
                    "--max-iter", "400", "--out", str(prefix))
    assert code in (0, 3)
    lo, hi = sio.read_extrema_bounds(prefix)
    assert float(out["e_minus"]) == pytest.approx(lo) and float(out["e_plus"]) == pytest.approx(hi)
    assert sio.read_swarm(f"{prefix}_argmin.csv").n == 6
    man = json.loads((tmp_path / "ex_manifest.json").read_text())
    assert man["command"] == "extrema" and man["n"] == 6 and man["version"] == __version__


def test_manifest_replay_with_override(capsys, tmp_path, swarm_file):
    prefix = tmp_path / "pit"
    code, first = run(capsys, "pitfall", "--config", str(swarm_file), "--tilings", "1x1,8x8", "--out", str(prefix))
    assert code == 0
    code, again = run(capsys, "--manifest", str(tmp_path / "pit_manifest.json"))
    assert code == 0 and again == first
    code, other = run(capsys, "--manifest", str(tmp_path / "pit_manifest.json"), "pitfall", "--tilings", "1x1,2x2")
    assert "mu_2x2_regular" in other


def test_pitfall_random(capsys):
    code, out = run(capsys, "pitfall", "--random", "200", "--seed", "1", "--shifted")
    assert code == 0
    assert float(out["mu_1x1_regular"]) == 0.0
    assert float(out["mu_1024x1024_regular"]) >= 1.9
    assert "mu_4x4_shifted" in out


def test_pdf_then_benchmark(capsys, tmp_path):
    prefix = tmp_path / "pdf"
    code, out = run(capsys, "pdf", "--n", "40", "--delta", "3", "--samples", "60", "--out", str(prefix))
    assert code == 0
    assert sio.read_values(f"{prefix}_samples.csv").size == 60
    ctrl = tmp_path / "ctrl.csv"
    sio.write_values(ctrl, sio.read_values(f"{prefix}_samples.csv")[::2])
    code, out = run(capsys, "benchmark", "--dist", str(prefix), "--controller-errors", str(ctrl))
    assert code == 0
    assert out["consistent"] == "1"


def test_relerr_on_fixture_series(capsys, fixtures):
    code, out = run(capsys, "relerr", "--series", str(fixtures / "controller_series.csv"),
                    "--extrema", str(fixtures / "target"))
    assert code == 0
    assert float(out["e_q3"]) == pytest.approx(0.5157, abs=0.002)
    assert float(out["e_rel_percent"]) == pytest.approx(13.71, abs=0.3)
    assert out["band"] == "intermediate"


def test_relerr_needs_bounds(capsys, fixtures):
    assert main(["--quiet", "relerr", "--e-observed", "0.5"]) == 2


def test_simulate_writes_trajectory_and_series(capsys, tmp_path):
    traj = tmp_path / "walk.csv"
    series = tmp_path / "walk_series.csv"
    code, out = run(capsys, "simulate", "--n", "20", "--delta", "2", "--steps", "50", "--snap-every", "10",
                    "--out", str(traj), "--series-out", str(series))
    assert code == 0
    assert len(sio.read_trajectory(traj)) == 6
    assert sio.read_series(series)[1].size == 6
    assert (tmp_path / "walk_manifest.json").exists()


def test_quadstudy_smooth(capsys):
    code, out = run(capsys, "quadstudy", "--smooth", "--m-values", "9,17,33,65,129")
    assert code == 0
    assert float(out["simpson_b"]) == pytest.approx(-4.0, abs=0.3)


def test_quadstudy_needs_config(capsys):
    assert main(["--quiet", "quadstudy"]) == 2


def test_console_script_version():
    r = subprocess.run([sys.executable, "-m", "swarmcov.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and __version__ in r.stdout
