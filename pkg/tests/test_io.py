import numpy as np
import pytest

from swarmcov import io as sio
from swarmcov.density import INDICATOR, Domain, GridSpec, ScalarField
from swarmcov.errors import InputError
from swarmcov.metric import SwarmConfig, Trajectory


def test_swarm_roundtrip(tmp_path):
    cfg = SwarmConfig(np.array([[1.0, 2.0], [np.float64(3.25), 4.0]]), np.float64(2.5), INDICATOR)
    path = tmp_path / "s.csv"
    sio.write_swarm(path, cfg)
    assert "np.float64" not in path.read_text()
    back = sio.read_swarm(path)
    assert back.n == 2 and back.delta == 2.5 and back.kernel == INDICATOR
    assert np.array_equal(back.positions, cfg.positions)


def test_swarm_with_label_rows(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("N,delta,kernel\n2,2,gaussian\nx,y\n1,1\n# comment\n2,2\n")
    assert sio.read_swarm(p).n == 2


@pytest.mark.parametrize("text,line", [
    ("3,2,gaussian\n1,1\n2,2\n", 3),
    ("2,2,gaussian\n1,1\n2,oops\n", 3),
    ("2,-1,gaussian\n1,1\n2,2\n", 1),
    ("1,2,gaussian\n1,nan\n", 2),
    ("1,2,cone\n1,1\n", 1),
])
def test_swarm_errors_name_line(tmp_path, text, line):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(InputError) as exc:
        sio.read_swarm(p)
    assert exc.value.line == line
    assert f"bad.csv:{line}:" in str(exc.value)


def test_missing_file(tmp_path):
    with pytest.raises(InputError):
        sio.read_swarm(tmp_path / "nope.csv")


def test_trajectory_roundtrip(tmp_path):
    g = np.random.default_rng(0)
    traj = Trajectory([0.0, 1.5, 3.0], g.uniform(0, 10, (3, 4, 2)), 2.0)
    p = tmp_path / "t.csv"
    sio.write_trajectory(p, traj)
    back = sio.read_trajectory(p)
    assert np.array_equal(back.times, traj.times)
    assert np.array_equal(back.positions, traj.positions)


def test_trajectory_times_must_increase(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("1,2,gaussian\n0,1,1\n0,2,2\n")
    with pytest.raises(InputError, match="increasing"):
        sio.read_trajectory(p)


def test_gridded_roundtrip_x_fastest(tmp_path):
    g = GridSpec(Domain(2.0, 1.0), 3, 2, centered=False)
    f = ScalarField(g, np.array([[1.0, 4.0], [2.0, 5.0], [3.0, 6.0]]))
    p = tmp_path / "g.csv"
    sio.write_gridded(p, f)
    assert p.read_text().splitlines()[1:4] == ["1.0", "2.0", "3.0"]
    back = sio.read_gridded(p)
    assert np.array_equal(back.values, f.values)


def test_values_and_series(tmp_path):
    p = tmp_path / "v.csv"
    sio.write_values(p, [0.5, 0.25], label="e")
    assert sio.read_values(p).tolist() == [0.5, 0.25]
    q = tmp_path / "s.csv"
    sio.write_series(q, [0, 1], [0.3, 0.2])
    t, e = sio.read_series(q)
    assert t.tolist() == [0, 1] and e.tolist() == [0.3, 0.2]


def test_extrema_bounds(tmp_path, fixtures):
    assert sio.read_extrema_bounds(fixtures / "target") == (0.28205, 1.9867)
    p = tmp_path / "x_result.csv"
    p.write_text("mode,value\nmin,0.3\n")
    with pytest.raises(InputError):
        sio.read_extrema_bounds(tmp_path / "x")


def test_rows_write_plain_floats(tmp_path):
    p = tmp_path / "r.csv"
    sio.write_rows(p, ["a", "b"], [[np.float64(0.1), 3]])
    assert p.read_text() == "a,b\n0.1,3\n"


def test_manifest_roundtrip(tmp_path):
    p = tmp_path / "m.json"
    sio.write_manifest(p, {"n": np.int64(3), "x": np.float64(0.5), "grid": np.array([1, 2])})
    assert sio.read_manifest(p) == {"n": 3, "x": 0.5, "grid": [1, 2]}
