import json
from importlib import resources
from pathlib import Path

import pytest

from conorbit.cli import main
from conorbit.config import ConfigError, parse_config, schema_text
from conorbit.reproduce import FIXTURES, SOURCES

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_schema_file_in_sync():
    shipped = resources.files("conorbit").joinpath("schema.txt").read_text()
    assert shipped == schema_text()


def test_list_commands(capsys):
    assert main(["list-models"]) == 0
    out = capsys.readouterr().out
    for name in ("torus_magnetic", "torus_mechanical", "half_plane_horocycle", "plane_patch_custom"):
        assert name in out
    assert main(["list-scenarios"]) == 0
    assert "torus_lens" in capsys.readouterr().out


@pytest.mark.parametrize("text,key", [
    ("task = minimize\nscenario = torus_point_line\nk = high\n", "k"),
    ("task = fly\nscenario = torus_point_line\n", "task"),
    ("task = minimize\nscenario = torus_point_line\nk = 0.75\nsolver.N = 4\n", "solver.N"),
    ("task = minimize\nscenario = torus_point_line\nk = 0.75\nbogus = 1\n", "bogus"),
    ("task = minimize\nmodel.id = torus_magnetic\nq0.kind = point\nq0.point = 0.5\nq1.kind = point\n"
     "q1.point = 0, 0\nk = 1\n", "q0.point"),
])
def test_config_errors_exit_2(tmp_path, capsys, text, key):
    assert main(["run", write(tmp_path, text), "--out-dir", str(tmp_path / "o")]) == 2
    assert key in capsys.readouterr().err


def test_parse_config_reports_key():
    with pytest.raises(ConfigError) as exc:
        parse_config("task = struwe_scan\nscenario = torus_lens\nk_grid = 0.3, 0.2\n")
    assert "k_grid" in str(exc.value)


def test_minimize_run_and_determinism(tmp_path):
    cfg = str(CONFIGS / "flat_points_minimize.cfg")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", cfg, "--out-dir", str(a), "--no-plots"]) == 0
    assert main(["run", cfg, "--out-dir", str(b), "--no-plots"]) == 0
    csvs = sorted(p.name for p in a.glob("*.csv"))
    assert "summary.csv" in csvs
    for name in csvs:
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert not list(a.glob("*.png"))
    verdict = json.loads((a / "verdict.json").read_text())
    assert verdict["status"] == "PASS" and verdict["exit_code"] == 0


def test_plots_written(tmp_path):
    out = tmp_path / "p"
    assert main(["run", str(CONFIGS / "two_points_no_connection.cfg"), "--out-dir", str(out)]) == 0
    assert list(out.glob("*.png"))


def test_failure_exit_code(tmp_path):
    # a subcritical minimization cannot converge to an orbit
    text = "task = minimize\nscenario = torus_point_line\nk = 0.3\nsolver.N = 32\nsolver.max_iters = 300\n"
    assert main(["run", write(tmp_path, text), "--out-dir", str(tmp_path / "o"), "--no-plots"]) == 1
    verdict = json.loads((tmp_path / "o" / "verdict.json").read_text())
    assert verdict["status"] == "FAIL"


def test_reproduce_subset(tmp_path):
    out = tmp_path / "r"
    assert main(["reproduce", "torus_S_a", "torus_alpha_n", "--out-dir", str(out), "--no-plots"]) == 0
    lines = (out / "reproduce.csv").read_text().splitlines()
    assert len(lines) > 2
    assert main(["reproduce", "no_such_fixture", "--out-dir", str(out)]) == 2


def test_fixtures_have_source_and_anchor():
    for t in FIXTURES:
        assert t.source in SOURCES
        assert t.anchor


def test_bad_threads(tmp_path):
    assert main(["reproduce", "torus_S_a", "--threads", "0", "--out-dir", str(tmp_path)]) == 2
