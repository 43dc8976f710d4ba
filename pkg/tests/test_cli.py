import csv
import io
import json
import math

import pytest

from fmm2d.cli import main
from fmm2d.fileio import write_vortices
from fmm2d.partition import Partition


def run(argv):
    assert main([str(a) for a in argv]) == 0


@pytest.fixture
def particles(tmp_path):
    path = tmp_path / "p.csv"
    run(["generate", "--dist", "cluster", "--n", 2000, "--seed", 3, "--out", path])
    return path


@pytest.fixture
def pair_file(tmp_path):
    path = tmp_path / "pair.csv"
    write_vortices(path, [[0.0, 0.0], [1.0, 0.0]], [1.0, 1.0])
    return path


def test_generate_single_row(tmp_path):
    out = tmp_path / "one.csv"
    run(["generate", "--n", 1, "--seed", 1, "--out", out])
    lines = out.read_text().splitlines()
    assert lines[0] == "x,y,q" and len(lines) == 2
    assert lines[1].startswith("0.566561575172281,")


def test_run_report(tmp_path):
    src, rep = tmp_path / "u.csv", tmp_path / "r.json"
    run(["generate", "--n", 1000, "--seed", 0, "--out", src])
    run(["run", src, "--p", 16, "--check-direct", "--out", rep])
    report = json.loads(rep.read_text())
    assert report["N"] == 1000 and report["p"] == 16 and report["depth"] == 3
    assert report["error"]["max_rel"] <= 1e-6
    assert report["memory"]["bytes_total"] > 0
    assert report["config"]["p"] == 16 and report["config"]["lam"] == 0.01
    assert "timings" not in report


def test_run_timings_opt_in(particles, tmp_path):
    rep = tmp_path / "r.json"
    run(["run", particles, "--p", 4, "--timings", "--out", rep])
    assert set(json.loads(rep.read_text())["timings"]) == {"build_s", "fmm_s"}


def test_run_two_particles_exact(tmp_path):
    src, rep = tmp_path / "two.csv", tmp_path / "r.json"
    src.write_text("x,y,q\n0.0,0.0,1.0\n0.5,0.25,-2.0\n")
    run(["run", src, "--depth", 1, "--check-direct", "--out", rep])
    assert json.loads(rep.read_text())["error"]["max_rel"] == 0


def test_run_results_file(tmp_path):
    src, res = tmp_path / "two.csv", tmp_path / "res.csv"
    src.write_text("x,y,q\n0.0,0.0,1.0\n1.0,0.0,1.0\n")
    run(["run", src, "--depth", 1, "--results-out", res, "--out", tmp_path / "r.json"])
    rows = res.read_text().splitlines()
    assert rows == ["re,im", "0.0,3.141592653589793", "0.0,0.0"]


def test_partition(particles, tmp_path):
    rep, part = tmp_path / "part.json", tmp_path / "assign.json"
    run(["partition", particles, "--ranks", 4, "--k", 3, "--partition-out", part, "--out", rep])
    report = json.loads(rep.read_text())
    assert report["stats"]["refined"]["J"] <= report["stats"]["initial"]["J"]
    saved = Partition.from_json(part.read_text())
    assert saved.ranks == 4 and len(saved.assignment) == 64
    assert report["refined"] == saved.to_json()


def test_partition_single_rank(particles, tmp_path):
    rep = tmp_path / "part.json"
    run(["partition", particles, "--ranks", 1, "--out", rep])
    report = json.loads(rep.read_text())
    stats = report["stats"]["refined"]
    assert stats["comm_bytes"] == 0
    assert stats["J"] == pytest.approx(report["total_work"] - report["coarse_work"])


def test_sweep(particles, tmp_path):
    out = tmp_path / "s.csv"
    run(["sweep", particles, "--ranks-list", "1", "--out", out])
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 1 and float(rows[0]["speedup"]) == 1.0


def test_vortex_steps_zero(pair_file, tmp_path):
    out = tmp_path / "traj.csv"
    run(["vortex", pair_file, "--steps", 0, "--out", out])
    lines = out.read_text().splitlines()
    assert lines[0] == "step,id,x,y,u,v"
    assert lines[1].startswith("0,0,0.0,0.0,")
    assert len(lines) == 4 and lines[3].startswith("# ")


def test_vortex_rotation(pair_file, tmp_path):
    out = tmp_path / "traj.csv"
    run(["vortex", pair_file, "--steps", 100, "--dt", 0.01, "--out", out])
    lines = out.read_text().splitlines()
    footer = json.loads(lines[-1][2:])
    assert footer["max_circulation_drift"] == 0.0 and footer["total_circulation"] == 2.0
    rows = list(csv.DictReader(io.StringIO("\n".join(lines[:-1]))))
    last = [r for r in rows if r["step"] == "100"]
    dx = float(last[1]["x"]) - float(last[0]["x"])
    dy = float(last[1]["y"]) - float(last[0]["y"])
    assert math.atan2(dy, dx) == pytest.approx(1 / math.pi, rel=0.02)


def test_calibrate(particles, tmp_path):
    rep = tmp_path / "cal.json"
    run(["calibrate", particles, "--p", 6, "--repeats", 1, "--out", rep])
    report = json.loads(rep.read_text())
    assert set(report["fitted"]) == {"c_p2m", "c_m2m", "c_m2l", "c_l2l", "c_l2p", "c_p2p"}
    assert all(v > 0 for v in report["fitted"].values())


@pytest.mark.parametrize("cmd", [
    ["run", "{p}"],
    ["partition", "{p}", "--ranks", "3"],
    ["sweep", "{p}", "--ranks-list", "1,2,4"],
])
def test_byte_identical(particles, tmp_path, cmd):
    outs = []
    for i in range(2):
        out = tmp_path / f"out{i}"
        run([c.format(p=particles) for c in cmd] + ["--out", out])
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_config_file_and_flag_precedence(particles, tmp_path):
    cfg, rep = tmp_path / "cfg.json", tmp_path / "r.json"
    cfg.write_text(json.dumps({"p": 5, "depth": 3, "c_p2p": 2.0}))
    run(["run", particles, "--config", cfg, "--p", 7, "--out", rep])
    report = json.loads(rep.read_text())
    assert report["config"]["p"] == 7 and report["depth"] == 3
    assert report["config"]["cost"]["c_p2p"] == 2.0


class TestExitCodes:
    def test_domain_error(self, particles, capsys):
        assert main(["run", str(particles), "--p", "-3"]) == 1
        assert "error" in capsys.readouterr().err

    def test_generate_bad_n(self, tmp_path):
        assert main(["generate", "--n", "0", "--out", str(tmp_path / "x.csv")]) == 1

    def test_missing_file(self, tmp_path):
        assert main(["run", str(tmp_path / "nope.csv")]) == 2

    def test_malformed_csv(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("x,y,q\n0,0,1\n1,1\n")
        assert main(["run", str(bad)]) == 2
        assert "line 3" in capsys.readouterr().err

    def test_bad_json_config(self, particles, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text("{not json")
        assert main(["run", str(particles), "--config", str(cfg)]) == 2

    def test_unwritable_output(self, tmp_path):
        assert main(["generate", "--n", "3", "--out", str(tmp_path / "no" / "x.csv")]) == 2

    def test_vortex_bad_dt(self, pair_file):
        assert main(["vortex", str(pair_file), "--dt", "0"]) == 1
