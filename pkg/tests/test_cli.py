import csv
import json

import pytest

from curvedpipe.cli import EXIT_CONFIG, EXIT_DOMAIN, EXIT_INSTABILITY, EXIT_OK, main
from curvedpipe.config import BUNDLED


def write_config(tmp_path, data, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


MINIMAL = {
    "name": "minimal",
    "law": {"kind": "gamma", "gamma": 2.0},
    "initial": {"kind": "riemann", "left": [1.0, 0.0], "right": [1.0, 0.0]},
    "params": {"level": 2, "t_end": 1.0, "snapshot_times": [0.5]},
}


class TestRun:
    def test_minimal_scenario(self, tmp_path):
        out = tmp_path / "out"
        assert main(["run", str(write_config(tmp_path, MINIMAL)), "--out", str(out), "--quiet"]) == EXIT_OK
        snaps = sorted((out / "snapshots").glob("*.csv"))
        assert [p.name for p in snaps] == ["t_0.000000.csv", "t_0.500000.csv", "t_1.000000.csv"]
        for p in snaps:
            rows = read_csv(p)
            assert all(float(r["rho"]) == 1.0 and float(r["q"]) == 0.0 for r in rows)
        for name in ("manifest.json", "metrics.json", "summary.json", "events.csv", "wave_diagram.json"):
            assert (out / name).exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "run"
        assert len(manifest["config_hash"]) == 64
        assert "numpy" in manifest["versions"]

    def test_fig1(self, tmp_path):
        out = tmp_path / "fig1"
        assert main(["run", "fig1", "--out", str(out), "--quiet"]) == EXIT_OK
        m = json.loads((out / "metrics.json").read_text())
        assert m["junction_residual"] <= 1e-10
        assert m["mass_drift"] <= 1e-12
        assert m["weak_residual"]["entropy_production"] >= -1e-8
        assert (out / "plot.gp").exists()
        assert (out / "snapshots_fv").is_dir()
        assert m["ft_fv_l1"] < 0.1

    def test_output_is_deterministic(self, tmp_path):
        dirs = [tmp_path / "a", tmp_path / "b"]
        for d in dirs:
            assert main(["run", "fig1", "--out", str(d), "--quiet"]) == EXIT_OK
        files = sorted(p.relative_to(dirs[0]) for p in dirs[0].rglob("*") if p.is_file())
        assert files == sorted(p.relative_to(dirs[1]) for p in dirs[1].rglob("*") if p.is_file())
        for rel in files:
            a, b = (d / rel for d in dirs)
            if rel.name == "manifest.json":
                ja, jb = json.loads(a.read_text()), json.loads(b.read_text())
                ja.pop("created"), jb.pop("created")
                assert ja == jb
            else:
                assert a.read_bytes() == b.read_bytes(), rel

    def test_level_override(self, tmp_path):
        out = tmp_path / "o"
        assert main(["run", "fig1", "--out", str(out), "--quiet", "--level", "1"]) == EXIT_OK
        assert json.loads((out / "summary.json").read_text())["level"] == 1

    def test_datum_file(self, tmp_path):
        (tmp_path / "d.csv").write_text("x,rho,q\n-10,1.1,0.0\n0.0,1.0,0.0\n")
        cfg = dict(MINIMAL, initial={"kind": "file", "path": "d.csv"})
        out = tmp_path / "o"
        assert main(["run", str(write_config(tmp_path, cfg)), "--out", str(out), "--quiet"]) == EXIT_OK
        final = read_csv(out / "snapshots" / "t_1.000000.csv")
        assert float(final[0]["rho"]) == 1.1
        assert float(final[-1]["rho"]) == 1.0


class TestErrors:
    def test_negative_gamma(self, tmp_path, capsys):
        cfg = dict(MINIMAL, law={"kind": "gamma", "gamma": -1.0})
        assert main(["validate", str(write_config(tmp_path, cfg))]) == EXIT_CONFIG
        assert "law.gamma.gamma" in capsys.readouterr().err

    def test_unknown_field(self, tmp_path, capsys):
        cfg = dict(MINIMAL, params={"levle": 3})
        assert main(["validate", str(write_config(tmp_path, cfg))]) == EXIT_CONFIG
        assert "params.levle" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["validate", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")]) == EXIT_CONFIG

    def test_invalid_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{")
        assert main(["validate", str(p)]) == EXIT_CONFIG

    def test_non_dyadic_kink_is_a_config_error(self, tmp_path, capsys):
        cfg = dict(MINIMAL, geometry={"x_start": 0.3, "segments": [
            {"type": "straight", "length": 1.0, "direction": [0.0, 1.0, 0.0]}]})
        assert main(["validate", str(write_config(tmp_path, cfg))]) == EXIT_CONFIG
        assert "params.level" in capsys.readouterr().err

    def test_initial_budget_exceeded(self, tmp_path):
        cfg = dict(MINIMAL, initial={"kind": "riemann", "left": [3.0, 0.0], "right": [0.5, 0.0]})
        out = tmp_path / "o"
        assert main(["run", str(write_config(tmp_path, cfg)), "--out", str(out), "--quiet"]) == EXIT_DOMAIN
        assert json.loads((out / "diagnostics.json").read_text())["error"] == "DomainError"

    def test_front_cap(self, tmp_path):
        cfg = dict(MINIMAL, initial={"kind": "riemann", "left": [1.0, -0.3], "right": [1.0, 0.3]},
                   params={"level": 2, "t_end": 1.0, "eps_rarefaction": 1e-3, "max_fronts": 5,
                           "delta_domain": 2.0})
        out = tmp_path / "o"
        assert main(["run", str(write_config(tmp_path, cfg)), "--out", str(out), "--quiet"]) == EXIT_INSTABILITY
        assert (out / "diagnostics.json").exists()


class TestOtherVerbs:
    def test_validate(self, tmp_path, capsys):
        assert main(["validate", "well_balanced", "--out", str(tmp_path / "v")]) == EXIT_OK
        assert "valid" in capsys.readouterr().out

    def test_validate_writes_nothing(self, tmp_path):
        out = tmp_path / "v"
        assert main(["validate", "fig1", "--out", str(out), "--quiet"]) == EXIT_OK
        assert not out.exists()

    def test_stationary(self, tmp_path):
        out = tmp_path / "st"
        assert main(["stationary", "well_balanced", "--out", str(out), "--quiet"]) == EXIT_OK
        s = json.loads((out / "summary.json").read_text())
        assert max(s["kink_jump_residuals"]) <= 1e-8
        assert s["min_margin"] > 0
        assert read_csv(out / "stationary.csv")[0].keys() == {"x", "rho", "q", "P"}
        assert (out / "grid.csv").exists()
        assert (out / "discrete_stationary.csv").exists()

    def test_stationary_needs_stationary_datum(self, tmp_path, capsys):
        out = tmp_path / "st"
        assert main(["stationary", "fig1", "--out", str(out), "--quiet"]) == EXIT_CONFIG
        assert "initial.kind" in capsys.readouterr().err

    def test_converge(self, tmp_path):
        cfg = json.loads((BUNDLED / "arc_convergence.json").read_text())
        cfg["convergence"] = {"levels": [3, 4, 5], "fv_cells": [200, 400]}
        out = tmp_path / "cv"
        assert main(["converge", str(write_config(tmp_path, cfg)), "--out", str(out), "--quiet"]) == EXIT_OK
        s = json.loads((out / "summary.json").read_text())
        assert len(s["l1"]) == 2
        assert s["l1"][1] < s["l1"][0]
        assert len(s["ft_vs_fv"]) == 2
        assert len(read_csv(out / "convergence.csv")) == 2

    def test_converge_straight_pipe_is_level_independent(self, tmp_path):
        cfg = dict(MINIMAL, initial={"kind": "riemann", "left": [1.2, 0.1], "right": [1.0, 0.0]},
                   convergence={"levels": [1, 2, 3], "fv_cells": [200], "bound": 0.2})
        out = tmp_path / "cv"
        assert main(["converge", str(write_config(tmp_path, cfg)), "--out", str(out), "--quiet"]) == EXIT_OK
        s = json.loads((out / "summary.json").read_text())
        assert s["l1"] == [0.0, 0.0]
        assert s["within_bound"] is True

    def test_output_dir_from_config(self, tmp_path):
        cfg = dict(MINIMAL, params=dict(MINIMAL["params"], output_dir=str(tmp_path / "cfg_out")))
        assert main(["run", str(write_config(tmp_path, cfg)), "--quiet"]) == EXIT_OK
        assert (tmp_path / "cfg_out" / "summary.json").exists()

    def test_converge_eps_length_mismatch(self, tmp_path, capsys):
        cfg = json.loads((BUNDLED / "arc_convergence.json").read_text())
        cfg["convergence"] = {"levels": [3, 4], "eps": [0.01]}
        assert main(["converge", str(write_config(tmp_path, cfg)), "--out", str(tmp_path / "o"),
                     "--quiet"]) == EXIT_CONFIG
        assert "convergence.eps" in capsys.readouterr().err

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0

    @pytest.mark.parametrize("name", ["straight", "fig1", "well_balanced", "water_pipe", "arc_convergence"])
    def test_bundled_scenarios_validate(self, name, tmp_path):
        assert main(["validate", name, "--quiet", "--out", str(tmp_path / "o")]) == EXIT_OK
