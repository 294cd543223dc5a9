import json

import numpy as np
import pytest

from modalkit import cli
from modalkit.snapshots import Role, ingest_csv, read_header

PLANT = "8.6:0:1:0.3,40:-5:0.4:1,3:-6:0.3:0,120:-20:0.3:2,0:-8:0.3:0"


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def railway(tmp_path_factory):
    path = tmp_path_factory.mktemp("rail") / "railway.csv"
    assert run("simulate", "--preset", "railway", "--out", path) == 0
    return path


@pytest.fixture(scope="module")
def planted(tmp_path_factory):
    path = tmp_path_factory.mktemp("plant") / "planted.csv"
    assert run("simulate", "--plant", PLANT, "--forced", "--seed", 7, "--out", path) == 0
    return path


class TestSimulate:
    def test_railway_preset(self, railway):
        assert read_header(railway) == ["i_n", "u_dc", "u_n"]
        ts = ingest_csv(railway, {"i_n": Role.STATE, "u_dc": Role.STATE, "u_n": Role.INPUT})
        assert ts.n == 5001 and ts.dt == pytest.approx(4e-4)

    def test_plant(self, tmp_path):
        out = tmp_path / "p.csv"
        assert run("simulate", "--plant", "8.6:0:1", "--n", 5000, "--dt", 0.0004, "--out", out) == 0
        ts = ingest_csv(out, {"y0": Role.STATE})
        assert ts.n == 5000

    def test_duty_out_of_range(self, tmp_path, capsys):
        assert run("simulate", "--duty", "const:2.0", "--out", tmp_path / "x.csv") == 64
        err = capsys.readouterr().err
        assert "--duty" in err and "[cli]" in err

    def test_bad_plant_spec(self, tmp_path, capsys):
        assert run("simulate", "--plant", "8.6:a", "--out", tmp_path / "x.csv") == 64
        assert "--plant" in capsys.readouterr().err

    def test_aliased_plant(self, tmp_path, capsys):
        assert run("simulate", "--plant", "2000", "--out", tmp_path / "x.csv") == 64
        assert "[simulator]" in capsys.readouterr().err

    def test_unwritable(self, tmp_path, capsys):
        assert run("simulate", "--preset", "railway", "--out", tmp_path / "no" / "x.csv") == 74
        assert "--out" in capsys.readouterr().err

    def test_seed_env(self, tmp_path, monkeypatch):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run("simulate", "--plant", "8.6,3", "--channels", 2, "--n", 50, "--seed", 5, "--out", a)
        monkeypatch.setenv("MODALKIT_SEED", "5")
        run("simulate", "--plant", "8.6,3", "--channels", 2, "--n", 50, "--out", b)
        assert a.read_bytes() == b.read_bytes()

    def test_noise(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run("simulate", "--preset", "railway", "--n", 100, "--out", a)
        run("simulate", "--preset", "railway", "--n", 100, "--snr", 30, "--out", b)
        assert a.read_bytes() != b.read_bytes()

    def test_usage_error_exit_code(self):
        with pytest.raises(SystemExit) as info:
            run("simulate")
        assert info.value.code == 64


class TestAnalyze:
    def test_railway_dmdc(self, railway, tmp_path):
        out = tmp_path / "r.json"
        code = run("analyze", "--data", railway, "--method", "dmdc", "--inputs", "u_n",
                   "--stack", 10, "--rank", "fixed:11", "--out", out)
        report = json.loads(out.read_text())
        assert code == 0 and report["verdict"] == "Stable"
        top = report["modes"][0]
        assert top["frequency_hz"] == pytest.approx(41.09, abs=0.05)
        assert top["sigma"] == pytest.approx(-5.525, abs=0.01)
        assert report["ranks"] == {"p": 11, "r": 11}
        assert set(report) == {"schema", "method", "dt", "ranks", "singular_values", "modes",
                               "dominant", "verdict", "warnings"}

    def test_planted_critical(self, planted, tmp_path):
        out = tmp_path / "p.json"
        code = run("analyze", "--data", planted, "--inputs", "u0", "--out", out)
        report = json.loads(out.read_text())
        assert code == 10 and report["verdict"] == "Critical"
        assert report["modes"][0]["frequency_hz"] == pytest.approx(8.6, rel=0.02)

    def test_unstable_exit(self, tmp_path):
        data = tmp_path / "u.csv"
        run("simulate", "--plant", "5:5:1", "--n", 1000, "--out", data)
        assert run("analyze", "--data", data, "--method", "dmd", "--stack", 4,
                   "--out", tmp_path / "u.json") == 20

    def test_dmdc_without_inputs(self, railway, capsys):
        assert run("analyze", "--data", railway, "--method", "dmdc") == 64
        assert "--inputs" in capsys.readouterr().err

    def test_rank_too_large_names_flag(self, railway, capsys):
        assert run("analyze", "--data", railway, "--inputs", "u_n", "--rank", "fixed:11") == 64
        err = capsys.readouterr().err
        assert "--rank" in err and "[numerics]" in err and str(railway) in err

    def test_unknown_channel(self, railway, capsys):
        assert run("analyze", "--data", railway, "--inputs", "v_x") == 64
        assert "v_x" in capsys.readouterr().err

    def test_missing_file(self, tmp_path, capsys):
        assert run("analyze", "--data", tmp_path / "none.csv", "--inputs", "u") == 74
        assert "--data" in capsys.readouterr().err

    def test_reconstruction_and_plot_data(self, planted, tmp_path):
        rec, plots = tmp_path / "rec.csv", tmp_path / "plots"
        run("analyze", "--data", planted, "--inputs", "u0", "--out", tmp_path / "r.json",
            "--reconstruct", rec, "--plot-dir", plots)
        header = read_header(rec)
        states = [h for h in read_header(planted) if h.startswith("x")]
        assert header == [*states, *(f"{s}_reconstructed" for s in states)]
        data = np.loadtxt(rec, delimiter=",", skiprows=1)
        measured, rebuilt = data[:, 1:1 + len(states)], data[:, 1 + len(states):]
        assert np.linalg.norm(measured - rebuilt) / np.linalg.norm(measured) < 1e-3
        assert {p.name for p in plots.iterdir()} == {"eigenvalues.csv", "singular_values.csv",
                                                     "reconstruction.csv"}

    def test_stdout_json(self, planted, capsys):
        run("analyze", "--data", planted, "--inputs", "u0")
        assert json.loads(capsys.readouterr().out)["schema"] == 1

    def test_deterministic(self, planted, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run("analyze", "--data", planted, "--inputs", "u0", "--out", a)
        run("analyze", "--data", planted, "--inputs", "u0", "--out", b)
        assert a.read_bytes() == b.read_bytes()


class TestStudy:
    def test_four_variants_match_analyze(self, railway, tmp_path):
        study = tmp_path / "s.json"
        flags = ["--data", railway, "--stack", 10, "--rank", "fixed:11"]
        assert run("study-normalization", *flags, "--inputs", "u_n", "--out", study) == 0
        data = json.loads(study.read_text())
        assert set(data["variants"]) == {"dmd_raw", "dmdc_raw", "dmd_zscore", "dmdc_zscore"}
        for v in data["variants"].values():
            assert v["eigenvalues"] and v["reconstruction_error"] >= 0
        run("analyze", *flags, "--inputs", "u_n", "--out", tmp_path / "c.json")
        run("analyze", *flags, "--method", "dmd", "--out", tmp_path / "d.json")
        assert data["variants"]["dmdc_raw"]["report"] == json.loads((tmp_path / "c.json").read_text())
        assert data["variants"]["dmd_raw"]["report"] == json.loads((tmp_path / "d.json").read_text())

    def test_zero_variance_warning(self, tmp_path):
        data, study = tmp_path / "z.csv", tmp_path / "z.json"
        run("simulate", "--preset", "railway", "--un-amp", 0, "--n", 600, "--out", data)
        assert run("study-normalization", "--data", data, "--inputs", "u_n", "--stack", 4,
                   "--out", study) == 0
        warnings = json.loads(study.read_text())["warnings"]
        assert any("u_n" in w for w in warnings)

    def test_requires_inputs(self, railway):
        assert run("study-normalization", "--data", railway) == 64


class TestModes:
    @pytest.fixture
    def report(self, railway, tmp_path):
        out = tmp_path / "r.json"
        run("analyze", "--data", railway, "--inputs", "u_n", "--stack", 10, "--rank", "fixed:11",
            "--out", out)
        return out

    def test_table(self, report, capsys):
        assert run("modes", "--report", report) == 0
        lines = capsys.readouterr().out.splitlines()
        assert "41.09" in lines[2]
        assert lines[-1].startswith("dominant mode:")

    def test_single_mode(self, tmp_path, capsys):
        one = {"schema": 1, "dominant": 0, "verdict": "Stable", "modes": [
            {"index": 0, "eigenvalues": [{"re": 0.5, "im": 0.0}], "sigma": -1.7, "frequency_hz": 0.0,
             "damping_ratio": 1.0, "magnitude": 0.5, "integral_contribution": 1.0,
             "classification": "Stable"}]}
        path = tmp_path / "one.json"
        path.write_text(json.dumps(one))
        run("modes", "--report", path)
        assert len(capsys.readouterr().out.splitlines()) == 4

    def test_json_projection(self, report, capsys):
        run("modes", "--report", report, "--json")
        echoed = json.loads(capsys.readouterr().out)
        full = json.loads(report.read_text())
        assert echoed == {k: full[k] for k in ("dominant", "verdict", "modes")}

    def test_malformed(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text('{"schema": 1, "modes": []}')
        assert run("modes", "--report", path) == 64
        assert "--report" in capsys.readouterr().err
