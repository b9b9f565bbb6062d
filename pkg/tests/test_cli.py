import re

import numpy as np
import pytest

from mixlab.cli import ConfigError, main, read_config_file, resolve_config


def run(tmp_path, *args, name="out"):
    return main([*args, "--out", str(tmp_path / name)])


def test_solve_zero_field(tmp_path):
    assert run(tmp_path, "solve", "--nt", "64", "--nrho", "129", "--R", "8", "--data", "zero", "--source", "zero") == 0
    data = np.loadtxt(tmp_path / "out" / "solution.csv", delimiter=",", skiprows=1)
    assert data.shape == (64 * 129, 3)
    assert np.all(data[:, 2] == 0)
    assert (tmp_path / "out" / "solution.svg").exists()


def test_solve_even_nrho(tmp_path, capsys):
    assert run(tmp_path, "solve", "--nrho", "128") == 2
    assert capsys.readouterr().err.startswith("mixlab: ")


def test_solve_manufactured(tmp_path, capsys):
    assert run(tmp_path, "solve", "--manufactured") == 0
    rows = np.genfromtxt(tmp_path / "out" / "manufactured.csv", delimiter=",", names=True, dtype=None, encoding=None)
    spatial = [r["order"] for r in rows if r["case"] == "spatial"][1:]
    temporal = [r["order"] for r in rows if r["case"] == "temporal"][1:]
    assert min(spatial) >= 1.9 and min(temporal) >= 0.9
    assert "order" in capsys.readouterr().out


def test_unknown_command_and_flag(tmp_path):
    assert main(["nope"]) == 2
    assert run(tmp_path, "solve", "--bogus", "1") == 2
    assert run(tmp_path, "solve", "--nt", "abc") == 2
    assert run(tmp_path, "solve", "--method", "magic", "--nt", "9", "--nrho", "17") == 2


def test_missing_input_file(tmp_path):
    assert run(tmp_path, "solve", "--data", "file", "--data-file", str(tmp_path / "none.csv")) == 2


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# comment\nnt = 9\nnrho = 17  # inline\nkstar = 2\n")
    file_values = read_config_file(cfg)
    assert file_values == {"nt": "9", "nrho": "17", "kstar": "2"}
    c = resolve_config("coeffs", file_values, {"nt": "17"})
    assert c["nt"] == 17 and c["nrho"] == 17 and c["kstar"] == 2


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("beta = 0.1\n")
    assert main(["solve", "--config", str(cfg)]) == 2
    with pytest.raises(ConfigError):
        resolve_config("solve", {"beta": "0.1"}, {})


def test_config_malformed_line(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("nt 9\n")
    assert main(["solve", "--config", str(cfg)]) == 2


def test_manifest_echoes_resolved_config(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("nt = 9\nnrho = 17\n")
    assert main(["solve", "--config", str(cfg), "--nrho", "33", "--out", str(tmp_path / "o")]) == 0
    lines = (tmp_path / "o" / "manifest.txt").read_text().splitlines()
    assert "command = solve" in lines
    assert "nt = 9" in lines and "nrho = 33" in lines
    assert any(line.startswith("seed = ") for line in lines)


def test_determinism(tmp_path):
    args = ["solve", "--nt", "17", "--nrho", "33", "--data", "random", "--source", "bump", "--seed", "3"]
    assert run(tmp_path, *args, name="a") == 0
    assert run(tmp_path, *args, name="b") == 0
    assert (tmp_path / "a" / "solution.csv").read_bytes() == (tmp_path / "b" / "solution.csv").read_bytes()
    assert run(tmp_path, *args[:-1], "4", name="c") == 0
    assert (tmp_path / "a" / "solution.csv").read_bytes() != (tmp_path / "c" / "solution.csv").read_bytes()


def test_adjoint_outputs(tmp_path):
    assert run(tmp_path, "adjoint", "--nt", "17", "--nrho", "33", "--kmax", "1") == 0
    for name in ("phi0.csv", "phi1.csv", "phi0_left_traces.csv", "phi1_right_traces.csv", "interface.csv"):
        assert (tmp_path / "out" / name).exists()
    rows = np.loadtxt(tmp_path / "out" / "interface.csv", delimiter=",", skiprows=1)
    assert np.all(rows[:, 1:3] <= 1e-12)


def test_basis_and_coeffs(tmp_path):
    assert run(tmp_path, "basis", "--nt", "65", "--nrho", "129", "--kstar", "2", "--nbumps", "12", name="b") == 0
    assert (tmp_path / "b" / "basis.csv").exists()
    assert run(tmp_path, "coeffs", "--nt", "33", "--nrho", "65", "--kstar", "1", name="coarse") == 2
    assert run(tmp_path, "coeffs", "--nt", "65", "--nrho", "129", "--kstar", "1", "--picard", name="c") == 0
    assert (tmp_path / "c" / "picard.csv").exists()
    names = [l.split(",")[0] for l in (tmp_path / "c" / "coefficients.csv").read_text().splitlines()[1:]]
    assert names[:2] == ["c0_1", "c1_1"]


def test_picard_divergence_exit(tmp_path, capsys):
    assert run(tmp_path, "coeffs", "--nt", "65", "--nrho", "129", "--picard", "--L", "1") == 3
    assert "numerical error" in capsys.readouterr().err


def test_dichotomy_default_exit(tmp_path, capsys):
    # the violated arm grows only logarithmically: see README, acceptance 5
    assert run(tmp_path, "dichotomy") == 4
    out = tmp_path / "out"
    assert (out / "regularity.csv").exists() and (out / "dichotomy.svg").exists()
    header = (out / "regularity.csv").read_text().splitlines()[0]
    assert header == "arm,level,n_t,n_rho,k,norm,ratio,verdict"


def test_dichotomy_zero_data(tmp_path):
    assert run(tmp_path, "dichotomy", "--data", "zero", "--levels", "3") == 0


def test_dichotomy_single_level(tmp_path):
    assert run(tmp_path, "dichotomy", "--levels", "1") == 2


def test_moments_and_fs(tmp_path, capsys):
    assert run(tmp_path, "moments", "--nt", "33", name="m") == 0
    assert (tmp_path / "m" / "moments.csv").exists()
    assert run(tmp_path, "fs", "--beta", "-0.1", "--branch", "reversed", name="f") == 0
    out = capsys.readouterr().out
    assert "reversed = True" in out
    header = (tmp_path / "f" / "profile.csv").read_text().splitlines()[0]
    assert header == "eta,f,fp,fpp"
    # no reversed branch for favourable gradients: a numerical failure, not a config error
    assert run(tmp_path, "fs", "--beta", "0.1", "--branch", "reversed", name="g") == 3
    assert run(tmp_path, "fs", "--beta", "0.9", name="h") == 2


def test_report_defaults(tmp_path):
    assert run(tmp_path, "report", "--beta", "0") == 0
    text = (tmp_path / "out" / "report.txt").read_text()
    assert text.count("=> contradiction at level") >= 2
    assert "contradiction at level 0" in text and "contradiction at level 1" in text
    fpp0 = float(re.search(r"fpp0 = ([-0-9.e]+)", text).group(1))
    assert fpp0 == pytest.approx(0.46960, abs=1e-4)
    assert (tmp_path / "out" / "report.csv").exists()


def test_report_kstar_zero(tmp_path):
    assert run(tmp_path, "report", "--kstar", "0") == 0
    assert "vacuous" in (tmp_path / "out" / "report.txt").read_text()
