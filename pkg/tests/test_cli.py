import json
import subprocess
import sys

import pytest

from dysonmaps.cli import main, read_config
from dysonmaps.errors import ConfigError

FAST = ["--n", "8", "--margin", "2", "--steps", "6"]


def run(tmp_path, *args):
    return main(["--out", str(tmp_path), *args])


def test_verify_pass_writes_csv_and_manifest(tmp_path):
    assert run(tmp_path, "verify", "--case", "eta1", *FAST) == 0
    assert (tmp_path / "verify_eta1_c0.csv").read_text().startswith("t,herm_resid")
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["result"]["passed"] is True


def test_verify_tolerance_failure_exit_1(tmp_path):
    assert run(tmp_path, "verify", "--case", "eta2", "--constraint", "c=lam", "--k1", "2.5",
               "--tol", "1e-12", *FAST) == 1


def test_verify_degenerate_constant_exit_2(tmp_path):
    assert run(tmp_path, "verify", "--case", "eta3", "--k1", "0", *FAST) == 2


@pytest.mark.parametrize("argv", [
    ["verify"],
    ["verify", "--case", "eta1", "--tol", "-1"],
    ["verify", "--case", "eta9"],
    ["bogus"],
    ["perturb", "--order", "6"],
    ["energies"],
    ["energies", "--figure", "3"],
    ["quartic", "--sigma", "1,0,0"],
    ["quartic", "--sigma", "1,0.2"],
])
def test_config_errors_exit_2(tmp_path, argv, capsys):
    assert run(tmp_path, *argv) == 2


def test_energies_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["energies", "--map", "eta3", "--constraint", "c=plam", "--p", "-0.5", "--k1", "2.5",
            "--k2", "1", "--n", "1", "--m", "0", "--samples", "50"]
    assert run(a, *args) == 0 and run(b, *args) == 0
    name = "energy_eta3_cpl_n1_m0.csv"
    assert (a / name).read_bytes() == (b / name).read_bytes()
    assert (a / "manifest.json").read_bytes() != b""


def test_energies_figure_panel_filter(tmp_path):
    assert run(tmp_path, "energies", "--figure", "2", "--p", "-0.9", "--samples", "20") == 0
    files = sorted(p.name for p in tmp_path.glob("fig2*.csv"))
    assert len(files) == 10 and all(f.startswith("fig2d_") for f in files)
    assert run(tmp_path / "x", "energies", "--figure", "2", "--p", "-0.7") == 2


def test_perturb(tmp_path, capsys):
    assert run(tmp_path, "perturb", "--steps", "600") == 0
    assert (tmp_path / "perturb_K4K3_order5.csv").exists()
    assert run(tmp_path, "perturb", "--c", "zero", "--steps", "300") == 0
    assert "collapses" in capsys.readouterr().out
    assert run(tmp_path, "perturb", "--case", "K4K1", "--y0", "1,0,0,0.4,0,0",
               "--steps", "300", "--t-end", "1") == 0


def test_quartic(tmp_path):
    assert run(tmp_path, "quartic", "--n", "24", "--margin", "6", "--samples", "3") == 0
    assert run(tmp_path, "quartic", "--g", "exp", "--n", "24", "--margin", "6",
               "--samples", "3") == 1


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nn = 8\nmargin = 2\nsteps = 4\ntol = 1e-12\n")
    assert main(["--config", str(cfg), "--out", str(tmp_path), "verify", "--case", "eta1"]) == 1
    # explicit flags win over the file
    assert main(["--config", str(cfg), "--out", str(tmp_path), "verify", "--case", "eta1",
                 "--tol", "1e-5"]) == 0
    cfg.write_text("nonsense = 1\n")
    assert main(["--config", str(cfg), "--out", str(tmp_path), "verify", "--case", "eta1"]) == 2


def test_read_config_rejects_bad_lines(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("no equals sign\n")
    with pytest.raises(ConfigError):
        read_config(cfg)


def test_out_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("DYSON_OUT", str(tmp_path / "env"))
    assert main(["verify", "--case", "eta1", *FAST]) == 0
    assert (tmp_path / "env" / "manifest.json").exists()


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "dysonmaps.cli", "--out", str(tmp_path),
                           "verify", "--case", "eta4", *FAST], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "PASS" in proc.stdout
