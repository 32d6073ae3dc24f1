import subprocess
import sys

import numpy as np

from rydberg_singlet.cli import main
from rydberg_singlet.scenarios import PRESETS, read_csv_columns


def test_presets_lists_every_preset(capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    for name in PRESETS:
        assert name in out


def test_run_config(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text("initial = 10\ncontrol.mode = only_H1\ncontrol.lambda1 = 0.08\ntime.t_end_2pi = 4\n")
    out = tmp_path / "out.csv"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    cols = read_csv_columns(out)
    assert len(cols["F"]) == 5
    assert np.all(np.diff(cols["F"]) >= 0)


def test_run_preset_with_overrides(tmp_path):
    out = tmp_path / "fig3a.csv"
    assert main(["run", "--preset", "fig3a", "--t-end", "3", "--out", str(out)]) == 0
    assert read_csv_columns(out)["t_over_2pi"][-1] == 3.0


def test_sweep_and_noise_commands(tmp_path):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text(
        "initial = 10\ncontrol.mode = only_H1\ncontrol.lambda1 = 0.08\n"
        "sweep.axis1.name = control.lambda1\nsweep.axis1.start = 0\nsweep.axis1.stop = 0.1\nsweep.axis1.step = 0.05\n"
        "sweep.at_2pi = 2\n"
    )
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "s.csv"), "--jobs", "1"]) == 0
    assert len(read_csv_columns(tmp_path / "s.csv")["F"]) == 3
    noise = tmp_path / "noise.cfg"
    noise.write_text("params.gamma = 0\ninitial = uniform\nnoise.eta2 = 0.5\ntime.t_end_2pi = 1\n")
    assert main(["noise", "--config", str(noise), "--trajectories", "5", "--seed", "1", "--out", str(tmp_path / "n.csv")]) == 0


def test_error_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("model = full\nparams.nonsense = 1\n")
    assert main(["run", "--config", str(bad)]) == 2
    assert "params.nonsense" in capsys.readouterr().err
    assert main(["run", "--preset", "nope"]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert main(["sweep", "--config", "fig3a", "--out", str(tmp_path / "x.csv")]) == 2


def test_units_command(capsys):
    assert main(["units", "--t-2pi", "1600"]) == 0
    assert "t = 0.4 ms" in capsys.readouterr().out


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "rydberg_singlet", "presets"], capture_output=True, text=True, check=True)
    assert "fig6" in out.stdout
