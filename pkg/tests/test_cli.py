import json

import numpy as np
import pytest

from tsea.cli import main


def test_stiffness_subcommand(tmp_path, capsys):
    code = main(["stiffness", "--mode", "sea", "--preset", "paper-full-range",
                 "--cycles", "1", "--out", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "K_fit" in out
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["K_fit_nm_per_rad"] == pytest.approx(5.57, rel=0.01)
    for name in ("trace.csv", "report.json", "plot.svg"):
        assert (tmp_path / name).exists()


def test_cycle_subcommand(tmp_path, capsys):
    code = main(["cycle", "--n", "5", "--out", str(tmp_path)])
    assert code == 0
    assert "5 completed, 0 rejected" in capsys.readouterr().out
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["completed"] == 5


def test_disturb_subcommand(tmp_path, capsys):
    code = main(["disturb", "--mode", "pea", "--impacts", "1", "--out", str(tmp_path)])
    assert code == 0
    assert "mean peak" in capsys.readouterr().out
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["mode"] == "PEA"
    assert len(report["peaks_deg"]) == 1


def test_missing_mode_is_usage_error(tmp_path, capsys):
    assert main(["stiffness", "--out", str(tmp_path)]) == 1
    assert "usage" in capsys.readouterr().err


def test_mode_flag_forbidden_for_track(tmp_path, capsys):
    assert main(["track", "--mode", "sea", "--out", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert "--mode" in err


def test_unknown_flag_rejected(tmp_path):
    assert main(["cycle", "--frobnicate", "--out", str(tmp_path)]) == 1


def test_unknown_preset(tmp_path, capsys):
    assert main(["cycle", "--preset", "no-such", "--out", str(tmp_path)]) == 1
    assert "no-such" in capsys.readouterr().err


def test_track_deterministic_outputs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["track", "--duration", "2", "--period", "1", "--out", str(a)]) == 0
    assert main(["track", "--duration", "2", "--period", "1", "--out", str(b)]) == 0
    assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    assert (a / "plot.svg").read_bytes() == (b / "plot.svg").read_bytes()


def test_noise_flag_and_seed(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    for out, seed in ((a, "1"), (b, "1"), (c, "2")):
        assert main(["track", "--duration", "1", "--period", "1", "--noise",
                     "--seed", seed, "--out", str(out)]) == 0
    assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()
    assert (a / "trace.csv").read_bytes() != (c / "trace.csv").read_bytes()


def test_hub_curve(tmp_path, capsys):
    code = main(["hub-curve", "--range", "0.5", "--steps", "501", "--out", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "trace.csv").read_text().strip().splitlines()
    assert lines[0] == "beta,tau_hub,l_eff"
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    assert rows.shape == (501, 3)
    mid = 250
    assert rows[mid, 0] == 0.0
    assert rows[mid, 1] == 0.0
    # torque column is odd-symmetric about the middle row
    assert np.allclose(rows[:, 1], -rows[::-1, 1], atol=1e-15)
    # first-difference slope near zero matches the linearized stiffness
    slope = (rows[mid + 1, 1] - rows[mid - 1, 1]) / (rows[mid + 1, 0] - rows[mid - 1, 0])
    assert slope == pytest.approx(5.86, abs=0.01)


def test_hub_curve_steps_validation(tmp_path, capsys):
    assert main(["hub-curve", "--steps", "1", "--out", str(tmp_path)]) == 1


def test_simulation_blowup_exits_2(tmp_path, capsys):
    # a grossly oversized step destabilizes the explicit integrator on the
    # motor spring mode; the rig must fail loudly, not return numbers
    import json

    from tsea.params import load_named_preset, preset_to_dict

    doc = preset_to_dict(load_named_preset("calibrated"))
    doc["params"]["dt"] = 0.05
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code = main(["stiffness", "--mode", "sea", "--preset", str(bad),
                 "--out", str(tmp_path / "out")])
    assert code == 2
    assert "simulation error" in capsys.readouterr().err
