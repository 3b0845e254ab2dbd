import csv
import json

import numpy as np
import pytest

from harmonic_acoustics.cli import main

SMALL_SCHEME = {"n_r": 24, "m_max": 8, "dt": 2 * np.pi / 15 / 256, "check_resolution": False}


def _run(capsys, argv):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def _config(tmp_path, **cfg):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_wavenumber(capsys):
    code, out, _ = _run(capsys, ["wavenumber", "--lambda", "4", "--r1", "1.5", "--r2", "2.0"])
    assert code == 0
    assert json.loads(out)["wavenumber"] == pytest.approx(2.28945, abs=1e-4)


def test_solve_writes_outputs(tmp_path, capsys):
    cfg = _config(tmp_path, epsilon=0.1, model={"n_r": 24, "m_max": 8})
    out_dir = tmp_path / "solve"
    code, out, _ = _run(capsys, ["solve", "--order", "2", "--form", "velocity", "--config", cfg,
                                 "--out", str(out_dir)])
    assert code == 0
    res = json.loads(out)
    assert set(res["pressure_norms"]) == {"0", "1", "2"}
    with open(out_dir / "pressure_harmonics.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["k", "m", "r", "re", "im"]
    assert {r["k"] for r in rows} == {"0", "1", "2"}
    man = json.loads((out_dir / "manifest.json").read_text())
    assert man["command"] == "solve" and man["form"] == "velocity"
    assert man["model"]["order"] == 2 and man["model"]["n_r"] == 24
    assert man["benchmark"]["radial_wavenumber"] == pytest.approx(2.28945, abs=1e-4)


def test_solve_is_deterministic(tmp_path, capsys):
    cfg = _config(tmp_path, epsilon=0.05, model={"n_r": 16, "m_max": 8})
    for name in ("a", "b"):
        assert _run(capsys, ["solve", "--config", cfg, "--out", str(tmp_path / name)])[0] == 0
    a = (tmp_path / "a" / "pressure_harmonics.csv").read_bytes()
    assert a == (tmp_path / "b" / "pressure_harmonics.csv").read_bytes()


def test_reference_and_modes(tmp_path, capsys):
    cfg = _config(tmp_path, epsilon=0.1, caption_scale=True, scheme=SMALL_SCHEME)
    code, out, _ = _run(capsys, ["reference", "--config", cfg, "--periods", "2",
                                 "--out", str(tmp_path / "ref")])
    assert code == 0
    res = json.loads(out)
    assert isinstance(res["stationary"], bool)
    assert (tmp_path / "ref" / "final_period.npz").exists()
    man = json.loads((tmp_path / "ref" / "manifest.json").read_text())
    assert man["scheme"]["n_periods"] == 2
    code, out, _ = _run(capsys, ["modes", "--config", cfg, "--out", str(tmp_path / "modes")])
    assert code == 0
    with open(tmp_path / "modes" / "modes.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["k"] for r in rows] == ["0", "1", "2", "3"]
    assert rows[3]["model"] == ""


def test_converge_single_epsilon(tmp_path, capsys):
    cfg = _config(tmp_path, benchmark={"epsilon_list": [0.1]},
                  scheme={**SMALL_SCHEME, "n_periods": 1})
    code, out, _ = _run(capsys, ["converge", "--config", cfg, "--out", str(tmp_path / "c"),
                                 "--quiet"])
    assert code == 0
    assert json.loads(out)["slopes"] == {}
    assert (tmp_path / "c" / "errors.csv").exists()
    assert (tmp_path / "c" / "manifest.json").exists()


@pytest.mark.parametrize("cfg", [{"bogus": 1}, {"model": {"nope": 2}}, {"epsilon": -1}])
def test_bad_config_exit_code(tmp_path, capsys, cfg):
    path = _config(tmp_path, **cfg)
    code, out, err = _run(capsys, ["solve", "--config", path, "--out", str(tmp_path / "x")])
    assert code == 2 and out == ""
    e = json.loads(err)
    assert "error" in e and "message" in e


def test_invalid_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    code, _, err = _run(capsys, ["solve", "--config", str(path), "--out", str(tmp_path / "x")])
    assert code == 2 and json.loads(err)["error"]
