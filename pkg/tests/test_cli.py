import csv
import json

import numpy as np
import pytest

from seqbell.cli import SIMULATE_HEADER, SWEEP_HEADER, main


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_svalues_balanced_point(capsys):
    assert main(["svalues", "--theta-deg", "18.4"]) == 0
    out = capsys.readouterr().out
    assert "F         = 0.599024" in out
    assert "S_AB1     = 2.26481  violation=true" in out
    assert "S_AB2     = 2.26136  violation=true" in out


@pytest.mark.parametrize("theta, flags", [("0", ("true", "false")), ("45", ("false", "true"))])
def test_svalues_limits(capsys, theta, flags):
    assert main(["svalues", theta]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[3].endswith(f"violation={flags[0]}")
    assert lines[4].endswith(f"violation={flags[1]}")


def test_svalues_out_of_range(capsys):
    assert main(["svalues", "--theta-deg", "91"]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["svalues", "--theta-deg", "abc"])
    assert exc.value.code == 1


def test_sweep_csv(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--from-deg", "0", "--to-deg", "45", "--step-deg", "0.5", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0] == SWEEP_HEADER
    assert len(rows) == 92
    data = np.array(rows[1:], dtype=float)
    assert np.max(np.abs(data[:, 3] - data[:, 5])) < 1e-9
    assert np.max(np.abs(data[:, 4] - data[:, 6])) < 1e-9
    both = data[(data[:, 5] > 2) & (data[:, 6] > 2), 0]
    assert both.min() > 12.235 and both.max() < 22.5
    assert rows[1][0] == "0" and rows[-1][0] == "45"


def test_sweep_bad_args(tmp_path):
    assert main(["sweep", "--step-deg", "0"]) == 1
    assert main(["sweep", "--from-deg", "30", "--to-deg", "10"]) == 1
    assert main(["sweep", "--out", str(tmp_path / "missing" / "x.csv")]) == 1


def _config(tmp_path, **kw):
    doc = {"version": 1, **kw}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    return str(path)


def test_simulate_reference_preset(tmp_path):
    cfg = _config(tmp_path, thetas_deg=[4, 16.4, 18.4, 20.5, 28], seed=42)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", "--config", cfg, "--out", str(a)]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = read_csv(a)
    assert rows[0] == SIMULATE_HEADER
    assert [r[0] for r in rows[1:]] == ["4", "16.4", "18.4", "20.5", "28"]
    assert all(r[-1] == "42" for r in rows[1:])
    c = tmp_path / "c.csv"
    assert main(["simulate", "--config", cfg, "--out", str(c), "--seed", "43"]) == 0
    assert c.read_bytes() != a.read_bytes()


def test_simulate_ideal_large_window(tmp_path):
    cfg = _config(tmp_path, vis_zx=1, vis_diag=1, window=5000, thetas_deg=[10, 18.4, 30])
    out = tmp_path / "o.csv"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    for r in read_csv(out)[1:]:
        t = np.deg2rad(float(r[0]))
        s1, e1, s2, e2 = map(float, r[1:5])
        assert abs(s1 - 2 * np.sqrt(2) * np.cos(2 * t)) < 3 * e1
        assert abs(s2 - np.sqrt(2) * (1 + np.sin(2 * t))) < 3 * e2


def test_simulate_malformed_config(tmp_path, capsys):
    cfg = _config(tmp_path, window=-1)
    assert main(["simulate", "--config", cfg]) == 1
    assert "window" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["simulate", "--config", str(bad)]) == 1
    assert main(["simulate", "--config", str(tmp_path / "nope.json")]) == 1


def test_verify_circuit(capsys, tmp_path):
    assert main(["verify-circuit", "--theta-deg", "18.4", "--phi-deg", "0"]) == 0
    assert main(["verify-circuit", "--theta-deg", "0", "--phi-deg", "22.5"]) == 0
    for line in capsys.readouterr().out.splitlines():
        if "max_deviation" in line:
            assert float(line.split("=")[1]) < 1e-12
    assert main(["verify-circuit", "--theta-deg", "18.4", "--perturb-hwp3-deg", "2"]) == 2


def test_verify_circuit_json_document(tmp_path):
    path = tmp_path / "c.json"
    assert main(["verify-circuit", "--theta-deg", "12", "--phi-deg", "40", "--dump-circuit", str(path)]) == 0
    doc = json.loads(path.read_text())
    assert doc["version"] == 1 and doc["elements"][0]["kind"] == "HWP"
    assert main(["verify-circuit", "--theta-deg", "12", "--phi-deg", "40", "--circuit", str(path)]) == 0
    assert main(["verify-circuit", "--theta-deg", "13", "--phi-deg", "40", "--circuit", str(path)]) == 2
    path.write_text("{}")
    assert main(["verify-circuit", "--theta-deg", "13", "--circuit", str(path)]) == 1
