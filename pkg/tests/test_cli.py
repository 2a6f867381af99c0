from __future__ import annotations

import csv
import io
import json
import math

import pytest

from qaoaproj import cli
from qaoaproj.results import parse_residuals


def _table(path):
    return list(csv.DictReader(io.StringIO(path.read_text(encoding="utf-8"))))


def test_parse_range():
    assert cli.parse_range("3") == (3,)
    assert cli.parse_range("2:5") == (2, 3, 4, 5)
    with pytest.raises(cli.ConfigError):
        cli.parse_range("x")


def test_optimal_angles_table(tmp_path):
    out = tmp_path / "a.csv"
    assert cli.main(["optimal-angles", "--n-range", "1:30", "--out", str(out)]) == 0
    rows = _table(out)
    first = rows[0]
    assert float(first["gamma"]) == pytest.approx(math.pi / 2)
    assert float(first["beta"]) == pytest.approx(math.pi / 4)
    assert float(first["magnitude_sq"]) == pytest.approx(1.0)
    residuals = [float(parse_residuals(r["residuals"])["beta_equation"]) for r in rows]
    assert max(abs(r) for r in residuals) < 1e-12
    gaps = [float(parse_residuals(r["residuals"])["pi_gap"]) for r in rows if int(r["n"]) >= 8]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))


def test_json_output(tmp_path):
    out = tmp_path / "a.json"
    assert cli.main(["optimal-angles", "--n", "5", "--format", "json", "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["rows"][0]["n"] == 5


def test_config_errors_exit_2(capsys):
    assert cli.main(["optimal-angles", "--n-range", "5:3"]) == 2
    assert cli.main(["optimal-angles", "--n", "3", "--n-range", "1:2"]) == 2
    assert cli.main(["saturation", "--sigma", "0.1"]) == 2
    assert cli.main(["lastlayer", "--p", "6"]) == 2


def test_resource_limit_exit_3():
    assert cli.main(["verify", "--n", "13"]) == 3


def test_verify_passes_and_corruption_fails(capsys):
    assert cli.main(["verify", "--n", "6", "--probes", "20"]) == 0
    first = capsys.readouterr().out
    assert cli.main(["verify", "--n", "6", "--probes", "20"]) == 0
    assert capsys.readouterr().out == first
    assert "FAIL" not in first
    assert cli.main(["verify", "--n", "6", "--probes", "20", "--corrupt"]) == 1
    assert "FAIL analytic.formula_consistency" in capsys.readouterr().out


def test_lastlayer_rows(tmp_path):
    out = tmp_path / "l.csv"
    assert cli.main(["lastlayer", "--n-range", "6:7", "--p", "1", "--out", str(out)]) == 0
    rows = _table(out)
    data = [r for r in rows if r["experiment"].startswith("lastlayer/")]
    assert len(data) == 2
    for r in data:
        assert float(parse_residuals(r["residuals"])["last_layer_defect"]) < 1e-6
    assert any(r["experiment"].startswith("lastlayer-fit") for r in rows)


def test_saturation_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["saturation", "--n", "3", "--seeds", "2", "--p-max", "5"]
    cli.main(args + ["--out", str(a)])
    cli.main(args + ["--out", str(b)])

    def strip(path):
        return [{k: v for k, v in r.items() if k != "wall_time"} for r in _table(path)]

    assert strip(a) == strip(b)
    summary = [r for r in _table(a) if r["experiment"].startswith("saturation-summary")]
    assert len(summary) == 1 and int(summary[0]["n"]) == 3
