import json

import numpy as np
import pytest

from qcvar import coeff as C
from qcvar.cli import main


def write(tmp_path, mu, name="mu.json"):
    p = tmp_path / name
    p.write_text(json.dumps(mu.to_dict()))
    return str(p)


def test_dims_output(tmp_path, capsys):
    assert main(["dims", "--k", "0.1", "--out", str(tmp_path / "o")]) == 0
    line = capsys.readouterr().out.strip().splitlines()[-1]
    assert json.loads(line) == {"smirnov": 1.01, "becker_pommerenke": 1.36, "expansion": None}


def test_manifest_and_collision(tmp_path):
    out = str(tmp_path / "o")
    assert main(["dims", "--k", "0.2", "--out", out]) == 0
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    for key in ("argv", "params", "inputs_digest", "seed", "threads", "versions", "wall_time_s"):
        assert key in man
    assert main(["dims", "--k", "0.2", "--out", out]) == 2
    assert main(["dims", "--k", "0.2", "--out", out, "--force"]) == 0


def test_zero_map_has_zero_variance(tmp_path):
    src = write(tmp_path, C.PiecewiseCoefficient.empty("disk"))
    assert main(["variance", "--map", src, "--jmin", "4", "--jmax", "8", "--out", str(tmp_path / "o")]) == 0
    est = json.loads((tmp_path / "o" / "variance.json").read_text())
    assert est["value"] == 0
    assert (tmp_path / "o" / "variance.png").exists()


def test_malformed_input_is_validation_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["variance", "--map", str(bad), "--out", str(tmp_path / "o")]) == 2


def test_divergent_parameter_is_numerical_error(tmp_path):
    cells = (C.Cell.sector(0.5, 1.0, 0.0, 3.0),)
    src = write(tmp_path, C.PiecewiseCoefficient(cells, np.array([0.5]), "disk"))
    assert main(["variance", "--map", src, "--t", "3", "--out", str(tmp_path / "o")]) == 3


def test_bad_option_is_usage_error(tmp_path):
    assert main(["dims", "--k", "lots", "--out", str(tmp_path / "o")]) == 2


def test_periodic_variance_csv(tmp_path):
    mu = C.PiecewiseCoefficient((C.Cell.rect(0.0, 0.5, -1.0, -0.25),), np.array([0.5]))
    src = write(tmp_path, mu)
    assert main(["variance", "--map", src, "--periodic", "4", "--jmin", "4", "--jmax", "8",
                 "--out", str(tmp_path / "o")]) == 0
    rows = (tmp_path / "o" / "variance_series.csv").read_text().splitlines()
    assert rows[0].startswith("# schema_version") and len(rows) == 2 + 5


def test_small_search_run(tmp_path):
    out = tmp_path / "s"
    args = ["search", "--n", "4", "--cols", "2", "--rows", "2", "--iters", "10",
            "--inner-depth", "6", "--final-depth", "8", "--seed", "2", "--out", str(out)]
    assert main(args) == 0
    files = {p.name for p in out.iterdir()}
    assert "manifest.json" in files and any(f.endswith(".png") for f in files)
