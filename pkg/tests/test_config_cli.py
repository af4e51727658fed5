import json

import numpy as np
import pytest

from torictheta import cli
from torictheta.config import apply_shift, load_config, parse_config
from torictheta.errors import ConfigInvalid
from torictheta.weights import Shifted

FS_MODEL = {
    "polytope": {"dim": 1, "vertices": [[0], [1]]},
    "weight": {"kind": "fubini_study"},
    "measure": {"kind": "monge_ampere"},
}


def write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def test_defaults():
    cfg = parse_config({})
    assert cfg.k_list[0] == 1 and cfg.seed == 7
    assert cfg.model.polytope.dim == 1


def test_u_grid_spec():
    cfg = parse_config({"scan": {"u_grid": {"start": -1, "stop": 1, "num": 5}}})
    assert cfg.u_grid.tolist() == [-1.0, -0.5, 0.0, 0.5, 1.0]


@pytest.mark.parametrize(
    "bad",
    [
        {"scan": {"k_list": [3, 2]}},
        {"scan": {"k_list": []}},
        {"scan": {"t_list": [0.0]}},
        {"tolerances": {"quadrature": -1}},
        {"model": {"polytope": {"dim": 1, "vertices": [[0], [1]]}, "weight": {"kind": "nope"}}},
        {"model": {"polytope": {"dim": 1, "vertices": [[0], [1]]}, "measure": {"kind": "haar", "dim": 2}}},
        {"small_sections_shift": "sometimes"},
        [],
    ],
)
def test_invalid_configs(bad):
    with pytest.raises(ConfigInvalid):
        parse_config(bad)


def test_shift_knob():
    cfg = parse_config({"model": {**FS_MODEL, "weight": {"kind": "shifted", "base": {"kind": "fubini_study"}, "shift": -0.2}}, "small_sections_shift": "auto"})
    m = apply_shift(cfg)
    assert isinstance(m.weight, Shifted)
    assert m.weight.shift == pytest.approx(0.2, abs=1e-12)


def test_load_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{bad")
    with pytest.raises(ConfigInvalid):
        load_config(str(p))
    with pytest.raises(ConfigInvalid):
        load_config(str(tmp_path / "missing.json"))


def test_exit_code_config(tmp_path):
    assert cli.main(["gram", "--config", str(tmp_path / "missing.json")]) == 2


def test_exit_code_compute(tmp_path):
    cfg = write(tmp_path, {"model": {"polytope": {"dim": 2, "vertices": [[0, 0], [1, 0], [0, 1]]}}})
    assert cli.main(["degree", "--config", cfg]) == 3


def test_degree_json(tmp_path):
    cfg = write(tmp_path, {"model": FS_MODEL})
    out = tmp_path / "out"
    assert cli.main(["degree", "--config", cfg, "--out", str(out)]) == 0
    rep = json.loads((out / "degree.json").read_text())
    assert rep["degree"] == pytest.approx(0.5, abs=1e-6)
    assert rep["degree_p_route"] == pytest.approx(0.5, abs=1e-6)


def test_volume_scan_csv(tmp_path):
    cfg = write(tmp_path, {"scan": {"k_list": list(range(1, 61))}})
    out = tmp_path / "out"
    assert cli.main(["volume-scan", "--config", cfg, "--out", str(out), "--jobs", "2"]) == 0
    lines = (out / "volume_scan.csv").read_text().splitlines()
    assert lines[0] == "k,N_k,h0_theta,chi_hat,v_k,chi_k,sup_rho,theta_over_rho_max"
    vk = np.array([float(line.split(",")[4]) for line in lines[1:]])
    assert len(vk) == 60 and np.all(np.diff(vk) < 0)


def test_count_and_lattice_outputs(tmp_path, capsys):
    assert cli.main(["count", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "count.csv").read_text().splitlines()[1] == "1,2,2,2"
    cfg = write(tmp_path, {"lattices": [{"rank": 1, "gram": [[4.0]]}], "scan": {"t_list": [1.0]}})
    assert cli.main(["lattice", "--config", cfg]) == 0
    row = capsys.readouterr().out.splitlines()[1].split(",")
    assert float(row[5]) == pytest.approx(0.0, abs=1e-10)


def test_verify_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["verify", "--suite", "lattice", "--seed", "7", "--out", str(a)]) == 0
    assert cli.main(["verify", "--suite", "lattice", "--seed", "7", "--out", str(b)]) == 0
    ra = (a / "verify_report.txt").read_bytes()
    assert ra == (b / "verify_report.txt").read_bytes()
    assert b"PASS [01] jacobi_poisson" in ra and b"max_poisson_residual=" in ra


def test_verify_failure_exit_code(monkeypatch):
    from torictheta import verify

    failing = lambda ctx: verify.CheckResult(1, "jacobi_poisson", False)
    monkeypatch.setitem(verify.CHECKS, "jacobi_poisson", failing)
    assert cli.main(["verify", "--suite", "lattice"]) == 1
