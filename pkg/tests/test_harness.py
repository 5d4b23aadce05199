import json

import numpy as np
import pytest

from paraqg.cli import main
from paraqg.config import ConfigError, RunConfig, parse_config
from paraqg.grid import Grid, SpectralField, to_spectral
from paraqg.pqgf import read_snapshot, read_snapshot_field, write_snapshot


def test_pqgf_round_trip(tmp_path):
    grid = Grid(16)
    rng = np.random.default_rng(0)
    f = to_spectral(rng.standard_normal((16, 16)), grid)
    path = tmp_path / "snap.pqgf"
    write_snapshot(path, f, 0.125)
    t, values = read_snapshot(path)
    assert t == 0.125
    assert np.max(np.abs(values - f.to_physical())) < 1e-12
    t2, g = read_snapshot_field(path)
    assert t2 == 0.125
    assert (g - f).max_abs() < 1e-12


def test_pqgf_header_layout(tmp_path):
    grid = Grid(16)
    path = tmp_path / "snap.pqgf"
    write_snapshot(path, SpectralField.constant(grid, 1.0), 2.0)
    raw = path.read_bytes()
    assert raw[:4] == b"PQGF"
    assert int.from_bytes(raw[4:8], "little") == 1
    assert int.from_bytes(raw[8:12], "little") == 16
    assert len(raw) == 20 + 16 * 16 * 8


def test_pqgf_rejects_bad_input(tmp_path):
    bad = tmp_path / "bad.pqgf"
    bad.write_bytes(b"NOPE" + b"\0" * 32)
    with pytest.raises(ValueError, match="not a PQGF"):
        read_snapshot(bad)


def test_config_defaults_valid():
    cfg = RunConfig().validate()
    assert cfg.theta == 2.0
    assert cfg.eps_list == [0.8, 0.4, 0.2, 0.1]
    assert cfg.seeds == 16


def test_config_parse_and_override(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("""
# comment
theta = 1.8
grid_n = 32
eps_list = 0.4, 0.2, 0.1
seeds = 4   # trailing comment
""")
    cfg = parse_config(p)
    assert cfg.theta == 1.8
    assert cfg.grid_n == 32
    assert cfg.eps_list == [0.4, 0.2, 0.1]
    assert cfg.seeds == 4


def test_config_rejects_unknown_key(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("thetaa = 2.0\n")
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config(p)


def test_config_rejects_kappa_ratio(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("kappa = 0.0225\nkappa_prime = 0.025\n")
    with pytest.raises(ConfigError, match=r"kappa ratio outside \(1/3, 2/3\)"):
        parse_config(p)


def test_config_rejects_increasing_eps(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("eps_list = 0.1, 0.2\n")
    with pytest.raises(ConfigError, match="strictly decreasing"):
        parse_config(p)


def test_config_seed_values_deterministic():
    cfg = RunConfig()
    assert cfg.seed_values(7) == cfg.seed_values(7)
    assert cfg.seed_values(7) != cfg.seed_values(8)


TINY = """
grid_n = 16
dt = 0.02
t_final = 0.1
t_burn = 10.0
eps_list = 0.4, 0.2
seeds = 2
"""


def test_cli_exit_code_on_bad_config(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("kappa = 0.9\nkappa_prime = 1.0\n")
    status = main(["enhance", "--config", str(p), "--out", str(tmp_path / "o")])
    assert status == 2
    assert "kappa ratio outside (1/3, 2/3)" in capsys.readouterr().err


def test_cli_enhance_writes_artifacts_and_is_deterministic(tmp_path):
    cfgp = tmp_path / "run.cfg"
    cfgp.write_text(TINY)
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    assert main(["enhance", "--config", str(cfgp), "--out", str(out1),
                 "--seed", "3"]) == 0
    assert main(["enhance", "--config", str(cfgp), "--out", str(out2),
                 "--seed", "3"]) == 0
    body1 = (out1 / "driver_norms.csv").read_bytes()
    body2 = (out2 / "driver_norms.csv").read_bytes()
    assert body1 == body2
    assert (out1 / "driver_X_T.pqgf").exists()
    manifest = json.loads((out1 / "manifest.json").read_text())
    assert manifest["subcommand"] == "enhance"
    assert manifest["config"]["grid_n"] == 16
    assert manifest["seeds"] == [3 * 1_000_003, 3 * 1_000_003 + 1]


def test_cli_chaos_check_small(tmp_path):
    cfgp = tmp_path / "run.cfg"
    cfgp.write_text(TINY + "chaos_seeds = 24\nchaos_burn = 1.0\ndt = 0.05\n")
    out = tmp_path / "chaos"
    assert main(["chaos-check", "--config", str(cfgp), "--out", str(out),
                 "--seed", "1"]) == 0
    header = (out / "pi0_max.csv").read_text().splitlines()
    assert header[0] == "kind,max_abs_summand"
    for line in header[1:]:
        assert line.endswith(",0.0")


def test_cli_unknown_subcommand_fails(tmp_path):
    with pytest.raises(SystemExit):
        main(["frobnicate"])
