import json

import pytest

from ftn_amac.cli import RunManifest, main, run
from ftn_amac.config import DEFAULT_SNR_GRID, ConfigError, parse_config

SMALL = """\
# two scenarios sharing defaults
n = 4
seeds = 0..2
alpha_points = 5
snr_grid = 0..20 step 10

[scenario.amac_ftn]

[scenario.mac]
ftn = false
async = false
"""


def test_empty_config_is_default_scenario():
    cfg = parse_config("")
    assert len(cfg.scenarios) == 1
    sc = cfg.scenarios[0]
    assert sc.name == "amac_ftn"
    assert (sc.m, sc.l, sc.n, sc.delta, sc.beta, sc.tau_frac) == (3, 3, 32, 0.8, 0.25, 0.5)
    assert sc.seeds == tuple(range(100)) and len(sc.alpha_grid) == 41
    assert cfg.snr_grid == DEFAULT_SNR_GRID and len(cfg.snr_grid) == 9


def test_two_blocks_share_defaults():
    cfg = parse_config(SMALL)
    a, b = cfg.scenarios
    assert (a.name, b.name) == ("amac_ftn", "mac")
    assert a.n == b.n == 4 and a.seeds == (0, 1, 2) == b.seeds
    assert b.delta == 1.0 and b.tau_frac == 0.0
    assert cfg.snr_grid == (0.0, 10.0, 20.0)


def test_value_syntax():
    cfg = parse_config("seeds = 3, 5 ,8\nalpha_grid = 0, 0.5, 1\nsnr_db = 15\nsnr_grid = -5, 5\n")
    sc = cfg.scenarios[0]
    assert sc.seeds == (3, 5, 8) and sc.alpha_grid == (0.0, 0.5, 1.0)
    assert sc.snr_db_1 == sc.snr_db_2 == 15.0
    assert cfg.snr_grid == (-5.0, 5.0)


@pytest.mark.parametrize("text, where", [
    ("n = 4\nbogus = 1\n", "line 2"),
    ("n = four\n", "line 1"),
    ("[scenario.a]\n[scenario.a]\n", "line 2"),
    ("[oops]\n", "line 1"),
    ("just words\n", "line 1"),
    ("[scenario.a]\nsnr_grid = 1, 2\n", "line 2"),
    ("ftn = maybe\n", "line 1"),
])
def test_parse_errors_carry_location(text, where):
    with pytest.raises(ConfigError, match=where):
        parse_config(text)


def test_stability_violation_cites_bound():
    with pytest.raises(ConfigError, match=r"1/\(1\+beta\)=0\.8"):
        parse_config("delta = 0.7\nbeta = 0.25\n")


def _run(tmp_path, command, text=SMALL, out="out", **kw):
    conf = tmp_path / "exp.conf"
    conf.write_text(text)
    return run(RunManifest(command, str(conf), str(tmp_path / out), **kw))


def test_region_outputs(tmp_path):
    assert _run(tmp_path, "region") == 0
    out = tmp_path / "out"
    rows = (out / "region_amac_ftn.csv").read_text().splitlines()
    assert rows[0] == "scenario,seed,alpha,r1,r2,r1_max,r2_max,r_sum"
    assert len(rows) == 1 + 3 * 5
    assert rows[1].startswith("amac_ftn,0,0,")
    mean = (out / "region_mac_mean.csv").read_text().splitlines()
    assert mean[0] == "scenario,alpha,r1,r2,r1_max,r2_max,r_sum" and len(mean) == 6
    raw = (out / "region_amac_ftn.csv").read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    meta = json.loads((out / "region_manifest.json").read_text())
    assert meta["rng"].startswith("numpy.PCG64") and len(meta["scenarios"]) == 2


def test_number_format(tmp_path):
    assert _run(tmp_path, "region") == 0
    for line in (tmp_path / "out" / "region_amac_ftn.csv").read_text().splitlines()[1:]:
        for field in line.split(",")[3:]:
            digits = field.replace("-", "").replace(".", "").split("e")[0].lstrip("0")
            assert len(digits) <= 12


def test_refuses_overwrite(tmp_path):
    assert _run(tmp_path, "region") == 0
    target = tmp_path / "out" / "region_mac.csv"
    before = target.read_bytes()
    target.write_bytes(b"sentinel")
    assert _run(tmp_path, "region") == 2
    assert target.read_bytes() == b"sentinel"
    assert _run(tmp_path, "region", overwrite=True) == 0
    assert target.read_bytes() == before


def test_sumrate_rows(tmp_path):
    assert _run(tmp_path, "sumrate") == 0
    lines = (tmp_path / "out" / "sumrate.csv").read_text().splitlines()
    assert lines[0] == "scenario,snr_db,mean_sum_rate"
    assert len(lines) == 1 + 4 * 3
    assert {ln.split(",")[0] for ln in lines[1:]} == {"amac_ftn", "amac", "mac_ftn", "mac"}


def test_ablation_presets(tmp_path):
    text = "n = 4\nseeds = 0..1\nalpha_points = 3\n"
    assert _run(tmp_path, "ablation", text=text) == 0
    names = sorted(p.name for p in (tmp_path / "out").glob("ablation_*_mean.csv"))
    assert len(names) == 6
    assert "ablation_upper_bound_sinc_mean.csv" in names


def test_preset_base_must_be_full(tmp_path):
    assert _run(tmp_path, "sumrate", text="[scenario.x]\nftn = false\n") == 2


def test_bad_config_exit_code(tmp_path):
    assert _run(tmp_path, "region", text="nonsense = 1\n") == 2
    assert not (tmp_path / "out").exists()


def test_parallel_runs_are_byte_identical(tmp_path):
    assert _run(tmp_path, "region", out="a", parallelism=1) == 0
    assert _run(tmp_path, "region", out="b", parallelism=2) == 0
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes(), f.name


def test_master_seed_changes_output(tmp_path):
    assert _run(tmp_path, "region", out="a") == 0
    assert _run(tmp_path, "region", out="b", master_seed=5) == 0
    a = (tmp_path / "a" / "region_amac_ftn.csv").read_bytes()
    assert a != (tmp_path / "b" / "region_amac_ftn.csv").read_bytes()


def test_main_validate(capsys):
    assert main(["validate"]) == 0
    out = capsys.readouterr().out
    assert "all checks passed" in out and "FAIL" not in out


def test_manifest_validation():
    with pytest.raises(ValueError):
        RunManifest("plot", None, "x")
    with pytest.raises(ValueError):
        RunManifest("region", None, None)
    with pytest.raises(ValueError):
        RunManifest("region", None, "x", parallelism=0)
    assert main(["region"]) == 2


def test_shipped_configs_parse():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "configs"
    names = {p.name: [s.name for s in parse_config(p.read_text()).scenarios] for p in root.glob("*.conf")}
    assert len(names["fig1.conf"]) == 8
    assert names["smoke.conf"] == ["amac_ftn", "mac"]
