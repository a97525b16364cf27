import csv
import json
import math

import numpy as np
import pytest

from backscatter_ee import SystemParams, dinkelbach_solve, default_geometry, sample_realization
from backscatter_ee.channel import SeedSpec
from backscatter_ee.harness import (RECORD_FIELDS, ConfigError, SweepRecord, SweepSpec, builtin_sweeps, emit,
                                    geometry_from_config, params_from_config, parse_config_text,
                                    read_records_csv, records_to_csv, resolve_config, run_sweep)

SMALL = SweepSpec("small", "p_max_dbm", (20.0, 35.0, 50.0), k_values=(2, 3),
                  schemes=("proposed", "fixed_power", "no_sleep", "oma"), realizations=12, master_seed=9)


@pytest.fixture(scope="module")
def small_records():
    return run_sweep(SMALL)


# -- config parsing --

def test_parse_config_text():
    cfg = parse_config_text("""
        # comment
        num_bns = 3
        p_max_dbm = 40   # trailing comment
        bn_circuit_power_dbm = -5, 0, 5
        pathloss_model = amplitude
    """)
    assert cfg == {"num_bns": 3, "p_max_dbm": 40.0, "bn_circuit_power_dbm": [-5.0, 0.0, 5.0],
                   "pathloss_model": "amplitude"}


@pytest.mark.parametrize("text, fragment", [
    ("bogus = 1", "bogus"),
    ("p_max_dbm 30", "line 1"),
    ("num_bns = 2.5", "num_bns"),
    ("p_max_dbm = high", "p_max_dbm"),
])
def test_parse_config_errors(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config_text(text)


def test_params_from_config_converts_dbm():
    cfg = resolve_config({"p_max_dbm": 40, "bn_circuit_power_dbm": [0.0, 10.0], "num_bns": 2})
    p = params_from_config(cfg)
    assert p.p_max == pytest.approx(10.0)
    np.testing.assert_allclose(p.bn_circuit_power, [1e-3, 1e-2])
    ref = SystemParams.table_one(num_bns=2, p_max_dbm=40)
    assert p.noise_power == ref.noise_power and p.source_circuit_power == ref.source_circuit_power


def test_geometry_from_config():
    cfg = resolve_config({"source_bn_distance": "5, 15", "bn_receiver_distance": "35, 25"})
    g = geometry_from_config(cfg, 2)
    np.testing.assert_allclose(g.source_bn_distance, [5.0, 15.0])
    with pytest.raises(ConfigError, match="num_bns"):
        geometry_from_config(cfg, 3)
    with pytest.raises(ConfigError, match="together"):
        geometry_from_config(resolve_config({"source_bn_distance": "5, 15"}), 2)


def test_bad_pathloss_model():
    with pytest.raises(ConfigError, match="pathloss_model"):
        resolve_config({"pathloss_model": "free-space"})


# -- specs --

@pytest.mark.parametrize("change, field", [
    ({"variable": "noise"}, "variable"),
    ({"values": ()}, "values"),
    ({"values": (1.0, 1.0)}, "values"),
    ({"values": (1.0, 3.0, 2.0)}, "values"),
    ({"k_values": (0,)}, "k_values"),
    ({"schemes": ("tdma",)}, "schemes"),
    ({"realizations": 0}, "realizations"),
    ({"master_seed": -1}, "master_seed"),
    ({"base": {"p_max_dbm": 10}}, "base"),
    ({"base": {"colour": 1}}, "colour"),
    ({"name": "a b"}, "name"),
])
def test_spec_validation_names_field(change, field):
    with pytest.raises(ConfigError, match=field):
        SMALL.with_(**change).validate()


def test_spec_dict_round_trip():
    assert SweepSpec.from_dict(SMALL.to_dict()) == SMALL
    with pytest.raises(ConfigError, match="unknown"):
        SweepSpec.from_dict({**SMALL.to_dict(), "extra": 1})


def test_builtin_sweeps_valid():
    sweeps = builtin_sweeps()
    assert set(sweeps) == {"fig2a_ee_vs_pmax", "fig2b_time_vs_pmax", "fig2c_time_vs_pathloss",
                           "fig2d_noma_vs_oma", "fig3a_ee_vs_ptc", "fig3b_time_vs_ptc", "fig3c_baselines"}
    for spec in sweeps.values():
        spec.validate()
        assert spec.k_values == (2, 3, 4) and spec.realizations == 1000


def test_builtin_sweep_settings():
    s = builtin_sweeps()
    assert s["fig3a_ee_vs_ptc"].variable == "bn_circuit_power_dbm"
    assert s["fig3a_ee_vs_ptc"].base == {"p_max_dbm": 30.0}
    assert s["fig3a_ee_vs_ptc"].values[0] == -10.0 and s["fig3a_ee_vs_ptc"].values[-1] == 15.0
    c = s["fig2c_time_vs_pathloss"]
    assert c.variable == "pathloss_exponent" and c.values == tuple(2 + 0.25 * i for i in range(9))
    assert set(c.base) <= {"p_max_dbm"}
    assert s["fig2a_ee_vs_pmax"].values == tuple(float(v) for v in range(0, 55, 5))
    assert s["fig2d_noma_vs_oma"].schemes == ("proposed", "oma")
    assert s["fig3c_baselines"].schemes == ("proposed", "fixed_power", "no_sleep")


# -- running --

def test_single_realization_equals_direct_solve():
    spec = SweepSpec("one", "p_max_dbm", (30.0,), k_values=(2,), realizations=1, master_seed=4)
    (rec,) = run_sweep(spec)
    params = SystemParams.table_one(num_bns=2, p_max_dbm=30.0)
    res = dinkelbach_solve(params, sample_realization(params, default_geometry(2), SeedSpec(4, 0)))
    assert rec.mean_ee == res.energy_efficiency
    assert rec.mean_tau_s == float(res.allocation.sleep_fraction)
    assert rec.mean_iterations == res.iterations


def test_record_shape(small_records):
    assert len(small_records) == 3 * 2 * 4
    for r in small_records:
        assert math.isclose(r.frac_hot + r.frac_htt + r.frac_infeasible, 1.0, abs_tol=1e-12)
        assert r.realizations == 12
        assert 0 <= r.mean_tau_s <= 1 and 0 <= r.mean_tau_a <= 1


def test_parallel_matches_serial(small_records):
    assert records_to_csv(run_sweep(SMALL, workers=2, chunk_size=5)) == records_to_csv(small_records)


def test_dumped_rows_reproduce_means():
    records, rows = run_sweep(SMALL, keep_realizations=True)
    for rec in records:
        mine = [r for r in rows if r[0] == rec.value and r[1] == rec.num_bns and r[2] == rec.scheme]
        assert len(mine) == rec.realizations
        assert math.fsum(r[4] for r in mine) / len(mine) == pytest.approx(rec.mean_ee, rel=1e-12, abs=0)


def test_common_fading_across_values():
    # the same realization index sees the same fading at every sweep value
    spec = SweepSpec("cf", "bn_circuit_power_dbm", (-10.0, 0.0), k_values=(2,), realizations=3)
    _, rows = run_sweep(spec, keep_realizations=True)
    assert len(rows) == 6


def test_htt_fraction_falls_with_power():
    spec = builtin_sweeps()["fig2b_time_vs_pmax"].with_(realizations=200)
    records = run_sweep(spec)
    for k in spec.k_values:
        htt = [r.frac_htt for r in records if r.num_bns == k]
        assert sum(b > a for a, b in zip(htt, htt[1:])) <= 1


# -- output --

def test_emit_csv_round_trip(tmp_path, small_records):
    path = emit(small_records, "csv", tmp_path / "small.csv", SMALL, wall_time=1.5)
    with open(path) as fh:
        assert next(csv.reader(fh)) == list(RECORD_FIELDS)
    assert read_records_csv(path) == small_records
    manifest = json.loads((tmp_path / "small.manifest.json").read_text())
    assert manifest["master_seed"] == 9 and manifest["realizations"] == 12
    assert manifest["spec"]["name"] == "small" and manifest["wall_time_s"] == 1.5
    assert "version" in manifest


def test_emit_jsonl(tmp_path, small_records):
    path = emit(small_records, "jsonl", tmp_path / "small.jsonl")
    lines = path.read_text().splitlines()
    assert len(lines) == len(small_records)
    assert SweepRecord(**json.loads(lines[0])) == small_records[0]


def test_emit_empty_creates_nothing(tmp_path):
    with pytest.raises(ConfigError):
        emit([], "csv", tmp_path / "x.csv")
    assert list(tmp_path.iterdir()) == []


def test_emit_bad_format(tmp_path, small_records):
    with pytest.raises(ConfigError, match="format"):
        emit(small_records, "xml", tmp_path / "x.xml")


def test_emit_io_error_names_path(tmp_path, small_records):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="file"):
        emit(small_records, "csv", blocker / "sub" / "x.csv")
