import csv
import io
import json
import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
import yaml

from elastocauchy import cli
from elastocauchy.cli import (CSV_COLUMNS, ConfigError, config_from_dict, convergence_sweep, load_config, main,
                              rows_to_csv, run)
from elastocauchy.fundamental import get_sequence

EXPERIMENTS = Path(__file__).resolve().parents[1] / "experiments"


def read_yaml(name):
    return yaml.safe_load((EXPERIMENTS / name).read_text())


def write_config(tmp_path, raw, name="cfg.yaml"):
    raw = dict(raw)
    raw.pop("output", None)
    path = tmp_path / name
    path.write_text(yaml.safe_dump(raw))
    return path


def parse_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_ex1_row(tmp_path):
    out = tmp_path / "ex1.csv"
    assert main(["run", str(write_config(tmp_path, read_yaml("ex1_neumann.yaml"))), "--output", str(out)]) == 0
    rows = parse_csv(out.read_text())
    r0 = next(r for r in rows if r["n_or_t"] == "0" and r["component"] == "1")
    assert float(r0["computed"]) == pytest.approx(0.136669523108, abs=1e-9)
    assert float(r0["exact"]) == pytest.approx(0.136669523108, abs=1e-12)


def test_ex2_row():
    res = run(load_config(EXPERIMENTS / "ex2_neumann.yaml"))
    r0 = next(r for r in res.rows if r.n_or_t == 0 and r.component == 2)
    assert r0.computed == pytest.approx(0.109244013821, abs=2e-9)


def test_csv_header_and_exact_values():
    cfg = replace(load_config(EXPERIMENTS / "ex2_neumann.yaml"), M=16, components=[1, 2])
    text = rows_to_csv(run(cfg).rows)
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    seq = get_sequence(cfg.params(), cfg.N)
    for r in parse_csv(text):
        ref = seq.E(int(r["n_or_t"]), np.array(cfg.eval_points[0]), np.array(cfg.source_point))[:, 0]
        assert float(r["exact"]) == ref[int(r["component"]) - 1]
        # shortest round-trip decimals
        assert repr(float(r["computed"])) == r["computed"]


def test_malformed_config_no_output(tmp_path, capsys):
    raw = read_yaml("ex1_neumann.yaml")
    raw["curves"] = {"inner": {"kind": "circle", "center": [0, 0], "radius": 3.0}, "outer": raw["curves"]["outer"]}
    out = tmp_path / "bad.csv"
    assert main(["run", str(write_config(tmp_path, raw)), "--output", str(out)]) == 2
    assert not out.exists()
    assert "curves" in capsys.readouterr().err


@pytest.mark.parametrize("key,value,field", [("M", 3, "M"), ("N", -1, "N"), ("lambda", "abc", "lam"),
                                              ("experiment", "forward", "experiment"), ("bogus", 1, "bogus"),
                                              ("source_point", [1.7, 0.0], "source_point")])
def test_config_errors_name_field(key, value, field):
    raw = read_yaml("ex1_neumann.yaml")
    raw[key] = value
    with pytest.raises(ConfigError) as info:
        config_from_dict(raw)
    assert info.value.field == field


def test_numerical_failure_exit(tmp_path, monkeypatch):
    def boom(cfg):
        raise cli.NumericalFailure("singular system", order=3)

    monkeypatch.setattr(cli, "run", boom)
    out = tmp_path / "x.csv"
    assert main(["run", str(write_config(tmp_path, read_yaml("ex1_neumann.yaml"))), "--output", str(out)]) == 3
    assert not out.exists()


def test_rerun_byte_identical(tmp_path):
    raw = read_yaml("ex3_noisy.yaml")
    raw.update(N=5, orders=[5])
    cfg = write_config(tmp_path, raw)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["run", str(cfg), "--output", str(a)]) == 0
    assert main(["run", str(cfg), "--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.csv"
    assert main(["run", str(cfg), "--output", str(c), "--seed", "4"]) == 0
    assert c.read_bytes() != a.read_bytes()
    assert all(r["seed"] == "4" for r in parse_csv(c.read_text()))
    meta = json.loads((tmp_path / "c.csv.meta.json").read_text())
    assert meta["seed"] == 4 and "PCG64" in meta["rng"]


def test_sweep_ex2(tmp_path):
    cfg = replace(load_config(EXPERIMENTS / "ex2_neumann.yaml"), N=0)
    rows, plot = convergence_sweep(cfg, [8, 16, 32, 64])
    lg = [e for _, _, e in plot]
    assert all(b < a for a, b in zip(lg, lg[1:]))
    assert lg[1] - lg[2] > 2
    with pytest.raises(ConfigError):
        convergence_sweep(cfg, [16, 8])


def test_sweep_single_entry_equals_run():
    cfg = replace(load_config(EXPERIMENTS / "ex2_neumann.yaml"), M=16)
    rows, _ = convergence_sweep(cfg, [16])
    ran = run(cfg).rows
    assert rows[:len(ran)] == ran
    assert all(r.experiment.endswith("log10_error") for r in rows[len(ran):])


def test_sweep_cli_plot_data(tmp_path):
    raw = read_yaml("ex2_neumann.yaml")
    raw["N"] = 0
    plot = tmp_path / "plot.csv"
    out = tmp_path / "sweep.csv"
    assert main(["sweep", str(write_config(tmp_path, raw)), "--M", "8,16", "--output", str(out),
                 "--emit-plot-data", str(plot)]) == 0
    lines = plot.read_text().splitlines()
    assert lines[0] == "M,n_or_t,log10_error" and len(lines) == 3
    assert all(math.isfinite(float(l.split(",")[2])) for l in lines[1:])
    assert main(["sweep", str(write_config(tmp_path, raw)), "--M", "16,8"]) == 2


def test_shipped_configs_load():
    for path in sorted(EXPERIMENTS.glob("*.yaml")):
        assert load_config(path).id
