import json
import math

import numpy as np
import pytest

from fliphat.exceptions import ConfigError
from fliphat.experiment import (AGGREGATE_HEADER, RAW_HEADER, ExperimentConfig, emit_csv, emit_ledger, emit_meta,
                                emit_svg_plot, load_config, parse_config, read_aggregate_csv, read_raw_csv, run_sweep)

TINY = dict(dimensions=(20,), epsilons=(2.0,), T=64, repetitions=1, s_star=3, root_seed=7)


def tiny(**kw):
    return ExperimentConfig(**{**TINY, **kw})


def test_parse_config_roundtrip():
    cfg = parse_config("""
        # comment
        dimensions = 20, 40
        epsilons = 0.8, inf   # trailing comment
        T = 128
        s = none
        non_private = no
    """)
    assert cfg.dimensions == (20, 40)
    assert cfg.epsilons[0] == 0.8 and math.isinf(cfg.epsilons[1])
    assert cfg.T == 128 and cfg.s is None and cfg.sparsity == cfg.s_star
    assert cfg.to_dict()["epsilons"] == [0.8, "inf"]


@pytest.mark.parametrize("text, field", [
    ("dimensions =", "dimensions"),
    ("repetitions = 0", "repetitions"),
    ("bogus = 1", "bogus"),
    ("T = ten", "T"),
    ("epsilons = -1", "epsilons"),
    ("dimensions = 5", "dimensions"),
    ("delta = 1", "delta"),
    ("sensitivity = loose", "sensitivity"),
    ("K = 1", "K"),
    ("just words", "line 1"),
])
def test_config_errors_name_the_field(text, field):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.field == field
    assert field in str(info.value)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.cfg")


def test_null_instance_sweep_has_zero_regret():
    res = run_sweep(tiny(beta_magnitude=0.0, repetitions=3, epsilons=(0.5, 5.0)))
    assert all(c.final_regret == 0 for c in res.cells)
    assert all(a.mean_regret == 0 and a.stddev == 0 for a in res.aggregates)


def test_infinite_epsilon_runs_non_private():
    res = run_sweep(tiny(epsilons=(math.inf,)))
    ledger = res.cells[0].ledger
    assert ledger["entries"] and all(e["epsilon"] == "inf" for e in ledger["entries"])


def test_parallel_matches_serial():
    cfg = tiny(dimensions=(20, 30), epsilons=(1.0, 4.0), repetitions=2)
    a, b = run_sweep(cfg, parallel=1), run_sweep(cfg, parallel=2)
    assert [c.final_regret for c in a.cells] == [c.final_regret for c in b.cells]


def test_cells_isolated_from_repetition_count():
    five = run_sweep(tiny(repetitions=2))
    ten = run_sweep(tiny(repetitions=4))
    assert [c.final_regret for c in five.cells] == [c.final_regret for c in ten.cells[:2]]


def test_common_environment_across_budgets():
    res = run_sweep(tiny(epsilons=(1.0, 3.0)))
    a, b = res.cells
    assert a.seed_path != b.seed_path


def test_aggregates_consistent():
    res = run_sweep(tiny(repetitions=4))
    vals = np.array([c.final_regret for c in res.cells])
    agg = res.aggregate(20, 2.0)
    assert agg.mean_regret == pytest.approx(vals.mean())
    assert agg.stddev == pytest.approx(vals.std(ddof=1))
    assert agg.ci95_halfwidth == pytest.approx(1.96 * vals.std(ddof=1) / 2)
    with pytest.raises(KeyError):
        res.aggregate(99, 2.0)


def test_csv_layout_and_roundtrip(tmp_path):
    res = run_sweep(tiny())
    raw, agg = emit_csv(res, tmp_path)
    lines = raw.read_text().splitlines()
    assert len(lines) == 2 and lines[0] == ",".join(RAW_HEADER)
    assert agg.read_text().splitlines()[0] == ",".join(AGGREGATE_HEADER)
    rows = read_raw_csv(raw)
    assert rows[0]["final_regret"] == pytest.approx(res.cells[0].final_regret, rel=1e-9)
    assert rows[0]["seed_path"] == res.cells[0].seed_path
    assert read_aggregate_csv(agg) == res.aggregates


def test_ledger_and_meta(tmp_path):
    res = run_sweep(tiny())
    emit_ledger(res, tmp_path / "ledger.json")
    emit_meta(res, tmp_path / "run_meta.json")
    ledger = json.loads((tmp_path / "ledger.json").read_text())
    assert list(ledger) == [res.cells[0].seed_path]
    meta = json.loads((tmp_path / "run_meta.json").read_text())
    assert meta["config"]["T"] == 64 and "numpy" in meta["versions"]


@pytest.mark.parametrize("dims, eps, curves", [((20, 40), (2.0,), 1), ((20, 40), (1.0, 2.0, 5.0), 3)])
def test_svg_plot(tmp_path, dims, eps, curves):
    res = run_sweep(tiny(dimensions=dims, epsilons=eps, T=16))
    emit_svg_plot(res, tmp_path / "a.svg")
    emit_svg_plot(res, tmp_path / "b.svg")
    text = (tmp_path / "a.svg").read_text()
    assert text.count("<polyline") == curves
    assert text.count("epsilon = ") == curves
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
