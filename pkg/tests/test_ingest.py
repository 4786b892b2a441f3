from __future__ import annotations

from decimal import Decimal
from pathlib import Path

import pytest

from yada.datatree import DataTree
from yada.ingest import (
    DatasetSpec,
    EmptyFileError,
    InsufficientRowsError,
    MissingColumnError,
    bind_mapping,
    constitute,
    load_csv,
    schedule,
    write_replay_csv,
)
from yada.schema import parse_schema

from oracles import lww_fold

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


@pytest.fixture(scope="module")
def schema():
    return parse_schema((FIXTURES / "air-quality.yada").read_text(encoding="utf-8"))


def _mapping(schema, column="temp", path="/AirTemperatureURI/value"):
    return bind_mapping(schema, {column: {"path": path, "kind": "num"}}, "test")


def _write(tmp_path, name, lines):
    p = tmp_path / name
    p.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return p


def test_load_csv_counts_and_readings(tmp_path, schema):
    f = _write(tmp_path, "a.csv", ["temp,other", "1.5,x", "2.5,y", "3.5,z"])
    spec = DatasetSpec("a", 2, 3, 2)
    readings, report = load_csv(f, _mapping(schema), spec)
    assert report.rows_total == 3
    assert report.rows_retained == 3
    assert report.skipped == 0
    assert [r.value for r in readings] == [Decimal("1.5"), Decimal("2.5"), Decimal("3.5")]
    assert readings[0].sensor_id == "a/temp"
    assert str(readings[0].path) == "/AirTemperatureURI/value"


def test_load_csv_missing_column(tmp_path, schema):
    f = _write(tmp_path, "a.csv", ["other", "1"])
    with pytest.raises(MissingColumnError):
        load_csv(f, _mapping(schema), DatasetSpec("a", 1, 1, 1))


def test_load_csv_header_only_is_empty(tmp_path, schema):
    f = _write(tmp_path, "a.csv", ["temp,other"])
    with pytest.raises(EmptyFileError):
        load_csv(f, _mapping(schema), DatasetSpec("a", 2, 1, 1))


def test_load_csv_skips_unparseable_rows(tmp_path, schema):
    rows = ["temp", "1", "oops", "nan", "3", "not-a-number", "4"]
    f = _write(tmp_path, "a.csv", rows)
    readings, report = load_csv(f, _mapping(schema), DatasetSpec("a", 1, 6, 3))
    assert report.skipped == 3
    assert [r.value for r in readings] == [Decimal(1), Decimal(3), Decimal(4)]


def test_load_csv_scale_factor(tmp_path, schema):
    f = _write(tmp_path, "a.csv", ["temp", "250"])
    mapping = bind_mapping(
        schema,
        {"temp": {"path": "/AirTemperatureURI/value", "kind": "num", "scale": "0.1"}},
        "t",
    )
    readings, _ = load_csv(f, mapping, DatasetSpec("t", 1, 1, 1))
    assert readings[0].value == Decimal("25")


def test_constitute_identity_when_used_equals_total(tmp_path, schema):
    f = _write(tmp_path, "a.csv", ["temp", "1", "2", "3"])
    spec = DatasetSpec("a", 1, 3, 3)
    readings, _ = constitute([(f, _mapping(schema), spec)], seed=7)
    assert [r.value for r in readings] == [Decimal(1), Decimal(2), Decimal(3)]


def test_constitute_sample_preserves_row_order(tmp_path, schema):
    f = _write(tmp_path, "a.csv", ["temp"] + [str(i) for i in range(50)])
    spec = DatasetSpec("a", 1, 50, 20)
    readings, _ = constitute([(f, _mapping(schema), spec)], seed=3)
    values = [int(r.value) for r in readings]
    assert values == sorted(values)
    assert len(set(values)) == 20


def test_constitute_deterministic_per_seed(tmp_path, schema):
    f = _write(tmp_path, "a.csv", ["temp"] + [str(i) for i in range(40)])
    spec = DatasetSpec("a", 1, 40, 10)
    first, _ = constitute([(f, _mapping(schema), spec)], seed=11)
    second, _ = constitute([(f, _mapping(schema), spec)], seed=11)
    third, _ = constitute([(f, _mapping(schema), spec)], seed=12)
    assert first == second
    assert first != third


def test_constitute_insufficient_rows(tmp_path, schema):
    f = _write(tmp_path, "a.csv", ["temp", "1", "2"])
    spec = DatasetSpec("a", 1, 10, 5)
    with pytest.raises(InsufficientRowsError):
        constitute([(f, _mapping(schema), spec)], seed=1)


def test_dataset_spec_invariants():
    with pytest.raises(Exception):
        DatasetSpec("a", 1, 5, 6)
    with pytest.raises(Exception):
        DatasetSpec("a", 0, 5, 5)
    with pytest.raises(Exception):
        DatasetSpec("a", 1, 5, 0)


def test_schedule_zero_jitter_grid(tmp_path, schema):
    f = _write(tmp_path, "a.csv", ["temp", "1", "2", "3"])
    readings, _ = load_csv(f, _mapping(schema), DatasetSpec("a", 1, 3, 3))
    sched = schedule(readings, 100, seed=1, jitter_fraction=Decimal(0))
    assert [e.ts_us for e in sched.events] == [0, 100_000, 200_000]
    assert [e.value for e in sched.events] == [Decimal(1), Decimal(2), Decimal(3)]
    assert sched.horizon_ms == Decimal(200)


def test_schedule_horizon_tracks_max_ts(tmp_path, schema):
    f = _write(tmp_path, "a.csv", ["temp"] + ["1"] * 500)
    readings, _ = load_csv(f, _mapping(schema), DatasetSpec("a", 1, 500, 500))
    sched = schedule(readings, 10, seed=5)
    assert sched.horizon_us == max(e.ts_us for e in sched.events)
    base = (len(readings) - 1) * 10_000
    assert base <= sched.horizon_us <= base + 2_500


def test_schedule_keeps_order_under_jitter(tmp_path, schema):
    f = _write(tmp_path, "a.csv", ["temp"] + [str(i) for i in range(200)])
    readings, _ = load_csv(f, _mapping(schema), DatasetSpec("a", 1, 200, 200))
    sched = schedule(readings, 10, seed=9)
    values = [int(e.value) for e in sched.events]
    assert values == list(range(200))
    times = [e.ts_us for e in sched.events]
    assert times == sorted(times)


def test_schedule_empty():
    sched = schedule([], 10, seed=0)
    assert sched.events == ()
    assert sched.horizon_us == 0


def test_replay_writer(tmp_path, schema):
    f = _write(tmp_path, "a.csv", ["temp", "1.50", "2"])
    readings, _ = load_csv(f, _mapping(schema), DatasetSpec("a", 1, 2, 2))
    sched = schedule(readings, 10, seed=0, jitter_fraction=Decimal(0))
    out = tmp_path / "replay.csv"
    assert write_replay_csv(sched, out) == 2
    lines = out.read_text().splitlines()
    assert lines[0] == "ts_ms,sensor_id,path,value"
    assert lines[1] == "0,a/temp,/AirTemperatureURI/value,1.5"
    assert lines[2] == "10,a/temp,/AirTemperatureURI/value,2"


def test_replayed_updates_match_fold_oracle(schema):
    # Shipped pipeline end to end: constitute, schedule, apply, then check
    # the final tree against the independent sort-and-fold oracle.
    from yada.config import load_config

    cfg = load_config(FIXTURES / "harness.yaml")
    sources = [(s.file, s.mapping, s.spec) for s in cfg.sources]
    readings, _ = constitute(sources, cfg.seed)
    sched = schedule(readings, cfg.inter_reading_gap_ms, cfg.seed)
    tree = DataTree(schema)
    for event in sched.events:
        tree.apply_update(event.path, event.value, event.ts_us)
    expected = lww_fold([(e.path, e.value, e.ts_us) for e in sched.events])
    got = {p: (v, ts) for p, v, ts in tree.leaf_items()}
    for path, (value, ts) in expected.items():
        assert got[path] == (value, ts)
