"""Reconstituting the combined sensor dataset and scheduling its replay.

Loads the seven shipped source files, draws the seeded per-source samples
(1000 + 800 + 2200 + 2000 + 1000 + 1000 + 2000 = 10,000 readings), lays
them on the replay clock, and folds them into a data tree the way the
simulator's gateway would.
"""

from collections import Counter
from pathlib import Path

from yada import DataTree
from yada.config import load_config
from yada.ingest import constitute, schedule

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"

cfg = load_config(FIXTURES / "harness.yaml")
sources = [(s.file, s.mapping, s.spec) for s in cfg.sources]

readings, reports = constitute(sources, seed=cfg.seed)
print(f"combined readings: {len(readings)}")
for report in reports:
    print(
        f"  {report.source_name:<24} rows={report.rows_total:<6} "
        f"retained={report.rows_retained:<6} skipped={report.skipped}"
    )

sched = schedule(readings, cfg.inter_reading_gap_ms, seed=cfg.seed)
print()
print(f"replay horizon: {sched.horizon_ms} ms across {len(sched.events)} events")
print("first three events:")
for event in sched.events[:3]:
    print(f"  t={event.ts_us}us  {event.sensor_id}  {event.path} = {event.value}")

by_leaf = Counter(str(e.path) for e in sched.events)
print()
print("readings per target leaf:")
for path, count in by_leaf.most_common():
    print(f"  {count:>5}  {path}")

tree = DataTree(cfg.schema)
for event in sched.events:
    tree.apply_update(event.path, event.value, event.ts_us)
print()
print(f"final twin-side tree after full replay ({tree.count_leaves()} leaves):")
print(tree.serialize().decode())
