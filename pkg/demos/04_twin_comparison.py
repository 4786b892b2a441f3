"""The headline experiment: path-filtered vs full-tree twin collection.

Runs the shipped sweep (node counts 4, 6, 16; both modes; one shared seed
and replay schedule) through the discrete-event simulator and prints the
synchronization, RTT, end-to-end delay, and payload comparison.
"""

from pathlib import Path

from yada.cli import _build_schedule, _sim_config
from yada.config import load_config
from yada.sim import Mode, comparison_row, run

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"

cfg = load_config(FIXTURES / "harness.yaml")
sched, _ = _build_schedule(cfg)
print(
    f"schedule: {len(sched.events)} readings over {sched.horizon_ms} ms; "
    f"selection '{cfg.selection.name}' with {len(cfg.selection.exprs)} paths"
)
print()

rows = []
for num_nodes in cfg.sweep_num_nodes:
    metrics = {}
    for mode in Mode.ALL:
        metrics[mode], _events = run(_sim_config(cfg, sched, num_nodes, mode))
    rows.append(comparison_row(metrics[Mode.WITH_YADA], metrics[Mode.WITHOUT_YADA]))

print(f"{'nodes':>5}  {'sync':>19}  {'mean RTT ms':>19}  {'mean e2e ms':>19}  {'mean payload B':>19}")
print(f"{'':>5}  {'filtered':>9} {'full':>9}  {'filtered':>9} {'full':>9}  "
      f"{'filtered':>9} {'full':>9}  {'filtered':>9} {'full':>9}")
for r in rows:
    print(
        f"{r.num_nodes:>5}  {r.sync_with:>9} {r.sync_without:>9}  "
        f"{r.mean_rtt_with_ms:>9} {r.mean_rtt_without_ms:>9}  "
        f"{r.mean_e2e_with_ms:>9} {r.mean_e2e_without_ms:>9}  "
        f"{r.mean_payload_with_bytes:>9} {r.mean_payload_without_bytes:>9}"
    )

print()
for r in rows:
    reduction = 1 - r.mean_payload_with_bytes / r.mean_payload_without_bytes
    print(
        f"nodes={r.num_nodes}: payload reduction {reduction:.1%}, "
        f"sync gain {r.sync_with - r.sync_without}"
    )
