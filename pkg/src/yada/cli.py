"""Command-line harness: compile, validate, query, ingest, simulate, report.

Every command is deterministic given its inputs and seed. Exit codes are a
stable contract: 0 success, 1 parse or validation failure, 2 configuration
problems, 3 dataset under-run.
"""

from __future__ import annotations

import argparse
import csv
import sys
from decimal import Decimal
from pathlib import Path

from .config import ConfigError, HarnessConfig, load_config
from .datatree import DataError, DataTree, render_value
from .errors import YadaError
from .ingest import (
    InsufficientRowsError,
    IngestError,
    LoadReport,
    ReplaySchedule,
    constitute,
    schedule,
    write_replay_csv,
)
from .paths import PathError, bind, evaluate, parse_path
from .schema import SchemaError, parse_schema, print_schema
from .sim import (
    ComparisonRow,
    ConfigInvalidError,
    ConfigMismatchError,
    MetricsRecord,
    Mode,
    SimConfig,
    SimError,
    comparison_row,
    run,
)

US_PER_MS = 1000


def _err(message: str) -> None:
    print(message, file=sys.stderr)


def _fmt(value: Decimal) -> str:
    return format(value, "f")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_compile(args: argparse.Namespace) -> int:
    path = Path(args.schema)
    if not path.is_file():
        _err(f"file not found: {path}")
        return 1
    module = parse_schema(path.read_text(encoding="utf-8"))
    sys.stdout.write(print_schema(module))
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    path = Path(args.schema)
    if not path.is_file():
        _err(f"file not found: {path}")
        return 1
    module = parse_schema(path.read_text(encoding="utf-8"))
    if args.data is None:
        print(f"schema {module.name}: ok")
        return 0
    data_path = Path(args.data)
    if not data_path.is_file():
        _err(f"file not found: {data_path}")
        return 1
    tree = DataTree.load(module, data_path.read_text(encoding="utf-8"))
    violations = tree.validate()
    for v in violations:
        _err(f"{v.locator}: {v.code}: {v.message}")
    if violations:
        return 1
    print(f"instance {data_path.name}: ok")
    return 0


def cmd_query(args: argparse.Namespace) -> int:
    schema_path = Path(args.schema)
    data_path = Path(args.data)
    for p in (schema_path, data_path):
        if not p.is_file():
            _err(f"file not found: {p}")
            return 1
    module = parse_schema(schema_path.read_text(encoding="utf-8"))
    tree = DataTree.load(module, data_path.read_text(encoding="utf-8"))
    bound = bind(parse_path(args.path), module)
    selected = evaluate(tree, bound)
    # Emission order: schema declaration order, then list-key order, which
    # is exactly how leaf_items walks.
    for leaf, value, _ts in tree.leaf_items():
        if leaf in selected:
            print(f"{leaf} = {_render_result(value)}")
    return 0


def _render_result(value) -> str:
    if isinstance(value, tuple):
        return "[" + ",".join(render_value(v) for v in value) + "]"
    return render_value(value)


def _build_schedule(cfg: HarnessConfig) -> tuple[ReplaySchedule, list[LoadReport]]:
    sources = [(s.file, s.mapping, s.spec) for s in cfg.sources]
    readings, reports = constitute(sources, cfg.seed)
    return schedule(readings, cfg.inter_reading_gap_ms, cfg.seed), reports


def cmd_ingest(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args.set, args.seed, args.out)
    sched, reports = _build_schedule(cfg)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    target = cfg.output_dir / "replay.csv"
    rows = write_replay_csv(sched, target)
    skipped = sum(r.skipped for r in reports)
    print(f"wrote {target} ({rows} rows, {skipped} source rows skipped)")
    return 0


def _sim_config(cfg: HarnessConfig, sched: ReplaySchedule, num_nodes: int, mode: str) -> SimConfig:
    return SimConfig(
        schema=cfg.schema,
        schedule=sched,
        selection=cfg.selection,
        mode=mode,
        num_nodes=num_nodes,
        gateway_batch_size=cfg.gateway_batch_size,
        gateway_flush_ms=cfg.gateway_flush_ms,
        monitor_poll_ms=cfg.monitor_poll_ms,
        staleness_window_ms=cfg.staleness_window_ms,
        processing_cost_per_leaf_ms=cfg.processing_cost_per_leaf_ms,
        network=cfg.network,
        seed=cfg.seed,
    )


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args.set, args.seed, args.out)
    sched, _reports = _build_schedule(cfg)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)

    cells: dict[tuple[int, str], MetricsRecord] = {}
    for num_nodes in cfg.sweep_num_nodes:
        for mode in Mode.ALL:
            metrics, events = run(_sim_config(cfg, sched, num_nodes, mode))
            cells[(num_nodes, mode)] = metrics
            _write_events(out / f"events-{mode}-{num_nodes}.csv", events)

    rows = [
        comparison_row(
            cells[(n, Mode.WITH_YADA)], cells[(n, Mode.WITHOUT_YADA)]
        )
        for n in cfg.sweep_num_nodes
    ]
    _write_metrics(out / "metrics.csv", cells)
    _write_comparison(out / "comparison.csv", rows)
    _write_rtt(out / "rtt.csv", cells)
    _write_e2e(out / "e2e.csv", cells)
    _write_sync(out / "sync.csv", cells)
    summary = _summary_text(rows, cells)
    (out / "summary.txt").write_text(summary, encoding="utf-8")
    print(f"wrote {out}/comparison.csv and companions")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    out = Path(args.out) if args.out else None
    if out is None and args.config:
        out = load_config(args.config, args.set, args.seed, None).output_dir
    if out is None:
        raise ConfigError("report needs --out or --config")
    summary = out / "summary.txt"
    if not summary.is_file():
        raise ConfigError(f"no summary.txt under {out}; run simulate first")
    sys.stdout.write(summary.read_text(encoding="utf-8"))
    return 0


# ---------------------------------------------------------------------------
# Output files
# ---------------------------------------------------------------------------


def _csv_writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _write_events(path: Path, events) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _csv_writer(fh)
        w.writerow(["ts_us", "kind", "node", "path", "bytes"])
        w.writerows(events)


def _cell_order(cells):
    return sorted(cells.items(), key=lambda kv: (kv[0][0], kv[0][1]))


def _write_metrics(path: Path, cells) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _csv_writer(fh)
        w.writerow(["metric", "mode", "num_nodes", "value"])
        for (num_nodes, mode), metrics in _cell_order(cells):
            s = metrics.summary()
            for name, value in (
                ("mean_rtt_ms", _fmt(s.mean_rtt_ms)),
                ("mean_payload_bytes", _fmt(s.mean_payload_bytes)),
                ("mean_e2e_ms", _fmt(s.mean_e2e_ms)),
                ("final_sync_score", _fmt(s.final_sync_score)),
                ("applied", s.applied),
                ("dropped", s.dropped),
                ("scheduled", s.scheduled),
                ("polls", s.polls),
            ):
                w.writerow([name, mode, num_nodes, value])


def _write_comparison(path: Path, rows: list[ComparisonRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _csv_writer(fh)
        w.writerow(
            [
                "num_nodes",
                "sync_with",
                "sync_without",
                "mean_rtt_with_ms",
                "mean_rtt_without_ms",
                "mean_e2e_with_ms",
                "mean_e2e_without_ms",
                "mean_payload_with_bytes",
                "mean_payload_without_bytes",
            ]
        )
        for r in rows:
            w.writerow(
                [
                    r.num_nodes,
                    _fmt(r.sync_with),
                    _fmt(r.sync_without),
                    _fmt(r.mean_rtt_with_ms),
                    _fmt(r.mean_rtt_without_ms),
                    _fmt(r.mean_e2e_with_ms),
                    _fmt(r.mean_e2e_without_ms),
                    _fmt(r.mean_payload_with_bytes),
                    _fmt(r.mean_payload_without_bytes),
                ]
            )


def _write_rtt(path: Path, cells) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _csv_writer(fh)
        w.writerow(["mode", "num_nodes", "poll_index", "rtt_ms"])
        for (num_nodes, mode), metrics in _cell_order(cells):
            for i, rtt_us in enumerate(metrics.rtt_samples_us):
                w.writerow([mode, num_nodes, i, _fmt(Decimal(rtt_us) / US_PER_MS)])


def _write_e2e(path: Path, cells) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _csv_writer(fh)
        w.writerow(["mode", "num_nodes", "reading_index", "e2e_ms"])
        for (num_nodes, mode), metrics in _cell_order(cells):
            for i, us in enumerate(metrics.e2e_delays_us):
                w.writerow([mode, num_nodes, i, _fmt(Decimal(us) / US_PER_MS)])


def _write_sync(path: Path, cells) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _csv_writer(fh)
        w.writerow(["mode", "num_nodes", "t_ms", "score"])
        for (num_nodes, mode), metrics in _cell_order(cells):
            for t_us, score in metrics.sync_series:
                w.writerow([mode, num_nodes, _fmt(Decimal(t_us) / US_PER_MS), _fmt(score)])


def _summary_text(rows: list[ComparisonRow], cells) -> str:
    lines = ["twin synchronization sweep", ""]
    header = (
        f"{'nodes':>5}  {'sync w/':>9}  {'sync w/o':>9}  {'rtt w/ ms':>10}  "
        f"{'rtt w/o ms':>10}  {'e2e w/ ms':>10}  {'e2e w/o ms':>10}  "
        f"{'payload w/':>11}  {'payload w/o':>12}  {'reduction':>9}"
    )
    lines.append(header)
    for r in rows:
        if r.mean_payload_without_bytes > 0:
            reduction = (
                1 - r.mean_payload_with_bytes / r.mean_payload_without_bytes
            ) * 100
        else:
            reduction = Decimal(0)
        lines.append(
            f"{r.num_nodes:>5}  {_fmt(r.sync_with):>9}  {_fmt(r.sync_without):>9}  "
            f"{_fmt(r.mean_rtt_with_ms):>10}  {_fmt(r.mean_rtt_without_ms):>10}  "
            f"{_fmt(r.mean_e2e_with_ms):>10}  {_fmt(r.mean_e2e_without_ms):>10}  "
            f"{_fmt(r.mean_payload_with_bytes):>11}  "
            f"{_fmt(r.mean_payload_without_bytes):>12}  "
            f"{_fmt(reduction.quantize(Decimal('0.1'))):>8}%"
        )
    lines.append("")
    for (num_nodes, mode), metrics in _cell_order(cells):
        s = metrics.summary()
        lines.append(
            f"cell nodes={num_nodes} mode={mode}: applied={s.applied} "
            f"dropped={s.dropped} scheduled={s.scheduled} polls={s.polls}"
        )
    lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="harness config file (YAML)")
    common.add_argument("--seed", type=int, default=None, help="override the seed")
    common.add_argument("--out", default=None, help="override output.dir")
    common.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config key (dotted path)",
    )

    parser = argparse.ArgumentParser(
        prog="yada",
        description="YA-DA schema tooling and twin synchronization experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", parents=[common], help="print canonical schema")
    p.add_argument("schema")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("validate", parents=[common], help="validate schema or instance")
    p.add_argument("schema")
    p.add_argument("data", nargs="?")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("query", parents=[common], help="evaluate a path expression")
    p.add_argument("schema")
    p.add_argument("data")
    p.add_argument("path")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("ingest", parents=[common], help="write the replay dataset")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("simulate", parents=[common], help="run the comparison sweep")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", parents=[common], help="print the sweep summary")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.func in (cmd_ingest, cmd_simulate) and not args.config:
        _err("--config is required for this command")
        return 2
    try:
        return args.func(args)
    except InsufficientRowsError as exc:
        _err(str(exc))
        return 3
    except (ConfigError, ConfigInvalidError, ConfigMismatchError, IngestError) as exc:
        _err(str(exc))
        return 2
    except (SchemaError, PathError, DataError, SimError) as exc:
        _err(str(exc))
        return 1
    except YadaError as exc:  # pragma: no cover - safety net
        _err(str(exc))
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
