"""CSV sensor-dataset loading, deterministic reconstitution, and replay
scheduling.

Each source file is described by a DatasetSpec plus a ColumnMapping that
routes CSV cells onto schema leaf paths. ``constitute`` draws a seeded
uniform sample (without replacement, original row order kept) from every
source and concatenates them; with the shipped seven-source configuration
that yields exactly 10,000 readings. ``schedule`` lays the readings out on
a synthetic replay clock. Every step is a pure function of its inputs and
the seed.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, replace
from decimal import Decimal, InvalidOperation
from pathlib import Path

from .datatree import LeafPath, Value, render_value
from .errors import YadaError
from .schema import SchemaModule, ValueKind

US_PER_MS = 1000


class IngestError(YadaError):
    """Base class for dataset loading errors."""


class MissingColumnError(IngestError):
    """A mapped column is absent from the CSV header."""


class EmptyFileError(IngestError):
    """The CSV has a header but no data rows."""


class InsufficientRowsError(IngestError):
    """A source loaded fewer rows than its used-samples count."""

    def __init__(self, source: str, needed: int, available: int):
        self.source = source
        self.needed = needed
        self.available = available
        super().__init__(
            f"{source}: need {needed} rows, only {available} loadable"
        )


@dataclass(frozen=True, slots=True)
class DatasetSpec:
    """Shape metadata for one source file."""

    source_name: str
    feature_count: int
    total_samples: int
    used_samples: int

    def __post_init__(self):
        if not (0 < self.used_samples <= self.total_samples):
            raise IngestError(
                f"{self.source_name}: used_samples must be in (0, total_samples]"
            )
        if self.feature_count < 1:
            raise IngestError(f"{self.source_name}: feature_count must be >= 1")


@dataclass(frozen=True, slots=True)
class ColumnRule:
    """Routes one CSV column onto a schema leaf."""

    csv_column: str
    target: LeafPath
    kind: ValueKind
    scale: Decimal | None = None


# A mapping is just the ordered rules; one reading per rule per row.
ColumnMapping = tuple[ColumnRule, ...]


@dataclass(frozen=True, slots=True)
class SensorReading:
    """One timestamped value routed onto a leaf path."""

    sensor_id: str
    path: LeafPath
    value: Value
    ts_us: int = 0


@dataclass(slots=True)
class LoadReport:
    """Row accounting for one loaded file."""

    source_name: str
    rows_total: int = 0
    rows_retained: int = 0
    skipped: int = 0
    header_columns: int = 0


@dataclass(frozen=True, slots=True)
class ReplaySchedule:
    """Time-ordered readings plus the total horizon."""

    events: tuple[SensorReading, ...]
    horizon_us: int

    @property
    def horizon_ms(self) -> Decimal:
        return Decimal(self.horizon_us) / US_PER_MS


_FRAC_6 = Decimal("0.000001")


def _parse_cell(raw: str, rule: ColumnRule) -> Value | None:
    text = raw.strip()
    if not text:
        return None
    if rule.kind is ValueKind.NUM:
        try:
            value = Decimal(text)
        except InvalidOperation:
            return None
        if not value.is_finite():
            return None
        if rule.scale is not None:
            value = value * rule.scale
        return value.quantize(_FRAC_6).normalize()
    if rule.kind is ValueKind.BOOL:
        lowered = text.lower()
        if lowered in ("true", "1", "on", "yes"):
            return True
        if lowered in ("false", "0", "off", "no"):
            return False
        return None
    return text


def load_csv(
    path: str | Path, mapping: ColumnMapping, spec: DatasetSpec
) -> tuple[list[SensorReading], LoadReport]:
    """Read every parseable row of a CSV source.

    Produces one reading per mapped column per retained row, in row-major
    order. A row is skipped (and counted) when any mapped cell fails to
    parse. Timestamps are left at zero; ``schedule`` assigns them.
    """
    report = LoadReport(source_name=spec.source_name)
    readings: list[SensorReading] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        report.header_columns = len(header)
        for rule in mapping:
            if rule.csv_column not in header:
                raise MissingColumnError(
                    f"{spec.source_name}: column {rule.csv_column!r} not in header"
                )
        for row in reader:
            report.rows_total += 1
            values: list[Value] = []
            ok = True
            for rule in mapping:
                parsed = _parse_cell(row.get(rule.csv_column) or "", rule)
                if parsed is None:
                    ok = False
                    break
                values.append(parsed)
            if not ok:
                report.skipped += 1
                continue
            report.rows_retained += 1
            for rule, value in zip(mapping, values):
                readings.append(
                    SensorReading(
                        sensor_id=f"{spec.source_name}/{rule.csv_column}",
                        path=rule.target,
                        value=value,
                    )
                )
    if report.rows_total == 0:
        raise EmptyFileError(f"{spec.source_name}: no data rows")
    return readings, report


Source = tuple[str | Path, ColumnMapping, DatasetSpec]


def constitute(
    sources: list[Source], seed: int
) -> tuple[list[SensorReading], list[LoadReport]]:
    """Reconstitute the combined dataset.

    Per source: load, then pick ``used_samples`` rows by seeded uniform
    sampling without replacement, keeping original row order (so a source
    whose used count equals its row count passes through unchanged).
    Sources concatenate in the given order.
    """
    combined: list[SensorReading] = []
    reports: list[LoadReport] = []
    for index, (path, mapping, spec) in enumerate(sources):
        readings, report = load_csv(path, mapping, spec)
        reports.append(report)
        per_row = len(mapping)
        rows = [
            readings[i : i + per_row] for i in range(0, len(readings), per_row)
        ]
        if spec.used_samples > len(rows):
            raise InsufficientRowsError(
                spec.source_name, spec.used_samples, len(rows)
            )
        rng = random.Random(f"constitute:{seed}:{index}:{spec.source_name}")
        chosen = sorted(rng.sample(range(len(rows)), spec.used_samples))
        for i in chosen:
            combined.extend(rows[i])
    return combined, reports


def schedule(
    readings: list[SensorReading],
    inter_reading_gap_ms: int,
    seed: int,
    jitter_fraction: Decimal = Decimal("0.25"),
) -> ReplaySchedule:
    """Assign replay timestamps: index * gap plus seeded jitter.

    Jitter is uniform over [0, gap * jitter_fraction] in whole
    microseconds; a zero fraction gives the exact grid. Events are
    stable-sorted by timestamp (the jitter bound keeps them in input
    order already).
    """
    if inter_reading_gap_ms <= 0:
        raise IngestError("inter_reading_gap_ms must be positive")
    gap_us = int(inter_reading_gap_ms) * US_PER_MS
    jitter_max = int(Decimal(gap_us) * jitter_fraction)
    rng = random.Random(f"schedule:{seed}")
    events = []
    for i, r in enumerate(readings):
        jitter = rng.randrange(jitter_max + 1) if jitter_max > 0 else 0
        events.append(replace(r, ts_us=i * gap_us + jitter))
    events.sort(key=lambda r: r.ts_us)
    horizon = events[-1].ts_us if events else 0
    return ReplaySchedule(events=tuple(events), horizon_us=horizon)


def write_replay_csv(schedule_: ReplaySchedule, path: str | Path) -> int:
    """Write the replay file (``ts_ms,sensor_id,path,value``); returns rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["ts_ms", "sensor_id", "path", "value"])
        for event in schedule_.events:
            ts_ms = Decimal(event.ts_us) / US_PER_MS
            writer.writerow(
                [
                    format(ts_ms, "f"),
                    event.sensor_id,
                    str(event.path),
                    render_value(event.value),
                ]
            )
    return len(schedule_.events)


def bind_mapping(
    module: SchemaModule, columns: dict[str, dict], source_name: str
) -> ColumnMapping:
    """Build a ColumnMapping from config entries, binding targets now.

    ``columns`` maps CSV column name to {path, kind, scale?}. Unknown
    paths or kinds fail here rather than at replay time.
    """
    from .paths import parse_leaf_path  # local import to avoid a cycle

    rules: list[ColumnRule] = []
    for csv_name, conf in columns.items():
        kind_text = str(conf.get("kind", "num")).lower()
        try:
            kind = {
                "num": ValueKind.NUM,
                "str": ValueKind.STR,
                "bool": ValueKind.BOOL,
            }[kind_text]
        except KeyError:
            raise IngestError(
                f"{source_name}: column {csv_name!r} has unknown kind {kind_text!r}"
            ) from None
        scale = conf.get("scale")
        rules.append(
            ColumnRule(
                csv_column=csv_name,
                target=parse_leaf_path(module, str(conf["path"])),
                kind=kind,
                scale=Decimal(str(scale)) if scale is not None else None,
            )
        )
    return tuple(rules)
