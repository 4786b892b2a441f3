"""Harness configuration: one YAML file drives ingestion and simulation.

Paths inside the file resolve relative to the file's own directory, except
``output.dir`` which resolves against the working directory. Numeric
millisecond values pass through ``Decimal(str(...))`` so they stay exact.
``--set key=value`` overrides use dotted keys into the raw document.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path

import yaml

from .errors import YadaError
from .ingest import ColumnMapping, DatasetSpec, bind_mapping
from .paths import SelectionSet, load_selection
from .schema import SchemaModule, parse_schema
from .sim import NetworkModel


class ConfigError(YadaError):
    """The harness config file is missing, malformed, or inconsistent."""


@dataclass(frozen=True, slots=True)
class SourceConfig:
    file: Path
    mapping: ColumnMapping
    spec: DatasetSpec


@dataclass(frozen=True, slots=True)
class HarnessConfig:
    schema_file: Path
    selection_file: Path
    schema: SchemaModule
    selection: SelectionSet
    seed: int
    output_dir: Path
    sweep_num_nodes: tuple[int, ...]
    sources: tuple[SourceConfig, ...]
    inter_reading_gap_ms: int
    gateway_batch_size: int
    gateway_flush_ms: int
    monitor_poll_ms: int
    staleness_window_ms: int
    processing_cost_per_leaf_ms: Decimal
    network: NetworkModel


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    """Apply ``dotted.key=value`` overrides; values parse as YAML scalars."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set needs key=value, got {item!r}")
        key, _, raw = item.partition("=")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ConfigError(f"--set {key}: bad value {raw!r}: {exc}") from exc
        target = doc
        parts = key.split(".")
        for part in parts[:-1]:
            nxt = target.get(part)
            if not isinstance(nxt, dict):
                nxt = {}
                target[part] = nxt
            target = nxt
        target[parts[-1]] = value
    return doc


def _dec(value: object, where: str) -> Decimal:
    try:
        return Decimal(str(value))
    except Exception as exc:
        raise ConfigError(f"{where}: not a number: {value!r}") from exc


def _int(value: object, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    return value


def load_config(
    path: str | Path,
    overrides: list[str] | None = None,
    seed: int | None = None,
    out_dir: str | None = None,
) -> HarnessConfig:
    """Load, override, resolve, and validate a harness config file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: bad YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    doc = apply_overrides(doc, overrides or [])
    if seed is not None:
        doc["seed"] = seed
    if out_dir is not None:
        doc.setdefault("output", {})["dir"] = out_dir

    base = path.parent

    def resolve(rel: object, key: str) -> Path:
        if not isinstance(rel, str):
            raise ConfigError(f"{key} must be a path string")
        p = Path(rel)
        return p if p.is_absolute() else base / p

    schema_file = resolve(doc.get("schemaFile"), "schemaFile")
    if not schema_file.is_file():
        raise ConfigError(f"schemaFile not found: {schema_file}")
    selection_file = resolve(doc.get("selectionFile"), "selectionFile")
    if not selection_file.is_file():
        raise ConfigError(f"selectionFile not found: {selection_file}")

    schema = parse_schema(schema_file.read_text(encoding="utf-8"))
    selection = load_selection(selection_file)

    sweep = doc.get("sweep", {})
    num_nodes_list = sweep.get("numNodes")
    if not isinstance(num_nodes_list, list) or not num_nodes_list:
        raise ConfigError("sweep.numNodes must be a non-empty list")
    sweep_nodes = tuple(_int(n, "sweep.numNodes") for n in num_nodes_list)

    ingest_doc = doc.get("ingest", {})
    if not isinstance(ingest_doc, dict):
        raise ConfigError("ingest must be a mapping")
    gap = _int(ingest_doc.get("interReadingGapMs", 10), "ingest.interReadingGapMs")
    sources: list[SourceConfig] = []
    for i, src in enumerate(ingest_doc.get("sources", [])):
        where = f"ingest.sources[{i}]"
        if not isinstance(src, dict):
            raise ConfigError(f"{where} must be a mapping")
        for required in ("name", "file", "used_samples", "columns"):
            if required not in src:
                raise ConfigError(f"{where} missing key {required!r}")
        src_file = resolve(src["file"], f"{where}.file")
        if not src_file.is_file():
            raise ConfigError(f"{where}.file not found: {src_file}")
        columns = src["columns"]
        if not isinstance(columns, dict) or not columns:
            raise ConfigError(f"{where}.columns must be a non-empty mapping")
        spec = DatasetSpec(
            source_name=str(src["name"]),
            feature_count=_int(src.get("feature_count", len(columns)), where),
            total_samples=_int(
                src.get("total_samples", src["used_samples"]), where
            ),
            used_samples=_int(src["used_samples"], where),
        )
        mapping = bind_mapping(schema, columns, spec.source_name)
        sources.append(SourceConfig(file=src_file, mapping=mapping, spec=spec))
    if not sources:
        raise ConfigError("ingest.sources must not be empty")

    sim_doc = doc.get("sim", {})
    if not isinstance(sim_doc, dict):
        raise ConfigError("sim must be a mapping")
    net_doc = sim_doc.get("network", {})
    if not isinstance(net_doc, dict):
        raise ConfigError("sim.network must be a mapping")
    top_seed = _int(doc.get("seed", 0), "seed")
    network = NetworkModel(
        base_latency_ms=_dec(net_doc.get("baseLatencyMs", 5), "sim.network.baseLatencyMs"),
        jitter_ms=_dec(net_doc.get("jitterMs", 2), "sim.network.jitterMs"),
        per_byte_ms=_dec(net_doc.get("perByteMs", "0.01"), "sim.network.perByteMs"),
        seed=_int(net_doc.get("seed", top_seed), "sim.network.seed"),
    )

    output_doc = doc.get("output", {})
    out = output_doc.get("dir", "out") if isinstance(output_doc, dict) else "out"

    return HarnessConfig(
        schema_file=schema_file,
        selection_file=selection_file,
        schema=schema,
        selection=selection,
        seed=top_seed,
        output_dir=Path(out),
        sweep_num_nodes=sweep_nodes,
        sources=tuple(sources),
        inter_reading_gap_ms=gap,
        gateway_batch_size=_int(sim_doc.get("gatewayBatchSize", 16), "sim.gatewayBatchSize"),
        gateway_flush_ms=_int(sim_doc.get("gatewayFlushMs", 50), "sim.gatewayFlushMs"),
        monitor_poll_ms=_int(sim_doc.get("monitorPollMs", 250), "sim.monitorPollMs"),
        staleness_window_ms=_int(
            sim_doc.get("stalenessWindowMs", 30000), "sim.stalenessWindowMs"
        ),
        processing_cost_per_leaf_ms=_dec(
            sim_doc.get("processingCostPerLeafMs", "0.2"),
            "sim.processingCostPerLeafMs",
        ),
        network=network,
    )
