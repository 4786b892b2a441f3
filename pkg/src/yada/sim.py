"""Deterministic discrete-event simulation of twin synchronization.

The modeled pipeline: physical sensor nodes emit scheduled readings, an
IoT gateway batches them (size or deadline triggered) and forwards them
to an in-process twin tree, while a monitor polls the twin for either a
path-filtered projection or the full tree. The run produces round-trip
times, payload sizes, end-to-end delays, and a synchronization score
series.

Model choices that matter for interpreting the numbers:

* The clock is integer microseconds; reports are decimal milliseconds.
* Every network hop costs base latency plus a seeded uniform jitter plus
  a per-byte transfer charge. Each physical node draws jitter from its
  own seeded stream, so the node count is observable in the results.
* The twin is a single FIFO server: applying a batch and serializing a
  poll response both occupy it at the per-leaf processing cost, so heavy
  polling delays twin updates. Reported RTT is the closed form
  2*(base+jitter) + per_byte*bytes + per_leaf*leaves and excludes queue
  wait.
* Leaf freshness is judged on the reading's emission timestamp.

Runs with the same config and seed are bit-for-bit identical.
"""

from __future__ import annotations

import heapq
import json
import random
from dataclasses import dataclass, field
from decimal import Decimal

from .datatree import DataTree, LeafPath, UpdateOutcome, Value, render_value
from .errors import YadaError
from .ingest import US_PER_MS, ReplaySchedule, SensorReading
from .paths import (
    SelectionSet,
    all_leaves_selection,
    bind,
    project,
    selection_matches,
)
from .schema import SchemaModule

SCORE_Q = Decimal("0.000001")
MS_Q = Decimal("0.001")


class SimError(YadaError):
    """Base class for simulator errors."""


class NoLeavesError(SimError):
    """The schema has no leaves to partition across nodes."""


class ConfigInvalidError(SimError):
    """A SimConfig fails its invariants."""


class ConfigMismatchError(SimError):
    """Two configs meant to differ only by mode differ elsewhere."""


class Mode:
    WITH_YADA = "with-yada"
    WITHOUT_YADA = "without-yada"
    ALL = (WITH_YADA, WITHOUT_YADA)


@dataclass(frozen=True, slots=True)
class TwinEntity:
    """Twin-graph descriptor: stored state, streamed telemetry, edges,
    and nested component names."""

    id: str
    properties: tuple[tuple[str, Value], ...] = ()
    telemetry: tuple[str, ...] = ()
    relationships: tuple[tuple[str, str], ...] = ()  # (target id, label)
    components: tuple[str, ...] = ()


@dataclass(slots=True)
class PhysicalNode:
    """A sensor host owning a disjoint set of schema leaves."""

    id: str
    bound_leaves: tuple[tuple[str, ...], ...]
    local_state: dict[LeafPath, tuple[Value, int]] = field(default_factory=dict)


@dataclass(frozen=True, slots=True)
class NetworkModel:
    """Per-hop channel model; jitter is uniform over [0, jitter_ms]."""

    base_latency_ms: Decimal = Decimal(5)
    jitter_ms: Decimal = Decimal(2)
    per_byte_ms: Decimal = Decimal("0.01")
    seed: int = 0

    def validate(self) -> list[str]:
        problems = []
        for name in ("base_latency_ms", "jitter_ms", "per_byte_ms"):
            if getattr(self, name) < 0:
                problems.append(f"network.{name} must be >= 0")
        return problems


@dataclass(frozen=True, slots=True)
class SimConfig:
    schema: SchemaModule
    schedule: ReplaySchedule
    selection: SelectionSet
    mode: str
    num_nodes: int
    gateway_batch_size: int = 16
    gateway_flush_ms: int = 50
    monitor_poll_ms: int = 250
    staleness_window_ms: int = 30000
    processing_cost_per_leaf_ms: Decimal = Decimal("0.2")
    network: NetworkModel = NetworkModel()
    seed: int = 0

    def validate(self) -> None:
        problems = []
        if self.num_nodes < 1:
            problems.append("num_nodes must be >= 1")
        if self.gateway_batch_size < 1:
            problems.append("gateway_batch_size must be >= 1")
        if self.gateway_flush_ms <= 0:
            problems.append("gateway_flush_ms must be > 0")
        if self.monitor_poll_ms <= 0:
            problems.append("monitor_poll_ms must be > 0")
        if self.staleness_window_ms < 0:
            problems.append("staleness_window_ms must be >= 0")
        if self.processing_cost_per_leaf_ms < 0:
            problems.append("processing_cost_per_leaf_ms must be >= 0")
        if self.mode not in Mode.ALL:
            problems.append(f"mode must be one of {Mode.ALL}")
        if not self.schedule.events:
            problems.append("schedule must not be empty")
        problems.extend(self.network.validate())
        if next(self.schema.iter_leaf_paths(), None) is None:
            problems.append("schema has no leaves")
        for expr in self.selection.exprs:
            bind(expr, self.schema)  # raises PathError with detail
        if problems:
            raise ConfigInvalidError("; ".join(problems))


@dataclass(slots=True)
class Summary:
    mean_rtt_ms: Decimal
    mean_payload_bytes: Decimal
    mean_e2e_ms: Decimal
    final_sync_score: Decimal
    applied: int
    dropped: int
    scheduled: int
    polls: int


@dataclass(slots=True)
class MetricsRecord:
    """Everything a run measures, plus the aggregate summary."""

    mode: str
    num_nodes: int
    rtt_samples_us: list[int] = field(default_factory=list)
    payload_bytes_per_poll: list[int] = field(default_factory=list)
    e2e_delays_us: list[int] = field(default_factory=list)
    sync_series: list[tuple[int, Decimal]] = field(default_factory=list)
    applied: int = 0
    dropped: int = 0
    scheduled: int = 0

    def summary(self) -> Summary:
        return Summary(
            mean_rtt_ms=_mean_ms(self.rtt_samples_us),
            mean_payload_bytes=_mean(self.payload_bytes_per_poll),
            mean_e2e_ms=_mean_ms(self.e2e_delays_us),
            final_sync_score=_mean_score([s for _, s in self.sync_series]),
            applied=self.applied,
            dropped=self.dropped,
            scheduled=self.scheduled,
            polls=len(self.payload_bytes_per_poll),
        )


# (ts_us, kind, node, path, bytes)
EventRecord = tuple[int, str, str, str, int]


def _mean(values: list[int]) -> Decimal:
    if not values:
        return Decimal("0.000")
    return (Decimal(sum(values)) / len(values)).quantize(MS_Q)


def _mean_ms(values_us: list[int]) -> Decimal:
    if not values_us:
        return Decimal("0.000")
    return (Decimal(sum(values_us)) / (len(values_us) * US_PER_MS)).quantize(MS_Q)


def _mean_score(scores: list[Decimal]) -> Decimal:
    if not scores:
        return Decimal("1.000000")  # vacuous: nothing was observed
    return (sum(scores) / len(scores)).quantize(SCORE_Q)


def _ms_to_us(ms: Decimal | int) -> int:
    return int((Decimal(ms) * US_PER_MS).to_integral_value())


# ---------------------------------------------------------------------------
# Topology
# ---------------------------------------------------------------------------


def build_topology(
    schema: SchemaModule, num_nodes: int, seed: int
) -> tuple[list[PhysicalNode], dict[str, TwinEntity]]:
    """Partition schema leaves round-robin over seeded-shuffled order and
    mirror the layout in a twin entity graph (nodes feed one gateway)."""
    leaves = list(schema.iter_leaf_paths())
    if not leaves:
        raise NoLeavesError("schema has no leaves")
    if num_nodes < 1:
        raise ConfigInvalidError("num_nodes must be >= 1")
    rng = random.Random(f"topology:{seed}")
    rng.shuffle(leaves)
    nodes: list[PhysicalNode] = []
    entities: dict[str, TwinEntity] = {}
    for i in range(num_nodes):
        bound = tuple(leaves[i::num_nodes])
        node = PhysicalNode(id=f"node-{i}", bound_leaves=bound)
        nodes.append(node)
        entities[node.id] = TwinEntity(
            id=node.id,
            properties=(("node-index", Decimal(i)),),
            telemetry=tuple("/" + "/".join(p) for p in bound),
            relationships=(("gateway", "feeds"),),
        )
    entities["gateway"] = TwinEntity(id="gateway", components=("twin-store",))
    validate_twin_graph(entities)
    return nodes, entities


def validate_twin_graph(graph: dict[str, TwinEntity]) -> None:
    for key, entity in graph.items():
        if entity.id != key:
            raise SimError(f"entity {entity.id!r} keyed as {key!r}")
        for target, _label in entity.relationships:
            if target not in graph:
                raise SimError(f"{entity.id}: relationship target {target!r} missing")


# ---------------------------------------------------------------------------
# Synchronization score
# ---------------------------------------------------------------------------


def sync_score(
    physical: dict[LeafPath, tuple[Value, int]],
    twin: DataTree,
    selection: SelectionSet,
    staleness_window_us: int,
    now_us: int,
) -> Decimal:
    """Fraction of selected, physically written leaves whose twin copy
    matches the physical value and is fresh inside the staleness window.

    An empty denominator (nothing selected was ever written) is vacuously
    synchronized and scores 1.
    """
    written = [p for p in physical if selection_matches(selection, p)]
    if not written:
        return Decimal(1).quantize(SCORE_Q)
    threshold = now_us - staleness_window_us
    hits = 0
    for path in written:
        got = twin.get_leaf(path)
        if got is None:
            continue
        twin_value, twin_ts = got
        phys_value, _ = physical[path]
        if (
            type(twin_value) is type(phys_value)
            and twin_value == phys_value
            and twin_ts >= threshold
        ):
            hits += 1
    return (Decimal(hits) / Decimal(len(written))).quantize(SCORE_Q)


# ---------------------------------------------------------------------------
# Event loop
# ---------------------------------------------------------------------------

_EMIT, _GW_RECV, _GW_TIMER, _TWIN_ARRIVE, _TWIN_COMMIT, _POLL, _MON_RESPOND = range(7)


def _message_bytes(reading: SensorReading) -> int:
    payload = (
        f'{{"p":{json.dumps(str(reading.path))},'
        f'"v":{render_value(reading.value)},"t":{reading.ts_us}}}'
    )
    return len(payload.encode("utf-8"))


def run(config: SimConfig) -> tuple[MetricsRecord, list[EventRecord]]:
    """Execute one deterministic simulation run."""
    config.validate()
    schema = config.schema
    nodes, _twin_graph = build_topology(schema, config.num_nodes, config.seed)
    owner: dict[tuple[str, ...], PhysicalNode] = {}
    for node in nodes:
        for names in node.bound_leaves:
            owner[names] = node

    twin = DataTree(schema)
    physical: dict[LeafPath, tuple[Value, int]] = {}

    net = config.network
    base_us = _ms_to_us(net.base_latency_ms)
    jitter_us = _ms_to_us(net.jitter_ms)
    per_byte_us = Decimal(net.per_byte_ms) * US_PER_MS
    per_leaf_us = Decimal(config.processing_cost_per_leaf_ms) * US_PER_MS
    flush_us = config.gateway_flush_ms * US_PER_MS
    poll_us = config.monitor_poll_ms * US_PER_MS
    staleness_us = config.staleness_window_ms * US_PER_MS

    uplink_rng = {
        node.id: random.Random(f"uplink:{net.seed}:{node.id}") for node in nodes
    }
    downlink_rng = random.Random(f"downlink:{net.seed}")
    monitor_rng = random.Random(f"monitor:{net.seed}")

    def draw(rng: random.Random) -> int:
        return rng.randrange(jitter_us + 1) if jitter_us > 0 else 0

    score_selection = (
        config.selection
        if config.mode == Mode.WITH_YADA
        else all_leaves_selection(schema)
    )

    metrics = MetricsRecord(mode=config.mode, num_nodes=config.num_nodes)
    metrics.scheduled = len(config.schedule.events)
    events_log: list[EventRecord] = []

    heap: list[tuple[int, int, int, object]] = []
    seq = 0

    def push(ts: int, kind: int, payload: object) -> None:
        nonlocal seq
        heapq.heappush(heap, (ts, seq, kind, payload))
        seq += 1

    for reading in config.schedule.events:
        push(reading.ts_us, _EMIT, reading)
    k = 1
    while k * poll_us <= config.schedule.horizon_us:
        push(k * poll_us, _POLL, None)
        k += 1

    # Gateway buffer holds (gateway arrival ts, reading, message bytes).
    buffer: list[tuple[int, SensorReading, int]] = []
    twin_free = 0

    def flush(now: int) -> None:
        nonlocal buffer
        batch = buffer
        buffer = []
        batch_bytes = sum(b for _, _, b in batch) + len(batch) + 1
        events_log.append((now, "flush", "gateway", "", batch_bytes))
        arrival = now + base_us + draw(downlink_rng) + _cost(per_byte_us, batch_bytes)
        push(arrival, _TWIN_ARRIVE, batch)

    while heap:
        now, _, kind, payload = heapq.heappop(heap)
        if kind == _EMIT:
            reading = payload
            node = owner.get(reading.path.names)
            if node is None:
                raise ConfigInvalidError(
                    f"reading path {reading.path} is not a schema leaf"
                )
            node.local_state[reading.path] = (reading.value, reading.ts_us)
            physical[reading.path] = (reading.value, reading.ts_us)
            msg_bytes = _message_bytes(reading)
            events_log.append(
                (now, "emit", node.id, str(reading.path), msg_bytes)
            )
            arrival = (
                now
                + base_us
                + draw(uplink_rng[node.id])
                + _cost(per_byte_us, msg_bytes)
            )
            push(arrival, _GW_RECV, (reading, msg_bytes))
        elif kind == _GW_RECV:
            reading, msg_bytes = payload
            buffer.append((now, reading, msg_bytes))
            if len(buffer) >= config.gateway_batch_size:
                flush(now)
            elif len(buffer) == 1:
                push(now + flush_us, _GW_TIMER, None)
        elif kind == _GW_TIMER:
            if buffer and buffer[0][0] + flush_us <= now:
                flush(now)
        elif kind == _TWIN_ARRIVE:
            batch = payload
            start = max(now, twin_free)
            done = start + _cost(per_leaf_us, len(batch))
            twin_free = done
            push(done, _TWIN_COMMIT, batch)
        elif kind == _TWIN_COMMIT:
            for _, reading, _ in payload:
                outcome = twin.apply_update(
                    reading.path, reading.value, reading.ts_us
                )
                if outcome is UpdateOutcome.APPLIED:
                    metrics.applied += 1
                    metrics.e2e_delays_us.append(now - reading.ts_us)
                    events_log.append(
                        (now, "apply", "gateway", str(reading.path), 0)
                    )
                else:
                    metrics.dropped += 1
                    events_log.append(
                        (now, "drop", "gateway", str(reading.path), 0)
                    )
        elif kind == _POLL:
            score = sync_score(
                physical, twin, score_selection, staleness_us, now
            )
            metrics.sync_series.append((now, score))
            j = draw(monitor_rng)
            push(now + base_us + j, _MON_RESPOND, j)
        else:  # _MON_RESPOND
            j = payload
            if config.mode == Mode.WITH_YADA:
                view = project(twin, config.selection)
            else:
                view = twin
            data = view.serialize()
            leaves = view.count_leaves()
            rtt = (
                2 * (base_us + j)
                + _cost(per_byte_us, len(data))
                + _cost(per_leaf_us, leaves)
            )
            metrics.rtt_samples_us.append(rtt)
            metrics.payload_bytes_per_poll.append(len(data))
            events_log.append((now, "poll", "monitor", "", len(data)))
            twin_free = max(now, twin_free) + _cost(per_leaf_us, leaves)

    return metrics, events_log


def _cost(per_unit_us: Decimal, count: int) -> int:
    return int((per_unit_us * count).to_integral_value())


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class ComparisonRow:
    num_nodes: int
    sync_with: Decimal
    sync_without: Decimal
    mean_rtt_with_ms: Decimal
    mean_rtt_without_ms: Decimal
    mean_e2e_with_ms: Decimal
    mean_e2e_without_ms: Decimal
    mean_payload_with_bytes: Decimal
    mean_payload_without_bytes: Decimal


_COMPARABLE_FIELDS = (
    "schema",
    "schedule",
    "num_nodes",
    "gateway_batch_size",
    "gateway_flush_ms",
    "monitor_poll_ms",
    "staleness_window_ms",
    "processing_cost_per_leaf_ms",
    "network",
    "seed",
)


def comparison_row(with_m: MetricsRecord, without_m: MetricsRecord) -> ComparisonRow:
    sw, so = with_m.summary(), without_m.summary()
    return ComparisonRow(
        num_nodes=with_m.num_nodes,
        sync_with=sw.final_sync_score,
        sync_without=so.final_sync_score,
        mean_rtt_with_ms=sw.mean_rtt_ms,
        mean_rtt_without_ms=so.mean_rtt_ms,
        mean_e2e_with_ms=sw.mean_e2e_ms,
        mean_e2e_without_ms=so.mean_e2e_ms,
        mean_payload_with_bytes=sw.mean_payload_bytes,
        mean_payload_without_bytes=so.mean_payload_bytes,
    )


def compare(config_with: SimConfig, config_without: SimConfig) -> ComparisonRow:
    """Run both modes of an otherwise identical config and tabulate."""
    if config_with.mode != Mode.WITH_YADA or config_without.mode != Mode.WITHOUT_YADA:
        raise ConfigMismatchError("configs must carry the two modes")
    for name in _COMPARABLE_FIELDS:
        if getattr(config_with, name) != getattr(config_without, name):
            raise ConfigMismatchError(f"configs differ on {name}")
    with_m, _ = run(config_with)
    without_m, _ = run(config_without)
    return comparison_row(with_m, without_m)
