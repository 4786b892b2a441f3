"""YA-DA: a YANG-inspired schema and data-tree engine for IIoT telemetry,
with path-based selection and a deterministic digital-twin synchronization
simulator.

The package splits into five layers: ``schema`` (parse, print, resolve),
``datatree`` (validated instances, updates, diff, canonical JSON),
``paths`` (expressions, evaluation, projection, KPI selections),
``ingest`` (dataset loading and replay scheduling), and ``sim`` (the
discrete-event twin model). ``cli`` ties them into the ``yada`` command.
"""

from .datatree import (
    DataTree,
    LeafPath,
    PathSeg,
    UpdateOutcome,
    Value,
    leaf_path,
)
from .ingest import (
    ColumnRule,
    DatasetSpec,
    ReplaySchedule,
    SensorReading,
    constitute,
    load_csv,
    schedule,
)
from .paths import (
    BoundPath,
    PathExpr,
    SelectionSet,
    bind,
    evaluate,
    evaluate_selection,
    expr_matches,
    kpi_airquality,
    load_selection,
    parse_leaf_path,
    parse_path,
    project,
)
from .schema import (
    NodeKind,
    SchemaModule,
    SchemaNode,
    ValueKind,
    parse_schema,
    print_schema,
    resolve,
)
from .sim import (
    ComparisonRow,
    MetricsRecord,
    Mode,
    NetworkModel,
    PhysicalNode,
    SimConfig,
    TwinEntity,
    build_topology,
    compare,
    run,
    sync_score,
)

__version__ = "0.1.0"

__all__ = [
    "BoundPath",
    "ColumnRule",
    "ComparisonRow",
    "DataTree",
    "DatasetSpec",
    "LeafPath",
    "MetricsRecord",
    "Mode",
    "NetworkModel",
    "NodeKind",
    "PathExpr",
    "PathSeg",
    "PhysicalNode",
    "ReplaySchedule",
    "SchemaModule",
    "SchemaNode",
    "SelectionSet",
    "SensorReading",
    "SimConfig",
    "TwinEntity",
    "UpdateOutcome",
    "Value",
    "ValueKind",
    "bind",
    "build_topology",
    "compare",
    "constitute",
    "evaluate",
    "evaluate_selection",
    "expr_matches",
    "kpi_airquality",
    "leaf_path",
    "load_csv",
    "load_selection",
    "parse_leaf_path",
    "parse_path",
    "parse_schema",
    "print_schema",
    "project",
    "resolve",
    "run",
    "schedule",
    "sync_score",
    "__version__",
]
