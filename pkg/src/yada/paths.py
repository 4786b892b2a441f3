"""Path expressions over YA-DA trees: parsing, binding, evaluation,
projection, and the default air-quality KPI selection.

Expressions are absolute slash paths. A segment is a name, a name with a
``[key='literal']`` predicate (lists only), or the wildcard ``*``. A path
that ends on a container or list selects every leaf beneath it. Selection
sets group expressions under a name and drive both tree projection and
the simulator's synchronization scoring.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path

from .datatree import (
    ContainerInstance,
    DataTree,
    LeafInstance,
    LeafListInstance,
    LeafPath,
    ListEntry,
    ListInstance,
    PathSeg,
    Value,
    coerce_value,
)
from .errors import YadaError
from .schema import NodeKind, SchemaModule, SchemaNode


class PathError(YadaError):
    """Base class for path expression errors."""


class PathSyntaxError(PathError):
    """Malformed path text; carries the byte offset."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"path syntax error at offset {offset}: {message}")


class UnknownSegmentError(PathError):
    """A named segment resolves nowhere in the schema."""

    def __init__(self, expr: str, index: int, name: str):
        self.index = index
        self.name = name
        super().__init__(f"{expr}: segment {index} ({name!r}) not in schema")


class PredicateOnNonListError(PathError):
    """A key predicate sits on a segment that is not a list."""

    def __init__(self, expr: str, index: int):
        self.index = index
        super().__init__(f"{expr}: predicate at segment {index} targets a non-list")


WILDCARD = "*"

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9._-]*")


@dataclass(frozen=True, slots=True)
class Segment:
    """One expression step: a name or ``*``, plus an optional key literal."""

    name: str
    key_literal: str | None = None

    def __str__(self) -> str:
        if self.key_literal is None:
            return self.name
        return f"{self.name}[key='{self.key_literal}']"


@dataclass(frozen=True, slots=True)
class PathExpr:
    """An absolute path expression."""

    segments: tuple[Segment, ...]

    def __str__(self) -> str:
        return "/" + "/".join(str(s) for s in self.segments)


@dataclass(frozen=True, slots=True)
class BoundPath:
    """A PathExpr checked against a schema module."""

    expr: PathExpr
    module: SchemaModule

    def __str__(self) -> str:
        return str(self.expr)


@dataclass(frozen=True, slots=True)
class SelectionSet:
    """A named set of path expressions (may be empty)."""

    name: str
    exprs: tuple[PathExpr, ...]

    def __post_init__(self):
        if not self.name:
            raise PathError("selection set needs a non-empty name")


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def parse_path(text: str) -> PathExpr:
    """Parse ``/seg(/seg)*`` where seg is name, name[key='literal'], or *."""
    if not text.startswith("/"):
        raise PathSyntaxError("path must start with '/'", 0)
    i = 1
    n = len(text)
    segments: list[Segment] = []
    while True:
        if i >= n:
            raise PathSyntaxError("empty segment", i)
        if text[i] == WILDCARD:
            segments.append(Segment(WILDCARD))
            i += 1
        else:
            m = _NAME_RE.match(text, i)
            if not m:
                raise PathSyntaxError(f"bad segment character {text[i]!r}", i)
            name = m.group(0)
            i = m.end()
            literal: str | None = None
            if i < n and text[i] == "[":
                if not text.startswith("[key='", i):
                    raise PathSyntaxError("expected [key='...']", i)
                i += len("[key='")
                end = text.find("'", i)
                if end < 0:
                    raise PathSyntaxError("unterminated key literal", i)
                literal = text[i:end]
                i = end + 1
                if i >= n or text[i] != "]":
                    raise PathSyntaxError("expected ']'", i)
                i += 1
            segments.append(Segment(name, literal))
        if i >= n:
            break
        if text[i] != "/":
            raise PathSyntaxError(f"unexpected {text[i]!r}", i)
        i += 1
    return PathExpr(tuple(segments))


def parse_leaf_path(module: SchemaModule, text: str) -> LeafPath:
    """Parse a concrete leaf address and type its keys against the schema.

    The path must name a leaf or leaf-list, carry a key on every list
    segment, and use no wildcards.
    """
    expr = parse_path(text)
    segs: list[PathSeg] = []
    node: SchemaNode | None = None
    for i, seg in enumerate(expr.segments):
        if seg.name == WILDCARD:
            raise PathError(f"{text}: wildcard not allowed in a concrete path")
        node = module.root(seg.name) if node is None else node.child(seg.name)
        if node is None:
            raise UnknownSegmentError(text, i, seg.name)
        if node.kind is NodeKind.LIST:
            if seg.key_literal is None:
                raise PathError(f"{text}: list segment {seg.name!r} needs a key")
            key_schema = node.child(node.key_leaf or "")
            assert key_schema is not None
            segs.append(PathSeg(seg.name, coerce_value(seg.key_literal, key_schema)))
        else:
            if seg.key_literal is not None:
                raise PredicateOnNonListError(text, i)
            segs.append(PathSeg(seg.name))
    assert node is not None
    if not node.is_leafy:
        raise PathError(f"{text}: does not address a leaf")
    return LeafPath(tuple(segs))


# ---------------------------------------------------------------------------
# Binding
# ---------------------------------------------------------------------------


def bind(expr: PathExpr, module: SchemaModule) -> BoundPath:
    """Check that every named segment resolves and predicates sit on lists."""
    current: list[SchemaNode] = list(module.roots)
    for i, seg in enumerate(expr.segments):
        if i > 0:
            nxt: list[SchemaNode] = []
            for node in current:
                if node.is_leafy:
                    continue
                if seg.name == WILDCARD:
                    nxt.extend(node.children)
                else:
                    child = node.child(seg.name)
                    if child is not None:
                        nxt.append(child)
            current = nxt
        else:
            if seg.name == WILDCARD:
                current = list(module.roots)
            else:
                root = module.root(seg.name)
                current = [root] if root is not None else []
        if not current:
            raise UnknownSegmentError(str(expr), i, seg.name)
        if seg.key_literal is not None and any(
            node.kind is not NodeKind.LIST for node in current
        ):
            raise PredicateOnNonListError(str(expr), i)
    return BoundPath(expr, module)


# ---------------------------------------------------------------------------
# Matching and evaluation
# ---------------------------------------------------------------------------


def _key_matches(literal: str, key: Value) -> bool:
    if isinstance(key, bool):
        return literal.lower() in ("true", "false") and (literal.lower() == "true") == key
    if isinstance(key, Decimal):
        try:
            return Decimal(literal) == key
        except InvalidOperation:
            return False
    return literal == key


def expr_matches(expr: PathExpr, path: LeafPath) -> bool:
    """True when the expression selects the concrete leaf path.

    The expression's segments must match a prefix of the path; a shorter
    expression therefore selects everything beneath its endpoint.
    """
    if len(expr.segments) > len(path.segments):
        return False
    for eseg, pseg in zip(expr.segments, path.segments):
        if eseg.name != WILDCARD and eseg.name != pseg.name:
            return False
        if eseg.key_literal is not None:
            if pseg.key is None or not _key_matches(eseg.key_literal, pseg.key):
                return False
    return True


def selection_matches(selection: SelectionSet, path: LeafPath) -> bool:
    return any(expr_matches(e, path) for e in selection.exprs)


def evaluate(tree: DataTree, bound: BoundPath) -> frozenset[LeafPath]:
    """Leaf instances in the tree selected by the bound expression."""
    if tree.schema != bound.module:
        raise PathError("tree and binding use different schemas")
    expr = bound.expr
    # Frontier of (schema node, instance, concrete prefix); list instances
    # expand into entries as soon as the segment is consumed.
    frontier: list[tuple[SchemaNode, object, tuple[PathSeg, ...]]] = []

    def step_into(
        node: SchemaNode, inst: object, prefix: tuple[PathSeg, ...], seg: Segment
    ) -> list[tuple[SchemaNode, object, tuple[PathSeg, ...]]]:
        if node.kind is NodeKind.LIST:
            assert isinstance(inst, ListInstance)
            out = []
            for entry in inst.entries:
                if seg.key_literal is not None and not _key_matches(
                    seg.key_literal, entry.key
                ):
                    continue
                out.append((node, entry, prefix + (PathSeg(node.name, entry.key),)))
            return out
        if seg.key_literal is not None:
            return []
        return [(node, inst, prefix + (PathSeg(node.name),))]

    for i, seg in enumerate(expr.segments):
        if i == 0:
            frontier = []
            for root in tree.schema.roots:
                if seg.name != WILDCARD and root.name != seg.name:
                    continue
                inst = tree.roots.get(root.name)
                if inst is None:
                    continue
                frontier.extend(step_into(root, inst, (), seg))
        else:
            nxt: list[tuple[SchemaNode, object, tuple[PathSeg, ...]]] = []
            for node, inst, prefix in frontier:
                if node.is_leafy:
                    continue
                child_map = (
                    inst.children
                    if isinstance(inst, (ContainerInstance, ListEntry))
                    else {}
                )
                for child in node.children:
                    if seg.name != WILDCARD and child.name != seg.name:
                        continue
                    cinst = child_map.get(child.name)
                    if cinst is None:
                        continue
                    nxt.extend(step_into(child, cinst, prefix, seg))
            frontier = nxt

    result: set[LeafPath] = set()
    for node, inst, prefix in frontier:
        result.update(_leaves_beneath(node, inst, prefix))
    return frozenset(result)


def _leaves_beneath(
    node: SchemaNode, inst: object, prefix: tuple[PathSeg, ...]
) -> list[LeafPath]:
    # List instances never reach here: evaluation expands them into entries
    # when their segment is consumed.
    if node.is_leafy:
        return [LeafPath(prefix)]
    child_map = inst.children if isinstance(inst, (ContainerInstance, ListEntry)) else {}
    return _walk_children(node, child_map, prefix)


def _walk_children(
    node: SchemaNode, child_map: dict, prefix: tuple[PathSeg, ...]
) -> list[LeafPath]:
    out: list[LeafPath] = []
    for child in node.children:
        inst = child_map.get(child.name)
        if inst is None:
            continue
        if child.is_leafy:
            out.append(LeafPath(prefix + (PathSeg(child.name),)))
        elif child.kind is NodeKind.CONTAINER:
            out.extend(
                _walk_children(child, inst.children, prefix + (PathSeg(child.name),))
            )
        else:
            assert isinstance(inst, ListInstance)
            for entry in inst.entries:
                out.extend(
                    _walk_children(
                        child,
                        entry.children,
                        prefix + (PathSeg(child.name, entry.key),),
                    )
                )
    return out


def evaluate_selection(tree: DataTree, selection: SelectionSet) -> frozenset[LeafPath]:
    """Union of evaluate() over every expression in the selection."""
    out: set[LeafPath] = set()
    for expr in selection.exprs:
        out.update(evaluate(tree, bind(expr, tree.schema)))
    return frozenset(out)


# ---------------------------------------------------------------------------
# Projection
# ---------------------------------------------------------------------------


def project(tree: DataTree, selection: SelectionSet) -> DataTree:
    """Copy of the tree pruned to the selected leaves plus their spine.

    List entries on the spine keep their key leaf so every entry stays
    addressable; values and timestamps are preserved.
    """
    selected = evaluate_selection(tree, selection)
    out = DataTree(tree.schema)
    if not selected:
        return out

    wanted: set[tuple[PathSeg, ...]] = {p.segments for p in selected}
    prefixes: set[tuple[PathSeg, ...]] = set()
    for p in selected:
        for i in range(1, len(p.segments)):
            prefixes.add(p.segments[:i])

    def copy_children(
        node: SchemaNode, src_map: dict, dst_map: dict, prefix: tuple[PathSeg, ...]
    ) -> None:
        for child in node.children:
            inst = src_map.get(child.name)
            if inst is None:
                continue
            if child.is_leafy:
                cpath = prefix + (PathSeg(child.name),)
                if cpath in wanted:
                    dst_map[child.name] = _copy_leaf(inst)
            elif child.kind is NodeKind.CONTAINER:
                cpath = prefix + (PathSeg(child.name),)
                if cpath in prefixes:
                    dst = ContainerInstance()
                    copy_children(child, inst.children, dst.children, cpath)
                    dst_map[child.name] = dst
            else:
                assert isinstance(inst, ListInstance)
                dst_list = ListInstance()
                for entry in inst.entries:
                    cpath = prefix + (PathSeg(child.name, entry.key),)
                    if cpath not in prefixes:
                        continue
                    dst_entry = ListEntry(key=entry.key)
                    key_leaf = entry.children.get(child.key_leaf or "")
                    if key_leaf is not None:
                        dst_entry.children[child.key_leaf or ""] = _copy_leaf(key_leaf)
                    copy_children(child, entry.children, dst_entry.children, cpath)
                    dst_list.entries.append(dst_entry)
                if dst_list.entries:
                    dst_map[child.name] = dst_list

    for root in tree.schema.roots:
        inst = tree.roots.get(root.name)
        if inst is None:
            continue
        rpath = (PathSeg(root.name),)
        if rpath in prefixes:
            dst = ContainerInstance()
            copy_children(root, inst.children, dst.children, rpath)
            out.roots[root.name] = dst
    return out


def _copy_leaf(inst: object):
    if isinstance(inst, LeafInstance):
        return LeafInstance(inst.value, inst.last_updated_us)
    assert isinstance(inst, LeafListInstance)
    return LeafListInstance(list(inst.values), inst.last_updated_us)


# ---------------------------------------------------------------------------
# Selections
# ---------------------------------------------------------------------------

KPI_NAME = "air-quality-kpi"

_KPI_PATHS = (
    "/AirParticleURI/value/pm2.5-data",
    "/AirParticleURI/value/pm10-data",
    "/AirGasesURI/value/carbon-monoxide-data",
    "/AirGasesURI/value/nitrogen-dioxide",
    "/AirGasesURI/value/ozone",
    "/AirTemperatureURI/value",
    "/AirHumidityURI/value",
)


def kpi_airquality() -> SelectionSet:
    """The default air-quality KPI: seven of the fourteen sensor leaves."""
    return SelectionSet(KPI_NAME, tuple(parse_path(p) for p in _KPI_PATHS))


def all_leaves_selection(module: SchemaModule) -> SelectionSet:
    """A selection covering every leaf: one expression per root container."""
    return SelectionSet(
        "all-leaves", tuple(PathExpr((Segment(r.name),)) for r in module.roots)
    )


def load_selection(path: str | Path, name: str | None = None) -> SelectionSet:
    """Read a selection file: one path per line, ``#`` comments allowed.

    The selection name defaults to the file stem.
    """
    p = Path(path)
    exprs: list[PathExpr] = []
    for line in p.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        exprs.append(parse_path(line))
    return SelectionSet(name or p.stem, tuple(exprs))
