"""Instance data trees bound to a schema module.

A DataTree holds timestamped leaf values arranged exactly like its schema.
Updates are last-writer-wins by timestamp (ties go to the later arrival),
list entries stay sorted by key value, and serialization is a canonical
JSON form whose byte length doubles as the payload-size measure used by
the twin simulator. Timestamps are integers in simulated microseconds.
"""

from __future__ import annotations

import json
from bisect import insort
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from enum import Enum

from .errors import YadaError
from .schema import NodeKind, SchemaModule, SchemaNode, ValueKind

Value = Decimal | str | bool

MAX_STR_LEN = 4096


class DataError(YadaError):
    """Base class for instance-data errors."""


class UnknownPathError(DataError):
    """A leaf path does not address anything under the schema."""


class TypeMismatchError(DataError):
    """A value does not fit the target leaf's type constraints."""


class SchemaMismatchError(DataError):
    """Two trees bound to different schemas were combined."""


class KeyLeafMismatchError(DataError):
    """A write to a list-key leaf disagrees with its entry's key."""


class UpdateOutcome(Enum):
    APPLIED = "applied"
    DROPPED = "dropped"


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------


def format_decimal(d: Decimal) -> str:
    """Plain decimal rendering: no exponent, no trailing zeros."""
    s = format(d, "f")
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    if s in ("-0", ""):
        s = "0"
    return s


def render_value(value: Value) -> str:
    """Render a scalar as canonical JSON text."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Decimal):
        return format_decimal(value)
    return json.dumps(value, ensure_ascii=False)


def fraction_digits(d: Decimal) -> int:
    exp = d.normalize().as_tuple().exponent
    return max(0, -int(exp))


def check_value(value: Value, node: SchemaNode) -> None:
    """Raise TypeMismatchError unless value fits the leaf's registered type."""
    lt = node.value_type
    assert lt is not None
    if lt.kind is ValueKind.BOOL:
        if not isinstance(value, bool):
            raise TypeMismatchError(f"{node.name}: expected boolean, got {value!r}")
    elif lt.kind is ValueKind.NUM:
        if isinstance(value, bool) or not isinstance(value, Decimal):
            raise TypeMismatchError(f"{node.name}: expected number, got {value!r}")
        if not value.is_finite():
            raise TypeMismatchError(f"{node.name}: non-finite number")
        if fraction_digits(value) > lt.max_fraction_digits:
            raise TypeMismatchError(
                f"{node.name}: more than {lt.max_fraction_digits} fraction digits"
            )
    else:
        if not isinstance(value, str):
            raise TypeMismatchError(f"{node.name}: expected string, got {value!r}")
        if len(value) > MAX_STR_LEN:
            raise TypeMismatchError(f"{node.name}: string longer than {MAX_STR_LEN}")


def coerce_value(raw: object, node: SchemaNode) -> Value:
    """Convert a loosely typed scalar (e.g. from JSON) to the leaf's kind."""
    lt = node.value_type
    assert lt is not None
    if lt.kind is ValueKind.BOOL:
        if isinstance(raw, bool):
            return raw
    elif lt.kind is ValueKind.NUM:
        if isinstance(raw, Decimal):
            return raw
        if isinstance(raw, int) and not isinstance(raw, bool):
            return Decimal(raw)
        if isinstance(raw, str):
            try:
                return Decimal(raw)
            except InvalidOperation:
                pass
    else:
        if isinstance(raw, str):
            return raw
    raise TypeMismatchError(f"{node.name}: cannot read {raw!r} as {lt.name}")


# ---------------------------------------------------------------------------
# Leaf paths
# ---------------------------------------------------------------------------


def _render_key(key: Value) -> str:
    text = render_value(key) if not isinstance(key, str) else key
    if "'" in text:
        raise DataError(f"key value {text!r} cannot be rendered in a path")
    return f"[key='{text}']"


@dataclass(frozen=True, slots=True)
class PathSeg:
    """One step of a concrete leaf path; key set only on list segments."""

    name: str
    key: Value | None = None

    def __str__(self) -> str:
        if self.key is None:
            return self.name
        return self.name + _render_key(self.key)


@dataclass(frozen=True, slots=True)
class LeafPath:
    """Absolute address of one leaf (or leaf-list) instance."""

    segments: tuple[PathSeg, ...]

    def __str__(self) -> str:
        return "/" + "/".join(str(s) for s in self.segments)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.segments)

    def sort_key(self) -> str:
        return str(self)


def leaf_path(*segments: str | tuple[str, Value]) -> LeafPath:
    """Build a LeafPath from names and (name, key) pairs."""
    segs = []
    for s in segments:
        if isinstance(s, tuple):
            segs.append(PathSeg(s[0], s[1]))
        else:
            segs.append(PathSeg(s))
    return LeafPath(tuple(segs))


# ---------------------------------------------------------------------------
# Instance nodes
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class LeafInstance:
    value: Value
    last_updated_us: int = 0


@dataclass(slots=True)
class LeafListInstance:
    values: list[Value] = field(default_factory=list)
    last_updated_us: int = 0


@dataclass(slots=True)
class ListEntry:
    key: Value
    children: dict[str, object] = field(default_factory=dict)


@dataclass(slots=True)
class ListInstance:
    entries: list[ListEntry] = field(default_factory=list)

    def find(self, key: Value) -> ListEntry | None:
        for e in self.entries:
            if type(e.key) is type(key) and e.key == key:
                return e
        return None


@dataclass(slots=True)
class ContainerInstance:
    children: dict[str, object] = field(default_factory=dict)


@dataclass(slots=True)
class Violation:
    """One validation finding: a path-like locator, a code, and a message."""

    locator: str
    code: str
    message: str


class DataTree:
    """A mutable instance tree bound to one schema module.

    Mutation is single-writer; reads may share a tree freely once writes
    stop. All schema nodes are optional in instances, so an empty tree is
    valid.
    """

    def __init__(self, schema: SchemaModule):
        self.schema = schema
        self.roots: dict[str, ContainerInstance] = {}

    # -- updates ------------------------------------------------------------

    def apply_update(self, path: LeafPath, value: Value, ts_us: int) -> UpdateOutcome:
        """Write a leaf value with last-writer-wins semantics.

        Missing ancestors are created on demand; creating a list entry
        requires the path segment to carry a key. An update older than the
        leaf's current timestamp is dropped, not an error. Writes to a list
        key leaf must agree with the entry key.
        """
        schema_node, parent_map, leaf_seg, entry, list_node = self._descend(
            path, create=True
        )
        check_value(value, schema_node)
        if (
            entry is not None
            and list_node is not None
            and schema_node.kind is NodeKind.LEAF
            and leaf_seg.name == list_node.key_leaf
        ):
            if not (type(value) is type(entry.key) and value == entry.key):
                raise KeyLeafMismatchError(
                    f"{path}: key leaf must hold the entry key {entry.key!r}"
                )
        inst = parent_map.get(leaf_seg.name)
        if schema_node.kind is NodeKind.LEAF:
            if inst is None:
                parent_map[leaf_seg.name] = LeafInstance(value, ts_us)
                return UpdateOutcome.APPLIED
            assert isinstance(inst, LeafInstance)
            if ts_us < inst.last_updated_us:
                return UpdateOutcome.DROPPED
            inst.value = value
            inst.last_updated_us = ts_us
            return UpdateOutcome.APPLIED
        # Leaf-list: values append in update order.
        if inst is None:
            inst = LeafListInstance()
            parent_map[leaf_seg.name] = inst
        assert isinstance(inst, LeafListInstance)
        if ts_us < inst.last_updated_us:
            return UpdateOutcome.DROPPED
        inst.values.append(value)
        inst.last_updated_us = ts_us
        return UpdateOutcome.APPLIED

    def _descend(self, path: LeafPath, create: bool):
        """Walk to the leaf segment, optionally materializing ancestors.

        Returns (leaf schema node, parent child-map, leaf segment,
        enclosing ListEntry or None, enclosing list schema node or None).
        """
        if not path.segments:
            raise UnknownPathError("empty path")
        segs = path.segments
        node: SchemaNode | None = self.schema.root(segs[0].name)
        if node is None:
            raise UnknownPathError(f"{path}: no root {segs[0].name!r}")
        child_map: dict[str, object] = self.roots
        current_entry: ListEntry | None = None
        current_list: SchemaNode | None = None
        for i, seg in enumerate(segs):
            if i > 0:
                parent = node
                node = parent.child(seg.name)
                if node is None or parent.is_leafy:
                    raise UnknownPathError(f"{path}: no child {seg.name!r}")
            is_last = i == len(segs) - 1
            if node.is_leafy:
                if not is_last:
                    raise UnknownPathError(f"{path}: {seg.name!r} has no children")
                if seg.key is not None:
                    raise UnknownPathError(f"{path}: {seg.name!r} is not a list")
                return node, child_map, seg, current_entry, current_list
            if node.kind is NodeKind.CONTAINER:
                if seg.key is not None:
                    raise UnknownPathError(f"{path}: {seg.name!r} is not a list")
                if is_last:
                    raise UnknownPathError(f"{path}: ends on a container")
                inst = child_map.get(seg.name)
                if inst is None:
                    if not create:
                        raise UnknownPathError(f"{path}: {seg.name!r} not present")
                    inst = ContainerInstance()
                    child_map[seg.name] = inst
                assert isinstance(inst, ContainerInstance)
                child_map = inst.children
                current_entry = None
                current_list = None
            else:  # LIST
                if seg.key is None:
                    raise UnknownPathError(f"{path}: list {seg.name!r} needs a key")
                if is_last:
                    raise UnknownPathError(f"{path}: ends on a list")
                key_schema = node.child(node.key_leaf or "")
                assert key_schema is not None
                check_value(seg.key, key_schema)
                inst = child_map.get(seg.name)
                if inst is None:
                    if not create:
                        raise UnknownPathError(f"{path}: {seg.name!r} not present")
                    inst = ListInstance()
                    child_map[seg.name] = inst
                assert isinstance(inst, ListInstance)
                entry = inst.find(seg.key)
                if entry is None:
                    if not create:
                        raise UnknownPathError(f"{path}: no entry {seg.key!r}")
                    entry = ListEntry(key=seg.key)
                    # Entry keys double as the key leaf's value.
                    entry.children[node.key_leaf or ""] = LeafInstance(seg.key, 0)
                    insort(inst.entries, entry, key=_entry_sort_key)
                child_map = entry.children
                current_entry = entry
                current_list = node
        raise UnknownPathError(str(path))  # pragma: no cover

    # -- reads --------------------------------------------------------------

    def get_leaf(self, path: LeafPath):
        """Return (value, last_updated_us) or None if absent.

        Leaf-lists yield their value tuple.
        """
        try:
            node, child_map, seg, _, _ = self._descend(path, create=False)
        except UnknownPathError:
            return None
        inst = child_map.get(seg.name)
        if inst is None:
            return None
        if isinstance(inst, LeafInstance):
            return inst.value, inst.last_updated_us
        assert isinstance(inst, LeafListInstance)
        return tuple(inst.values), inst.last_updated_us

    def leaf_items(self):
        """Yield (LeafPath, value, last_updated_us) in schema declaration
        order, list entries in key order. Leaf-list values come as tuples."""

        def walk(node: SchemaNode, child_map: dict, prefix: tuple[PathSeg, ...]):
            for child in node.children:
                inst = child_map.get(child.name)
                if inst is None:
                    continue
                yield from emit(child, inst, prefix)

        def emit(node: SchemaNode, inst: object, prefix: tuple[PathSeg, ...]):
            if node.kind is NodeKind.LEAF:
                assert isinstance(inst, LeafInstance)
                yield (
                    LeafPath(prefix + (PathSeg(node.name),)),
                    inst.value,
                    inst.last_updated_us,
                )
            elif node.kind is NodeKind.LEAF_LIST:
                assert isinstance(inst, LeafListInstance)
                yield (
                    LeafPath(prefix + (PathSeg(node.name),)),
                    tuple(inst.values),
                    inst.last_updated_us,
                )
            elif node.kind is NodeKind.CONTAINER:
                assert isinstance(inst, ContainerInstance)
                yield from walk(node, inst.children, prefix + (PathSeg(node.name),))
            else:
                assert isinstance(inst, ListInstance)
                for entry in inst.entries:
                    yield from walk(
                        node,
                        entry.children,
                        prefix + (PathSeg(node.name, entry.key),),
                    )

        for root in self.schema.roots:
            inst = self.roots.get(root.name)
            if inst is not None:
                yield from emit(root, inst, ())

    def count_leaves(self) -> int:
        return sum(1 for _ in self.leaf_items())

    # -- validation ----------------------------------------------------------

    def validate(self) -> list[Violation]:
        """Check every instance invariant; an empty report means valid."""
        report: list[Violation] = []

        def check_leaf(node: SchemaNode, inst: object, locator: str):
            if node.kind is NodeKind.LEAF:
                if not isinstance(inst, LeafInstance):
                    report.append(Violation(locator, "KindMismatch", "not a leaf"))
                    return
                values = [inst.value]
            else:
                if not isinstance(inst, LeafListInstance):
                    report.append(
                        Violation(locator, "KindMismatch", "not a leaf-list")
                    )
                    return
                values = list(inst.values)
            for v in values:
                try:
                    check_value(v, node)
                except TypeMismatchError as exc:
                    report.append(Violation(locator, "TypeMismatch", str(exc)))

        def walk(node: SchemaNode, child_map: dict, locator: str):
            for name, inst in child_map.items():
                child = node.child(name)
                sub = f"{locator}/{name}"
                if child is None:
                    report.append(Violation(sub, "UnknownChild", "not in schema"))
                    continue
                dispatch(child, inst, sub)

        def dispatch(node: SchemaNode, inst: object, locator: str):
            if node.is_leafy:
                check_leaf(node, inst, locator)
                return
            if node.kind is NodeKind.CONTAINER:
                if not isinstance(inst, ContainerInstance):
                    report.append(
                        Violation(locator, "KindMismatch", "not a container")
                    )
                    return
                walk(node, inst.children, locator)
                return
            if not isinstance(inst, ListInstance):
                report.append(Violation(locator, "KindMismatch", "not a list"))
                return
            seen_keys: list[Value] = []
            for entry in inst.entries:
                ek = f"{locator}{_render_key(entry.key)}"
                if any(type(k) is type(entry.key) and k == entry.key for k in seen_keys):
                    report.append(
                        Violation(ek, "DuplicateListKey", "key value repeats")
                    )
                seen_keys.append(entry.key)
                key_inst = entry.children.get(node.key_leaf or "")
                if not isinstance(key_inst, LeafInstance) or not (
                    type(key_inst.value) is type(entry.key)
                    and key_inst.value == entry.key
                ):
                    report.append(
                        Violation(ek, "KeyLeafMismatch", "key leaf disagrees")
                    )
                walk(node, entry.children, ek)

        for name, inst in self.roots.items():
            root = self.schema.root(name)
            if root is None:
                report.append(Violation(f"/{name}", "UnknownChild", "not in schema"))
                continue
            dispatch(root, inst, f"/{name}")
        return report

    # -- diff ----------------------------------------------------------------

    def diff(self, other: DataTree) -> set[LeafPath]:
        """Leaf paths whose values differ or exist in only one tree."""
        if self.schema != other.schema:
            raise SchemaMismatchError("trees bound to different schemas")
        mine = {p: v for p, v, _ in self.leaf_items()}
        theirs = {p: v for p, v, _ in other.leaf_items()}
        out: set[LeafPath] = set()
        for p in mine.keys() | theirs.keys():
            if p not in mine or p not in theirs:
                out.add(p)
            else:
                a, b = mine[p], theirs[p]
                if type(a) is not type(b) or a != b:
                    out.add(p)
        return out

    # -- serialization ---------------------------------------------------------

    def serialize(self) -> bytes:
        """Canonical JSON bytes: schema-declaration key order, list entries
        by key value, numbers without trailing zeros, no whitespace."""
        out: list[str] = []
        self._emit_map(None, self.roots, out, top=True)
        return "".join(out).encode("utf-8")

    def _emit_map(
        self, node: SchemaNode | None, child_map: dict, out: list[str], top: bool = False
    ) -> None:
        out.append("{")
        first = True
        children = self.schema.roots if top else (node.children if node else ())
        for child in children:
            inst = child_map.get(child.name)
            if inst is None:
                continue
            if not first:
                out.append(",")
            first = False
            out.append(json.dumps(child.name, ensure_ascii=False))
            out.append(":")
            self._emit_node(child, inst, out)
        out.append("}")

    def _emit_node(self, node: SchemaNode, inst: object, out: list[str]) -> None:
        if node.kind is NodeKind.LEAF:
            assert isinstance(inst, LeafInstance)
            out.append(render_value(inst.value))
        elif node.kind is NodeKind.LEAF_LIST:
            assert isinstance(inst, LeafListInstance)
            out.append("[" + ",".join(render_value(v) for v in inst.values) + "]")
        elif node.kind is NodeKind.CONTAINER:
            assert isinstance(inst, ContainerInstance)
            self._emit_map(node, inst.children, out)
        else:
            assert isinstance(inst, ListInstance)
            out.append("[")
            for i, entry in enumerate(inst.entries):
                if i:
                    out.append(",")
                self._emit_map(node, entry.children, out)
            out.append("]")

    # -- loading ---------------------------------------------------------------

    @classmethod
    def load(cls, schema: SchemaModule, text: str | bytes) -> DataTree:
        """Parse canonical JSON instance text back into a tree (timestamps 0)."""
        if isinstance(text, bytes):
            text = text.decode("utf-8")
        try:
            raw = json.loads(text, parse_float=Decimal, parse_int=Decimal)
        except json.JSONDecodeError as exc:
            raise DataError(f"bad instance JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise DataError("instance document must be an object")
        tree = cls(schema)

        def build_map(node: SchemaNode | None, obj: dict, child_map: dict, loc: str):
            if not isinstance(obj, dict):
                raise DataError(f"{loc}: expected an object")
            children = schema.roots if node is None else node.children
            by_name = {c.name: c for c in children}
            for name, value in obj.items():
                child = by_name.get(name)
                if child is None:
                    raise UnknownPathError(f"{loc}/{name}: not in schema")
                child_map[name] = build_node(child, value, f"{loc}/{name}")

        def build_node(node: SchemaNode, value: object, loc: str):
            if node.kind is NodeKind.LEAF:
                v = coerce_value(value, node)
                check_value(v, node)
                return LeafInstance(v, 0)
            if node.kind is NodeKind.LEAF_LIST:
                if not isinstance(value, list):
                    raise DataError(f"{loc}: expected an array")
                inst = LeafListInstance()
                for item in value:
                    v = coerce_value(item, node)
                    check_value(v, node)
                    inst.values.append(v)
                return inst
            if node.kind is NodeKind.CONTAINER:
                inst = ContainerInstance()
                build_map(node, value, inst.children, loc)  # type: ignore[arg-type]
                return inst
            if not isinstance(value, list):
                raise DataError(f"{loc}: expected an array of entries")
            linst = ListInstance()
            key_schema = node.child(node.key_leaf or "")
            assert key_schema is not None
            for item in value:
                if not isinstance(item, dict):
                    raise DataError(f"{loc}: list entries must be objects")
                if node.key_leaf not in item:
                    raise DataError(f"{loc}: entry missing key leaf {node.key_leaf!r}")
                key = coerce_value(item[node.key_leaf], key_schema)
                if linst.find(key) is not None:
                    raise DataError(f"{loc}: duplicate entry key {key!r}")
                entry = ListEntry(key=key)
                build_map(node, item, entry.children, f"{loc}{_render_key(key)}")
                insort(linst.entries, entry, key=_entry_sort_key)
            return linst

        build_map(None, raw, tree.roots, "")
        return tree

    # -- equality ----------------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DataTree):
            return NotImplemented
        if self.schema != other.schema:
            return False
        return list(self.leaf_items()) == list(other.leaf_items()) and _shape(
            self
        ) == _shape(other)

    def __hash__(self):  # trees are mutable; identity hashing only
        return id(self)


def _entry_sort_key(entry: ListEntry):
    k = entry.key
    if isinstance(k, bool):
        return (0, int(k))
    if isinstance(k, Decimal):
        return (1, k)
    return (2, k)


def _shape(tree: DataTree):
    """Structural skeleton including empty containers, for equality."""

    def walk(node: SchemaNode, inst: object):
        if node.kind is NodeKind.CONTAINER:
            assert isinstance(inst, ContainerInstance)
            return (
                node.name,
                tuple(
                    walk(node.child(n), i)  # type: ignore[arg-type]
                    for n, i in sorted(inst.children.items())
                ),
            )
        if node.kind is NodeKind.LIST:
            assert isinstance(inst, ListInstance)
            return (
                node.name,
                tuple(
                    (
                        str(e.key),
                        tuple(
                            walk(node.child(n), i)  # type: ignore[arg-type]
                            for n, i in sorted(e.children.items())
                        ),
                    )
                    for e in inst.entries
                ),
            )
        return (node.name,)

    return tuple(
        (name, walk(tree.schema.root(name), inst))  # type: ignore[arg-type]
        for name, inst in sorted(tree.roots.items())
    )
