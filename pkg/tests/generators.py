"""Seeded random generators for schemas, instances, and path expressions.

Everything is driven by an explicit random.Random so each test case is
reproducible from its seed.
"""

from __future__ import annotations

import random
from decimal import Decimal

from yada.datatree import DataTree, LeafPath, PathSeg
from yada.paths import PathExpr, Segment
from yada.schema import (
    TYPE_REGISTRY,
    LeafType,
    NodeKind,
    SchemaModule,
    SchemaNode,
    ValueKind,
)

_WORDS = ["flow", "rate", "cell", "gauge", "duct", "probe", "unit", "bank"]


def _name(rng: random.Random, counter: list[int]) -> str:
    counter[0] += 1
    word = rng.choice(_WORDS)
    decor = rng.choice(["", "-x", "_v", ".2"])
    return f"{word}{decor}{counter[0]}"


def _leaf_type(rng: random.Random) -> LeafType:
    return TYPE_REGISTRY[rng.choice(list(TYPE_REGISTRY))]


def _description(rng: random.Random) -> str | None:
    if rng.random() < 0.6:
        return None
    base = " ".join(rng.choices(_WORDS, k=rng.randrange(1, 4)))
    if rng.random() < 0.2:
        base += ' with "quotes" and \\slash'
    return base


def gen_schema(rng: random.Random, max_depth: int = 4, max_nodes: int = 40) -> SchemaModule:
    """A random valid module: containers at the top, nodes within budget."""
    counter = [0]
    budget = [rng.randrange(4, max_nodes)]

    def gen_node(depth: int, force_leaf: bool) -> SchemaNode:
        budget[0] -= 1
        if force_leaf or depth >= max_depth or budget[0] <= 0:
            kind = rng.choice([NodeKind.LEAF, NodeKind.LEAF, NodeKind.LEAF_LIST])
        else:
            kind = rng.choice(
                [
                    NodeKind.CONTAINER,
                    NodeKind.CONTAINER,
                    NodeKind.LIST,
                    NodeKind.LEAF,
                    NodeKind.LEAF,
                    NodeKind.LEAF_LIST,
                ]
            )
        name = _name(rng, counter)
        if kind in (NodeKind.LEAF, NodeKind.LEAF_LIST):
            return SchemaNode(
                kind=kind,
                name=name,
                description=_description(rng),
                value_type=_leaf_type(rng),
            )
        children: list[SchemaNode] = []
        if kind is NodeKind.LIST:
            key_child = SchemaNode(
                kind=NodeKind.LEAF,
                name=_name(rng, counter),
                value_type=_leaf_type(rng),
            )
            budget[0] -= 1
            children.append(key_child)
        for _ in range(rng.randrange(0, 4)):
            if budget[0] <= 0:
                break
            children.append(gen_node(depth + 1, force_leaf=budget[0] < 2))
        return SchemaNode(
            kind=kind,
            name=name,
            description=_description(rng),
            children=tuple(children),
            key_leaf=children[0].name if kind is NodeKind.LIST else None,
        )

    roots: list[SchemaNode] = []
    for _ in range(rng.randrange(1, 4)):
        if budget[0] <= 0:
            break
        name = _name(rng, counter)
        children = []
        for _ in range(rng.randrange(0, 4)):
            if budget[0] <= 0:
                break
            children.append(gen_node(1, force_leaf=False))
        roots.append(
            SchemaNode(
                kind=NodeKind.CONTAINER,
                name=name,
                description=_description(rng),
                children=tuple(children),
            )
        )
    if not roots:
        roots = [SchemaNode(kind=NodeKind.CONTAINER, name="solo0")]
    return SchemaModule(name=f"mod{rng.randrange(1000)}", roots=tuple(roots))


def gen_value(rng: random.Random, kind: ValueKind):
    if kind is ValueKind.NUM:
        return Decimal(rng.randrange(-999999, 999999)).scaleb(-rng.randrange(0, 7))
    if kind is ValueKind.BOOL:
        return rng.random() < 0.5
    return "".join(rng.choices("abcdefg", k=rng.randrange(1, 6)))


def gen_key(rng: random.Random, kind: ValueKind):
    if kind is ValueKind.NUM:
        return Decimal(rng.randrange(0, 500)).scaleb(-rng.randrange(0, 2))
    if kind is ValueKind.BOOL:
        return rng.random() < 0.5
    return "".join(rng.choices("hijkl", k=rng.randrange(1, 5)))


def concrete_leaf_paths(rng: random.Random, module: SchemaModule) -> list[LeafPath]:
    """Concrete addresses covering the schema: random keys for list entries."""
    out: list[LeafPath] = []

    def walk(node: SchemaNode, prefix: tuple[PathSeg, ...]):
        if node.is_leafy:
            out.append(LeafPath(prefix + (PathSeg(node.name),)))
            return
        if node.kind is NodeKind.LIST:
            key_child = node.child(node.key_leaf or "")
            assert key_child is not None and key_child.value_type is not None
            keys = set()
            for _ in range(rng.randrange(0, 3)):
                keys.add(gen_key(rng, key_child.value_type.kind))
            for key in keys:
                for child in node.children:
                    walk(child, prefix + (PathSeg(node.name, key),))
        else:
            for child in node.children:
                walk(child, prefix + (PathSeg(node.name),))

    for root in module.roots:
        walk(root, ())
    return out


def _resolve_schema(module: SchemaModule, path: LeafPath) -> SchemaNode:
    node = module.root(path.segments[0].name)
    assert node is not None
    for seg in path.segments[1:]:
        node = node.child(seg.name)
        assert node is not None
    return node


def is_key_leaf_path(module: SchemaModule, path: LeafPath) -> bool:
    node = module.root(path.segments[0].name)
    assert node is not None
    for seg in path.segments[1:]:
        parent = node
        node = parent.child(seg.name)
        assert node is not None
        if parent.kind is NodeKind.LIST and parent.key_leaf == seg.name:
            return True
    return False


def gen_instance(
    rng: random.Random, module: SchemaModule, fill: float = 0.8
) -> DataTree:
    """Random instance: a subset of concrete leaves with random values."""
    tree = DataTree(module)
    for path in concrete_leaf_paths(rng, module):
        if rng.random() > fill:
            continue
        if is_key_leaf_path(module, path):
            continue  # key leaves materialize with their entries
        node = _resolve_schema(module, path)
        assert node.value_type is not None
        value = gen_value(rng, node.value_type.kind)
        tree.apply_update(path, value, rng.randrange(0, 10_000))
    return tree


def gen_expr(rng: random.Random, module: SchemaModule, tree: DataTree | None = None) -> PathExpr:
    """A bindable random expression, wildcards and key predicates included."""
    segments: list[Segment] = []
    node: SchemaNode | None = None
    used_wildcard = False
    while True:
        if node is None:
            candidates = list(module.roots)
        elif node.is_leafy or not node.children:
            break
        else:
            candidates = list(node.children)
        node = rng.choice(candidates)
        wildcard = rng.random() < 0.2
        used_wildcard = used_wildcard or wildcard
        literal: str | None = None
        if node.kind is NodeKind.LIST and not wildcard and not used_wildcard:
            if rng.random() < 0.5:
                literal = _key_literal(rng, node, tree, segments)
        segments.append(Segment("*" if wildcard else node.name, literal))
        if node.is_leafy or (segments and rng.random() < 0.25):
            break
    if not segments:
        segments.append(Segment(module.roots[0].name))
    return PathExpr(tuple(segments))


def _key_literal(
    rng: random.Random,
    node: SchemaNode,
    tree: DataTree | None,
    prefix_segments: list,
) -> str:
    from yada.datatree import format_decimal

    # Prefer keys that exist in the tree so matches actually happen.
    if tree is not None and rng.random() < 0.6:
        existing = []
        for leaf, _v, _ts in tree.leaf_items():
            for seg in leaf.segments:
                if seg.name == node.name and seg.key is not None:
                    existing.append(seg.key)
        if existing:
            key = rng.choice(existing)
            if isinstance(key, bool):
                return "true" if key else "false"
            if isinstance(key, Decimal):
                return format_decimal(key)
            return str(key)
    key_child = node.child(node.key_leaf or "")
    assert key_child is not None and key_child.value_type is not None
    key = gen_key(rng, key_child.value_type.kind)
    if isinstance(key, bool):
        return "true" if key else "false"
    if isinstance(key, Decimal):
        return format_decimal(key)
    return str(key)
