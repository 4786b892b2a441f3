"""YA-DA schema language: parsing, canonical printing, and name resolution.

A schema module is a tree of containers, lists, leaves, and leaf-lists.
The statement set is deliberately small: ``module``, ``container``,
``list``, ``key``, ``leaf``, ``leaf-list``, ``type``, ``description``.
Leaf types come from a closed built-in registry. Parsed modules are
immutable and safe to share across threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import YadaError


class SchemaError(YadaError):
    """Base class for schema parsing and lookup errors."""


class SchemaSyntaxError(SchemaError):
    """Malformed schema source, with the byte offset and what was expected."""

    def __init__(self, message: str, offset: int, expected: str | None = None):
        self.offset = offset
        self.expected = expected
        suffix = f" (expected {expected})" if expected else ""
        super().__init__(f"syntax error at offset {offset}: {message}{suffix}")


class DuplicateNameError(SchemaError):
    """Two siblings share a name; carries the colliding path."""

    def __init__(self, path: str):
        self.path = path
        super().__init__(f"duplicate name at {path}")


class UnknownTypeError(SchemaError):
    """A leaf names a type that is not in the registry."""

    def __init__(self, type_name: str, offset: int):
        self.type_name = type_name
        self.offset = offset
        super().__init__(f"unknown type {type_name!r} at offset {offset}")


class BadKeyError(SchemaError):
    """A list's key does not name one of its direct leaf children."""

    def __init__(self, path: str, key: str):
        self.path = path
        self.key = key
        super().__init__(f"bad key {key!r}: names no direct leaf child of {path}")


class NotFoundError(SchemaError):
    """A name path did not resolve; carries the first missing segment index."""

    def __init__(self, segments: tuple[str, ...], index: int):
        self.segments = segments
        self.index = index
        super().__init__(
            f"no schema node {segments[index]!r} at segment {index} of /"
            + "/".join(segments)
        )


class ValueKind(Enum):
    """Scalar kind a leaf type accepts."""

    NUM = "num"
    STR = "str"
    BOOL = "bool"


@dataclass(frozen=True, slots=True)
class LeafType:
    """A registry entry: scalar kind plus numeric and unit metadata."""

    name: str
    kind: ValueKind
    max_fraction_digits: int = 6
    unit: str | None = None


# Closed registry; leaf `type` statements must name one of these.
TYPE_REGISTRY: dict[str, LeafType] = {
    "air-sensor": LeafType("air-sensor", ValueKind.NUM, 6, unit="sensor-defined"),
    "decimal": LeafType("decimal", ValueKind.NUM, 6),
    "string": LeafType("string", ValueKind.STR),
    "boolean": LeafType("boolean", ValueKind.BOOL),
}


class NodeKind(Enum):
    CONTAINER = "container"
    LIST = "list"
    LEAF = "leaf"
    LEAF_LIST = "leaf-list"


@dataclass(frozen=True, slots=True)
class SchemaNode:
    """One schema tree node. Children only on containers and lists."""

    kind: NodeKind
    name: str
    description: str | None = None
    children: tuple[SchemaNode, ...] = ()
    key_leaf: str | None = None
    value_type: LeafType | None = None
    src_offset: int = field(default=0, compare=False)

    def child(self, name: str) -> SchemaNode | None:
        for c in self.children:
            if c.name == name:
                return c
        return None

    @property
    def is_leafy(self) -> bool:
        return self.kind in (NodeKind.LEAF, NodeKind.LEAF_LIST)


@dataclass(frozen=True, slots=True)
class SchemaModule:
    """An immutable compiled module: a name and its top-level containers."""

    name: str
    roots: tuple[SchemaNode, ...] = ()

    def root(self, name: str) -> SchemaNode | None:
        for r in self.roots:
            if r.name == name:
                return r
        return None

    def iter_leaf_paths(self):
        """Yield every leaf/leaf-list name path in declaration order."""

        def walk(node: SchemaNode, prefix: tuple[str, ...]):
            path = prefix + (node.name,)
            if node.is_leafy:
                yield path
            else:
                for c in node.children:
                    yield from walk(c, path)

        for r in self.roots:
            yield from walk(r, ())


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9._-]*")

KEYWORDS = frozenset(
    {"module", "container", "list", "key", "leaf", "leaf-list", "type", "description"}
)


@dataclass(frozen=True, slots=True)
class _Token:
    kind: str  # IDENT, STRING, LBRACE, RBRACE, SEMI, EOF
    text: str
    offset: int


def _lex(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch.isspace():
            i += 1
            continue
        if ch == "{":
            tokens.append(_Token("LBRACE", "{", i))
            i += 1
        elif ch == "}":
            tokens.append(_Token("RBRACE", "}", i))
            i += 1
        elif ch == ";":
            tokens.append(_Token("SEMI", ";", i))
            i += 1
        elif ch == '"':
            start = i
            i += 1
            parts: list[str] = []
            while i < n and source[i] != '"':
                if source[i] == "\\":
                    if i + 1 >= n:
                        raise SchemaSyntaxError("unterminated escape", i)
                    esc = source[i + 1]
                    if esc not in ('"', "\\"):
                        raise SchemaSyntaxError(f"bad escape \\{esc}", i)
                    parts.append(esc)
                    i += 2
                else:
                    parts.append(source[i])
                    i += 1
            if i >= n:
                raise SchemaSyntaxError("unterminated string", start, expected='"')
            i += 1
            tokens.append(_Token("STRING", "".join(parts), start))
        else:
            m = _IDENT_RE.match(source, i)
            if not m:
                raise SchemaSyntaxError(f"unexpected character {ch!r}", i)
            tokens.append(_Token("IDENT", m.group(0), i))
            i = m.end()
    tokens.append(_Token("EOF", "", n))
    return tokens


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if self.pos < len(self.tokens) - 1:
            self.pos += 1
        return tok

    def expect(self, kind: str, what: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise SchemaSyntaxError(
                f"got {tok.text or tok.kind!r}", tok.offset, expected=what
            )
        return self.advance()

    def expect_keyword(self, word: str) -> _Token:
        tok = self.peek()
        if tok.kind != "IDENT" or tok.text != word:
            raise SchemaSyntaxError(
                f"got {tok.text or tok.kind!r}", tok.offset, expected=f"'{word}'"
            )
        return self.advance()

    def parse_module(self) -> SchemaModule:
        self.expect_keyword("module")
        name = self.expect("IDENT", "module name").text
        self.expect("LBRACE", "'{'")
        roots: list[SchemaNode] = []
        seen: set[str] = set()
        while self.peek().kind != "RBRACE":
            tok = self.peek()
            if tok.kind == "IDENT" and tok.text == "container":
                node = self.parse_node(name)
                if node.name in seen:
                    raise DuplicateNameError(f"{name}/{node.name}")
                seen.add(node.name)
                roots.append(node)
            else:
                raise SchemaSyntaxError(
                    f"got {tok.text or tok.kind!r}",
                    tok.offset,
                    expected="'container' or '}'",
                )
        self.expect("RBRACE", "'}'")
        self.expect("EOF", "end of input")
        return SchemaModule(name=name, roots=tuple(roots))

    def parse_node(self, parent_path: str) -> SchemaNode:
        tok = self.peek()
        if tok.kind != "IDENT" or tok.text not in (
            "container",
            "list",
            "leaf",
            "leaf-list",
        ):
            raise SchemaSyntaxError(
                f"got {tok.text or tok.kind!r}",
                tok.offset,
                expected="'container', 'list', 'leaf', or 'leaf-list'",
            )
        keyword = self.advance().text
        name = self.expect("IDENT", f"{keyword} name").text
        if name in KEYWORDS:
            raise SchemaSyntaxError(
                f"keyword {name!r} cannot be used as a name", tok.offset
            )
        path = f"{parent_path}/{name}"
        self.expect("LBRACE", "'{'")
        if keyword in ("leaf", "leaf-list"):
            node = self.parse_leaf_body(keyword, name, path, tok.offset)
        else:
            node = self.parse_branch_body(keyword, name, path, tok.offset)
        self.expect("RBRACE", "'}'")
        return node

    def parse_leaf_body(
        self, keyword: str, name: str, path: str, offset: int
    ) -> SchemaNode:
        description: str | None = None
        value_type: LeafType | None = None
        while self.peek().kind != "RBRACE":
            tok = self.peek()
            if tok.kind != "IDENT":
                raise SchemaSyntaxError(
                    f"got {tok.text or tok.kind!r}",
                    tok.offset,
                    expected="'type' or 'description'",
                )
            if tok.text == "type":
                if value_type is not None:
                    raise SchemaSyntaxError("duplicate type statement", tok.offset)
                self.advance()
                type_tok = self.expect("IDENT", "type name")
                if type_tok.text not in TYPE_REGISTRY:
                    raise UnknownTypeError(type_tok.text, type_tok.offset)
                value_type = TYPE_REGISTRY[type_tok.text]
                self.expect("SEMI", "';'")
            elif tok.text == "description":
                if description is not None:
                    raise SchemaSyntaxError(
                        "duplicate description statement", tok.offset
                    )
                self.advance()
                description = self.expect("STRING", "quoted description").text
                self.expect("SEMI", "';'")
            else:
                raise SchemaSyntaxError(
                    f"got {tok.text!r}", tok.offset, expected="'type' or 'description'"
                )
        if value_type is None:
            raise SchemaSyntaxError(
                f"{keyword} {name!r} has no type statement",
                self.peek().offset,
                expected="'type'",
            )
        kind = NodeKind.LEAF if keyword == "leaf" else NodeKind.LEAF_LIST
        return SchemaNode(
            kind=kind,
            name=name,
            description=description,
            value_type=value_type,
            src_offset=offset,
        )

    def parse_branch_body(
        self, keyword: str, name: str, path: str, offset: int
    ) -> SchemaNode:
        description: str | None = None
        key_leaf: str | None = None
        key_offset = 0
        children: list[SchemaNode] = []
        seen: set[str] = set()
        while self.peek().kind != "RBRACE":
            tok = self.peek()
            if tok.kind != "IDENT":
                raise SchemaSyntaxError(
                    f"got {tok.text or tok.kind!r}", tok.offset, expected="a statement"
                )
            if tok.text == "description":
                if description is not None:
                    raise SchemaSyntaxError(
                        "duplicate description statement", tok.offset
                    )
                self.advance()
                description = self.expect("STRING", "quoted description").text
                self.expect("SEMI", "';'")
            elif tok.text == "key":
                if keyword != "list":
                    raise SchemaSyntaxError(
                        "key statement outside a list", tok.offset
                    )
                if key_leaf is not None:
                    raise SchemaSyntaxError("duplicate key statement", tok.offset)
                self.advance()
                key_tok = self.expect("STRING", "quoted key leaf name")
                if not _IDENT_RE.fullmatch(key_tok.text):
                    raise SchemaSyntaxError(
                        f"key {key_tok.text!r} is not an identifier", key_tok.offset
                    )
                key_leaf = key_tok.text
                key_offset = key_tok.offset
                self.expect("SEMI", "';'")
            elif tok.text in ("container", "list", "leaf", "leaf-list"):
                child = self.parse_node(path)
                if child.name in seen:
                    raise DuplicateNameError(f"{path}/{child.name}")
                seen.add(child.name)
                children.append(child)
            else:
                raise SchemaSyntaxError(
                    f"got {tok.text!r}", tok.offset, expected="a statement"
                )
        if keyword == "list":
            if key_leaf is None:
                raise SchemaSyntaxError(
                    f"list {name!r} has no key statement",
                    self.peek().offset,
                    expected="'key'",
                )
            key_child = next((c for c in children if c.name == key_leaf), None)
            if key_child is None or key_child.kind is not NodeKind.LEAF:
                raise BadKeyError(path, key_leaf)
            kind = NodeKind.LIST
        else:
            kind = NodeKind.CONTAINER
        return SchemaNode(
            kind=kind,
            name=name,
            description=description,
            children=tuple(children),
            key_leaf=key_leaf,
            src_offset=offset,
        )


def parse_schema(text: str) -> SchemaModule:
    """Parse schema source into a SchemaModule.

    Raises SchemaSyntaxError, DuplicateNameError, UnknownTypeError, or
    BadKeyError; all carry enough position or path detail to locate the
    problem in the source.
    """
    return _Parser(_lex(text)).parse_module()


# ---------------------------------------------------------------------------
# Canonical printer
# ---------------------------------------------------------------------------


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _print_node(node: SchemaNode, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    out.append(f"{pad}{node.kind.value} {node.name} {{")
    if node.description is not None:
        out.append(f"{pad}  description {_quote(node.description)};")
    if node.kind is NodeKind.LIST:
        out.append(f"{pad}  key {_quote(node.key_leaf or '')};")
    if node.is_leafy:
        assert node.value_type is not None
        out.append(f"{pad}  type {node.value_type.name};")
    for child in node.children:
        _print_node(child, indent + 1, out)
    out.append(f"{pad}}}")


def print_schema(module: SchemaModule) -> str:
    """Render the canonical form: 2-space indent, one statement per line,
    declaration order preserved. Re-parsing the output yields an equal module.
    """
    out: list[str] = [f"module {module.name} {{"]
    for root in module.roots:
        _print_node(root, 1, out)
    out.append("}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Resolution
# ---------------------------------------------------------------------------


def resolve(module: SchemaModule, segments: list[str] | tuple[str, ...]) -> SchemaNode:
    """Return the schema node at a name path, descending by child name.

    Raises NotFoundError naming the first segment that fails to resolve.
    """
    if not segments:
        raise ValueError("segments must be non-empty")
    segs = tuple(segments)
    node = module.root(segs[0])
    if node is None:
        raise NotFoundError(segs, 0)
    for i, name in enumerate(segs[1:], start=1):
        if node.is_leafy:
            raise NotFoundError(segs, i)
        nxt = node.child(name)
        if nxt is None:
            raise NotFoundError(segs, i)
        node = nxt
    return node
