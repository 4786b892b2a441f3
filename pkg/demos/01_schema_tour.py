"""A tour of the YA-DA schema language.

Parses the shipped air-quality module, walks its structure, shows the
canonical printer, and demonstrates the parser's error reporting.
"""

from pathlib import Path

from yada import parse_schema, print_schema, resolve
from yada.schema import BadKeyError, SchemaSyntaxError

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"

source = (FIXTURES / "air-quality.yada").read_text(encoding="utf-8")
module = parse_schema(source)

print(f"module {module.name!r} with {len(module.roots)} top-level containers:")
for root in module.roots:
    print(f"  {root.name}: {root.description}")

print()
print("every leaf path (declaration order):")
for names in module.iter_leaf_paths():
    print("  /" + "/".join(names))

# The printer emits a canonical form; re-parsing it gives back an equal tree,
# and the shipped fixture is already canonical, so this is byte-stable.
assert parse_schema(print_schema(module)) == module
assert print_schema(module) == source
print()
print("canonical print round-trips exactly.")

# Structured errors carry positions and paths.
print()
try:
    parse_schema("module m { container c { leaf x {type decimal} } }")
except SchemaSyntaxError as exc:
    print(f"missing semicolon -> {exc}")

try:
    parse_schema(
        'module m { container c { list l { key "missing"; '
        "leaf present {type air-sensor;} } } }"
    )
except BadKeyError as exc:
    print(f"bad list key      -> {exc}")

node = resolve(module, ["AirParticleURI", "value", "pm10-data"])
print()
print(f"resolve(/AirParticleURI/value/pm10-data) -> {node.kind.value} "
      f"of type {node.value_type.name}")
