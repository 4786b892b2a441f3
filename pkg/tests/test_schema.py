from __future__ import annotations

import random
from pathlib import Path

import pytest

from yada.schema import (
    BadKeyError,
    DuplicateNameError,
    NodeKind,
    NotFoundError,
    SchemaSyntaxError,
    UnknownTypeError,
    parse_schema,
    print_schema,
    resolve,
)

from generators import gen_schema

FIXTURE = Path(__file__).resolve().parents[1] / "fixtures" / "air-quality.yada"


@pytest.fixture(scope="module")
def air_quality():
    return parse_schema(FIXTURE.read_text(encoding="utf-8"))


def test_fixture_structure(air_quality):
    m = air_quality
    assert m.name == "air-quality"
    assert [r.name for r in m.roots] == [
        "AirParticleURI",
        "AirTemperatureURI",
        "AirHumidityURI",
        "AirGasesURI",
    ]
    particle = m.root("AirParticleURI")
    value = particle.child("value")
    assert value.kind is NodeKind.LIST
    assert value.key_leaf == "pm2.5-data"
    assert [c.name for c in value.children] == ["pm1-data", "pm2.5-data", "pm10-data"]
    gases = m.root("AirGasesURI").child("value")
    assert gases.kind is NodeKind.CONTAINER
    assert len(gases.children) == 9
    assert all(c.value_type.name == "air-sensor" for c in gases.children)
    assert len(list(m.iter_leaf_paths())) == 14


def test_empty_module():
    m = parse_schema("module m { }")
    assert m.name == "m"
    assert m.roots == ()
    assert print_schema(m) == "module m {\n}\n"


def test_bad_key_names_list_path():
    text = (
        "module m { container c { list l { key \"missing\"; "
        "leaf present {type air-sensor;} } } }"
    )
    with pytest.raises(BadKeyError) as exc:
        parse_schema(text)
    assert exc.value.path == "m/c/l"
    assert exc.value.key == "missing"


def test_duplicate_sibling_name():
    text = (
        "module m { container c { leaf x {type decimal;} "
        "leaf x {type decimal;} } }"
    )
    with pytest.raises(DuplicateNameError) as exc:
        parse_schema(text)
    assert exc.value.path == "m/c/x"


def test_unknown_type():
    with pytest.raises(UnknownTypeError) as exc:
        parse_schema("module m { container c { leaf x {type warp-core;} } }")
    assert exc.value.type_name == "warp-core"


def test_syntax_error_carries_offset_and_expected():
    text = "module m { container c "
    with pytest.raises(SchemaSyntaxError) as exc:
        parse_schema(text)
    assert exc.value.offset == len(text)
    assert exc.value.expected == "'{'"


def test_missing_semicolon_is_syntax_error():
    with pytest.raises(SchemaSyntaxError):
        parse_schema("module m { container c { leaf x {type decimal} } }")


def test_leaf_requires_type():
    with pytest.raises(SchemaSyntaxError) as exc:
        parse_schema("module m { container c { leaf x { } } }")
    assert "no type" in str(exc.value)


def test_top_level_must_be_container():
    with pytest.raises(SchemaSyntaxError):
        parse_schema("module m { leaf x {type decimal;} }")


def test_fixture_roundtrip_is_canonical(air_quality):
    printed = print_schema(air_quality)
    assert parse_schema(printed) == air_quality
    # The shipped fixture is stored in canonical form already.
    assert printed == FIXTURE.read_text(encoding="utf-8")


def test_description_escapes_roundtrip():
    text = 'module m { container c { description "say \\"hi\\" \\\\ there"; } }'
    m = parse_schema(text)
    assert m.roots[0].description == 'say "hi" \\ there'
    assert parse_schema(print_schema(m)) == m


def test_keyword_mutation_yields_syntax_error(air_quality):
    source = print_schema(air_quality)
    # Swap each statement keyword occurrence for an unknown word; the
    # parser must reject every mutant rather than mis-reading it.
    for keyword in ("container", "list", "leaf", "key", "type", "description"):
        mutated = source.replace(f"  {keyword} ", "  zzznot ", 1)
        if mutated == source:
            continue
        with pytest.raises((SchemaSyntaxError, UnknownTypeError)):
            parse_schema(mutated)


def test_resolve_examples(air_quality):
    leaf = resolve(air_quality, ["AirParticleURI", "value", "pm10-data"])
    assert leaf.kind is NodeKind.LEAF and leaf.name == "pm10-data"
    cont = resolve(air_quality, ["AirTemperatureURI"])
    assert cont.kind is NodeKind.CONTAINER
    with pytest.raises(NotFoundError) as exc:
        resolve(air_quality, ["NoSuch"])
    assert exc.value.index == 0


def test_resolve_matches_exhaustive_walk(air_quality):
    m = air_quality

    def walk(node, prefix):
        path = prefix + (node.name,)
        yield path
        for child in node.children:
            yield from walk(child, path)

    all_paths = set()
    for root in m.roots:
        all_paths.update(walk(root, ()))
    for path in all_paths:
        assert resolve(m, list(path)).name == path[-1]
    for bogus in [("AirParticleURI", "value", "zzz"), ("value",), ("AirGasesURI", "x")]:
        assert bogus not in all_paths
        with pytest.raises(NotFoundError):
            resolve(m, list(bogus))


def test_random_schema_roundtrips():
    for seed in range(40):
        rng = random.Random(f"schema-rt:{seed}")
        module = gen_schema(rng)
        assert parse_schema(print_schema(module)) == module
