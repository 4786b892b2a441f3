"""Instance trees, last-writer-wins updates, and path-filtered projection.

Builds a populated sensor instance, shows how stale updates are dropped,
then compares the serialized size of the full tree against the default
air-quality KPI projection: the payload the monitor would actually pull.
"""

from decimal import Decimal
from pathlib import Path

from yada import (
    DataTree,
    evaluate_selection,
    kpi_airquality,
    parse_leaf_path,
    parse_schema,
    project,
)

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"
schema = parse_schema((FIXTURES / "air-quality.yada").read_text(encoding="utf-8"))

tree = DataTree(schema)
readings = {
    "/AirParticleURI/value[key='12.5']/pm1-data": "4.1",
    "/AirParticleURI/value[key='12.5']/pm10-data": "21.3",
    "/AirTemperatureURI/value": "21.4",
    "/AirHumidityURI/value": "48.2",
    "/AirGasesURI/value/carbon-monoxide-data": "0.43",
    "/AirGasesURI/value/nitric-oxide": "0.021",
    "/AirGasesURI/value/nitrogen-dioxide": "0.018",
    "/AirGasesURI/value/sulphur-dioxide": "0.007",
    "/AirGasesURI/value/ethanol": "0.12",
    "/AirGasesURI/value/hydrogen": "0.55",
    "/AirGasesURI/value/ammonia": "0.03",
    "/AirGasesURI/value/methane": "1.9",
    "/AirGasesURI/value/ozone": "0.031",
}
for ts, (text, value) in enumerate(readings.items()):
    tree.apply_update(parse_leaf_path(schema, text), Decimal(value), ts_us=ts * 1000)

print(f"populated {tree.count_leaves()} leaves; validation: {tree.validate() or 'clean'}")

# Updates are last-writer-wins on the timestamp: an older reading is dropped.
temp = parse_leaf_path(schema, "/AirTemperatureURI/value")
outcome = tree.apply_update(temp, Decimal("5"), ts_us=0)
print(f"stale write outcome: {outcome.value}; value still {tree.get_leaf(temp)[0]}")

kpi = kpi_airquality()
selected = evaluate_selection(tree, kpi)
print()
print(f"KPI '{kpi.name}' selects {len(selected)} of {tree.count_leaves()} leaves:")
for path in sorted(selected, key=str):
    print(f"  {path}")

full = tree.serialize()
pruned = project(tree, kpi).serialize()
print()
print(f"full tree          : {len(full)} bytes")
print(f"KPI projection     : {len(pruned)} bytes")
print(f"payload reduction  : {1 - len(pruned) / len(full):.1%}")
print()
print("projection JSON:")
print(pruned.decode())
