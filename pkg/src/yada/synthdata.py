"""Seeded synthetic stand-ins for the external sensor datasets.

The real telemetry corpora are not redistributable, so the repository
ships small generated files with the same column shapes: six TON-IoT
style activity captures plus one eleven-feature air-quality station
export. Values are drawn from slow random walks so consecutive readings
look like real sensor traces. Generation is fully determined by the seed.
"""

from __future__ import annotations

import csv
import random
from decimal import Decimal
from pathlib import Path

# (file name, shape) per source; shapes list (column, generator kind, args).
# Column counts match the documented feature counts (6,6,6,7,6,6,11).


def _walk(rng: random.Random, lo: float, hi: float, step: float, n: int):
    x = rng.uniform(lo, hi)
    for _ in range(n):
        x = min(hi, max(lo, x + rng.uniform(-step, step)))
        yield x


def _timestamps(n: int, start: int = 1650000000, gap: int = 30):
    for i in range(n):
        t = start + i * gap
        yield t


def _date_time(ts: int) -> tuple[str, str]:
    # Fixed synthetic calendar; only the shape matters.
    day = ts // 86400
    rem = ts % 86400
    return (
        f"2022-{4 + day % 3:02d}-{1 + day % 28:02d}",
        f"{rem // 3600:02d}:{(rem % 3600) // 60:02d}:{rem % 60:02d}",
    )


def _label(rng: random.Random) -> tuple[str, str]:
    if rng.random() < 0.04:
        return "1", rng.choice(["scanning", "dos", "injection"])
    return "0", "normal"


def _write(path: Path, header: list[str], rows: list[list[str]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x: float, digits: int = 2) -> str:
    return format(Decimal(repr(x)).quantize(Decimal(10) ** -digits), "f")


def write_fridge(path: Path, rows: int, seed: int) -> None:
    rng = random.Random(f"synth:fridge:{seed}")
    temps = _walk(rng, 2.0, 9.5, 0.4, rows)
    out = []
    for ts, temp in zip(_timestamps(rows), temps):
        date, time = _date_time(ts)
        label, kind = _label(rng)
        cond = "high" if temp > 6.5 else "low"
        out.append([date, time, _fmt(temp), cond, label, kind])
    _write(path, ["date", "time", "fridge_temperature", "temp_condition", "label", "type"], out)


def write_garage_door(path: Path, rows: int, seed: int) -> None:
    rng = random.Random(f"synth:garage:{seed}")
    signals = _walk(rng, 20.0, 95.0, 6.0, rows)
    out = []
    for ts, sig in zip(_timestamps(rows), signals):
        date, time = _date_time(ts)
        label, kind = _label(rng)
        state = "open" if rng.random() < 0.3 else "closed"
        out.append([date, time, state, _fmt(sig, 1), label, kind])
    _write(path, ["date", "time", "door_state", "sphone_signal", "label", "type"], out)


def write_gps_tracker(path: Path, rows: int, seed: int) -> None:
    rng = random.Random(f"synth:gps:{seed}")
    lats = _walk(rng, 40.45, 41.05, 0.02, rows)
    lons = _walk(rng, -112.2, -111.6, 0.02, rows)
    out = []
    for ts, lat, lon in zip(_timestamps(rows), lats, lons):
        date, time = _date_time(ts)
        label, kind = _label(rng)
        out.append([date, time, _fmt(lat, 6), _fmt(lon, 6), label, kind])
    _write(path, ["date", "time", "latitude", "longitude", "label", "type"], out)


def write_modbus(path: Path, rows: int, seed: int) -> None:
    rng = random.Random(f"synth:modbus:{seed}")
    regs = _walk(rng, 900.0, 64000.0, 2500.0, rows)
    out = []
    for ts, reg in zip(_timestamps(rows), regs):
        date, time = _date_time(ts)
        label, _ = _label(rng)
        out.append(
            [
                date,
                time,
                str(int(reg)),
                str(rng.randrange(2)),
                str(rng.randrange(1024)),
                str(rng.randrange(2)),
                label,
            ]
        )
    _write(
        path,
        [
            "date",
            "time",
            "FC1_Read_Input_Register",
            "FC2_Read_Discrete_Value",
            "FC3_Read_Holding_Register",
            "FC4_Read_Coil",
            "label",
        ],
        out,
    )


def write_motion_light(path: Path, rows: int, seed: int) -> None:
    rng = random.Random(f"synth:motion:{seed}")
    out = []
    state = 0
    for ts in _timestamps(rows):
        date, time = _date_time(ts)
        label, kind = _label(rng)
        if rng.random() < 0.05:  # occupancy flips in runs, not per row
            state = 1 - state
        out.append([date, time, str(state), "on" if state else "off", label, kind])
    _write(path, ["date", "time", "motion_status", "light_status", "label", "type"], out)


def write_thermostat(path: Path, rows: int, seed: int) -> None:
    rng = random.Random(f"synth:thermostat:{seed}")
    temps = _walk(rng, 18.0, 28.0, 0.3, rows)
    out = []
    for ts, temp in zip(_timestamps(rows), temps):
        date, time = _date_time(ts)
        label, kind = _label(rng)
        out.append([date, time, _fmt(temp), str(rng.randrange(2)), label, kind])
    _write(
        path,
        ["date", "time", "current_temperature", "thermostat_status", "label", "type"],
        out,
    )


def write_air_station(path: Path, rows: int, seed: int) -> None:
    rng = random.Random(f"synth:airstation:{seed}")
    pm1 = _walk(rng, 1.0, 18.0, 0.8, rows)
    pm25_extra = _walk(rng, 1.0, 17.0, 1.0, rows)
    pm10_extra = _walk(rng, 2.0, 25.0, 1.5, rows)
    ozone = _walk(rng, 0.01, 0.09, 0.004, rows)
    no2 = _walk(rng, 0.005, 0.06, 0.003, rows)
    co = _walk(rng, 0.2, 2.5, 0.1, rows)
    temp = _walk(rng, 8.0, 33.0, 0.5, rows)
    hum = _walk(rng, 12.0, 80.0, 1.5, rows)
    pres = _walk(rng, 855.0, 875.0, 1.0, rows)
    out = []
    for i, ts in enumerate(_timestamps(rows)):
        base_pm = next(pm1)
        mid_pm = base_pm + next(pm25_extra)
        row = [
            f"slc-{1 + i % 9:02d}",
            str(ts),
            _fmt(base_pm),
            _fmt(mid_pm),
            _fmt(mid_pm + next(pm10_extra)),
            _fmt(next(ozone), 4),
            _fmt(next(no2), 4),
            _fmt(next(co), 3),
            _fmt(next(temp), 1),
            _fmt(next(hum), 1),
            _fmt(next(pres), 1),
        ]
        # A sparse sprinkling of unusable cells keeps the loader's
        # row-skip accounting honest on real-looking data.
        if rng.random() < 0.004:
            row[4] = ""
        out.append(row)
    _write(
        path,
        [
            "station_id",
            "timestamp",
            "pm1",
            "pm2_5",
            "pm10",
            "ozone",
            "no2",
            "co",
            "temperature",
            "humidity",
            "pressure",
        ],
        out,
    )


DEFAULT_ROWS = {
    "ton_iot_fridge.csv": (write_fridge, 1200),
    "ton_iot_garage_door.csv": (write_garage_door, 1000),
    "ton_iot_gps_tracker.csv": (write_gps_tracker, 2500),
    "ton_iot_modbus.csv": (write_modbus, 2300),
    "ton_iot_motion_light.csv": (write_motion_light, 1200),
    "ton_iot_thermostat.csv": (write_thermostat, 1200),
    "aqandu_station.csv": (write_air_station, 2400),
}


def write_default_sources(directory: str | Path, seed: int = 1812) -> list[Path]:
    """Write all seven source files into a directory; returns their paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, (fn, rows) in DEFAULT_ROWS.items():
        target = directory / name
        fn(target, rows, seed)
        written.append(target)
    return written
