"""Instance parsers and dataset converters.

Covers a practical subset of the TSPLIB text format (EUC_2D node
coordinates and explicit edge-weight matrices), capacitated-VRP files
and their reduction to balanced dynamic instances, and taxi-trip CSV
ingestion with the standard cleaning filters.
"""

from __future__ import annotations

import csv
import io as _stdio
import math
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterator, Sequence

import numpy as np

from .core import (
    EUCLID2D,
    EXPLICIT,
    HAVERSINE,
    BdmtspError,
    Fleet,
    ParseError,
    RoutingInstance,
)
from .geometry import GeoPoint, TripRecord, haversine

__all__ = [
    "RawCvrpInstance",
    "TaxiColumns",
    "TaxiFilters",
    "TaxiLoadResult",
    "parse_tsplib",
    "dump_tsplib",
    "parse_cvrplib",
    "cvrp_to_bdmtsp",
    "load_taxi_csv",
    "trips_to_instance",
]


# ------------------------------------------------------------- TSPLIB

_EXPLICIT_FORMATS = {
    "FULL_MATRIX",
    "LOWER_ROW",
    "UPPER_ROW",
    "LOWER_DIAG_ROW",
    "UPPER_DIAG_ROW",
}


def _split_header(text: str) -> tuple[dict[str, str], list[tuple[str, list[str]]]]:
    """Key/value header fields plus ordered (section, lines) blocks."""
    fields: dict[str, str] = {}
    sections: list[tuple[str, list[str]]] = []
    current: list[str] | None = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        upper = line.upper()
        if upper.endswith("_SECTION"):
            current = []
            sections.append((upper, current))
            continue
        if ":" in line and current is None:
            key, _, value = line.partition(":")
            fields[key.strip().upper()] = value.strip()
            continue
        if current is None:
            raise ParseError(f"unexpected line outside any section: {line!r}")
        current.append(line)
    return fields, sections


def _section(sections, name: str) -> list[str] | None:
    for sec, lines in sections:
        if sec == name:
            return lines
    return None


def _parse_coords(lines: Sequence[str], n: int) -> np.ndarray:
    coords = np.empty((n, 2))
    if len(lines) != n:
        raise ParseError(f"expected {n} coordinate rows, found {len(lines)}")
    for i, line in enumerate(lines):
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(f"bad coordinate row: {line!r}")
        try:
            coords[i] = (float(parts[1]), float(parts[2]))
        except ValueError as exc:
            raise ParseError(f"bad coordinate row: {line!r}") from None
    return coords


def _parse_explicit(lines: Sequence[str], n: int, layout: str) -> np.ndarray:
    values: list[float] = []
    for line in lines:
        for tok in line.split():
            try:
                values.append(float(tok))
            except ValueError:
                raise ParseError(f"bad matrix entry {tok!r}") from None
    expected = {
        "FULL_MATRIX": n * n,
        "LOWER_ROW": n * (n - 1) // 2,
        "UPPER_ROW": n * (n - 1) // 2,
        "LOWER_DIAG_ROW": n * (n + 1) // 2,
        "UPPER_DIAG_ROW": n * (n + 1) // 2,
    }[layout]
    if len(values) != expected:
        raise ParseError(
            f"{layout} needs {expected} entries for dimension {n}, got {len(values)}"
        )
    dist = np.zeros((n, n))
    it = iter(values)
    if layout == "FULL_MATRIX":
        for i in range(n):
            for j in range(n):
                dist[i, j] = next(it)
    elif layout == "LOWER_ROW":
        for i in range(1, n):
            for j in range(i):
                dist[i, j] = dist[j, i] = next(it)
    elif layout == "UPPER_ROW":
        for i in range(n - 1):
            for j in range(i + 1, n):
                dist[i, j] = dist[j, i] = next(it)
    elif layout == "LOWER_DIAG_ROW":
        for i in range(n):
            for j in range(i + 1):
                dist[i, j] = dist[j, i] = next(it)
    else:  # UPPER_DIAG_ROW
        for i in range(n):
            for j in range(i, n):
                dist[i, j] = dist[j, i] = next(it)
    return dist


def parse_tsplib(text: str) -> RoutingInstance:
    """Parse a TSPLIB-style instance.

    Supports EUC_2D coordinate instances and EXPLICIT matrices in full
    or triangular row layouts.  Node order in the file is preserved and
    later doubles as the reveal order.  Distances are kept real-valued.
    """
    fields, sections = _split_header(text)
    name = fields.get("NAME", "unnamed")
    try:
        n = int(fields["DIMENSION"])
    except KeyError:
        raise ParseError("missing DIMENSION") from None
    except ValueError:
        raise ParseError(f"bad DIMENSION {fields['DIMENSION']!r}") from None
    if n < 2:
        raise ParseError("dimension must be at least 2")
    ewt = fields.get("EDGE_WEIGHT_TYPE", "EUC_2D").upper()
    if ewt == "EUC_2D":
        lines = _section(sections, "NODE_COORD_SECTION")
        if lines is None:
            raise ParseError("EUC_2D instance lacks NODE_COORD_SECTION")
        coords = _parse_coords(lines, n)
        return RoutingInstance(name=name, metric=EUCLID2D, coords=coords)
    if ewt == "EXPLICIT":
        layout = fields.get("EDGE_WEIGHT_FORMAT", "FULL_MATRIX").upper()
        if layout not in _EXPLICIT_FORMATS:
            raise ParseError(f"unsupported EDGE_WEIGHT_FORMAT {layout!r}")
        lines = _section(sections, "EDGE_WEIGHT_SECTION")
        if lines is None:
            raise ParseError("EXPLICIT instance lacks EDGE_WEIGHT_SECTION")
        dist = _parse_explicit(lines, n, layout)
        try:
            return RoutingInstance(name=name, metric=EXPLICIT, dist=dist)
        except BdmtspError as exc:
            raise ParseError(str(exc)) from None
    raise ParseError(f"unsupported EDGE_WEIGHT_TYPE {ewt!r}")


def dump_tsplib(instance: RoutingInstance) -> str:
    """Serialize an instance back to TSPLIB text.

    Uses 17 significant digits so parse -> dump -> parse is exact.
    """
    out = [f"NAME : {instance.name}", "TYPE : TSP", f"DIMENSION : {instance.n}"]
    if instance.metric == EUCLID2D and instance.coords is not None:
        out.append("EDGE_WEIGHT_TYPE : EUC_2D")
        out.append("NODE_COORD_SECTION")
        for i, (x, y) in enumerate(instance.coords, start=1):
            out.append(f"{i} {x:.17g} {y:.17g}")
    else:
        out.append("EDGE_WEIGHT_TYPE : EXPLICIT")
        out.append("EDGE_WEIGHT_FORMAT : FULL_MATRIX")
        out.append("EDGE_WEIGHT_SECTION")
        for row in instance.full_matrix():
            out.append(" ".join(f"{v:.17g}" for v in row))
    out.append("EOF")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------- CVRP


@dataclass(frozen=True)
class RawCvrpInstance:
    """Capacitated-VRP instance before reduction: demands still attached."""

    name: str
    coords: np.ndarray
    demands: tuple[float, ...]
    capacity: float
    depot: int = 0

    def __post_init__(self) -> None:
        coords = np.asarray(self.coords, dtype=float)
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        if coords.ndim != 2 or coords.shape[1] != 2 or len(coords) < 2:
            raise BdmtspError("coords must be an (n, 2) array with n >= 2")
        if len(self.demands) != len(coords):
            raise BdmtspError("demands must align with coords")
        if any(q < 0 for q in self.demands):
            raise BdmtspError("demands must be nonnegative")
        if not self.capacity > 0:
            raise BdmtspError("vehicle capacity must be positive")
        if not 0 <= self.depot < len(coords):
            raise BdmtspError("depot index out of range")


def parse_cvrplib(text: str) -> RawCvrpInstance:
    """Parse a CVRPLIB file: coordinates, demands, capacity, depot."""
    fields, sections = _split_header(text)
    name = fields.get("NAME", "unnamed")
    try:
        n = int(fields["DIMENSION"])
        capacity = float(fields["CAPACITY"])
    except KeyError as exc:
        raise ParseError(f"missing {exc.args[0]}") from None
    except ValueError:
        raise ParseError("bad DIMENSION or CAPACITY value") from None
    coord_lines = _section(sections, "NODE_COORD_SECTION")
    if coord_lines is None:
        raise ParseError("missing NODE_COORD_SECTION")
    coords = _parse_coords(coord_lines, n)
    demand_lines = _section(sections, "DEMAND_SECTION")
    if demand_lines is None:
        raise ParseError("missing DEMAND_SECTION")
    if len(demand_lines) != n:
        raise ParseError(f"expected {n} demand rows, found {len(demand_lines)}")
    demands = [0.0] * n
    for line in demand_lines:
        parts = line.split()
        try:
            idx = int(parts[0]) - 1
            demands[idx] = float(parts[1])
        except (IndexError, ValueError):
            raise ParseError(f"bad demand row: {line!r}") from None
    depot = 0
    depot_lines = _section(sections, "DEPOT_SECTION")
    if depot_lines:
        try:
            first = int(depot_lines[0].split()[0])
        except (IndexError, ValueError):
            raise ParseError(f"bad depot row: {depot_lines[0]!r}") from None
        if first != -1:
            depot = first - 1
    try:
        return RawCvrpInstance(
            name=name, coords=coords, demands=tuple(demands), capacity=capacity, depot=depot
        )
    except BdmtspError as exc:
        raise ParseError(str(exc)) from None


def cvrp_to_bdmtsp(
    raw: RawCvrpInstance,
    mode: str,
    seed: int | None = None,
    *,
    m: int | None = None,
    limit: int | None = None,
) -> tuple[RoutingInstance, Fleet]:
    """Reduce a CVRP instance to a balanced dynamic one.

    ``xxl`` derives the fleet from total demand: m = floor(1.05 * sum(q)
    / q*), per-vehicle stop budget ceil(customers / m); customer order
    is kept as filed.  ``fisher`` takes the fleet size and stop limit
    from the scenario and permutes the customer order with ``seed``
    (None leaves it unchanged).  Demand becomes unitary in both modes.
    """
    customers = [i for i in range(len(raw.coords)) if i != raw.depot]
    n_customers = len(customers)
    if mode == "xxl":
        total = float(sum(raw.demands[i] for i in customers))
        fleet_m = int(math.floor(1.05 * total / raw.capacity))
        if fleet_m < 1:
            raise BdmtspError("demand too small: fleet size computes to zero")
        cap = -((-n_customers) // fleet_m)
    elif mode == "fisher":
        if m is None or limit is None:
            raise BdmtspError("fisher mode needs the scenario's m and limit")
        if m < 1 or limit < 1:
            raise BdmtspError("fleet size and stop limit must be positive")
        fleet_m = m
        cap = limit
        if seed is not None:
            rng = np.random.default_rng(seed)
            customers = [customers[i] for i in rng.permutation(n_customers)]
    else:
        raise BdmtspError(f"unknown reduction mode {mode!r}")
    order = [raw.depot] + customers
    coords = np.asarray(raw.coords, dtype=float)[order]
    instance = RoutingInstance(
        name=f"{raw.name}-{mode}", metric=EUCLID2D, coords=coords
    )
    return instance, Fleet(m=fleet_m, capacity=cap)


# --------------------------------------------------------------- taxi


@dataclass(frozen=True)
class TaxiColumns:
    """CSV column names plus their units (seconds and meters upstream)."""

    pickup_lat: str = "pickup_latitude"
    pickup_lon: str = "pickup_longitude"
    dropoff_lat: str = "dropoff_latitude"
    dropoff_lon: str = "dropoff_longitude"
    pickup_time: str = "pickup_datetime"
    duration_s: str = "trip_duration"
    dist_m: str = "dist_meters"
    wait_s: str = "wait_sec"

    def required(self) -> tuple[str, ...]:
        return (
            self.pickup_lat,
            self.pickup_lon,
            self.dropoff_lat,
            self.dropoff_lon,
            self.pickup_time,
            self.duration_s,
            self.dist_m,
            self.wait_s,
        )


@dataclass(frozen=True)
class TaxiFilters:
    """Row-cleaning thresholds; defaults match the standard study cuts."""

    max_wait_min: float = 90.0
    max_duration_min: float = 180.0
    max_distance_km: float = 100.0
    min_pickup_lat: float = 19.0
    max_pickup_lat: float = 20.0
    max_pickup_lon: float = -98.0

    def keeps(self, trip: TripRecord) -> bool:
        return (
            trip.wait_min <= self.max_wait_min
            and trip.duration_min <= self.max_duration_min
            and trip.recorded_km <= self.max_distance_km
            and self.min_pickup_lat <= trip.pickup.lat <= self.max_pickup_lat
            and trip.pickup.lon < self.max_pickup_lon
        )


@dataclass(frozen=True)
class TaxiLoadResult:
    """Kept trips plus ingestion counts; iterates like a trip sequence."""

    trips: tuple[TripRecord, ...]
    total_rows: int
    kept: int
    dropped: int
    malformed: int

    def __iter__(self) -> Iterator[TripRecord]:
        return iter(self.trips)

    def __len__(self) -> int:
        return len(self.trips)

    def __getitem__(self, idx):
        return self.trips[idx]


def load_taxi_csv(
    text: str,
    filters: TaxiFilters | None = None,
    columns: TaxiColumns | None = None,
) -> TaxiLoadResult:
    """Read trip rows, drop filtered ones, and sort by pickup time.

    Malformed rows are skipped and counted; a missing column is a hard
    error.  The returned order (timestamp, then original row order) is
    the reveal order for dynamic scenarios.
    """
    filters = filters or TaxiFilters()
    columns = columns or TaxiColumns()
    reader = csv.DictReader(_stdio.StringIO(text))
    if reader.fieldnames is None:
        raise ParseError("empty CSV input")
    missing = [c for c in columns.required() if c not in reader.fieldnames]
    if missing:
        raise ParseError(f"missing columns: {', '.join(missing)}")
    kept: list[tuple[datetime, int, TripRecord]] = []
    total = dropped = malformed = 0
    for row_idx, row in enumerate(reader):
        total += 1
        try:
            trip = TripRecord(
                pickup=GeoPoint(
                    lat=float(row[columns.pickup_lat]),
                    lon=float(row[columns.pickup_lon]),
                ),
                dropoff=GeoPoint(
                    lat=float(row[columns.dropoff_lat]),
                    lon=float(row[columns.dropoff_lon]),
                ),
                recorded_km=float(row[columns.dist_m]) / 1000.0,
                duration_min=float(row[columns.duration_s]) / 60.0,
                wait_min=float(row[columns.wait_s]) / 60.0,
                timestamp=datetime.fromisoformat(row[columns.pickup_time]),
            )
        except (BdmtspError, TypeError, ValueError):
            malformed += 1
            continue
        if filters.keeps(trip):
            kept.append((trip.timestamp, row_idx, trip))
        else:
            dropped += 1
    kept.sort(key=lambda item: (item[0], item[1]))
    trips = tuple(trip for _, _, trip in kept)
    return TaxiLoadResult(
        trips=trips,
        total_rows=total,
        kept=len(trips),
        dropped=dropped,
        malformed=malformed,
    )


def trips_to_instance(
    trips: Sequence[TripRecord], depot: GeoPoint
) -> tuple[RoutingInstance, float]:
    """Build the trip-to-trip distance matrix plus total internal length.

    Node 0 is the depot; node k is trip k.  Travelling to a trip means
    reaching its pickup, so entry (j, k) is the great-circle distance
    from trip j's dropoff to trip k's pickup, and column 0 returns to
    the depot.  The recorded on-trip distances are summed separately:
    they are driven no matter how trips are scheduled.
    """
    if not trips:
        raise BdmtspError("need at least one trip")
    j = len(trips)
    dist = np.zeros((j + 1, j + 1))
    for k, trip in enumerate(trips, start=1):
        dist[0, k] = haversine(depot, trip.pickup)
        dist[k, 0] = haversine(trip.dropoff, depot)
    for a, ta in enumerate(trips, start=1):
        for b, tb in enumerate(trips, start=1):
            if a != b:
                dist[a, b] = haversine(ta.dropoff, tb.pickup)
    internal = float(sum(t.recorded_km for t in trips))
    instance = RoutingInstance(name="taxi", metric=HAVERSINE, dist=dist)
    return instance, internal
