"""Daily devices-catalog: per device-day aggregates of events and mobility.

A device appears in a day's catalog when it produced at least one radio
event or usage record that UTC day. Each entry aggregates counts, APNs,
radio flags per interface, a dwell-weighted centroid, and the radius of
gyration, plus the day's roaming label.

Mobility comes from radio events only; usage records carry no sector.
The last event of a day contributes zero dwell (no successor interval),
so single-event days pin the device to one sector with weight 0 and the
centroid falls back to uniform weighting.
"""

from __future__ import annotations

import csv
import datetime
import math
import os
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .core import (
    DeviceId,
    Plmn,
    RadioFlags,
    Rat,
    RoamKitError,
    RoamingLabel,
    UsageKind,
)
from .ingest import RadioEvent, SectorCoord, TacEntry, UsageRecord
from .labeler import LabelerConfig, OutOfScopeObservation, label_device_day

EARTH_RADIUS_M = 6371000.0

CATALOG_SCHEMA = "# schema=catalog.v1"
REJECTS_SCHEMA = "# schema=rejects.v1"

_EPOCH_ORDINAL = datetime.date(1970, 1, 1).toordinal()


def day_of_timestamp(ts: int) -> int:
    """UTC epoch day index of a timestamp (floor division, handles pre-1970)."""
    return ts // 86400


def day_to_iso(day: int) -> str:
    return datetime.date.fromordinal(day + _EPOCH_ORDINAL).isoformat()


def iso_to_day(text: str) -> int:
    return datetime.date.fromisoformat(text).toordinal() - _EPOCH_ORDINAL


class NoLocatedSectors(RoamKitError):
    """No dwell sector has coordinates; mobility fields stay absent."""


@dataclass(frozen=True, slots=True)
class SectorDwell:
    sector_id: str
    dwell_seconds: int


def compute_sector_dwell(events: Sequence[RadioEvent]) -> list[SectorDwell]:
    """Time spent per sector: each event holds its sector until the next
    event; the final event contributes zero. Output sorted by sector id."""
    ordered = sorted(events, key=lambda e: e.timestamp)
    dwell: dict[str, int] = {}
    for i, ev in enumerate(ordered):
        dwell.setdefault(ev.sector_id, 0)
        if i + 1 < len(ordered):
            dwell[ev.sector_id] += ordered[i + 1].timestamp - ev.timestamp
    return [SectorDwell(s, d) for s, d in sorted(dwell.items())]


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in meters on a 6371 km sphere."""
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = phi2 - phi1
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(a)))


def compute_mobility(
    dwells: Sequence[SectorDwell], coords: Mapping[str, SectorCoord]
) -> tuple[tuple[float, float], float]:
    """Dwell-weighted centroid and radius of gyration over located sectors.

    The centroid averages unit vectors in Earth-centered Cartesian space
    (no antimeridian or pole artifacts) and projects back to lat/lon.
    Gyration is the weighted RMS haversine distance to the centroid. A
    single located sector yields that sector and exactly 0.0. All-zero
    dwell falls back to uniform weights.
    """
    located = [(d, coords[d.sector_id]) for d in dwells if d.sector_id in coords]
    if not located:
        raise NoLocatedSectors("no dwell sector has coordinates")
    if len(located) == 1:
        c = located[0][1]
        return (c.lat, c.lon), 0.0

    weights = [float(d.dwell_seconds) for d, _ in located]
    total = sum(weights)
    if total == 0.0:
        weights = [1.0] * len(located)
        total = float(len(located))

    x = y = z = 0.0
    for w, (_, c) in zip(weights, located):
        phi = math.radians(c.lat)
        lam = math.radians(c.lon)
        x += w * math.cos(phi) * math.cos(lam)
        y += w * math.cos(phi) * math.sin(lam)
        z += w * math.sin(phi)
    clat = math.degrees(math.atan2(z, math.hypot(x, y)))
    clon = math.degrees(math.atan2(y, x))

    acc = 0.0
    for w, (_, c) in zip(weights, located):
        acc += w * haversine_m(c.lat, c.lon, clat, clon) ** 2
    gyration = math.sqrt(max(0.0, acc / total))
    return (clat, clon), gyration


def compute_radio_flags(
    events: Iterable[RadioEvent], event_type: str | None = None
) -> RadioFlags:
    """One bit per RAT, set by any successful event; optionally restricted
    to a single event_type (used for the per-interface voice/data flags)."""
    g2 = g3 = g4 = False
    for ev in events:
        if event_type is not None and ev.event_type != event_type:
            continue
        if not ev.result.is_success():
            continue
        if ev.rat is Rat.G2:
            g2 = True
        elif ev.rat is Rat.G3:
            g3 = True
        else:
            g4 = True
    return RadioFlags(g2, g3, g4)


@dataclass(frozen=True, slots=True)
class CatalogEntry:
    """One device's aggregate for one UTC day."""

    day: int
    device: DeviceId
    n_events: int
    n_calls: int
    n_data: int
    total_bytes: int
    sim_plmn: Plmn
    visited_plmns: frozenset[Plmn]
    apns: frozenset[str]
    tac: str | None
    manufacturer: str | None
    model: str | None
    os: str | None
    radio_flags: RadioFlags
    voice_flags: RadioFlags
    data_flags: RadioFlags
    centroid: tuple[float, float] | None
    gyration_m: float | None
    label: RoamingLabel

    def to_row(self) -> list[str]:
        return [
            day_to_iso(self.day),
            self.device,
            str(self.n_events),
            str(self.n_calls),
            str(self.n_data),
            str(self.total_bytes),
            self.sim_plmn.render(),
            "|".join(sorted(p.render() for p in self.visited_plmns)),
            "|".join(sorted(self.apns)),
            self.tac or "",
            self.manufacturer or "",
            self.model or "",
            self.os or "",
            self.radio_flags.render(),
            self.voice_flags.render(),
            self.data_flags.render(),
            repr(self.centroid[0]) if self.centroid else "",
            repr(self.centroid[1]) if self.centroid else "",
            repr(self.gyration_m) if self.gyration_m is not None else "",
            self.label.render(),
        ]

    @classmethod
    def from_row(cls, row: Sequence[str]) -> "CatalogEntry":
        (
            day,
            device,
            n_events,
            n_calls,
            n_data,
            total_bytes,
            sim,
            visited,
            apns,
            tac,
            manufacturer,
            model,
            os_name,
            rflags,
            vflags,
            dflags,
            clat,
            clon,
            gyr,
            label,
        ) = row
        return cls(
            day=iso_to_day(day),
            device=device,
            n_events=int(n_events),
            n_calls=int(n_calls),
            n_data=int(n_data),
            total_bytes=int(total_bytes),
            sim_plmn=Plmn.parse(sim),
            visited_plmns=frozenset(
                Plmn.parse(t) for t in visited.split("|") if t
            ),
            apns=frozenset(t for t in apns.split("|") if t),
            tac=tac or None,
            manufacturer=manufacturer or None,
            model=model or None,
            os=os_name or None,
            radio_flags=RadioFlags.parse(rflags),
            voice_flags=RadioFlags.parse(vflags),
            data_flags=RadioFlags.parse(dflags),
            centroid=(float(clat), float(clon)) if clat else None,
            gyration_m=float(gyr) if gyr else None,
            label=RoamingLabel.parse(label),
        )


CATALOG_HEADER = [
    "day",
    "device",
    "n_events",
    "n_calls",
    "n_data",
    "total_bytes",
    "sim_plmn",
    "visited_plmns",
    "apns",
    "tac",
    "manufacturer",
    "model",
    "os",
    "radio_flags",
    "voice_flags",
    "data_flags",
    "centroid_lat",
    "centroid_lon",
    "gyration_m",
    "label",
]


@dataclass(frozen=True, slots=True)
class RejectRow:
    day: int
    device: DeviceId
    reason: str


def _pick_sim(plmns: Iterable[Plmn]) -> Plmn:
    """Majority SIM across the day's records, ties by rendered form."""
    counts = Counter(plmns)
    return min(counts, key=lambda p: (-counts[p], p.render()))


def build_daily_catalog(
    day: int,
    radio_events: Sequence[RadioEvent],
    usage_records: Sequence[UsageRecord],
    tac_catalog: Mapping[str, TacEntry],
    labeler_cfg: LabelerConfig,
    sector_coords: Mapping[str, SectorCoord] | None = None,
) -> tuple[list[CatalogEntry], list[RejectRow]]:
    """Aggregate one UTC day into catalog entries, sorted by device.

    n_events counts radio events when the device produced any; devices
    seen through usage only (outbound roamers, whose radio signaling
    lands on the visited network) count their usage records instead.
    A device whose records defy labeling goes to the reject list.
    """
    by_dev_radio: dict[DeviceId, list[RadioEvent]] = defaultdict(list)
    by_dev_usage: dict[DeviceId, list[UsageRecord]] = defaultdict(list)
    for ev in radio_events:
        if day_of_timestamp(ev.timestamp) == day:
            by_dev_radio[ev.device].append(ev)
    for rec in usage_records:
        if day_of_timestamp(rec.timestamp) == day:
            by_dev_usage[rec.device].append(rec)

    entries: list[CatalogEntry] = []
    rejects: list[RejectRow] = []
    for device in sorted(set(by_dev_radio) | set(by_dev_usage)):
        evs = by_dev_radio.get(device, [])
        recs = by_dev_usage.get(device, [])

        pairs = [(ev.sim_plmn, labeler_cfg.home_plmn) for ev in evs]
        pairs += [(r.sim_plmn, r.visited_plmn) for r in recs]
        try:
            label = label_device_day(pairs, labeler_cfg)
        except OutOfScopeObservation as exc:
            rejects.append(RejectRow(day=day, device=device, reason=str(exc)))
            continue

        sim = _pick_sim(
            [ev.sim_plmn for ev in evs] + [r.sim_plmn for r in recs]
        )
        visited = {labeler_cfg.home_plmn} if evs else set()
        visited |= {r.visited_plmn for r in recs}
        n_calls = sum(1 for r in recs if r.kind is UsageKind.VOICE)
        data = [r for r in recs if r.kind is UsageKind.DATA]

        tac = None
        if evs:
            tac = Counter(ev.tac for ev in evs).most_common(1)[0][0]
        tac_entry = tac_catalog.get(tac) if tac else None

        centroid = gyration = None
        if evs and sector_coords is not None:
            try:
                centroid, gyration = compute_mobility(
                    compute_sector_dwell(evs), sector_coords
                )
            except NoLocatedSectors:
                pass

        entries.append(
            CatalogEntry(
                day=day,
                device=device,
                n_events=len(evs) if evs else len(recs),
                n_calls=n_calls,
                n_data=len(data),
                total_bytes=sum(r.bytes for r in data),
                sim_plmn=sim,
                visited_plmns=frozenset(visited),
                apns=frozenset(r.apn for r in data if r.apn),
                tac=tac,
                manufacturer=tac_entry.manufacturer if tac_entry else None,
                model=tac_entry.model if tac_entry else None,
                os=tac_entry.os if tac_entry else None,
                radio_flags=compute_radio_flags(evs),
                voice_flags=compute_radio_flags(evs, event_type="VOICE"),
                data_flags=compute_radio_flags(evs, event_type="DATA"),
                centroid=centroid,
                gyration_m=gyration,
                label=label,
            )
        )
    return entries, rejects


def write_catalog(path, entries: Iterable[CatalogEntry]) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(CATALOG_SCHEMA + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CATALOG_HEADER)
        for e in entries:
            writer.writerow(e.to_row())
    os.replace(tmp, path)


def read_catalog(path) -> list[CatalogEntry]:
    from .ingest import _read_header_csv

    return [
        CatalogEntry.from_row(row)
        for _ln, row in _read_header_csv(path, CATALOG_SCHEMA, CATALOG_HEADER)
    ]


_REJECTS_HEADER = ["day", "device", "reason"]


def write_rejects(path, rows: Iterable[RejectRow]) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(REJECTS_SCHEMA + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_REJECTS_HEADER)
        for r in rows:
            writer.writerow([day_to_iso(r.day), r.device, r.reason])
    os.replace(tmp, path)


def read_rejects(path) -> list[RejectRow]:
    from .ingest import _read_header_csv

    return [
        RejectRow(day=iso_to_day(row[0]), device=row[1], reason=row[2])
        for _ln, row in _read_header_csv(path, REJECTS_SCHEMA, _REJECTS_HEADER)
    ]
