"""Parsers for the four line-oriented input streams plus APN decomposition.

File formats are headerless CSV for event streams and header CSV for
catalogs, all UTF-8, one record per line, versioned by a ``# schema=...``
first-line comment. Event-stream fields must not contain commas or
newlines; a line with the wrong column count is a MalformedLine.

Parsers are pure and stateless; files may be parsed in parallel per file
or per chunk (downstream stages re-sort by timestamp).
"""

from __future__ import annotations

import csv
import os
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, TypeVar

from .core import (
    DeviceId,
    GsmaClassHint,
    MessageType,
    Plmn,
    Rat,
    ResultCode,
    RoamKitError,
    UsageKind,
    plmn,
)

SIGNALING_SCHEMA = "# schema=signaling.v1"
RADIO_SCHEMA = "# schema=radio.v1"
USAGE_SCHEMA = "# schema=usage.v1"
TAC_SCHEMA = "# schema=tac.v1"
SECTORS_SCHEMA = "# schema=sectors.v1"

_TAC_RE = re.compile(r"[0-9]{8}\Z")
_APN_OP_RE = re.compile(r"mnc([0-9]{3})\.mcc([0-9]{3})\.gprs\Z")


class ParseError(RoamKitError):
    """A line or row could not be parsed; carries the 1-based line number."""

    def __init__(self, message: str, line_no: int | None = None):
        super().__init__(message)
        self.line_no = line_no

    def at_line(self, line_no: int) -> "ParseError":
        err = type(self)(str(self), line_no)
        return err

    def __str__(self) -> str:
        base = super().__str__()
        if self.line_no is not None:
            return f"line {self.line_no}: {base}"
        return base


class MalformedLine(ParseError):
    pass


class InvalidPlmn(ParseError):
    pass


class InvalidTimestamp(ParseError):
    pass


class UnknownMessageType(ParseError):
    pass


class InvalidTac(ParseError):
    pass


class FieldExclusivity(ParseError):
    pass


class MalformedRow(ParseError):
    pass


class DuplicateTac(ParseError):
    pass


class DuplicateSector(ParseError):
    pass


class CoordOutOfRange(ParseError):
    pass


@dataclass(frozen=True, slots=True)
class SignalingTransaction:
    """One M2M-platform control-plane event."""

    device: DeviceId
    timestamp: int
    sim_plmn: Plmn
    visited_plmn: Plmn
    message: MessageType
    result: ResultCode


@dataclass(frozen=True, slots=True)
class RadioEvent:
    """One radio-interface event on the studied operator's network."""

    device: DeviceId
    timestamp: int
    sim_plmn: Plmn
    tac: str
    sector_id: str
    rat: Rat
    event_type: str
    result: ResultCode


@dataclass(frozen=True, slots=True)
class UsageRecord:
    """One CDR/xDR service-usage record (voice call or data session)."""

    device: DeviceId
    timestamp: int
    sim_plmn: Plmn
    visited_plmn: Plmn
    kind: UsageKind
    duration: int
    bytes: int
    apn: str | None


@dataclass(frozen=True, slots=True)
class TacEntry:
    """Device properties for one TAC."""

    tac: str
    manufacturer: str
    model: str
    os: str
    gsma_class_hint: GsmaClassHint
    bands: frozenset[Rat]


@dataclass(frozen=True, slots=True)
class ApnInfo:
    """An APN split into network identifier and optional operator identifier."""

    network_identifier: str
    operator_plmn: Plmn | None
    raw: str


@dataclass(frozen=True, slots=True)
class SectorCoord:
    """Radio sector position from the operator's sectors catalog."""

    sector_id: str
    lat: float
    lon: float


def _parse_plmn(mcc: str, mnc: str) -> Plmn:
    try:
        return plmn(mcc, mnc)
    except ValueError as exc:
        raise InvalidPlmn(str(exc)) from None


def _parse_timestamp(text: str) -> int:
    try:
        ts = int(text)
    except ValueError:
        raise InvalidTimestamp(f"invalid timestamp {text!r}") from None
    if ts < 0:
        raise InvalidTimestamp(f"negative timestamp {text!r}")
    return ts


def _parse_device(text: str) -> str:
    if not text:
        raise MalformedLine("empty device id")
    return text


def parse_signaling_line(line: str) -> SignalingTransaction:
    """Parse one signaling.v1 line.

    Columns: device,timestamp,sim_mcc,sim_mnc,visited_mcc,visited_mnc,
    message,result. Unknown message types are errors; unknown result
    strings are preserved verbatim.
    """
    fields = line.rstrip("\n").split(",")
    if len(fields) != 8:
        raise MalformedLine(f"want 8 columns, got {len(fields)}")
    dev, ts, smcc, smnc, vmcc, vmnc, msg, res = fields
    try:
        message = MessageType.parse(msg)
    except ValueError as exc:
        raise UnknownMessageType(str(exc)) from None
    return SignalingTransaction(
        device=_parse_device(dev),
        timestamp=_parse_timestamp(ts),
        sim_plmn=_parse_plmn(smcc, smnc),
        visited_plmn=_parse_plmn(vmcc, vmnc),
        message=message,
        result=ResultCode.parse(res),
    )


def render_signaling(t: SignalingTransaction) -> str:
    return ",".join(
        (
            t.device,
            str(t.timestamp),
            t.sim_plmn.mcc,
            t.sim_plmn.mnc,
            t.visited_plmn.mcc,
            t.visited_plmn.mnc,
            t.message.render(),
            t.result.render(),
        )
    )


def parse_radio_event_line(line: str) -> RadioEvent:
    """Parse one radio.v1 line.

    Columns: device,timestamp,sim_mcc,sim_mnc,tac,sector_id,rat,
    event_type,result.
    """
    fields = line.rstrip("\n").split(",")
    if len(fields) != 9:
        raise MalformedLine(f"want 9 columns, got {len(fields)}")
    dev, ts, smcc, smnc, tac, sector, rat, etype, res = fields
    if not _TAC_RE.match(tac):
        raise InvalidTac(f"invalid TAC {tac!r}: want 8 decimal digits")
    try:
        parsed_rat = Rat.parse(rat)
    except ValueError as exc:
        raise MalformedLine(str(exc)) from None
    if not sector:
        raise MalformedLine("empty sector id")
    return RadioEvent(
        device=_parse_device(dev),
        timestamp=_parse_timestamp(ts),
        sim_plmn=_parse_plmn(smcc, smnc),
        tac=tac,
        sector_id=sector,
        rat=parsed_rat,
        event_type=etype,
        result=ResultCode.parse(res),
    )


def render_radio_event(e: RadioEvent) -> str:
    return ",".join(
        (
            e.device,
            str(e.timestamp),
            e.sim_plmn.mcc,
            e.sim_plmn.mnc,
            e.tac,
            e.sector_id,
            e.rat.render(),
            e.event_type,
            e.result.render(),
        )
    )


def parse_usage_line(line: str) -> UsageRecord:
    """Parse one usage.v1 line.

    Columns: device,timestamp,sim_mcc,sim_mnc,visited_mcc,visited_mnc,
    kind,duration,bytes,apn. Voice records must carry bytes=0 and no APN;
    data records must carry duration=0.
    """
    fields = line.rstrip("\n").split(",")
    if len(fields) != 10:
        raise MalformedLine(f"want 10 columns, got {len(fields)}")
    dev, ts, smcc, smnc, vmcc, vmnc, kind, duration, nbytes, apn = fields
    try:
        parsed_kind = UsageKind.parse(kind)
    except ValueError as exc:
        raise MalformedLine(str(exc)) from None
    try:
        dur = int(duration)
        nb = int(nbytes)
    except ValueError:
        raise MalformedLine(f"non-integer duration/bytes {duration!r},{nbytes!r}") from None
    if dur < 0 or nb < 0:
        raise MalformedLine("negative duration or bytes")
    if parsed_kind is UsageKind.VOICE and (nb != 0 or apn):
        raise FieldExclusivity("voice record with bytes or APN")
    if parsed_kind is UsageKind.DATA and dur != 0:
        raise FieldExclusivity("data record with non-zero duration")
    return UsageRecord(
        device=_parse_device(dev),
        timestamp=_parse_timestamp(ts),
        sim_plmn=_parse_plmn(smcc, smnc),
        visited_plmn=_parse_plmn(vmcc, vmnc),
        kind=parsed_kind,
        duration=dur,
        bytes=nb,
        apn=apn if (parsed_kind is UsageKind.DATA and apn) else None,
    )


def render_usage(u: UsageRecord) -> str:
    return ",".join(
        (
            u.device,
            str(u.timestamp),
            u.sim_plmn.mcc,
            u.sim_plmn.mnc,
            u.visited_plmn.mcc,
            u.visited_plmn.mnc,
            u.kind.render(),
            str(u.duration),
            str(u.bytes),
            u.apn or "",
        )
    )


def parse_apn(apn: str, mnc_len_by_mcc: Mapping[str, int] | None = None) -> ApnInfo:
    """Split an APN into network identifier and optional operator PLMN.

    Any string is a valid APN. If the final three dot-labels match
    ``mncXXX.mccYYY.gprs`` they form the operator identifier: it is
    stripped from the network identifier and parsed into a PLMN. The
    operator identifier always pads the MNC to 3 digits, while real MNCs
    may be 2 or 3 digits; by default a 3-digit token with a leading zero
    is reduced to 2 digits, and ``mnc_len_by_mcc`` overrides that rule
    per MCC (values 2 or 3).
    """
    raw = apn
    text = apn.strip().lower()
    match = _APN_OP_RE.search(text)
    if match is None:
        return ApnInfo(network_identifier=text, operator_plmn=None, raw=raw)
    mnc_token, mcc = match.group(1), match.group(2)
    override = (mnc_len_by_mcc or {}).get(mcc)
    if override == 2:
        mnc = mnc_token[1:]
    elif override == 3:
        mnc = mnc_token
    elif mnc_token.startswith("0"):
        mnc = mnc_token[1:]
    else:
        mnc = mnc_token
    network_identifier = text[: match.start()].rstrip(".")
    return ApnInfo(
        network_identifier=network_identifier,
        operator_plmn=plmn(mcc, mnc),
        raw=raw,
    )


@dataclass
class SkipReport:
    """Tolerant-mode ingestion accounting: parsed + skipped = input lines."""

    n_lines: int = 0
    n_parsed: int = 0
    n_skipped: int = 0
    errors: list[tuple[int, str]] = field(default_factory=list)

    MAX_ERRORS = 50

    def record_error(self, line_no: int, message: str) -> None:
        self.n_skipped += 1
        if len(self.errors) < self.MAX_ERRORS:
            self.errors.append((line_no, message))


R = TypeVar("R")


def iter_records(
    path: str | os.PathLike,
    parse_line: Callable[[str], R],
    strict: bool = False,
    expected_schema: str | None = None,
    report: SkipReport | None = None,
) -> Iterator[R]:
    """Stream one event-stream file record by record.

    Comment lines (leading ``#``, including the schema line) and blank
    lines are not input lines. In strict mode the first bad line raises;
    in tolerant mode bad lines are counted and skipped. Pass a SkipReport
    to collect the accounting (it is filled as the iterator advances).
    """
    if report is None:
        report = SkipReport()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                if expected_schema and line_no == 1 and stripped and stripped != expected_schema:
                    raise MalformedLine(
                        f"unexpected schema line {stripped!r}, want {expected_schema!r}", line_no
                    )
                continue
            report.n_lines += 1
            try:
                rec = parse_line(stripped)
            except ParseError as exc:
                if strict:
                    raise exc.at_line(line_no)
                report.record_error(line_no, str(exc))
                continue
            report.n_parsed += 1
            yield rec


def read_records(
    path: str | os.PathLike,
    parse_line: Callable[[str], R],
    strict: bool = False,
    expected_schema: str | None = None,
) -> tuple[list[R], SkipReport]:
    """Read one event-stream file into memory; see iter_records."""
    report = SkipReport()
    records = list(iter_records(path, parse_line, strict, expected_schema, report))
    return records, report


def read_signaling_file(path, strict: bool = False):
    return read_records(path, parse_signaling_line, strict, SIGNALING_SCHEMA)


def read_radio_file(path, strict: bool = False):
    return read_records(path, parse_radio_event_line, strict, RADIO_SCHEMA)


def read_usage_file(path, strict: bool = False):
    return read_records(path, parse_usage_line, strict, USAGE_SCHEMA)


def iter_signaling_file(path, strict: bool = False, report: SkipReport | None = None):
    return iter_records(path, parse_signaling_line, strict, SIGNALING_SCHEMA, report)


def write_stream(path: str | os.PathLike, schema: str, lines: Iterable[str]) -> int:
    """Write an event stream atomically (temp file + rename). Returns count."""
    n = 0
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(schema + "\n")
        for line in lines:
            fh.write(line)
            fh.write("\n")
            n += 1
    os.replace(tmp, path)
    return n


_TAC_HEADER = ["tac", "manufacturer", "model", "os", "gsma_class_hint", "bands"]
_SECTORS_HEADER = ["sector_id", "lat", "lon"]


def _read_header_csv(path, schema: str, header: list[str]):
    """Yield (line_no, row) for a header CSV, checking schema and header."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        first = fh.readline().strip()
        if first != schema:
            raise MalformedRow(f"missing schema line, want {schema!r}", 1)
        reader = csv.reader(fh)
        try:
            got_header = next(reader)
        except StopIteration:
            raise MalformedRow("missing header row", 2) from None
        if got_header != header:
            raise MalformedRow(f"bad header {got_header!r}, want {header!r}", 2)
        for line_no, row in enumerate(reader, start=3):
            if not row:
                continue
            yield line_no, row


def parse_bands(text: str) -> frozenset[Rat]:
    """Parse a "|"-separated band set, e.g. "2G|3G"; empty set allowed."""
    if not text:
        return frozenset()
    return frozenset(Rat.parse(tok) for tok in text.split("|"))


def render_bands(bands: frozenset[Rat]) -> str:
    return "|".join(sorted(r.render() for r in bands))


def load_tac_catalog(path) -> dict[str, TacEntry]:
    """Load the TAC catalog; duplicate TACs and malformed rows are errors."""
    catalog: dict[str, TacEntry] = {}
    for line_no, row in _read_header_csv(path, TAC_SCHEMA, _TAC_HEADER):
        if len(row) != len(_TAC_HEADER):
            raise MalformedRow(f"want {len(_TAC_HEADER)} columns, got {len(row)}", line_no)
        tac, manufacturer, model, os_name, hint, bands = row
        if not _TAC_RE.match(tac):
            raise InvalidTac(f"invalid TAC {tac!r}", line_no)
        if tac in catalog:
            raise DuplicateTac(f"duplicate TAC {tac!r}", line_no)
        try:
            entry = TacEntry(
                tac=tac,
                manufacturer=manufacturer,
                model=model,
                os=os_name,
                gsma_class_hint=GsmaClassHint.parse(hint),
                bands=parse_bands(bands),
            )
        except ValueError as exc:
            raise MalformedRow(str(exc), line_no) from None
        catalog[tac] = entry
    return catalog


def write_tac_catalog(path, entries: Iterable[TacEntry]) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(TAC_SCHEMA + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_TAC_HEADER)
        for e in entries:
            writer.writerow(
                [e.tac, e.manufacturer, e.model, e.os, e.gsma_class_hint.render(), render_bands(e.bands)]
            )
    os.replace(tmp, path)


def load_sector_coords(path) -> dict[str, SectorCoord]:
    """Load the sectors catalog; duplicates and out-of-range coords are errors."""
    coords: dict[str, SectorCoord] = {}
    for line_no, row in _read_header_csv(path, SECTORS_SCHEMA, _SECTORS_HEADER):
        if len(row) != len(_SECTORS_HEADER):
            raise MalformedRow(f"want {len(_SECTORS_HEADER)} columns, got {len(row)}", line_no)
        sector_id, lat_s, lon_s = row
        if not sector_id:
            raise MalformedRow("empty sector id", line_no)
        if sector_id in coords:
            raise DuplicateSector(f"duplicate sector {sector_id!r}", line_no)
        try:
            lat, lon = float(lat_s), float(lon_s)
        except ValueError:
            raise MalformedRow(f"non-numeric coordinates {lat_s!r},{lon_s!r}", line_no) from None
        if not (-90.0 <= lat <= 90.0) or not (-180.0 <= lon <= 180.0):
            raise CoordOutOfRange(f"coordinates out of range ({lat}, {lon})", line_no)
        coords[sector_id] = SectorCoord(sector_id=sector_id, lat=lat, lon=lon)
    return coords


def write_sector_coords(path, coords: Iterable[SectorCoord]) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(SECTORS_SCHEMA + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_SECTORS_HEADER)
        for c in coords:
            writer.writerow([c.sector_id, repr(c.lat), repr(c.lon)])
    os.replace(tmp, path)
