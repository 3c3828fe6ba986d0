"""Platform- and population-level metrics over transactions and catalogs.

Platform side: per-device signaling dynamics (record counts, distinct
visited operators, inter-operator switches, failure-only devices), the
home-operator/visited-country heatmap, and signaling concentration.

Population side: per-device window summaries joined with classification,
the class-vs-roaming-label grid, active-day counts, RAT usage breakdowns
and per-group traffic distributions, plus per-vertical aggregates.

Every distribution is emitted as an empirical CDF data file; plotting is
out of scope. All outputs are deterministic: fixed orderings, no
timestamps, no absolute paths.
"""

from __future__ import annotations

import json
import math
import os
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .catalog import CatalogEntry
from .classifier import ClassificationRow, SmipTag
from .core import (
    LABEL_PRECEDENCE,
    DeviceClass,
    DeviceId,
    Plmn,
    RadioFlags,
    RoamKitError,
    RoamingLabel,
    Vertical,
)
from .ingest import SignalingTransaction


class EmptyInput(RoamKitError):
    """An operation that needs at least one device got none."""


# ---------------------------------------------------------------- platform

@dataclass(frozen=True, slots=True)
class DeviceDynamics:
    """Per-device signaling behavior over the whole observation window."""

    device: DeviceId
    n_records: int
    n_success: int
    distinct_vmnos: int
    n_switches: int
    hmno: Plmn
    is_roaming: bool
    visited_countries: frozenset[str]


def _count_switches(venues: Sequence[Plmn]) -> int:
    return sum(1 for a, b in zip(venues, venues[1:]) if a != b)


def count_vmno_switches(transactions: Sequence[SignalingTransaction]) -> int:
    """Adjacent visited-operator changes over (timestamp, input order).

    The stable sort keeps file position as the tie-break, which makes the
    count well-defined even with equal timestamps.
    """
    ordered = sorted(transactions, key=lambda t: t.timestamp)
    return _count_switches([t.visited_plmn for t in ordered])


class _DynAcc:
    __slots__ = ("seq", "n_success", "sims")

    def __init__(self) -> None:
        self.seq: list[tuple[int, Plmn]] = []
        self.n_success = 0
        self.sims: Counter[Plmn] = Counter()


def device_dynamics(
    transactions: Iterable[SignalingTransaction],
    native_networks: Mapping[Plmn, Plmn] | None = None,
) -> list[DeviceDynamics]:
    """Fold a transaction stream into per-device dynamics, sorted by device.

    A device's home operator is its majority SIM PLMN. ``native_networks``
    maps a home operator to the network its devices are at home on (an
    operator without radio infrastructure is never 'at home' on itself);
    absent entries default to the operator's own PLMN. A device counts as
    roaming if any record places it outside its native network.
    """
    native_networks = native_networks or {}
    acc: dict[DeviceId, _DynAcc] = defaultdict(_DynAcc)
    for t in transactions:
        a = acc[t.device]
        a.seq.append((t.timestamp, t.visited_plmn))
        if t.result.is_success():
            a.n_success += 1
        a.sims[t.sim_plmn] += 1

    out = []
    for device in sorted(acc):
        a = acc[device]
        ordered = sorted(a.seq, key=lambda p: p[0])
        venues = [v for _, v in ordered]
        hmno = min(a.sims, key=lambda p: (-a.sims[p], p.render()))
        native = native_networks.get(hmno, hmno)
        out.append(
            DeviceDynamics(
                device=device,
                n_records=len(venues),
                n_success=a.n_success,
                distinct_vmnos=len(set(venues)),
                n_switches=_count_switches(venues),
                hmno=hmno,
                is_roaming=any(v != native for v in venues),
                visited_countries=frozenset(v.mcc for v in venues),
            )
        )
    return out


@dataclass(frozen=True)
class HeatmapMatrix:
    """Visited-country rows x home-operator columns, row-normalized."""

    rows: tuple[str, ...]
    cols: tuple[str, ...]
    cells: tuple[tuple[float, ...], ...]
    col_totals: tuple[float, ...]


def hmno_heatmap(
    dynamics: Sequence[DeviceDynamics], min_share: float = 0.001
) -> HeatmapMatrix:
    """Device incidence per (visited country, home operator).

    Countries seen by fewer than ``min_share`` of all devices fold into a
    trailing "Other" row. Each row is normalized to sum to 1; col_totals
    carry each home operator's share of all devices.
    """
    dynamics = list(dynamics)
    if not dynamics:
        raise EmptyInput("no devices")
    n = len(dynamics)

    hmno_counts: Counter[Plmn] = Counter(d.hmno for d in dynamics)
    cols = sorted(hmno_counts, key=lambda p: (-hmno_counts[p], p.render()))
    col_idx = {p: i for i, p in enumerate(cols)}

    country_devices: Counter[str] = Counter()
    pair_counts: Counter[tuple[str, Plmn]] = Counter()
    for d in dynamics:
        for mcc in d.visited_countries:
            country_devices[mcc] += 1
            pair_counts[(mcc, d.hmno)] += 1

    kept = [
        mcc for mcc in country_devices if country_devices[mcc] / n >= min_share
    ]
    kept.sort(key=lambda m: (-country_devices[m], m))
    kept_set = set(kept)
    folded = any(mcc not in kept_set for mcc in country_devices)
    row_labels = kept + (["Other"] if folded else [])

    raw_rows = {label: [0.0] * len(cols) for label in row_labels}
    for (mcc, hmno), c in pair_counts.items():
        label = mcc if mcc in kept_set else "Other"
        raw_rows[label][col_idx[hmno]] += c
    cells = []
    for label in row_labels:
        raw = raw_rows[label]
        total = sum(raw)
        cells.append(tuple(v / total for v in raw) if total else tuple(raw))

    return HeatmapMatrix(
        rows=tuple(row_labels),
        cols=tuple(p.render() for p in cols),
        cells=tuple(cells),
        col_totals=tuple(hmno_counts[p] / n for p in cols),
    )


def signaling_concentration(
    dynamics: Sequence[DeviceDynamics], points: int = 100
) -> list[tuple[float, float]]:
    """Share of total records coming from the top x% of devices.

    Devices are ordered by record count descending (an assumption: the
    ordering direction is a choice, stated in the report). Returns
    (device_frac, traffic_frac) pairs at 1/points steps.
    """
    if not dynamics:
        raise EmptyInput("no devices")
    counts = sorted((d.n_records for d in dynamics), reverse=True)
    total = sum(counts)
    n = len(counts)
    cum = []
    run = 0
    for c in counts:
        run += c
        cum.append(run)
    out = []
    for i in range(1, points + 1):
        k = max(1, math.ceil(round(i * n / points, 9)))
        out.append((k / n, cum[k - 1] / total if total else 0.0))
    return out


def device_frac_for_traffic(
    dynamics: Sequence[DeviceDynamics], traffic_frac: float
) -> float:
    """Smallest device share (descending order) covering traffic_frac."""
    counts = sorted((d.n_records for d in dynamics), reverse=True)
    total = sum(counts)
    if total == 0:
        return 0.0
    run = 0
    for k, c in enumerate(counts, start=1):
        run += c
        if run / total >= traffic_frac:
            return k / len(counts)
    return 1.0


def fraction_below(values: Iterable[int | float], threshold: float) -> float:
    values = list(values)
    if not values:
        return 0.0
    return sum(1 for v in values if v < threshold) / len(values)


# ------------------------------------------------------------------- CDFs

DEFAULT_QUANTILES: tuple[float, ...] = tuple(i / 100 for i in range(1, 101))


def empirical_cdf(
    values: Iterable[float], quantiles: Sequence[float] = DEFAULT_QUANTILES
) -> list[tuple[float, float]]:
    """(value, q) pairs: the q-quantile is the ceil(q*n)-th smallest value.

    The product q*n is rounded to 9 decimals before the ceil so that
    grid points landing exactly on integers are not pushed up by float
    noise.
    """
    ordered = sorted(values)
    n = len(ordered)
    if n == 0:
        return []
    out = []
    for q in quantiles:
        idx = max(0, math.ceil(round(q * n, 9)) - 1)
        out.append((float(ordered[min(idx, n - 1)]), q))
    return out


# --------------------------------------------------------------- population

@dataclass(frozen=True)
class DeviceSummary:
    """One device rolled up over the whole observation window."""

    device: DeviceId
    label: RoamingLabel
    device_class: DeviceClass | None
    vertical: Vertical
    smip: SmipTag | None
    n_days: int
    first_day: int
    total_events: int
    total_calls: int
    total_bytes: int
    any_flags: RadioFlags
    voice_flags: RadioFlags
    data_flags: RadioFlags
    mean_gyration_m: float | None

    @property
    def events_per_day(self) -> float:
        return self.total_events / self.n_days

    @property
    def calls_per_day(self) -> float:
        return self.total_calls / self.n_days

    @property
    def bytes_per_day(self) -> float:
        return self.total_bytes / self.n_days


_RANK = {label: i for i, label in enumerate(LABEL_PRECEDENCE)}


def device_summaries(
    entries: Iterable[CatalogEntry],
    classification: Mapping[DeviceId, ClassificationRow] | None = None,
) -> list[DeviceSummary]:
    """Roll catalog entries up to one row per device, sorted by device.

    The window label is the majority of daily labels with the same
    precedence tie-break the daily labeler uses. Gyration averages over
    located days only.
    """
    classification = classification or {}
    by_dev: dict[DeviceId, list[CatalogEntry]] = defaultdict(list)
    for e in entries:
        by_dev[e.device].append(e)

    out = []
    for device in sorted(by_dev):
        days = by_dev[device]
        labels = Counter(e.label for e in days)
        label = min(labels, key=lambda lab: (-labels[lab], _RANK[lab]))
        any_flags = voice_flags = data_flags = RadioFlags()
        for e in days:
            any_flags |= e.radio_flags
            voice_flags |= e.voice_flags
            data_flags |= e.data_flags
        gyrations = [e.gyration_m for e in days if e.gyration_m is not None]
        cls_row = classification.get(device)
        out.append(
            DeviceSummary(
                device=device,
                label=label,
                device_class=cls_row.device_class if cls_row else None,
                vertical=cls_row.vertical if cls_row else Vertical.UNKNOWN,
                smip=cls_row.smip if cls_row else None,
                n_days=len(days),
                first_day=min(e.day for e in days),
                total_events=sum(e.n_events for e in days),
                total_calls=sum(e.n_calls for e in days),
                total_bytes=sum(e.total_bytes for e in days),
                any_flags=any_flags,
                voice_flags=voice_flags,
                data_flags=data_flags,
                mean_gyration_m=(
                    sum(gyrations) / len(gyrations) if gyrations else None
                ),
            )
        )
    return out


CLASS_ORDER: tuple[DeviceClass, ...] = (
    DeviceClass.SMART,
    DeviceClass.FEAT,
    DeviceClass.M2M,
    DeviceClass.M2M_MAYBE,
)

DEFAULT_EXCLUDED_CLASSES: frozenset[DeviceClass] = frozenset(
    {DeviceClass.M2M_MAYBE}
)


@dataclass(frozen=True)
class ClassRoamingGrid:
    """Class x label contingency: raw counts plus both normalizations."""

    classes: tuple[DeviceClass, ...]
    labels: tuple[RoamingLabel, ...]
    counts: tuple[tuple[int, ...], ...]
    by_class: tuple[tuple[float, ...], ...]  # each class row sums to 1
    by_label: tuple[tuple[float, ...], ...]  # each label column sums to 1
    empty_classes: tuple[DeviceClass, ...]
    empty_labels: tuple[RoamingLabel, ...]


def class_roaming_grid(
    pairs: Iterable[tuple[DeviceClass, RoamingLabel]],
    excluded_classes: frozenset[DeviceClass] = DEFAULT_EXCLUDED_CLASSES,
) -> ClassRoamingGrid:
    classes = tuple(c for c in CLASS_ORDER if c not in excluded_classes)
    labels = LABEL_PRECEDENCE
    idx_c = {c: i for i, c in enumerate(classes)}
    idx_l = {lab: i for i, lab in enumerate(labels)}

    counts = [[0] * len(labels) for _ in classes]
    for cls, lab in pairs:
        if cls in idx_c:
            counts[idx_c[cls]][idx_l[lab]] += 1

    by_class = []
    for row in counts:
        total = sum(row)
        by_class.append(
            tuple(v / total for v in row) if total else tuple(0.0 for _ in row)
        )
    by_label_cols = []
    for j in range(len(labels)):
        col = [counts[i][j] for i in range(len(classes))]
        total = sum(col)
        by_label_cols.append(
            [v / total for v in col] if total else [0.0] * len(classes)
        )
    by_label = tuple(
        tuple(by_label_cols[j][i] for j in range(len(labels)))
        for i in range(len(classes))
    )

    return ClassRoamingGrid(
        classes=classes,
        labels=labels,
        counts=tuple(tuple(r) for r in counts),
        by_class=tuple(by_class),
        by_label=by_label,
        empty_classes=tuple(
            c for c in classes if sum(counts[idx_c[c]]) == 0
        ),
        empty_labels=tuple(
            lab
            for lab in labels
            if sum(counts[i][idx_l[lab]] for i in range(len(classes))) == 0
        ),
    )


def active_days(
    summaries: Iterable[DeviceSummary],
    cohort_first_day: int | None = None,
) -> dict[tuple[DeviceClass | None, RoamingLabel], list[int]]:
    """Active-day counts per device, grouped by (class, label).

    With ``cohort_first_day`` set, only devices first seen on that day
    are included (the fixed-cohort view of retention).
    """
    groups: dict[tuple[DeviceClass | None, RoamingLabel], list[int]] = defaultdict(list)
    for s in summaries:
        if cohort_first_day is not None and s.first_day != cohort_first_day:
            continue
        groups[(s.device_class, s.label)].append(s.n_days)
    return {k: sorted(v) for k, v in groups.items()}


RAT_CATEGORIES: tuple[str, ...] = (
    "2G only",
    "3G only",
    "4G only",
    "2G+3G",
    "2G+4G",
    "3G+4G",
    "2G+3G+4G",
    "none",
)


def rat_category(flags: RadioFlags) -> str:
    parts = [name for bit, name in ((flags.g2, "2G"), (flags.g3, "3G"), (flags.g4, "4G")) if bit]
    if not parts:
        return "none"
    if len(parts) == 1:
        return f"{parts[0]} only"
    return "+".join(parts)


def rat_usage_breakdown(
    summaries: Iterable[DeviceSummary], by: str = "any"
) -> dict[DeviceClass, dict[str, float]]:
    """Share of each device class per RAT-combination category.

    ``by`` selects the flag set: "any" (all successful radio events),
    "data", or "voice". Categories are mutually exclusive and sum to 1
    within each class.
    """
    if by not in ("any", "data", "voice"):
        raise ValueError(f"unknown breakdown axis {by!r}")
    tallies: dict[DeviceClass, Counter[str]] = defaultdict(Counter)
    for s in summaries:
        if s.device_class is None:
            continue
        flags = {
            "any": s.any_flags,
            "data": s.data_flags,
            "voice": s.voice_flags,
        }[by]
        tallies[s.device_class][rat_category(flags)] += 1
    out: dict[DeviceClass, dict[str, float]] = {}
    for cls, counter in tallies.items():
        total = sum(counter.values())
        out[cls] = {cat: counter.get(cat, 0) / total for cat in RAT_CATEGORIES}
    return out


def traffic_distributions(
    summaries: Iterable[DeviceSummary],
    excluded_classes: frozenset[DeviceClass] = DEFAULT_EXCLUDED_CLASSES,
    quantiles: Sequence[float] = DEFAULT_QUANTILES,
) -> dict[tuple[DeviceClass, RoamingLabel], dict[str, list[tuple[float, float]]]]:
    """Per-(class, label) CDFs of events, calls, and bytes per active day."""
    groups: dict[tuple[DeviceClass, RoamingLabel], list[DeviceSummary]] = defaultdict(list)
    for s in summaries:
        if s.device_class is None or s.device_class in excluded_classes:
            continue
        groups[(s.device_class, s.label)].append(s)
    out = {}
    for key, devs in groups.items():
        out[key] = {
            "events": empirical_cdf([d.events_per_day for d in devs], quantiles),
            "calls": empirical_cdf([d.calls_per_day for d in devs], quantiles),
            "bytes": empirical_cdf([d.bytes_per_day for d in devs], quantiles),
        }
    return out


DEFAULT_REPORT_VERTICALS: tuple[Vertical, ...] = (
    Vertical.ENERGY,
    Vertical.AUTOMOTIVE,
)


@dataclass(frozen=True)
class VerticalReport:
    vertical: Vertical
    n_devices: int
    n_located: int
    gyration_cdf: list[tuple[float, float]]
    events_cdf: list[tuple[float, float]]
    bytes_cdf: list[tuple[float, float]]
    median_gyration_m: float | None
    share_stationary: float | None  # gyration exactly 0 among located


def vertical_report(
    summaries: Iterable[DeviceSummary],
    verticals: Sequence[Vertical] = DEFAULT_REPORT_VERTICALS,
    quantiles: Sequence[float] = DEFAULT_QUANTILES,
) -> dict[Vertical, VerticalReport]:
    """Mobility/signaling/data aggregates per vertical; empty verticals
    come back with n_devices 0 so the caller can flag them."""
    by_vertical: dict[Vertical, list[DeviceSummary]] = defaultdict(list)
    for s in summaries:
        by_vertical[s.vertical].append(s)
    out = {}
    for v in verticals:
        devs = by_vertical.get(v, [])
        located = [d.mean_gyration_m for d in devs if d.mean_gyration_m is not None]
        located.sort()
        median = located[(len(located) - 1) // 2] if located else None
        out[v] = VerticalReport(
            vertical=v,
            n_devices=len(devs),
            n_located=len(located),
            gyration_cdf=empirical_cdf(located, quantiles),
            events_cdf=empirical_cdf([d.events_per_day for d in devs], quantiles),
            bytes_cdf=empirical_cdf([d.bytes_per_day for d in devs], quantiles),
            median_gyration_m=median,
            share_stationary=(
                sum(1 for g in located if g == 0.0) / len(located)
                if located
                else None
            ),
        )
    return out


# ----------------------------------------------------------------- reports

RECORDS_THRESHOLD = 2000


def _write_text(path, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_csv(path, schema: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [schema, ",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    _write_text(path, "\n".join(lines) + "\n")


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_json(path, obj) -> None:
    _write_text(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _label_token(label: RoamingLabel) -> str:
    return label.render().replace(":", "-")


def _cdf_rows(cdf: list[tuple[float, float]]):
    return [(v, q) for v, q in cdf]


def write_platform_report(
    out_dir,
    dynamics: Sequence[DeviceDynamics],
    min_share: float = 0.001,
    quantiles: Sequence[float] = DEFAULT_QUANTILES,
) -> list[str]:
    """Emit all platform-side files into out_dir; returns written names."""
    if not dynamics:
        raise EmptyInput("no devices")
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def emit_csv(name, schema, header, rows):
        _write_csv(os.path.join(out_dir, name), schema, header, rows)
        written.append(name)

    heat = hmno_heatmap(dynamics, min_share=min_share)
    emit_csv(
        "platform_heatmap.csv",
        "# schema=heatmap.v1",
        ["visited_mcc", *heat.cols],
        [[r, *row] for r, row in zip(heat.rows, heat.cells)],
    )
    emit_csv(
        "platform_hmno_shares.csv",
        "# schema=shares.v1",
        ["hmno", "share"],
        list(zip(heat.cols, heat.col_totals)),
    )

    roaming = [d for d in dynamics if d.is_roaming]
    emit_csv(
        "platform_cdf_records_all.csv",
        "# schema=cdf.v1",
        ["value", "frac"],
        _cdf_rows(empirical_cdf([d.n_records for d in dynamics], quantiles)),
    )
    emit_csv(
        "platform_cdf_records_roaming.csv",
        "# schema=cdf.v1",
        ["value", "frac"],
        _cdf_rows(empirical_cdf([d.n_records for d in roaming], quantiles)),
    )
    emit_csv(
        "platform_cdf_records_native.csv",
        "# schema=cdf.v1",
        ["value", "frac"],
        _cdf_rows(
            empirical_cdf([d.n_records for d in dynamics if not d.is_roaming], quantiles)
        ),
    )
    emit_csv(
        "platform_cdf_vmnos.csv",
        "# schema=cdf.v1",
        ["value", "frac"],
        _cdf_rows(empirical_cdf([d.distinct_vmnos for d in roaming], quantiles)),
    )
    emit_csv(
        "platform_cdf_switches.csv",
        "# schema=cdf.v1",
        ["value", "frac"],
        _cdf_rows(empirical_cdf([d.n_switches for d in roaming], quantiles)),
    )
    emit_csv(
        "platform_concentration.csv",
        "# schema=concentration.v1",
        ["device_frac", "traffic_frac"],
        signaling_concentration(dynamics),
    )

    n = len(dynamics)
    summary = {
        "schema": "platform_summary.v1",
        "n_devices": n,
        "n_transactions": sum(d.n_records for d in dynamics),
        "hmno_shares": {h: s for h, s in zip(heat.cols, heat.col_totals)},
        "share_roaming": len(roaming) / n,
        "share_failed_only": sum(1 for d in dynamics if d.n_success == 0) / n,
        "share_one_vmno_among_roaming": (
            sum(1 for d in roaming if d.distinct_vmnos == 1) / len(roaming)
            if roaming
            else 0.0
        ),
        "records_threshold": RECORDS_THRESHOLD,
        "share_records_below_threshold": fraction_below(
            (d.n_records for d in dynamics), RECORDS_THRESHOLD
        ),
        "avg_records_per_device": sum(d.n_records for d in dynamics) / n,
        "max_records_per_device": max(d.n_records for d in dynamics),
        "concentration_device_frac_for_75pct_traffic": device_frac_for_traffic(
            dynamics, 0.75
        ),
        "note_ordering": "concentration orders devices by record count descending",
    }
    _write_json(os.path.join(out_dir, "platform_summary.json"), summary)
    written.append("platform_summary.json")
    return written


def write_population_report(
    out_dir,
    summaries: Sequence[DeviceSummary],
    excluded_classes: frozenset[DeviceClass] = DEFAULT_EXCLUDED_CLASSES,
    cohort_first_day: int | None = None,
    quantiles: Sequence[float] = DEFAULT_QUANTILES,
) -> list[str]:
    """Emit all population-side files into out_dir; returns written names."""
    if not summaries:
        raise EmptyInput("no devices")
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def emit_csv(name, schema, header, rows):
        _write_csv(os.path.join(out_dir, name), schema, header, rows)
        written.append(name)

    grid = class_roaming_grid(
        ((s.device_class, s.label) for s in summaries if s.device_class),
        excluded_classes,
    )
    label_headers = [lab.render() for lab in grid.labels]
    emit_csv(
        "population_grid_counts.csv",
        "# schema=grid.v1",
        ["class", *label_headers],
        [[c.render(), *row] for c, row in zip(grid.classes, grid.counts)],
    )
    emit_csv(
        "population_grid_by_class.csv",
        "# schema=grid.v1",
        ["class", *label_headers],
        [[c.render(), *row] for c, row in zip(grid.classes, grid.by_class)],
    )
    emit_csv(
        "population_grid_by_label.csv",
        "# schema=grid.v1",
        ["class", *label_headers],
        [[c.render(), *row] for c, row in zip(grid.classes, grid.by_label)],
    )

    kept = [
        s
        for s in summaries
        if s.device_class and s.device_class not in excluded_classes
    ]
    for axis in ("any", "data", "voice"):
        table = rat_usage_breakdown(kept, by=axis)
        emit_csv(
            f"population_rat_{axis}.csv",
            "# schema=rat.v1",
            ["class", *RAT_CATEGORIES],
            [
                [cls.render(), *[table[cls][cat] for cat in RAT_CATEGORIES]]
                for cls in CLASS_ORDER
                if cls in table
            ],
        )

    dists = traffic_distributions(summaries, excluded_classes, quantiles)
    for (cls, label), cdfs in sorted(
        dists.items(), key=lambda kv: (kv[0][0].render(), kv[0][1].render())
    ):
        for metric in ("events", "calls", "bytes"):
            emit_csv(
                f"population_cdf_{metric}_{cls.render()}_{_label_token(label)}.csv",
                "# schema=cdf.v1",
                ["value", "frac"],
                _cdf_rows(cdfs[metric]),
            )

    for tag, cohort in (("all", None), ("firstday", cohort_first_day)):
        if tag == "firstday" and cohort is None:
            continue
        groups = active_days(kept, cohort_first_day=cohort)
        for (cls, label), days in sorted(
            groups.items(), key=lambda kv: (kv[0][0].render(), kv[0][1].render())
        ):
            emit_csv(
                f"population_cdf_active_days_{tag}_{cls.render()}_{_label_token(label)}.csv",
                "# schema=cdf.v1",
                ["value", "frac"],
                _cdf_rows(empirical_cdf(days, quantiles)),
            )

    n_kept = len(kept)
    class_counts = Counter(s.device_class for s in kept)
    label_counts = Counter(s.label for s in kept)
    data_table = rat_usage_breakdown(kept, by="data")
    summary = {
        "schema": "population_summary.v1",
        "n_devices": len(summaries),
        "n_devices_classified": sum(1 for s in summaries if s.device_class),
        "excluded_classes": sorted(c.render() for c in excluded_classes),
        "n_after_exclusion": n_kept,
        "class_shares": {
            c.render(): class_counts.get(c, 0) / n_kept if n_kept else 0.0
            for c in CLASS_ORDER
            if c not in excluded_classes
        },
        "label_shares": {
            lab.render(): label_counts.get(lab, 0) / n_kept if n_kept else 0.0
            for lab in LABEL_PRECEDENCE
        },
        "share_data_none_by_class": {
            cls.render(): data_table[cls]["none"]
            for cls in CLASS_ORDER
            if cls in data_table
        },
        "empty_grid_classes": sorted(c.render() for c in grid.empty_classes),
        "empty_grid_labels": sorted(lab.render() for lab in grid.empty_labels),
    }
    _write_json(os.path.join(out_dir, "population_summary.json"), summary)
    written.append("population_summary.json")
    return written


def write_verticals_report(
    out_dir,
    summaries: Sequence[DeviceSummary],
    verticals: Sequence[Vertical] = DEFAULT_REPORT_VERTICALS,
    quantiles: Sequence[float] = DEFAULT_QUANTILES,
) -> list[str]:
    """Emit per-vertical CDF files and the verticals summary."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    reports = vertical_report(summaries, verticals, quantiles)
    summary: dict = {"schema": "verticals_summary.v1", "verticals": {}}
    for v in verticals:
        rep = reports[v]
        for metric, cdf in (
            ("gyration", rep.gyration_cdf),
            ("events", rep.events_cdf),
            ("bytes", rep.bytes_cdf),
        ):
            name = f"verticals_cdf_{metric}_{v.render()}.csv"
            _write_csv(
                os.path.join(out_dir, name),
                "# schema=cdf.v1",
                ["value", "frac"],
                _cdf_rows(cdf),
            )
            written.append(name)
        summary["verticals"][v.render()] = {
            "n_devices": rep.n_devices,
            "n_located": rep.n_located,
            "median_gyration_m": rep.median_gyration_m,
            "share_stationary": rep.share_stationary,
            "empty": rep.n_devices == 0,
        }
    _write_json(os.path.join(out_dir, "verticals_summary.json"), summary)
    written.append("verticals_summary.json")
    return written
