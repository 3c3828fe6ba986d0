"""Command-line pipeline driver.

Subcommands hand off through files (the audit trail): `synth` writes a
synthetic fleet, `ingest-check` validates inputs, `catalog` writes daily
device catalogs, `classify` writes the per-device classification,
`report` writes the analytics file sets, `replay-check` cross-checks a
generated fleet against its ground truth.

Exit codes: 0 success, 1 input error, 2 configuration error,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import collections
import os
import shutil
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from typing import Iterable, Iterator

from . import analytics, catalog, classifier, ingest, synthgen
from .config import ConfigError, RunConfig, apply_overrides, load_run_config
from .core import LABEL_PRECEDENCE, InternalError, RoamKitError, RoamingLabel
from .ingest import MalformedLine, ParseError, SkipReport
from .synthgen import InconsistencyFound, InvalidSpec

_LABEL_RANK = {label: i for i, label in enumerate(LABEL_PRECEDENCE)}

_SCHEMAS_CONSUMED = {
    "synth": "produces signaling.v1, radio.v1, usage.v1, tac.v1, sectors.v1, ground_truth.v1",
    "ingest-check": "consumes signaling.v1, radio.v1, usage.v1, tac.v1, sectors.v1",
    "catalog": "consumes radio.v1, usage.v1, tac.v1, sectors.v1; produces catalog.v1, rejects.v1",
    "classify": "consumes catalog.v1, tac.v1; produces classification.v1",
    "report": "consumes signaling.v1, catalog.v1, classification.v1; produces heatmap.v1, cdf.v1, grid.v1, summary JSON",
    "replay-check": "consumes all generated schemas plus ground_truth.v1",
}


# ------------------------------------------------------------------ helpers

def _require_input(value: str | None, name: str) -> str:
    if not value:
        raise ConfigError(f"no {name} input configured (set [inputs].{name} or --{name})")
    if not os.path.exists(value):
        raise ParseError(f"{name} file {value} does not exist")
    return value


def _print_skip_report(name: str, report: SkipReport) -> None:
    print(
        f"{name}: {report.n_parsed} parsed, {report.n_skipped} skipped"
        f" of {report.n_lines} lines"
    )
    for line_no, msg in report.errors[:5]:
        print(f"  line {line_no}: {msg}")
    if report.n_skipped > len(report.errors):
        print(f"  ... and {report.n_skipped - len(report.errors)} more")


def _day_iso(day: int) -> str:
    return catalog.day_to_iso(day)


# -------------------------------------------------------------------- synth

def cmd_synth(args) -> int:
    spec = synthgen.load_fleet_spec(args.spec)
    truths = synthgen.generate(spec, args.out)
    n_platform = sum(1 for t in truths if t.cohort == "platform")
    n_population = len(truths) - n_platform
    print(
        f"wrote {args.out}: {n_platform} platform devices, "
        f"{n_population} population devices, seed {spec.seed}"
    )
    return 0


# ------------------------------------------------------------- ingest-check

def cmd_ingest_check(args) -> int:
    cfg = _load_cfg(args)
    checks = []
    if cfg.signaling:
        checks.append(("signaling", cfg.signaling, ingest.read_signaling_file))
    if cfg.radio:
        checks.append(("radio", cfg.radio, ingest.read_radio_file))
    if cfg.usage:
        checks.append(("usage", cfg.usage, ingest.read_usage_file))
    if not checks and not cfg.tac_catalog and not cfg.sectors:
        raise ConfigError("ingest-check: no inputs configured")
    for name, path, reader in checks:
        _require_input(path, name)
        _, report = reader(path, strict=cfg.strict)
        _print_skip_report(name, report)
    if cfg.tac_catalog:
        _require_input(cfg.tac_catalog, "tac_catalog")
        entries = ingest.load_tac_catalog(cfg.tac_catalog)
        print(f"tac_catalog: {len(entries)} entries")
    if cfg.sectors:
        _require_input(cfg.sectors, "sectors")
        sectors = ingest.load_sector_coords(cfg.sectors)
        print(f"sectors: {len(sectors)} located")
    return 0


# ------------------------------------------------------------------ catalog

def _split_by_day(
    src_path: str,
    tmp_dir: str,
    prefix: str,
    window: tuple[int, int] | None,
    strict: bool,
) -> tuple[dict[int, str], int, int]:
    """Bucket raw record lines into one temp file per day.

    Only the timestamp field is inspected here; full validation happens
    in the per-day parse. Returns (day -> path, skipped, out_of_window).
    """
    handles: dict[int, object] = {}
    paths: dict[int, str] = {}
    n_skipped = 0
    n_outside = 0
    try:
        with open(src_path, "r", encoding="utf-8") as fh:
            for line_no, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split(",", 2)
                try:
                    ts = int(parts[1]) if len(parts) > 1 else -1
                except ValueError:
                    ts = -1
                if ts < 0:
                    if strict:
                        raise MalformedLine("bad timestamp field", line_no)
                    n_skipped += 1
                    continue
                day = ts // 86400
                if window and not (window[0] <= day < window[0] + window[1]):
                    n_outside += 1
                    continue
                handle = handles.get(day)
                if handle is None:
                    paths[day] = os.path.join(tmp_dir, f"{prefix}-{day}.csv")
                    handle = open(paths[day], "w", encoding="utf-8", newline="")
                    handles[day] = handle
                handle.write(line)
                handle.write("\n")
    finally:
        for handle in handles.values():
            handle.close()
    return paths, n_skipped, n_outside


def _catalog_one_day(task) -> tuple[int, int, int, int]:
    """Build and write one day's catalog; runs in a worker process.

    Returns (day, n_entries, n_rejects, n_skipped).
    """
    (day, radio_path, usage_path, out_cat, out_rej, tac_path, sectors_path,
     labeler_cfg, mnc_len, strict) = task
    tacs = ingest.load_tac_catalog(tac_path) if tac_path else {}
    sectors = ingest.load_sector_coords(sectors_path) if sectors_path else None
    report = SkipReport()
    radio_events = []
    usage_records = []
    if radio_path:
        radio_events = list(
            ingest.iter_records(
                radio_path, ingest.parse_radio_event_line, strict, None, report
            )
        )
    if usage_path:
        usage_records = list(
            ingest.iter_records(
                usage_path, ingest.parse_usage_line, strict, None, report
            )
        )
    entries, rejects = catalog.build_daily_catalog(
        day, radio_events, usage_records, tacs, labeler_cfg, sectors
    )
    catalog.write_catalog(out_cat, entries)
    catalog.write_rejects(out_rej, rejects)
    return day, len(entries), len(rejects), report.n_skipped


def cmd_catalog(args) -> int:
    cfg = _load_cfg(args)
    if not cfg.radio and not cfg.usage:
        raise ConfigError("catalog: need [inputs].radio and/or [inputs].usage")
    tac_path = _require_input(cfg.tac_catalog, "tac_catalog")
    sectors_path = cfg.sectors
    if sectors_path and not os.path.exists(sectors_path):
        print(
            f"warning: sector file {sectors_path} missing; mobility fields will be empty",
            file=sys.stderr,
        )
        sectors_path = None
    elif not sectors_path:
        print(
            "warning: no sector file configured; mobility fields will be empty",
            file=sys.stderr,
        )

    window = None
    if cfg.start_day is not None and cfg.n_days is not None:
        window = (cfg.start_day, cfg.n_days)
    out_base = os.path.join(cfg.out_dir, "catalog")
    os.makedirs(out_base, exist_ok=True)

    tmp_dir = tempfile.mkdtemp(prefix=".catalog-split-", dir=cfg.out_dir)
    total_entries = total_rejects = total_skipped = 0
    try:
        radio_days: dict[int, str] = {}
        usage_days: dict[int, str] = {}
        if cfg.radio:
            _require_input(cfg.radio, "radio")
            radio_days, skipped, _ = _split_by_day(
                cfg.radio, tmp_dir, "radio", window, cfg.strict
            )
            total_skipped += skipped
        if cfg.usage:
            _require_input(cfg.usage, "usage")
            usage_days, skipped, _ = _split_by_day(
                cfg.usage, tmp_dir, "usage", window, cfg.strict
            )
            total_skipped += skipped

        days = sorted(set(radio_days) | set(usage_days))
        tasks = [
            (
                day,
                radio_days.get(day),
                usage_days.get(day),
                os.path.join(out_base, f"catalog_{_day_iso(day)}.csv"),
                os.path.join(out_base, f"rejects_{_day_iso(day)}.csv"),
                tac_path,
                sectors_path,
                cfg.labeler,
                cfg.mnc_len_by_mcc,
                cfg.strict,
            )
            for day in days
        ]
        if cfg.workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                results = list(pool.map(_catalog_one_day, tasks))
        else:
            results = [_catalog_one_day(t) for t in tasks]
        for day, n_entries, n_rejects, n_skipped in results:
            total_entries += n_entries
            total_rejects += n_rejects
            total_skipped += n_skipped
            print(f"day {_day_iso(day)}: {n_entries} devices, {n_rejects} rejects")
    finally:
        shutil.rmtree(tmp_dir, ignore_errors=True)
    print(
        f"catalog: {len(days)} days, {total_entries} device-days, "
        f"{total_rejects} rejects, {total_skipped} lines skipped"
    )
    return 0


# ----------------------------------------------------------------- classify

def _catalog_files(cat_dir: str) -> list[str]:
    if not os.path.isdir(cat_dir):
        return []
    return sorted(
        os.path.join(cat_dir, name)
        for name in os.listdir(cat_dir)
        if name.startswith("catalog_") and name.endswith(".csv")
    )


def _iter_catalog_entries(files: Iterable[str]) -> Iterator[catalog.CatalogEntry]:
    for path in files:
        yield from catalog.read_catalog(path)


def _build_profiles(
    entries: Iterable[catalog.CatalogEntry],
    tacs: dict[str, ingest.TacEntry],
    mnc_len: dict | None,
) -> tuple[list[classifier.DeviceProfile], dict[str, RoamingLabel]]:
    """Roll daily catalog rows into per-device classifier profiles plus the
    majority roaming label used for smart-meter tagging."""
    apns: dict[str, set[str]] = collections.defaultdict(set)
    tac_votes: dict[str, collections.Counter] = collections.defaultdict(collections.Counter)
    sim_votes: dict[str, collections.Counter] = collections.defaultdict(collections.Counter)
    label_votes: dict[str, collections.Counter] = collections.defaultdict(collections.Counter)
    has_data: dict[str, bool] = collections.defaultdict(bool)
    has_voice: dict[str, bool] = collections.defaultdict(bool)

    for e in entries:
        dev = e.device
        apns[dev].update(e.apns)
        if e.tac:
            tac_votes[dev][e.tac] += 1
        sim_votes[dev][e.sim_plmn] += 1
        if e.label is not None:
            label_votes[dev][e.label] += 1
        if e.n_data > 0:
            has_data[dev] = True
        if e.n_calls > 0:
            has_voice[dev] = True

    profiles = []
    labels: dict[str, RoamingLabel] = {}
    for dev in sorted(sim_votes):
        votes = tac_votes.get(dev)
        tac = None
        if votes:
            tac = min(votes, key=lambda t: (-votes[t], t))
        sims = sim_votes[dev]
        sim = min(sims, key=lambda s: (-sims[s], s.render()))
        labs = label_votes.get(dev)
        if labs:
            labels[dev] = min(labs, key=lambda l: (-labs[l], _LABEL_RANK[l]))
        apn_infos = frozenset(ingest.parse_apn(a, mnc_len) for a in apns[dev])
        profiles.append(
            classifier.DeviceProfile(
                device=dev,
                sim_plmn=sim,
                apns=apn_infos,
                tac=tac,
                tac_entry=tacs.get(tac) if tac else None,
                has_data=has_data[dev],
                has_voice=has_voice[dev],
                apn_missing=has_data[dev] and not apns[dev],
            )
        )
    return profiles, labels


def cmd_classify(args) -> int:
    cfg = _load_cfg(args)
    cat_dir = args.catalog_dir or os.path.join(cfg.out_dir, "catalog")
    files = _catalog_files(cat_dir)
    if not files and not os.path.isdir(cat_dir):
        raise ParseError(f"catalog directory {cat_dir} does not exist (run catalog first)")
    tacs = ingest.load_tac_catalog(cfg.tac_catalog) if cfg.tac_catalog else {}
    profiles, labels = _build_profiles(
        _iter_catalog_entries(files), tacs, cfg.mnc_len_by_mcc
    )
    rows = classifier.classify_all(profiles, cfg.keywords, cfg.smip, labels)
    out_path = os.path.join(cfg.out_dir, "classification.csv")
    os.makedirs(cfg.out_dir, exist_ok=True)
    classifier.write_classification(out_path, rows)
    counts = collections.Counter(r.device_class for r in rows)
    summary = ", ".join(
        f"{c.render()}={counts.get(c, 0)}" for c in analytics.CLASS_ORDER
    )
    print(f"classified {len(rows)} devices ({summary}) -> {out_path}")
    return 0


# ------------------------------------------------------------------- report

def _report_platform(cfg: RunConfig, out_dir: str) -> int:
    path = _require_input(cfg.signaling, "signaling")
    report = SkipReport()
    stream = ingest.iter_signaling_file(path, strict=cfg.strict, report=report)
    dynamics = analytics.device_dynamics(stream, cfg.native_networks or None)
    if not dynamics:
        raise ParseError(f"no parseable signaling records in {path}")
    written = analytics.write_platform_report(out_dir, dynamics, cfg.min_share)
    print(
        f"platform report: {len(dynamics)} devices, "
        f"{report.n_parsed} records ({report.n_skipped} skipped), "
        f"{len(written)} files -> {out_dir}"
    )
    return 0


def _load_summaries(cfg: RunConfig, args) -> list[analytics.DeviceSummary]:
    cat_dir = args.catalog_dir or os.path.join(cfg.out_dir, "catalog")
    files = _catalog_files(cat_dir)
    if not files:
        raise ParseError(
            f"no catalog files in {cat_dir} (run the catalog subcommand first)"
        )
    cls_path = os.path.join(cfg.out_dir, "classification.csv")
    if not os.path.exists(cls_path):
        raise ParseError(
            f"{cls_path} does not exist (run the classify subcommand first)"
        )
    classification = {
        row.device: row for row in classifier.read_classification(cls_path)
    }
    return analytics.device_summaries(
        _iter_catalog_entries(files), classification
    )


def _report_population(cfg: RunConfig, args, out_dir: str) -> int:
    summaries = _load_summaries(cfg, args)
    cohort_day = cfg.start_day if args.cohort_first_day else None
    written = analytics.write_population_report(
        out_dir,
        summaries,
        excluded_classes=cfg.excluded_classes,
        cohort_first_day=cohort_day,
    )
    print(
        f"population report: {len(summaries)} devices, {len(written)} files -> {out_dir}"
    )
    return 0


def _report_verticals(cfg: RunConfig, args, out_dir: str) -> int:
    summaries = _load_summaries(cfg, args)
    tagged = sum(1 for s in summaries if s.smip)
    with_vertical = sum(
        1 for s in summaries if s.vertical in analytics.DEFAULT_REPORT_VERTICALS
    )
    if tagged == 0 and with_vertical == 0:
        print(
            "verticals report needs smart-meter tags or vertical assignments; "
            "none found in classification.csv. Run classify with the smip "
            "and keyword configuration first.",
            file=sys.stderr,
        )
        return 1
    written = analytics.write_verticals_report(out_dir, summaries)
    print(
        f"verticals report: {tagged} tagged meters, {with_vertical} vertical-assigned "
        f"devices, {len(written)} files -> {out_dir}"
    )
    return 0


def cmd_report(args) -> int:
    cfg = _load_cfg(args)
    out_dir = os.path.join(cfg.out_dir, "reports")
    which = args.which
    rc = 0
    if which in ("platform", "all"):
        rc = rc or _report_platform(cfg, out_dir)
    if which in ("population", "all"):
        rc = rc or _report_population(cfg, args, out_dir)
    if which in ("verticals", "all"):
        rc = rc or _report_verticals(cfg, args, out_dir)
    return rc


# ------------------------------------------------------------- replay-check

def cmd_replay_check(args) -> int:
    report = synthgen.replay_check(args.dir)
    print(
        f"replay check passed: {report['checked_platform']} platform devices, "
        f"{report['checked_population']} population devices consistent"
    )
    return 0


# -------------------------------------------------------------------- wiring

def _load_cfg(args) -> RunConfig:
    cfg = load_run_config(getattr(args, "config", None))
    return apply_overrides(
        cfg,
        signaling=getattr(args, "signaling", None),
        radio=getattr(args, "radio", None),
        usage=getattr(args, "usage", None),
        tac_catalog=getattr(args, "tac_catalog", None),
        sectors=getattr(args, "sectors", None),
        out_dir=getattr(args, "out_dir", None),
        strict=(True if getattr(args, "strict", False) else None),
        workers=getattr(args, "workers", None),
        excluded_classes=(getattr(args, "exclude_class", None) or None),
        start_day=getattr(args, "start_day", None),
        n_days=getattr(args, "n_days", None),
        home_plmn=getattr(args, "home_plmn", None),
        min_share=getattr(args, "min_share", None),
    )


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="run configuration TOML")
    sub.add_argument("--signaling", help="signaling transactions file (signaling.v1)")
    sub.add_argument("--radio", help="radio events file (radio.v1)")
    sub.add_argument("--usage", help="usage records file (usage.v1)")
    sub.add_argument("--tac-catalog", dest="tac_catalog", help="TAC catalog file (tac.v1)")
    sub.add_argument("--sectors", help="sector coordinates file (sectors.v1)")
    sub.add_argument("--out-dir", dest="out_dir", help="output directory")
    sub.add_argument("--strict", action="store_true", default=False,
                     help="fail on the first malformed line instead of counting")
    sub.add_argument("--workers", type=int, help="worker process count")
    sub.add_argument("--exclude-class", dest="exclude_class", action="append",
                     help="device class excluded from analytics (repeatable)")
    sub.add_argument("--start-day", dest="start_day", help="window start (ISO date)")
    sub.add_argument("--n-days", dest="n_days", type=int, help="window length in days")
    sub.add_argument("--home-plmn", dest="home_plmn", help="studied operator PLMN, e.g. 234-15")
    sub.add_argument("--min-share", dest="min_share", type=float,
                     help="heatmap row fold threshold")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roamkit",
        description="Batch analytics for cellular roaming measurement data.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("synth", help="generate a synthetic fleet",
                        epilog=_SCHEMAS_CONSUMED["synth"])
    p.add_argument("spec", help="fleet spec TOML")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = subs.add_parser("ingest-check", help="validate input files and report counts",
                        epilog=_SCHEMAS_CONSUMED["ingest-check"])
    _add_common(p)
    p.set_defaults(func=cmd_ingest_check)

    p = subs.add_parser("catalog", help="build daily device catalogs",
                        epilog=_SCHEMAS_CONSUMED["catalog"])
    _add_common(p)
    p.set_defaults(func=cmd_catalog)

    p = subs.add_parser("classify", help="classify devices from the catalogs",
                        epilog=_SCHEMAS_CONSUMED["classify"])
    _add_common(p)
    p.add_argument("--catalog-dir", dest="catalog_dir",
                   help="catalog directory (default <out_dir>/catalog)")
    p.set_defaults(func=cmd_classify)

    p = subs.add_parser("report", help="write analytics reports",
                        epilog=_SCHEMAS_CONSUMED["report"])
    _add_common(p)
    p.add_argument("--which", choices=("platform", "population", "verticals", "all"),
                   default="all")
    p.add_argument("--catalog-dir", dest="catalog_dir",
                   help="catalog directory (default <out_dir>/catalog)")
    p.add_argument("--cohort-first-day", dest="cohort_first_day", action="store_true",
                   help="restrict active-day curves to devices first seen on the window start day")
    p.set_defaults(func=cmd_report)

    p = subs.add_parser("replay-check", help="verify a generated fleet against its truth",
                        epilog=_SCHEMAS_CONSUMED["replay-check"])
    p.add_argument("dir", help="directory written by synth")
    p.set_defaults(func=cmd_replay_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InvalidSpec) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ParseError, InconsistencyFound, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except InternalError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    except RoamKitError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
