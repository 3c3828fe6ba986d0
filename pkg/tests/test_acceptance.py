"""Acceptance suite: the eight checks the toolkit must pass.

1. switch counting equals a brute-force oracle on 1,000 devices, < 5 s
2. gyration matches an independent recomputation within 0.1 m on 200
   device-days, single-sector days exactly 0, < 5 s
3. planted classes recovered 100% on a 10,000-device corpus, < 10 s
4. planted HMNO shares (0.523/0.422/0.047/0.008) recovered within
   0.5 pp on a 50,000-device fleet, < 30 s
5. planted distribution shapes (65% one-VMNO among roamers, 97% of
   devices below 2,000 records) recovered within 1 pp at 20,000
   devices, < 30 s
6. per-day byte conservation exact; normalized matrix axes sum to
   1 +/- 1e-9; 10,000-pair label fuzz leaves no in-scope pair unlabeled
7. two full synth -> report runs are byte-identical at 1 and 8 workers
8. ingest + catalog over 1,000,000 records in < 60 s

Each test times itself and records a one-line summary that the
conftest hook prints after the run.
"""

import hashlib
import math
import os
import random
import shutil
from time import perf_counter

from roamkit import classifier
from roamkit.analytics import (
    class_roaming_grid,
    device_dynamics,
    device_summaries,
    fraction_below,
    hmno_heatmap,
)
from roamkit.catalog import build_daily_catalog, compute_mobility, compute_sector_dwell
from roamkit.classifier import (
    DeviceProfile,
    KeywordConfig,
    SmipConfig,
    classify_all,
)
from roamkit.cli import _build_profiles, main
from roamkit.core import (
    DeviceClass,
    GsmaClassHint,
    MessageType,
    Rat,
    ResultCode,
    plmn,
)
from roamkit.ingest import (
    RadioEvent,
    SectorCoord,
    SignalingTransaction,
    TacEntry,
    iter_signaling_file,
    load_tac_catalog,
    parse_apn,
    parse_bands,
    parse_radio_event_line,
    parse_usage_line,
    read_records,
)
from roamkit.labeler import LabelerConfig, OutOfScopeObservation, label_roaming
from roamkit.synthgen import (
    FILE_NAMES,
    FleetSpec,
    HmnoSpec,
    PlatformSpec,
    PopulationSpec,
    RecordsModel,
    generate,
)

from oracles import (
    oracle_dwell,
    oracle_gyration,
    oracle_order,
    oracle_switches,
)

OK = ResultCode("OK")
UK_POOL = (
    (plmn("234", "15"), 2.0),
    (plmn("234", "30"), 1.0),
    (plmn("234", "20"), 1.0),
    (plmn("234", "33"), 0.5),
)


def test_criterion_1_switch_oracle(record_property):
    record_property("criterion", "1 switches-vs-oracle")
    rng = random.Random(101)
    venue_pool = [plmn("234", f"{i:02d}") for i in range(10, 18)]
    t0 = perf_counter()
    mismatches = 0
    n_devices = 1000
    for d in range(n_devices):
        n = rng.randint(1, 500)
        txns = [
            SignalingTransaction(
                f"d{d}", rng.randint(0, 10**6), plmn("214", "07"),
                rng.choice(venue_pool), MessageType.UPDATE_LOCATION, OK,
            )
            for _ in range(n)
        ]
        from roamkit.analytics import count_vmno_switches
        got = count_vmno_switches(txns)
        want = oracle_switches([t.visited_plmn for t in oracle_order(txns)])
        mismatches += got != want
    elapsed = perf_counter() - t0
    record_property(
        "detail", f"({mismatches}/{n_devices} mismatches, {elapsed:.2f}s)")
    assert mismatches == 0
    assert elapsed < 5.0


def test_criterion_2_mobility_oracle(record_property):
    record_property("criterion", "2 gyration-vs-oracle")
    rng = random.Random(202)
    t0 = perf_counter()
    worst = 0.0
    n_single_exact = 0
    n_days = 200
    for d in range(n_days):
        n_sectors = rng.randint(1, 8)
        coords = {
            f"s{k}": SectorCoord(
                f"s{k}", rng.uniform(-60, 60), rng.uniform(-179, 179))
            for k in range(n_sectors)
        }
        n_events = rng.randint(1, 40)
        pairs = [
            (rng.randint(0, 86399), f"s{rng.randrange(n_sectors)}")
            for _ in range(n_events)
        ]
        events = [
            RadioEvent(f"d{d}", ts, plmn("234", "15"), "35000101", sector,
                       rng.choice(list(Rat)), "ATTACH", OK)
            for ts, sector in pairs
        ]
        dwells = compute_sector_dwell(events)
        _, gyr = compute_mobility(dwells, coords)
        if len({s for _, s in pairs}) == 1:
            n_single_exact += 1
            assert gyr == 0.0
            continue
        dwell_map = oracle_dwell(pairs)
        pts = [(coords[s].lat, coords[s].lon) for s in sorted(dwell_map)]
        wts = [float(dwell_map[s]) for s in sorted(dwell_map)]
        worst = max(worst, abs(gyr - oracle_gyration(pts, wts)))
    elapsed = perf_counter() - t0
    record_property(
        "detail",
        f"(max |delta|={worst:.4f} m over {n_days} device-days, "
        f"{n_single_exact} single-sector exact, {elapsed:.2f}s)",
    )
    assert worst <= 0.1
    assert elapsed < 5.0


def _tac(t, man, mod, os_name, hint, bands="2G|3G"):
    return TacEntry(t, man, mod, os_name, hint, parse_bands(bands))


def test_criterion_3_classification_recovery(record_property):
    record_property("criterion", "3 class-recovery-10k")
    smart_tacs = [
        _tac("40000101", "Apple", "iPhone8", "ios", GsmaClassHint.SMARTPHONE, "2G|3G|4G"),
        _tac("40000102", "Samsung", "GalaxyS9", "android", GsmaClassHint.SMARTPHONE, "2G|3G|4G"),
    ]
    feat_hint_tacs = [
        _tac("40000201", "Nokia", "105", "none", GsmaClassHint.FEATURE_PHONE, "2G"),
    ]
    feat_other_tacs = [
        _tac("40000202", "Alcatel", "2038", "none", GsmaClassHint.OTHER, "2G"),
    ]
    m2m_tacs = [
        _tac("40000301", "Telit", "ME910", "none", GsmaClassHint.MODULE),
        _tac("40000302", "Gemalto", "EHS6", "none", GsmaClassHint.MODULE),
    ]
    maybe_tacs = [
        _tac("40000401", "Neoway", "M590", "none", GsmaClassHint.OTHER, "2G"),
    ]
    consumer_apns = ["internet", "payandgo.example"]
    m2m_apns = ["scania.fleet.example", "meter.grid.example",
                "telemetry.sensors.example"]

    rng = random.Random(303)
    planted: list[tuple[DeviceProfile, DeviceClass]] = []

    def prof(device, apns, tac_entry, has_data, has_voice, apn_missing=False):
        return DeviceProfile(
            device=device,
            sim_plmn=plmn("234", "15"),
            apns=frozenset(parse_apn(a) for a in apns),
            tac=tac_entry.tac if tac_entry else None,
            tac_entry=tac_entry,
            has_data=has_data,
            has_voice=has_voice,
            apn_missing=apn_missing,
        )

    for i in range(3000):
        planted.append((
            prof(f"s{i}", [rng.choice(consumer_apns)], rng.choice(smart_tacs),
                 True, rng.random() < 0.5),
            DeviceClass.SMART,
        ))
    for i in range(750):
        planted.append((
            prof(f"fa{i}", [], rng.choice(feat_hint_tacs), False, True),
            DeviceClass.FEAT,
        ))
    for i in range(750):
        planted.append((
            prof(f"fb{i}", [rng.choice(consumer_apns)],
                 rng.choice(feat_other_tacs), True, True),
            DeviceClass.FEAT,
        ))
    for i in range(2800):
        planted.append((
            prof(f"m{i}", [rng.choice(m2m_apns)], rng.choice(m2m_tacs),
                 True, False),
            DeviceClass.M2M,
        ))
    for i in range(700):  # propagated twins: same TAC pair, no APN
        planted.append((
            prof(f"mp{i}", [], rng.choice(m2m_tacs), True, False,
                 apn_missing=True),
            DeviceClass.M2M,
        ))
    for i in range(1200):
        planted.append((
            prof(f"ya{i}", [], rng.choice(maybe_tacs), False, True),
            DeviceClass.M2M_MAYBE,
        ))
    for i in range(800):
        planted.append((
            prof(f"yb{i}", [], None, False, True),
            DeviceClass.M2M_MAYBE,
        ))
    assert len(planted) == 10000
    rng.shuffle(planted)

    t0 = perf_counter()
    rows = classify_all([p for p, _ in planted], KeywordConfig(), SmipConfig())
    elapsed = perf_counter() - t0
    got = {r.device: r.device_class for r in rows}
    misses = sum(1 for p, want in planted if got[p.device] is not want)
    record_property(
        "detail", f"({len(planted) - misses}/10000 recovered, {elapsed:.2f}s)")
    assert misses == 0
    assert elapsed < 10.0


def test_criterion_4_hmno_share_recovery(record_property, tmp_path):
    record_property("criterion", "4 hmno-shares-50k")
    shares = {
        "214-07": 0.523,
        "310-410": 0.422,
        "262-02": 0.047,
        "222-10": 0.008,
    }
    spec = FleetSpec(
        seed=404, n_days=5,
        platform=PlatformSpec(
            n_devices=50000,
            hmnos=tuple(
                HmnoSpec(plmn(*k.split("-")), v, roaming_fraction=0.8,
                         vmno_pool=UK_POOL)
                for k, v in shares.items()
            ),
            records=RecordsModel(median=4.0, sigma=0.8, max=60),
        ),
        population=PopulationSpec(n_devices=0),
    )
    t0 = perf_counter()
    generate(spec, tmp_path)
    dynamics = device_dynamics(
        iter_signaling_file(tmp_path / FILE_NAMES["signaling"]))
    heat = hmno_heatmap(dynamics)
    elapsed = perf_counter() - t0
    got = dict(zip(heat.cols, heat.col_totals))
    worst = max(abs(got[k] - v) for k, v in shares.items())
    record_property(
        "detail",
        f"(worst share error {worst * 100:.3f} pp over "
        f"{len(dynamics)} devices, {elapsed:.1f}s)",
    )
    assert set(got) == set(shares)
    assert worst <= 0.005
    assert elapsed < 30.0


def test_criterion_5_distribution_shapes(record_property, tmp_path):
    record_property("criterion", "5 planted-distributions-20k")
    spec = FleetSpec(
        seed=505, n_days=5,
        platform=PlatformSpec(
            n_devices=20000,
            hmnos=(
                HmnoSpec(plmn("214", "07"), 0.6, roaming_fraction=0.8,
                         vmno_pool=UK_POOL),
                HmnoSpec(plmn("262", "02"), 0.4, roaming_fraction=0.8,
                         vmno_pool=UK_POOL),
            ),
            vmno_count_mix=((1, 0.65), (2, 0.20), (3, 0.10), (4, 0.05)),
            records=RecordsModel(
                median=10.0, sigma=1.0, threshold=2000,
                below_threshold_fraction=0.97, max=4000),
        ),
        population=PopulationSpec(n_devices=0),
    )
    t0 = perf_counter()
    generate(spec, tmp_path)
    dynamics = device_dynamics(
        iter_signaling_file(tmp_path / FILE_NAMES["signaling"]))
    roaming = [d for d in dynamics if d.is_roaming]
    one_vmno = sum(1 for d in roaming if d.distinct_vmnos == 1) / len(roaming)
    below = fraction_below([d.n_records for d in dynamics], 2000)
    elapsed = perf_counter() - t0
    record_property(
        "detail",
        f"(one-VMNO {one_vmno * 100:.2f}% want 65, below-2000 "
        f"{below * 100:.2f}% want 97, {elapsed:.1f}s)",
    )
    assert len(dynamics) == 20000
    assert abs(one_vmno - 0.65) <= 0.01
    assert abs(below - 0.97) <= 0.01
    assert elapsed < 30.0


def test_criterion_6_conservation_and_fuzz(record_property, tmp_path):
    record_property("criterion", "6 conservation-normalization-fuzz")

    # (a) per-day byte conservation on a generated population fleet
    spec = FleetSpec(
        seed=606, n_days=3,
        platform=PlatformSpec(n_devices=0),
        population=PopulationSpec(n_devices=2000, smip_native_count=5,
                                  smip_roaming_count=5),
    )
    generate(spec, tmp_path)
    events, _ = read_records(tmp_path / FILE_NAMES["radio"], parse_radio_event_line)
    usage, _ = read_records(tmp_path / FILE_NAMES["usage"], parse_usage_line)
    tacs = load_tac_catalog(tmp_path / FILE_NAMES["tac"])
    lab_cfg = LabelerConfig(home_plmn=plmn("234", "15"),
                            mvno_plmns=frozenset({plmn("234", "38")}))
    entries = []
    for day in range(spec.start_day, spec.start_day + spec.n_days):
        got, rejects = build_daily_catalog(day, events, usage, tacs, lab_cfg)
        assert rejects == []
        day_bytes = sum(
            r.bytes for r in usage
            if r.timestamp // 86400 == day and r.kind.render() == "DATA"
        )
        assert sum(e.total_bytes for e in got) == day_bytes  # exact
        entries.extend(got)

    # (b) normalized axes: class/label grid from the real pipeline plus
    # an HMNO heatmap from a small platform fleet
    profiles, labels = _build_profiles(entries, tacs, None)
    rows = classify_all(profiles, KeywordConfig(), SmipConfig(), labels=labels)
    summaries = device_summaries(
        entries, {r.device: r for r in rows})
    grid = class_roaming_grid(
        [(s.device_class, s.label) for s in summaries if s.device_class],
        excluded_classes=frozenset(),
    )
    for i, row in enumerate(grid.counts):
        if sum(row):
            assert abs(sum(grid.by_class[i]) - 1.0) <= 1e-9
    for j in range(len(grid.labels)):
        col = [grid.counts[i][j] for i in range(len(grid.classes))]
        if sum(col):
            col_sum = sum(grid.by_label[i][j] for i in range(len(grid.classes)))
            assert abs(col_sum - 1.0) <= 1e-9

    plat_dir = tmp_path / "plat"
    plat_dir.mkdir()
    generate(
        FleetSpec(seed=607, n_days=2, platform=PlatformSpec(
            n_devices=1000,
            hmnos=(HmnoSpec(plmn("214", "07"), 0.7, roaming_fraction=0.9,
                            vmno_pool=UK_POOL),
                   HmnoSpec(plmn("310", "410"), 0.3, roaming_fraction=0.4,
                            vmno_pool=UK_POOL[:2])),
            records=RecordsModel(median=6.0, sigma=0.9, max=80),
        ), population=PopulationSpec(n_devices=0)),
        plat_dir,
    )
    heat = hmno_heatmap(device_dynamics(
        iter_signaling_file(plat_dir / FILE_NAMES["signaling"])))
    for row in heat.cells:
        assert abs(sum(row) - 1.0) <= 1e-9
    assert abs(sum(heat.col_totals) - 1.0) <= 1e-9

    # (c) label fuzz: 10,000 random (sim, visited) pairs; every pair is
    # either labeled or provably out of scope, never silently dropped
    rng = random.Random(608)
    mccs = ["234", "208", "262", "310", "222", "204", "214"]
    home = plmn("234", "15")
    mvno = plmn("234", "38")
    cfg = LabelerConfig(home_plmn=home, mvno_plmns=frozenset({mvno}))

    def any_plmn():
        return plmn(rng.choice(mccs), f"{rng.randint(0, 99):02d}")

    n_pairs = 10000
    unlabeled_in_scope = 0
    n_labeled = 0
    seen = set()
    for _ in range(n_pairs):
        # bias toward in-scope combinations so all six labels come up,
        # but keep a uniform tail to probe the rejection paths too
        sim = rng.choice([home, mvno, any_plmn(), any_plmn()])
        visited = rng.choice([home, any_plmn()])
        net_abroad = visited.mcc != home.mcc
        in_scope = (visited == home) or (
            net_abroad and (sim == home or sim in cfg.mvno_plmns))
        try:
            label = label_roaming(sim, visited, cfg)
        except OutOfScopeObservation:
            if in_scope:
                unlabeled_in_scope += 1
            continue
        n_labeled += 1
        seen.add(label.render())
        assert in_scope
        assert label.render() in ("H:H", "V:H", "N:H", "I:H", "H:A", "V:A")
    record_property(
        "detail",
        f"(bytes exact x{spec.n_days} days, axes normalized, "
        f"{n_labeled}/{n_pairs} pairs labeled across {len(seen)} labels, "
        f"{unlabeled_in_scope} unlabeled in-scope)",
    )
    assert unlabeled_in_scope == 0
    assert seen == {"H:H", "V:H", "N:H", "I:H", "H:A", "V:A"}


FLEET7 = """\
seed = 77
start_day = "2018-11-01"
n_days = 3

[platform]
n_devices = 60
failure_only_fraction = 0.3

[[platform.hmnos]]
plmn = "214-07"
share = 1.0
roaming_fraction = 0.8
vmno_pool = [["234-15", 2.0], ["234-30", 1.0], ["234-20", 1.0]]

[platform.records]
median = 8.0
sigma = 1.0
max = 200

[population]
n_devices = 80
smip_native_count = 3
smip_roaming_count = 3
"""

RUN7 = """\
[inputs]
signaling = "{d}/signaling.csv"
radio = "{d}/radio.csv"
usage = "{d}/usage.csv"
tac_catalog = "{d}/tac_catalog.csv"
sectors = "{d}/sectors.csv"

[run]
out_dir = "{out}"
workers = {workers}

[labeler]
home_plmn = "234-15"
mvno_plmns = ["234-38"]
"""


def _tree_hash(root):
    out = {}
    for base, _, files in os.walk(root):
        for name in files:
            p = os.path.join(base, name)
            rel = os.path.relpath(p, root)
            with open(p, "rb") as fh:
                out[rel] = hashlib.sha256(fh.read()).hexdigest()
    return out


def test_criterion_7_determinism_across_workers(record_property, tmp_path):
    record_property("criterion", "7 byte-identical-runs")
    trees = []
    for run, workers in (("one", 1), ("two", 8)):
        root = tmp_path / run
        data = root / "data"
        root.mkdir()
        spec_path = root / "fleet.toml"
        spec_path.write_text(FLEET7)
        assert main(["synth", str(spec_path), "--out", str(data)]) == 0
        cfg = root / "run.toml"
        cfg.write_text(RUN7.format(d=data, out=root / "out", workers=workers))
        assert main(["catalog", "--config", str(cfg)]) == 0
        assert main(["classify", "--config", str(cfg)]) == 0
        assert main(["report", "--config", str(cfg), "--which", "all"]) == 0
        trees.append((_tree_hash(data), _tree_hash(root / "out")))
        shutil.rmtree(data)

    (data1, out1), (data2, out2) = trees
    record_property(
        "detail",
        f"({len(data1)} data files, {len(out1)} output files compared)",
    )
    assert data1 == data2
    assert out1 == out2
    assert len(out1) > 10


def test_criterion_8_throughput_million_records(record_property, tmp_path):
    record_property("criterion", "8 ingest-catalog-1M")
    spec = FleetSpec(
        seed=808, n_days=5,
        platform=PlatformSpec(n_devices=0),
        population=PopulationSpec(
            n_devices=17000,
            events_per_day=(20.0, 12.0, 14.0, 10.0),
            smip_native_count=10, smip_roaming_count=10,
        ),
    )
    generate(spec, tmp_path)
    n_records = 0
    for name in ("radio", "usage"):
        with open(tmp_path / FILE_NAMES[name]) as fh:
            n_records += sum(1 for line in fh if not line.startswith("#"))
    assert n_records >= 1_000_000

    cfg = tmp_path / "run.toml"
    cfg.write_text(RUN7.format(d=tmp_path, out=tmp_path / "out", workers=4))
    t0 = perf_counter()
    assert main(["catalog", "--config", str(cfg)]) == 0
    elapsed = perf_counter() - t0
    record_property(
        "detail", f"({n_records} records cataloged in {elapsed:.1f}s)")
    assert elapsed < 60.0
    n_days = len(list((tmp_path / "out" / "catalog").glob("catalog_*.csv")))
    assert n_days == spec.n_days


def test_quota_helper_sanity():
    """Cross-check: quota planting really is exact at awkward sizes."""
    from roamkit.synthgen import _quota_counts
    for n in (1, 7, 97, 10007):
        counts = _quota_counts(n, (0.523, 0.422, 0.047, 0.008))
        assert sum(counts) == n
        for c, share in zip(counts, (0.523, 0.422, 0.047, 0.008)):
            assert abs(c / n - share) < 1.0 / n + 1e-12
    assert math.isclose(sum((0.523, 0.422, 0.047, 0.008)), 1.0)
