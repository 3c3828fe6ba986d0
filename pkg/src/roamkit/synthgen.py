"""Deterministic synthetic-fleet generator with planted ground truth.

Two device cohorts mirror the two real data sources. The *platform*
cohort emits control-plane signaling transactions: each device belongs
to a home operator, and roaming devices spread their records over a
planted number of visited operators with a planted switch count. The
*population* cohort emits radio events and usage records as seen by one
studied operator: each device carries a planted roaming label, device
class, vertical, activity mask, mobility footprint, and (for designated
smart meters) a SMIP tag.

Planting uses exact quotas (largest remainder, or an even spread for
binary flags) rather than independent sampling, so recovered shares
match targets to within one device. Randomness comes from numpy's
Philox counter-based generator; device i draws from the base stream
jumped i+1 times, so per-device output is independent of generation
order and of every other device. The seed is recorded in each output
file header.

Ground truth is derived from the construction itself, never by running
the pipeline's labeler or classifier; the pipeline and the truth are
two independent routes to the same answer.

Record files are written grouped per device, time-ascending within a
device; nothing downstream relies on global file order.
"""

from __future__ import annotations

import csv
import datetime
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import (
    HA,
    HH,
    IH,
    NH,
    VA,
    VH,
    DeviceClass,
    GsmaClassHint,
    Plmn,
    Rat,
    RoamKitError,
    RoamingLabel,
    Vertical,
    plmn,
)
from .ingest import (
    SectorCoord,
    TacEntry,
    parse_bands,
    read_radio_file,
    read_signaling_file,
    read_usage_file,
    write_sector_coords,
    write_tac_catalog,
)

try:  # 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - 3.10 fallback
    import tomli as tomllib


class InvalidSpec(RoamKitError):
    """FleetSpec failed validation; the message names the field."""


class InconsistencyFound(RoamKitError):
    """replay_check found a record that contradicts the ground truth."""


# --------------------------------------------------------------- spec types

_EPOCH = datetime.date(1970, 1, 1).toordinal()


def _iso_to_day(text: str) -> int:
    return datetime.date.fromisoformat(text).toordinal() - _EPOCH


@dataclass(frozen=True)
class RecordsModel:
    """Heavy-tailed per-device record-count model for the platform cohort.

    With ``below_threshold_fraction`` set, that exact share of devices is
    planted under ``threshold`` records and the rest at or above it (the
    tail is threshold plus a scaled Pareto draw).
    """

    family: str = "lognormal"  # or "pareto"
    median: float = 40.0
    sigma: float = 1.2
    alpha: float = 1.5
    min: int = 1
    max: int = 500000
    threshold: int = 2000
    below_threshold_fraction: float | None = None

    def validate(self) -> None:
        if self.family not in ("lognormal", "pareto"):
            raise InvalidSpec(f"records.family {self.family!r} unknown")
        if self.median <= 0 or self.sigma <= 0 or self.alpha <= 0:
            raise InvalidSpec("records model parameters must be positive")
        if self.min < 1 or self.max < self.min:
            raise InvalidSpec("records.min/max malformed")
        if self.below_threshold_fraction is not None and not (
            0.0 <= self.below_threshold_fraction <= 1.0
        ):
            raise InvalidSpec("records.below_threshold_fraction out of [0,1]")


@dataclass(frozen=True)
class HmnoSpec:
    plmn: Plmn
    share: float
    roaming_fraction: float = 1.0
    native_network: Plmn | None = None  # None: the operator's own network
    vmno_pool: tuple[tuple[Plmn, float], ...] = ()

    def validate(self) -> None:
        if not (0.0 <= self.share <= 1.0):
            raise InvalidSpec(f"hmno {self.plmn.render()}: share out of [0,1]")
        if not (0.0 <= self.roaming_fraction <= 1.0):
            raise InvalidSpec(
                f"hmno {self.plmn.render()}: roaming_fraction out of [0,1]"
            )
        if self.roaming_fraction > 0.0 and not self.vmno_pool:
            raise InvalidSpec(
                f"hmno {self.plmn.render()}: empty vmno_pool with roaming devices"
            )
        if any(w <= 0 for _, w in self.vmno_pool):
            raise InvalidSpec(f"hmno {self.plmn.render()}: non-positive pool weight")


@dataclass(frozen=True)
class PlatformSpec:
    n_devices: int = 0
    hmnos: tuple[HmnoSpec, ...] = ()
    failure_only_fraction: float = 0.0
    failure_noise: float = 0.0
    switch_rate: float = 0.02  # expected extra switches per record
    vmno_count_mix: tuple[tuple[int, float], ...] = ((1, 0.65), (2, 0.20), (3, 0.10), (4, 0.05))
    records: RecordsModel = field(default_factory=RecordsModel)

    def validate(self) -> None:
        if self.n_devices < 0:
            raise InvalidSpec("platform.n_devices negative")
        if self.n_devices and not self.hmnos:
            raise InvalidSpec("platform.hmnos empty")
        if self.hmnos:
            total = sum(h.share for h in self.hmnos)
            if abs(total - 1.0) > 1e-9:
                raise InvalidSpec(f"platform hmno shares sum to {total}, want 1")
        for h in self.hmnos:
            h.validate()
        if not (0.0 <= self.failure_only_fraction <= 1.0):
            raise InvalidSpec("platform.failure_only_fraction out of [0,1]")
        if not (0.0 <= self.failure_noise < 1.0):
            raise InvalidSpec("platform.failure_noise out of [0,1)")
        if self.switch_rate < 0:
            raise InvalidSpec("platform.switch_rate negative")
        if self.vmno_count_mix:
            total = sum(w for _, w in self.vmno_count_mix)
            if abs(total - 1.0) > 1e-9:
                raise InvalidSpec(f"platform vmno_count_mix sums to {total}, want 1")
            if any(k < 1 for k, _ in self.vmno_count_mix):
                raise InvalidSpec("platform vmno_count_mix keys must be >= 1")
        self.records.validate()


@dataclass(frozen=True)
class MobilityModel:
    n_sectors: int = 1
    spread: int = 1  # sector-grid stride; larger means farther apart

    def validate(self) -> None:
        if self.n_sectors < 1 or self.spread < 1:
            raise InvalidSpec("mobility model values must be >= 1")


_CLASS_KEYS = ("smart", "feat", "m2m", "m2m-maybe")
_LABEL_KEYS = ("H:H", "V:H", "N:H", "I:H", "H:A", "V:A")
_VERTICAL_KEYS = ("energy", "automotive", "global-iot-sim", "other-m2m")


@dataclass(frozen=True)
class PopulationSpec:
    n_devices: int = 0
    class_mix: tuple[float, float, float, float] = (0.25, 0.10, 0.45, 0.20)
    label_mix: tuple[float, ...] = (0.30, 0.10, 0.05, 0.40, 0.10, 0.05)
    vertical_mix: tuple[float, ...] = (0.40, 0.25, 0.20, 0.15)  # within m2m
    m2m_no_apn_fraction: float = 0.2
    activity: tuple[float, float, float, float] = (0.9, 0.7, 0.8, 0.5)
    events_per_day: tuple[float, float, float, float] = (8.0, 4.0, 5.0, 3.0)
    calls_per_day: tuple[float, float, float, float] = (3.0, 2.0, 0.0, 2.0)
    data_mb_per_day: tuple[float, float, float, float] = (5.0, 0.5, 0.2, 0.0)
    rat_mix: tuple[tuple[tuple[str, float], ...], ...] = (
        (("111", 1.0),),
        (("100", 0.7), ("110", 0.3)),
        (("100", 0.774), ("110", 0.2), ("111", 0.026)),
        (("100", 1.0),),
    )
    mobility: tuple[MobilityModel, ...] = (
        MobilityModel(5, 3),
        MobilityModel(2, 2),
        MobilityModel(1, 1),
        MobilityModel(1, 1),
    )
    automotive_mobility: MobilityModel = MobilityModel(8, 7)
    smip_native_count: int = 0
    smip_roaming_count: int = 0

    def validate(self) -> None:
        if self.n_devices < 0:
            raise InvalidSpec("population.n_devices negative")
        for name, mix, want in (
            ("class_mix", self.class_mix, 4),
            ("label_mix", self.label_mix, 6),
            ("vertical_mix", self.vertical_mix, 4),
        ):
            if len(mix) != want:
                raise InvalidSpec(f"population.{name} needs {want} entries")
            if any(m < 0 for m in mix):
                raise InvalidSpec(f"population.{name} has negative share")
            if self.n_devices and abs(sum(mix) - 1.0) > 1e-9:
                raise InvalidSpec(f"population.{name} sums to {sum(mix)}, want 1")
        if not (0.0 <= self.m2m_no_apn_fraction < 1.0):
            raise InvalidSpec("population.m2m_no_apn_fraction out of [0,1)")
        if len(self.mobility) != 4:
            raise InvalidSpec("population.mobility needs one model per class")
        for m in self.mobility:
            m.validate()
        self.automotive_mobility.validate()
        for cls_mix in self.rat_mix:
            total = sum(w for _, w in cls_mix)
            if abs(total - 1.0) > 1e-9:
                raise InvalidSpec("population.rat_mix entries must sum to 1")
            for caps, _ in cls_mix:
                if len(caps) != 3 or any(c not in "01" for c in caps) or caps == "000":
                    raise InvalidSpec(f"population.rat_mix capability {caps!r} invalid")
        if self.smip_native_count < 0 or self.smip_roaming_count < 0:
            raise InvalidSpec("population smip counts negative")


@dataclass(frozen=True)
class MnoSpec:
    """Identity of the studied operator and the PLMN pools around it."""

    home_plmn: Plmn = plmn("234", "15")
    mvno_plmns: tuple[Plmn, ...] = (plmn("234", "38"),)
    national_plmns: tuple[Plmn, ...] = (plmn("234", "20"),)
    inbound_sim_plmns: tuple[Plmn, ...] = (
        plmn("214", "07"),
        plmn("310", "410"),
        plmn("222", "10"),
    )
    abroad_plmns: tuple[Plmn, ...] = (plmn("208", "01"), plmn("262", "02"))
    smip_sim_plmn: Plmn = plmn("204", "04")
    smip_native_prefix: str = "23415999"

    def validate(self) -> None:
        if self.home_plmn in self.mvno_plmns:
            raise InvalidSpec("mno.home_plmn listed in mvno_plmns")
        for p in self.mvno_plmns + self.national_plmns:
            if p.mcc != self.home_plmn.mcc:
                raise InvalidSpec(f"{p.render()} not in the home country")
        for p in self.inbound_sim_plmns + self.abroad_plmns:
            if p.mcc == self.home_plmn.mcc:
                raise InvalidSpec(f"{p.render()} must be a foreign PLMN")
        if self.smip_sim_plmn in self.inbound_sim_plmns:
            raise InvalidSpec(
                "mno.inbound_sim_plmns must not contain the SMIP home operator "
                "(it is reserved for designated smart meters)"
            )
        if not self.smip_native_prefix:
            raise InvalidSpec("mno.smip_native_prefix empty")


@dataclass(frozen=True)
class FleetSpec:
    seed: int = 1
    start_day: int = _iso_to_day("2018-11-01")
    n_days: int = 5
    mno: MnoSpec = field(default_factory=MnoSpec)
    platform: PlatformSpec = field(default_factory=PlatformSpec)
    population: PopulationSpec = field(default_factory=PopulationSpec)

    def validate(self) -> None:
        if self.n_days < 1:
            raise InvalidSpec("n_days must be >= 1")
        if not (0 <= self.seed < 2**64):
            raise InvalidSpec("seed must fit in 64 bits")
        self.mno.validate()
        self.platform.validate()
        self.population.validate()
        pop = self.population
        n_m2m = _quota_counts(pop.n_devices, pop.class_mix)[2]
        if pop.smip_native_count + pop.smip_roaming_count > n_m2m:
            raise InvalidSpec("population smip counts exceed the m2m quota")
        if pop.n_devices:
            if pop.label_mix[1] > 0 and not self.mno.mvno_plmns:
                raise InvalidSpec("label_mix plants V labels but mno.mvno_plmns is empty")
            if pop.label_mix[2] > 0 and not self.mno.national_plmns:
                raise InvalidSpec("label_mix plants N:H but mno.national_plmns is empty")
            if pop.label_mix[3] > 0 and not self.mno.inbound_sim_plmns:
                raise InvalidSpec("label_mix plants I:H but mno.inbound_sim_plmns is empty")
            if (pop.label_mix[4] > 0 or pop.label_mix[5] > 0) and not self.mno.abroad_plmns:
                raise InvalidSpec("label_mix plants A labels but mno.abroad_plmns is empty")


# ------------------------------------------------------------- spec loading

def _plmn_of(text, where: str) -> Plmn:
    try:
        return Plmn.parse(str(text))
    except ValueError as exc:
        raise InvalidSpec(f"{where}: {exc}") from None


def _mix_tuple(table: Mapping, keys: Sequence[str], where: str) -> tuple[float, ...]:
    unknown = set(table) - set(keys)
    if unknown:
        raise InvalidSpec(f"{where}: unknown keys {sorted(unknown)}")
    return tuple(float(table.get(k, 0.0)) for k in keys)


def _reject_unknown(d: Mapping, allowed: Sequence[str], where: str) -> None:
    unknown = set(d) - set(allowed)
    if unknown:
        raise InvalidSpec(f"{where}: unknown keys {sorted(unknown)}")


def fleet_spec_from_dict(raw: Mapping) -> FleetSpec:
    """Build and validate a FleetSpec from a TOML-shaped mapping.

    Unknown keys are an error everywhere: a typo silently planting the
    wrong fleet would defeat the point of exact quotas.
    """
    _reject_unknown(
        raw, ("seed", "start_day", "n_days", "mno", "platform", "population"), "fleet spec"
    )
    mno_d = raw.get("mno", {})
    _reject_unknown(
        mno_d,
        (
            "home_plmn", "mvno_plmns", "national_plmns", "inbound_sim_plmns",
            "abroad_plmns", "smip_sim_plmn", "smip_native_prefix",
        ),
        "mno",
    )
    mno_kwargs = {}
    if "home_plmn" in mno_d:
        mno_kwargs["home_plmn"] = _plmn_of(mno_d["home_plmn"], "mno.home_plmn")
    for key in ("mvno_plmns", "national_plmns", "inbound_sim_plmns", "abroad_plmns"):
        if key in mno_d:
            mno_kwargs[key] = tuple(_plmn_of(t, f"mno.{key}") for t in mno_d[key])
    if "smip_sim_plmn" in mno_d:
        mno_kwargs["smip_sim_plmn"] = _plmn_of(mno_d["smip_sim_plmn"], "mno.smip_sim_plmn")
    if "smip_native_prefix" in mno_d:
        mno_kwargs["smip_native_prefix"] = str(mno_d["smip_native_prefix"])
    mno = MnoSpec(**mno_kwargs)

    plat_d = raw.get("platform", {})
    _reject_unknown(
        plat_d,
        (
            "n_devices", "hmnos", "failure_only_fraction", "failure_noise",
            "switch_rate", "vmno_count_mix", "records",
        ),
        "platform",
    )
    hmnos = []
    for h in plat_d.get("hmnos", []):
        _reject_unknown(
            h,
            ("plmn", "share", "roaming_fraction", "native_network", "vmno_pool"),
            "platform.hmnos",
        )
        hmnos.append(
            HmnoSpec(
                plmn=_plmn_of(h.get("plmn"), "platform.hmnos.plmn"),
                share=float(h.get("share", 0.0)),
                roaming_fraction=float(h.get("roaming_fraction", 1.0)),
                native_network=(
                    _plmn_of(h["native_network"], "platform.hmnos.native_network")
                    if "native_network" in h
                    else None
                ),
                vmno_pool=tuple(
                    (_plmn_of(p, "platform.vmno_pool"), float(w))
                    for p, w in h.get("vmno_pool", [])
                ),
            )
        )
    rec_d = plat_d.get("records", {})
    _reject_unknown(
        rec_d,
        (
            "family", "median", "sigma", "alpha", "min", "max", "threshold",
            "below_threshold_fraction",
        ),
        "platform.records",
    )
    records = RecordsModel(
        family=rec_d.get("family", "lognormal"),
        median=float(rec_d.get("median", 40.0)),
        sigma=float(rec_d.get("sigma", 1.2)),
        alpha=float(rec_d.get("alpha", 1.5)),
        min=int(rec_d.get("min", 1)),
        max=int(rec_d.get("max", 500000)),
        threshold=int(rec_d.get("threshold", 2000)),
        below_threshold_fraction=(
            float(rec_d["below_threshold_fraction"])
            if "below_threshold_fraction" in rec_d
            else None
        ),
    )
    vmix = plat_d.get("vmno_count_mix")
    platform = PlatformSpec(
        n_devices=int(plat_d.get("n_devices", 0)),
        hmnos=tuple(hmnos),
        failure_only_fraction=float(plat_d.get("failure_only_fraction", 0.0)),
        failure_noise=float(plat_d.get("failure_noise", 0.0)),
        switch_rate=float(plat_d.get("switch_rate", 0.02)),
        vmno_count_mix=(
            tuple(sorted((int(k), float(v)) for k, v in vmix.items()))
            if vmix is not None
            else PlatformSpec.vmno_count_mix
        ),
        records=records,
    )

    pop_d = raw.get("population", {})
    _reject_unknown(
        pop_d,
        (
            "n_devices", "class_mix", "label_mix", "vertical_mix",
            "m2m_no_apn_fraction", "activity", "events_per_day",
            "calls_per_day", "data_mb_per_day", "rat_mix", "mobility",
            "automotive_mobility", "smip_native_count", "smip_roaming_count",
        ),
        "population",
    )
    pop_kwargs: dict = {"n_devices": int(pop_d.get("n_devices", 0))}
    if "class_mix" in pop_d:
        pop_kwargs["class_mix"] = _mix_tuple(pop_d["class_mix"], _CLASS_KEYS, "class_mix")
    if "label_mix" in pop_d:
        pop_kwargs["label_mix"] = _mix_tuple(pop_d["label_mix"], _LABEL_KEYS, "label_mix")
    if "vertical_mix" in pop_d:
        pop_kwargs["vertical_mix"] = _mix_tuple(
            pop_d["vertical_mix"], _VERTICAL_KEYS, "vertical_mix"
        )
    for key in ("m2m_no_apn_fraction", "smip_native_count", "smip_roaming_count"):
        if key in pop_d:
            pop_kwargs[key] = (
                int(pop_d[key]) if key.endswith("count") else float(pop_d[key])
            )
    for key in ("activity", "events_per_day", "calls_per_day", "data_mb_per_day"):
        if key in pop_d:
            pop_kwargs[key] = _mix_tuple(pop_d[key], _CLASS_KEYS, key)
    if "rat_mix" in pop_d:
        pop_kwargs["rat_mix"] = tuple(
            tuple(sorted((str(k), float(v)) for k, v in pop_d["rat_mix"][cls].items()))
            for cls in _CLASS_KEYS
        )
    if "mobility" in pop_d:
        pop_kwargs["mobility"] = tuple(
            MobilityModel(
                n_sectors=int(pop_d["mobility"][cls].get("n_sectors", 1)),
                spread=int(pop_d["mobility"][cls].get("spread", 1)),
            )
            for cls in _CLASS_KEYS
        )
    if "automotive_mobility" in pop_d:
        am = pop_d["automotive_mobility"]
        pop_kwargs["automotive_mobility"] = MobilityModel(
            n_sectors=int(am.get("n_sectors", 8)), spread=int(am.get("spread", 7))
        )
    population = PopulationSpec(**pop_kwargs)

    spec = FleetSpec(
        seed=int(raw.get("seed", 1)),
        start_day=(
            _iso_to_day(str(raw["start_day"])) if "start_day" in raw
            else FleetSpec.start_day
        ),
        n_days=int(raw.get("n_days", 5)),
        mno=mno,
        platform=platform,
        population=population,
    )
    spec.validate()
    return spec


def load_fleet_spec(path) -> FleetSpec:
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise InvalidSpec(f"bad TOML in {os.path.basename(str(path))}: {exc}") from None
    return fleet_spec_from_dict(raw)


# ----------------------------------------------------------- planting utils

def _quota_counts(n: int, shares: Sequence[float]) -> list[int]:
    """Largest-remainder apportionment of n items over shares."""
    raw = [n * s for s in shares]
    base = [math.floor(r + 1e-9) for r in raw]
    rem = n - sum(base)
    order = sorted(range(len(shares)), key=lambda i: (-(raw[i] - base[i]), i))
    for i in order[:rem]:
        base[i] += 1
    return base


def _spread_flags(n: int, frac: float) -> list[bool]:
    """Evenly spread boolean planting: floor(n*frac) or so bits set, spaced."""
    out = []
    prev = 0
    for i in range(1, n + 1):
        cur = math.floor(i * frac + 1e-9)
        out.append(cur > prev)
        prev = cur
    return out


def _distinct_ints(rng: np.random.Generator, n: int, high: int) -> np.ndarray:
    """n distinct integers in [0, high), ascending; n must be <= high."""
    if n > high:
        raise InvalidSpec(f"cannot place {n} distinct timestamps in {high} slots")
    got = np.unique(rng.integers(0, high, size=int(n * 1.3) + 16))
    while len(got) < n:
        more = rng.integers(0, high, size=n)
        got = np.unique(np.concatenate([got, more]))
    idx = rng.choice(len(got), size=n, replace=False)
    return np.sort(got[idx])


# ------------------------------------------------------------- TAC catalogs

def _tac(t, man, mod, os_name, hint, bands) -> TacEntry:
    return TacEntry(t, man, mod, os_name, hint, parse_bands(bands))


SMART_TAC_POOL = (
    _tac("35000101", "Apple", "iPhone8", "ios", GsmaClassHint.SMARTPHONE, "2G|3G|4G"),
    _tac("35000102", "Samsung", "GalaxyS9", "android", GsmaClassHint.SMARTPHONE, "2G|3G|4G"),
    _tac("35000103", "Huawei", "P20", "android", GsmaClassHint.SMARTPHONE, "2G|3G|4G"),
    _tac("35000104", "Google", "Pixel3", "android", GsmaClassHint.SMARTPHONE, "2G|3G|4G"),
)
FEAT_TAC_POOL = (
    _tac("35000201", "Nokia", "105", "none", GsmaClassHint.FEATURE_PHONE, "2G"),
    _tac("35000202", "Alcatel", "1066", "none", GsmaClassHint.FEATURE_PHONE, "2G"),
)
M2M_TAC_POOL = (
    _tac("35000301", "Gemalto", "EHS6", "none", GsmaClassHint.MODULE, "2G|3G"),
    _tac("35000302", "Telit", "ME910", "none", GsmaClassHint.MODULE, "2G|3G"),
    _tac("35000303", "Sierra Wireless", "MC7304", "none", GsmaClassHint.MODEM, "2G|3G|4G"),
    _tac("35000304", "Quectel", "BG96", "none", GsmaClassHint.MODULE, "2G"),
    _tac("35000305", "Cinterion", "BGS2", "none", GsmaClassHint.MODULE, "2G"),
)
MAYBE_TAC_POOL = (
    _tac("35000401", "Neoway", "M590", "none", GsmaClassHint.OTHER, "2G"),
    _tac("35000402", "SimCom", "SIM800", "none", GsmaClassHint.MODEM, "2G"),
)

ALL_TAC_ENTRIES = SMART_TAC_POOL + FEAT_TAC_POOL + M2M_TAC_POOL + MAYBE_TAC_POOL

CONSUMER_APN_TEMPLATES = (
    "internet",
    "payandgo.example",
    "web.shop.example",
    "mms.pics.example",
)
M2M_APN_TEMPLATES: dict[Vertical, tuple[str, ...]] = {
    Vertical.ENERGY: (
        "smhp.centricaplc.com.mnc004.mcc204.gprs",
        "meter.rwe.example",
        "elster.grid.example",
        "bglobal.metering.example",
    ),
    Vertical.AUTOMOTIVE: (
        "scania.trucks.example",
        "telematics.cars.example",
        "fleet.vans.example",
    ),
    Vertical.GLOBAL_IOT_SIM: (
        "intelligent.m2m.example",
        "globalsim.iot.example",
    ),
    Vertical.OTHER_M2M: (
        "m2m.sensors.example",
        "telemetry.devices.example",
        "tracker.assets.example",
    ),
}
SMIP_ROAMING_APN = "smhp.centricaplc.com.mnc004.mcc204.gprs"
SMIP_NATIVE_APN = "smartmeter.example"

N_SECTORS = 500
SECTOR_BASE_LAT = 51.5
SECTOR_BASE_LON = -0.12


def sector_id(k: int) -> str:
    return f"s{k:04d}"


def build_sector_map() -> list[SectorCoord]:
    out = []
    for k in range(N_SECTORS):
        out.append(
            SectorCoord(
                sector_id=sector_id(k),
                lat=SECTOR_BASE_LAT + (k // 25) * 0.01,
                lon=SECTOR_BASE_LON + (k % 25) * 0.012,
            )
        )
    return out


# ------------------------------------------------------------- ground truth

GROUND_TRUTH_SCHEMA = "# schema=ground_truth.v1"
_TRUTH_HEADER = [
    "device",
    "cohort",
    "sim_plmn",
    "hmno",
    "label",
    "class",
    "vertical",
    "smip",
    "n_records",
    "n_switches",
    "n_vmnos",
    "failed_only",
    "active_mask",
    "rats",
    "apn_missing",
]


@dataclass(frozen=True)
class GroundTruth:
    device: str
    cohort: str  # "platform" | "population"
    sim_plmn: Plmn
    hmno: Plmn | None = None
    label: RoamingLabel | None = None
    device_class: DeviceClass | None = None
    vertical: Vertical | None = None
    smip: str = ""  # "", "smip-native", "smip-roaming"
    n_records: int = 0
    n_switches: int = 0
    n_vmnos: int = 0
    failed_only: bool = False
    active_mask: str = ""
    rats: str = ""
    apn_missing: bool = False

    def to_row(self) -> list[str]:
        return [
            self.device,
            self.cohort,
            self.sim_plmn.render(),
            self.hmno.render() if self.hmno else "",
            self.label.render() if self.label else "",
            self.device_class.render() if self.device_class else "",
            self.vertical.render() if self.vertical else "",
            self.smip,
            str(self.n_records),
            str(self.n_switches),
            str(self.n_vmnos),
            str(int(self.failed_only)),
            self.active_mask,
            self.rats,
            str(int(self.apn_missing)),
        ]

    @classmethod
    def from_row(cls, row: Sequence[str]) -> "GroundTruth":
        return cls(
            device=row[0],
            cohort=row[1],
            sim_plmn=Plmn.parse(row[2]),
            hmno=Plmn.parse(row[3]) if row[3] else None,
            label=RoamingLabel.parse(row[4]) if row[4] else None,
            device_class=DeviceClass.parse(row[5]) if row[5] else None,
            vertical=Vertical.parse(row[6]) if row[6] else None,
            smip=row[7],
            n_records=int(row[8]),
            n_switches=int(row[9]),
            n_vmnos=int(row[10]),
            failed_only=row[11] == "1",
            active_mask=row[12],
            rats=row[13],
            apn_missing=row[14] == "1",
        )


def write_ground_truth(path, truths: Iterable[GroundTruth], seed: int, start_day: int) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(GROUND_TRUTH_SCHEMA + "\n")
        fh.write(f"# rng=numpy-philox-jumped seed={seed}\n")
        fh.write(f"# window_start_day={start_day}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_TRUTH_HEADER)
        for t in truths:
            writer.writerow(t.to_row())
    os.replace(tmp, path)


def read_ground_truth(path) -> tuple[list[GroundTruth], int]:
    """Returns (truth rows, window start day in days since the epoch)."""
    out = []
    start_day = 0
    with open(path, "r", encoding="utf-8", newline="") as fh:
        first = fh.readline().strip()
        if first != GROUND_TRUTH_SCHEMA:
            raise InvalidSpec(f"bad ground truth schema line {first!r}")
        rows = []
        for line in fh:
            if line.startswith("# window_start_day="):
                start_day = int(line.strip().split("=", 1)[1])
                continue
            if not line.strip() or line.startswith("#"):
                continue
            rows.append(line)
        reader = csv.reader(rows)
        header = next(reader)
        if header != _TRUTH_HEADER:
            raise InvalidSpec("bad ground truth header")
        for row in reader:
            out.append(GroundTruth.from_row(row))
    return out, start_day


# ---------------------------------------------------------------- generator

_FAILURES = ("ROAMING_NOT_ALLOWED", "UNKNOWN_SUBSCRIPTION", "FEATURE_UNSUPPORTED")
_MESSAGES = ("AUTHENTICATION", "UPDATE_LOCATION", "CANCEL_LOCATION")
_MSG_WEIGHTS = (0.5, 0.4, 0.1)


def _sample_record_count(rng: np.random.Generator, m: RecordsModel, side: str | None) -> int:
    """One record count; side "below"/"above" enforces the threshold split."""
    if side == "above":
        r = m.threshold + int(round(rng.pareto(m.alpha) * m.threshold * 0.02))
        return min(r, max(m.max, m.threshold))
    for _ in range(64):
        if m.family == "lognormal":
            x = rng.lognormal(math.log(m.median), m.sigma)
        else:
            x = m.median * (1.0 + rng.pareto(m.alpha))
        r = min(m.max, max(m.min, int(round(x))))
        if side is None or r < m.threshold:
            return r
    return min(m.max, max(m.min, m.threshold - 1))


def _dev_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed).jumped(index + 1))


def _pick_venue_sequence(
    venues: list[Plmn], n_runs: int
) -> list[Plmn]:
    """Run venues: all distinct venues first, then keep alternating."""
    seq = list(venues)
    k = 0
    while len(seq) < n_runs:
        cand = venues[k % len(venues)]
        if cand == seq[-1]:
            k += 1
            cand = venues[k % len(venues)]
        seq.append(cand)
        k += 1
    return seq[:n_runs]


def _generate_platform(
    spec: FleetSpec, fh, truths: list[GroundTruth]
) -> None:
    plat = spec.platform
    if plat.n_devices == 0:
        return
    window_start = spec.start_day * 86400
    window_len = spec.n_days * 86400

    hmno_counts = _quota_counts(plat.n_devices, [h.share for h in plat.hmnos])
    failed_flags = _spread_flags(plat.n_devices, plat.failure_only_fraction)
    if plat.records.below_threshold_fraction is not None:
        below_flags = _spread_flags(
            plat.n_devices, plat.records.below_threshold_fraction
        )
    else:
        below_flags = None

    mix_counts = [k for k, _ in plat.vmno_count_mix]
    dev_index = 0
    for h, n_h in zip(plat.hmnos, hmno_counts):
        native = h.native_network or h.plmn
        pool = [p for p, _ in h.vmno_pool]
        weights = np.array([w for _, w in h.vmno_pool], dtype=float)
        weights = weights / weights.sum() if len(weights) else weights
        roam_flags = _spread_flags(n_h, h.roaming_fraction)
        n_roaming = sum(roam_flags)
        vmno_quota = _quota_counts(
            n_roaming, [w for _, w in plat.vmno_count_mix]
        )
        vmno_per_roamer: list[int] = []
        for count, k in zip(vmno_quota, mix_counts):
            vmno_per_roamer.extend([k] * count)

        roam_seen = 0
        for j in range(n_h):
            device = f"p{dev_index:06d}"
            rng = _dev_rng(spec.seed, dev_index)
            failed = failed_flags[dev_index]
            side = None
            if below_flags is not None:
                side = "below" if below_flags[dev_index] else "above"
            r = _sample_record_count(rng, plat.records, side)

            roaming = roam_flags[j]
            if roaming:
                v = min(vmno_per_roamer[roam_seen], len(pool))
                roam_seen += 1
                r = max(r, v)
                idx = rng.choice(len(pool), size=v, replace=False, p=weights)
                venues = [pool[int(i)] for i in idx]
                s_extra = int(rng.poisson(plat.switch_rate * r)) if v >= 2 else 0
                s = min(v - 1 + s_extra, r - 1) if v >= 2 else 0
                run_venues = _pick_venue_sequence(venues, s + 1)
            else:
                v, s = 1, 0
                run_venues = [native]

            ts = _distinct_ints(rng, r, window_len) + window_start
            base, rem = divmod(r, s + 1)
            lengths = [base + 1] * rem + [base] * (s + 1 - rem)
            venue_per_record: list[Plmn] = []
            for ln, venue in zip(lengths, run_venues):
                venue_per_record.extend([venue] * ln)

            msgs = rng.choice(len(_MESSAGES), size=r, p=_MSG_WEIGHTS)
            if failed:
                fails = rng.choice(len(_FAILURES), size=r)
                results = [_FAILURES[int(i)] for i in fails]
            else:
                noise = rng.random(r) < plat.failure_noise
                noise[0] = False
                fails = rng.choice(len(_FAILURES), size=r)
                results = [
                    _FAILURES[int(fi)] if nz else "OK"
                    for nz, fi in zip(noise, fails)
                ]

            sim = h.plmn
            lines = []
            for k in range(r):
                venue = venue_per_record[k]
                lines.append(
                    f"{device},{int(ts[k])},{sim.mcc},{sim.mnc},"
                    f"{venue.mcc},{venue.mnc},{_MESSAGES[int(msgs[k])]},{results[k]}"
                )
            fh.write("\n".join(lines) + "\n")

            truths.append(
                GroundTruth(
                    device=device,
                    cohort="platform",
                    sim_plmn=sim,
                    hmno=h.plmn,
                    n_records=r,
                    n_switches=s,
                    n_vmnos=v,
                    failed_only=failed,
                )
            )
            dev_index += 1


_CLASS_BY_INDEX = (
    DeviceClass.SMART,
    DeviceClass.FEAT,
    DeviceClass.M2M,
    DeviceClass.M2M_MAYBE,
)
_LABEL_BY_INDEX = (HH, VH, NH, IH, HA, VA)
_VERTICAL_BY_INDEX = (
    Vertical.ENERGY,
    Vertical.AUTOMOTIVE,
    Vertical.GLOBAL_IOT_SIM,
    Vertical.OTHER_M2M,
)


@dataclass
class _PopPlan:
    """Everything decided about one population device before emission."""

    device: str
    cls: DeviceClass
    label: RoamingLabel
    sim: Plmn
    vertical: Vertical
    apn: str | None  # None: no-APN device (emits data with empty APN if has_data)
    tac: TacEntry | None
    smip: str
    capability: str
    abroad: Plmn | None
    sectors: list[int]
    has_data: bool
    has_voice: bool
    apn_missing: bool


def _a_label_allowed(plan_cls: DeviceClass, apn: str | None) -> bool:
    """Classes recoverable without radio events (hence without a TAC)."""
    if plan_cls is DeviceClass.SMART:
        return False  # smart needs the TAC-declared OS
    if plan_cls is DeviceClass.M2M and apn is None:
        return False  # propagation needs the TAC pair
    return True


def _plan_population(spec: FleetSpec) -> list[_PopPlan]:
    pop = spec.population
    mno = spec.mno
    n = pop.n_devices
    if n == 0:
        return []
    master = np.random.Generator(np.random.Philox(spec.seed))

    class_counts = _quota_counts(n, pop.class_mix)
    classes: list[DeviceClass] = []
    for c, cls in zip(class_counts, _CLASS_BY_INDEX):
        classes.extend([cls] * c)

    label_counts = _quota_counts(n, pop.label_mix)
    label_pool: list[RoamingLabel] = []
    for c, lab in zip(label_counts, _LABEL_BY_INDEX):
        label_pool.extend([lab] * c)
    perm = master.permutation(n)
    labels: list[RoamingLabel] = [label_pool[int(i)] for i in perm]

    n_m2m = class_counts[2]
    m2m_start = class_counts[0] + class_counts[1]
    n_smip = pop.smip_native_count + pop.smip_roaming_count
    n_free_m2m = n_m2m - n_smip
    n_no_apn = math.floor(n_free_m2m * pop.m2m_no_apn_fraction + 1e-9)
    n_apn_m2m = n_free_m2m - n_no_apn
    if n_no_apn and n_apn_m2m == 0:
        raise InvalidSpec(
            "population.m2m_no_apn_fraction leaves no APN-bearing m2m device "
            "to anchor property propagation"
        )
    vert_counts = _quota_counts(n_apn_m2m, pop.vertical_mix)

    plans: list[_PopPlan] = []
    vert_cursor = 0
    vert_emitted = 0
    apn_m2m_seen = 0
    covered_models = min(n_apn_m2m, len(M2M_TAC_POOL)) or 1
    for i in range(n):
        cls = classes[i]
        ci = _CLASS_BY_INDEX.index(cls)
        label = labels[i]
        smip = ""
        vertical = Vertical.UNKNOWN
        apn: str | None = None
        tac: TacEntry | None = None
        apn_missing = False
        has_voice = pop.calls_per_day[ci] > 0
        has_data = pop.data_mb_per_day[ci] > 0
        device = f"d{i:06d}"

        if cls is DeviceClass.SMART:
            tac = SMART_TAC_POOL[i % len(SMART_TAC_POOL)]
            apn = CONSUMER_APN_TEMPLATES[i % len(CONSUMER_APN_TEMPLATES)]
            vertical = Vertical.CONSUMER
            has_data = True
        elif cls is DeviceClass.FEAT:
            tac = FEAT_TAC_POOL[i % len(FEAT_TAC_POOL)]
            apn = CONSUMER_APN_TEMPLATES[i % len(CONSUMER_APN_TEMPLATES)]
            vertical = Vertical.CONSUMER
            has_data = True
        elif cls is DeviceClass.M2M:
            j = i - m2m_start  # index within the m2m block
            has_data = True
            has_voice = False
            if j < pop.smip_native_count:
                smip = "smip-native"
                label = HH
                vertical = Vertical.ENERGY
                apn = SMIP_NATIVE_APN
                tac = M2M_TAC_POOL[j % 2]  # Gemalto / Telit
                device = f"{mno.smip_native_prefix}{i:06d}"
            elif j < n_smip:
                smip = "smip-roaming"
                label = IH
                vertical = Vertical.ENERGY
                apn = SMIP_ROAMING_APN
                tac = M2M_TAC_POOL[j % 2]
            else:
                k = j - n_smip
                if k < n_apn_m2m:
                    while vert_cursor < 3 and vert_emitted >= vert_counts[vert_cursor]:
                        vert_cursor += 1
                        vert_emitted = 0
                    vertical = _VERTICAL_BY_INDEX[vert_cursor]
                    vert_emitted += 1
                    templates = M2M_APN_TEMPLATES[vertical]
                    apn = templates[k % len(templates)]
                    tac = M2M_TAC_POOL[apn_m2m_seen % covered_models]
                    apn_m2m_seen += 1
                else:
                    # property-propagated device: TAC pair shared with a
                    # keyword-APN device, data sessions with no APN string
                    apn = None
                    apn_missing = True
                    tac = M2M_TAC_POOL[k % covered_models]
                    vertical = Vertical.UNKNOWN
        else:  # M2M_MAYBE: voice-only, nothing else
            tac = MAYBE_TAC_POOL[i % len(MAYBE_TAC_POOL)]
            has_voice = True
            has_data = False

        plans.append(
            _PopPlan(
                device=device,
                cls=cls,
                label=label,
                sim=mno.home_plmn,  # provisional; fixed below
                vertical=vertical,
                apn=apn,
                tac=tac,
                smip=smip,
                capability="100",
                abroad=None,
                sectors=[],
                has_data=has_data,
                has_voice=has_voice,
                apn_missing=apn_missing,
            )
        )

    # Devices that cannot be recovered without radio events must stay on
    # the home network; swap their A labels with H labels further along.
    for i, plan in enumerate(plans):
        if plan.label.network_side.value == "A" and not _a_label_allowed(plan.cls, plan.apn):
            for k in range(i + 1, len(plans)):
                other = plans[k]
                if other.smip:
                    continue
                if other.label.network_side.value == "H" and _a_label_allowed(
                    other.cls, other.apn
                ):
                    plan.label, other.label = other.label, plan.label
                    break
            else:
                plan.label = HH if plan.label == HA else VH

    # SIM and venue assignment per label, plus per-device randomness.
    for i, plan in enumerate(plans):
        rng = _dev_rng(spec.seed, spec.platform.n_devices + i)
        x = plan.label.sim_side.value
        if plan.smip == "smip-roaming":
            plan.sim = mno.smip_sim_plmn
        elif x == "H":
            plan.sim = mno.home_plmn
        elif x == "V":
            plan.sim = mno.mvno_plmns[i % len(mno.mvno_plmns)]
        elif x == "N":
            plan.sim = mno.national_plmns[i % len(mno.national_plmns)]
        else:
            plan.sim = mno.inbound_sim_plmns[i % len(mno.inbound_sim_plmns)]
        if plan.label.network_side.value == "A":
            plan.abroad = mno.abroad_plmns[i % len(mno.abroad_plmns)]

        ci = _CLASS_BY_INDEX.index(plan.cls)
        caps = [c for c, _ in spec.population.rat_mix[ci]]
        probs = [w for _, w in spec.population.rat_mix[ci]]
        planted = caps[int(rng.choice(len(caps), p=probs))]
        if plan.tac is not None:
            bands = plan.tac.bands
            bits = "".join(
                "1" if planted[b] == "1" and rat in bands else "0"
                for b, rat in enumerate((Rat.G2, Rat.G3, Rat.G4))
            )
            planted = bits if bits != "000" else ("100" if Rat.G2 in bands else planted)
        plan.capability = planted

        mob = spec.population.mobility[ci]
        if plan.vertical is Vertical.AUTOMOTIVE:
            mob = spec.population.automotive_mobility
        base = int(rng.integers(0, N_SECTORS))
        plan.sectors = [
            (base + k * mob.spread) % N_SECTORS for k in range(mob.n_sectors)
        ]
    return plans


def _generate_population(
    spec: FleetSpec,
    radio_fh,
    usage_fh,
    truths: list[GroundTruth],
) -> None:
    pop = spec.population
    if pop.n_devices == 0:
        return
    mno = spec.mno
    plans = _plan_population(spec)
    n_days = spec.n_days
    rat_order = (Rat.G2, Rat.G3, Rat.G4)

    for i, plan in enumerate(plans):
        rng = _dev_rng(spec.seed, spec.platform.n_devices + pop.n_devices + i)
        ci = _CLASS_BY_INDEX.index(plan.cls)
        act = rng.random(n_days) < pop.activity[ci]
        if not act.any():
            act[i % n_days] = True
        at_home = plan.label.network_side.value == "H"

        ev_means = pop.events_per_day[ci]
        ev_counts = np.maximum(1, rng.poisson(ev_means, n_days)) if at_home else np.zeros(n_days, dtype=int)
        call_counts = rng.poisson(pop.calls_per_day[ci], n_days) if plan.has_voice else np.zeros(n_days, dtype=int)
        if plan.cls is DeviceClass.M2M_MAYBE:
            call_counts = np.maximum(1, call_counts)
        data_counts = (1 + rng.poisson(0.5, n_days)) if plan.has_data else np.zeros(n_days, dtype=int)
        mb = pop.data_mb_per_day[ci]
        day_bytes = (
            np.maximum(1, rng.lognormal(math.log(max(mb, 0.001) * 1e6), 0.4, n_days).astype(np.int64))
            if plan.has_data
            else np.zeros(n_days, dtype=np.int64)
        )
        if not at_home and not plan.has_data and not plan.has_voice:
            call_counts = np.maximum(1, call_counts)  # keep abroad devices visible

        cap_list = [r for b, r in zip(plan.capability, rat_order) if b == "1"]
        type_cycle = ["ATTACH"]
        if plan.has_data:
            type_cycle.append("DATA")
        if plan.has_voice:
            type_cycle.append("VOICE")

        emitted_rats: set[Rat] = set()
        n_records = 0
        mask_bits = []
        radio_lines: list[str] = []
        usage_lines: list[str] = []
        sim = plan.sim
        visited = mno.home_plmn if at_home else plan.abroad

        for d in range(n_days):
            if not act[d]:
                mask_bits.append("0")
                continue
            mask_bits.append("1")
            n_ev = int(ev_counts[d])
            n_call = int(call_counts[d])
            n_data = int(data_counts[d])
            day0 = (spec.start_day + d) * 86400
            secs = _distinct_ints(rng, n_ev + n_call + n_data, 86400) + day0
            cursor = 0

            for k in range(n_ev):
                ts = int(secs[cursor]); cursor += 1
                sector = plan.sectors[int(rng.integers(0, len(plan.sectors)))] if len(plan.sectors) > 1 else plan.sectors[0]
                rat = cap_list[k % len(cap_list)]
                etype = type_cycle[k % len(type_cycle)]
                emitted_rats.add(rat)
                radio_lines.append(
                    f"{plan.device},{ts},{sim.mcc},{sim.mnc},{plan.tac.tac},"
                    f"{sector_id(sector)},{rat.render()},{etype},OK"
                )
            for _ in range(n_call):
                ts = int(secs[cursor]); cursor += 1
                dur = int(rng.integers(10, 300))
                usage_lines.append(
                    f"{plan.device},{ts},{sim.mcc},{sim.mnc},"
                    f"{visited.mcc},{visited.mnc},VOICE,{dur},0,"
                )
            if n_data:
                share = _quota_counts(int(day_bytes[d]), [1.0 / n_data] * n_data)
                for b in share:
                    ts = int(secs[cursor]); cursor += 1
                    apn = plan.apn or ""
                    usage_lines.append(
                        f"{plan.device},{ts},{sim.mcc},{sim.mnc},"
                        f"{visited.mcc},{visited.mnc},DATA,0,{b},{apn}"
                    )
            n_records += n_ev + n_call + n_data

        if radio_lines:
            radio_fh.write("\n".join(radio_lines) + "\n")
        if usage_lines:
            usage_fh.write("\n".join(usage_lines) + "\n")

        truths.append(
            GroundTruth(
                device=plan.device,
                cohort="population",
                sim_plmn=plan.sim,
                label=plan.label,
                device_class=plan.cls,
                vertical=plan.vertical,
                smip=plan.smip,
                n_records=n_records,
                active_mask="".join(mask_bits),
                rats="".join(
                    "1" if r in emitted_rats else "0" for r in (Rat.G2, Rat.G3, Rat.G4)
                ),
                apn_missing=plan.apn_missing,
            )
        )


FILE_NAMES = {
    "signaling": "signaling.csv",
    "radio": "radio.csv",
    "usage": "usage.csv",
    "tac": "tac_catalog.csv",
    "sectors": "sectors.csv",
    "truth": "ground_truth.csv",
}


def generate(spec: FleetSpec, out_dir) -> list[GroundTruth]:
    """Write the full synthetic file set into out_dir; returns the truth.

    Output is a pure function of the FleetSpec (which includes the
    seed): regenerating into another directory yields byte-identical
    files.
    """
    spec.validate()
    os.makedirs(out_dir, exist_ok=True)
    truths: list[GroundTruth] = []

    def path(key):
        return os.path.join(out_dir, FILE_NAMES[key])

    sig_tmp, radio_tmp, usage_tmp = (
        path("signaling") + ".tmp",
        path("radio") + ".tmp",
        path("usage") + ".tmp",
    )
    with open(sig_tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write("# schema=signaling.v1\n")
        fh.write(f"# rng=numpy-philox-jumped seed={spec.seed}\n")
        _generate_platform(spec, fh, truths)
    with open(radio_tmp, "w", encoding="utf-8", newline="") as rfh, open(
        usage_tmp, "w", encoding="utf-8", newline=""
    ) as ufh:
        rfh.write("# schema=radio.v1\n")
        rfh.write(f"# rng=numpy-philox-jumped seed={spec.seed}\n")
        ufh.write("# schema=usage.v1\n")
        ufh.write(f"# rng=numpy-philox-jumped seed={spec.seed}\n")
        _generate_population(spec, rfh, ufh, truths)
    os.replace(sig_tmp, path("signaling"))
    os.replace(radio_tmp, path("radio"))
    os.replace(usage_tmp, path("usage"))

    write_tac_catalog(path("tac"), ALL_TAC_ENTRIES)
    write_sector_coords(path("sectors"), build_sector_map())
    write_ground_truth(path("truth"), truths, spec.seed, spec.start_day)
    return truths


# ------------------------------------------------------------- replay check

def _fail(device: str, what: str, where: str = "") -> InconsistencyFound:
    suffix = f" ({where})" if where else ""
    return InconsistencyFound(f"device {device}: {what}{suffix}")


def replay_check(out_dir) -> dict:
    """Re-derive per-device facts from the emitted files and compare them
    with the ground truth; raises InconsistencyFound naming the first
    offender. Line order inside files does not matter."""
    truths, start_day = read_ground_truth(os.path.join(out_dir, FILE_NAMES["truth"]))
    by_dev = {t.device: t for t in truths}

    sig, _ = read_signaling_file(os.path.join(out_dir, FILE_NAMES["signaling"]), strict=True)
    radio, _ = read_radio_file(os.path.join(out_dir, FILE_NAMES["radio"]), strict=True)
    usage, _ = read_usage_file(os.path.join(out_dir, FILE_NAMES["usage"]), strict=True)

    seen_platform: dict[str, list] = {}
    for t in sig:
        seen_platform.setdefault(t.device, []).append(t)
    for device, txns in sorted(seen_platform.items()):
        truth = by_dev.get(device)
        if truth is None or truth.cohort != "platform":
            raise _fail(device, "signaling record without platform truth")
        if any(t.sim_plmn != truth.sim_plmn for t in txns):
            raise _fail(device, "inconsistent SIM PLMN in signaling")
        if len(txns) != truth.n_records:
            raise _fail(
                device, f"record count {len(txns)} != truth {truth.n_records}"
            )
        ordered = sorted(txns, key=lambda t: t.timestamp)
        venues = [t.visited_plmn for t in ordered]
        switches = sum(1 for a, b in zip(venues, venues[1:]) if a != b)
        if switches != truth.n_switches:
            raise _fail(device, f"switch count {switches} != truth {truth.n_switches}")
        if len(set(venues)) != truth.n_vmnos:
            raise _fail(device, f"vmno count {len(set(venues))} != truth {truth.n_vmnos}")
        failed = not any(t.result.is_success() for t in txns)
        if failed != truth.failed_only:
            raise _fail(device, "failed-only flag contradicts records")
    for truth in truths:
        if truth.cohort == "platform" and truth.device not in seen_platform:
            raise _fail(truth.device, "platform truth with no signaling records")

    pop_days: dict[str, set[int]] = {}
    pop_rats: dict[str, set[Rat]] = {}
    pop_counts: dict[str, int] = {}
    pop_apns: dict[str, set[str]] = {}
    for ev in radio:
        truth = by_dev.get(ev.device)
        if truth is None or truth.cohort != "population":
            raise _fail(ev.device, "radio event without population truth")
        if ev.sim_plmn != truth.sim_plmn:
            raise _fail(ev.device, "radio SIM PLMN contradicts truth")
        pop_days.setdefault(ev.device, set()).add(ev.timestamp // 86400)
        if ev.result.is_success():
            pop_rats.setdefault(ev.device, set()).add(ev.rat)
        pop_counts[ev.device] = pop_counts.get(ev.device, 0) + 1
    for rec in usage:
        truth = by_dev.get(rec.device)
        if truth is None or truth.cohort != "population":
            raise _fail(rec.device, "usage record without population truth")
        if rec.sim_plmn != truth.sim_plmn:
            raise _fail(rec.device, "usage SIM PLMN contradicts truth")
        pop_days.setdefault(rec.device, set()).add(rec.timestamp // 86400)
        pop_counts[rec.device] = pop_counts.get(rec.device, 0) + 1
        if rec.apn:
            pop_apns.setdefault(rec.device, set()).add(rec.apn)

    n_platform = sum(1 for t in truths if t.cohort == "platform")
    n_pop = 0
    for truth in truths:
        if truth.cohort != "population":
            continue
        n_pop += 1
        device = truth.device
        got = pop_days.get(device, set())
        want = {
            start_day + d for d, bit in enumerate(truth.active_mask) if bit == "1"
        }
        if got != want:
            raise _fail(device, "active days contradict the planted mask")
        if pop_counts.get(device, 0) != truth.n_records:
            raise _fail(
                device,
                f"record count {pop_counts.get(device, 0)} != truth {truth.n_records}",
            )
        got_rats = pop_rats.get(device, set())
        want_rats = {
            r for r, bit in zip((Rat.G2, Rat.G3, Rat.G4), truth.rats) if bit == "1"
        }
        if got_rats != want_rats:
            raise _fail(device, "successful RATs contradict the planted capability")
        if truth.apn_missing and pop_apns.get(device):
            raise _fail(device, "planted no-APN device has APN strings")
    return {"checked_platform": n_platform, "checked_population": n_pop}
