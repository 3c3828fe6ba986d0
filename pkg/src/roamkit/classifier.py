"""Device classification: APN keywords, seed-and-propagate m2m, SMIP tags.

Three stages. (1) Each APN's network identifier is matched against an
ordered keyword list, yielding an m2m vertical or a consumer hint.
(2) Devices using any m2m-keyword APN seed the m2m set, which then
extends to all devices sharing a (manufacturer, model) pair with a seed
device. (3) Remaining devices split into smart (major OS + consumer
APN), feature phone (database hint, or consumer APN on a non-major OS),
and m2m-maybe (everything left, typically voice-only devices with no
APN evidence).

Smart-meter tagging is separate: a device is SMIP-native by dedicated
identifier range on the home network, SMIP-roaming by the conjunction
energy APN + expected home operator + expected module manufacturer +
inbound-roamer label.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

from .core import (
    HH,
    IH,
    DeviceClass,
    DeviceId,
    GsmaClassHint,
    Plmn,
    RoamingLabel,
    Vertical,
    plmn,
)
from .ingest import ApnInfo, TacEntry


class ApnCategory(Enum):
    M2M_APN = "m2m"
    CONSUMER_APN = "consumer"
    UNMATCHED = "unmatched"


DEFAULT_M2M_KEYWORDS: tuple[tuple[str, Vertical], ...] = (
    ("scania", Vertical.AUTOMOTIVE),
    ("telematics", Vertical.AUTOMOTIVE),
    ("fleet", Vertical.AUTOMOTIVE),
    ("rwe", Vertical.ENERGY),
    ("centricaplc", Vertical.ENERGY),
    ("elster", Vertical.ENERGY),
    ("bglobal", Vertical.ENERGY),
    ("smartmeter", Vertical.ENERGY),
    ("intelligent.m2m", Vertical.GLOBAL_IOT_SIM),
    ("globalsim", Vertical.GLOBAL_IOT_SIM),
    ("m2m", Vertical.OTHER_M2M),
    ("telemetry", Vertical.OTHER_M2M),
    ("tracker", Vertical.OTHER_M2M),
)

DEFAULT_CONSUMER_KEYWORDS: tuple[str, ...] = (
    "payandgo",
    "internet",
    "web",
    "wap",
    "broadband",
    "prepaid",
    "mms",
    "mobile",
)

DEFAULT_MAJOR_OS: frozenset[str] = frozenset(
    {"android", "ios", "blackberry", "windows mobile"}
)


@dataclass(frozen=True)
class KeywordConfig:
    """Ordered keyword lists; earlier m2m keywords win and fix the vertical.

    The shipped defaults are a reconstruction from publicly named
    examples plus placeholders; treat them as configuration, not ground
    truth.
    """

    m2m_keywords: tuple[tuple[str, Vertical], ...] = DEFAULT_M2M_KEYWORDS
    consumer_keywords: tuple[str, ...] = DEFAULT_CONSUMER_KEYWORDS
    major_os_set: frozenset[str] = DEFAULT_MAJOR_OS

    def __post_init__(self) -> None:
        if not self.m2m_keywords or not self.consumer_keywords:
            raise ValueError("keyword lists must be non-empty")
        m2m_words = {kw for kw, _ in self.m2m_keywords}
        if any(not kw or kw != kw.lower() for kw in m2m_words):
            raise ValueError("m2m keywords must be non-empty lowercase")
        if any(not kw or kw != kw.lower() for kw in self.consumer_keywords):
            raise ValueError("consumer keywords must be non-empty lowercase")
        overlap = m2m_words & set(self.consumer_keywords)
        if overlap:
            raise ValueError(f"keywords in both lists: {sorted(overlap)}")


@dataclass(frozen=True)
class DeviceProfile:
    """Everything classification needs to know about one device."""

    device: DeviceId
    sim_plmn: Plmn
    apns: frozenset[ApnInfo] = frozenset()
    tac: str | None = None
    tac_entry: TacEntry | None = None
    has_data: bool = False
    has_voice: bool = False
    apn_missing: bool = False


def match_apn(apn: ApnInfo, cfg: KeywordConfig) -> tuple[ApnCategory, Vertical]:
    """Match one APN network identifier against the keyword lists.

    First m2m keyword in list order wins and supplies the vertical;
    otherwise the first consumer keyword; otherwise unmatched.
    """
    ident = apn.network_identifier.lower()
    for kw, vertical in cfg.m2m_keywords:
        if kw in ident:
            return ApnCategory.M2M_APN, vertical
    for kw in cfg.consumer_keywords:
        if kw in ident:
            return ApnCategory.CONSUMER_APN, Vertical.CONSUMER
    return ApnCategory.UNMATCHED, Vertical.UNKNOWN


def _m2m_keyword_rank(profile: DeviceProfile, cfg: KeywordConfig) -> int | None:
    """Index of the best (lowest-ranked) m2m keyword across the APN set."""
    best: int | None = None
    for apn in profile.apns:
        ident = apn.network_identifier.lower()
        for i, (kw, _) in enumerate(cfg.m2m_keywords):
            if kw in ident:
                if best is None or i < best:
                    best = i
                break
    return best


def _has_consumer_apn(profile: DeviceProfile, cfg: KeywordConfig) -> bool:
    return any(
        match_apn(a, cfg)[0] is ApnCategory.CONSUMER_APN for a in profile.apns
    )


def seed_m2m(profiles: Iterable[DeviceProfile], cfg: KeywordConfig) -> set[DeviceId]:
    """Devices whose APN set contains at least one m2m-keyword match."""
    return {
        p.device for p in profiles if _m2m_keyword_rank(p, cfg) is not None
    }


def propagate_by_properties(
    seed: set[DeviceId], profiles: Iterable[DeviceProfile]
) -> set[DeviceId]:
    """Extend the seed set along shared (manufacturer, model) pairs.

    Single hop: only pairs contributed by seed devices propagate, so the
    operation is idempotent. Devices without a TAC catalog match neither
    contribute nor receive.
    """
    profiles = list(profiles)
    pairs = {
        (p.tac_entry.manufacturer, p.tac_entry.model)
        for p in profiles
        if p.device in seed and p.tac_entry is not None
    }
    out = set(seed)
    for p in profiles:
        if p.tac_entry is not None:
            if (p.tac_entry.manufacturer, p.tac_entry.model) in pairs:
                out.add(p.device)
    return out


def classify_device(
    profile: DeviceProfile, m2m_set: set[DeviceId], cfg: KeywordConfig
) -> DeviceClass:
    """Assign the final class; the precedence chain makes it a partition.

    (1) m2m set membership, (2) major OS + consumer APN, (3) feature
    phone hint or consumer APN on a non-major OS, (4) everything else is
    m2m-maybe (voice-only and unmatched-APN residue).
    """
    if profile.device in m2m_set:
        return DeviceClass.M2M
    os_name = (profile.tac_entry.os.lower() if profile.tac_entry else "")
    consumer = _has_consumer_apn(profile, cfg)
    if os_name in cfg.major_os_set and consumer:
        return DeviceClass.SMART
    hint = profile.tac_entry.gsma_class_hint if profile.tac_entry else None
    if hint is GsmaClassHint.FEATURE_PHONE or (consumer and os_name not in cfg.major_os_set):
        return DeviceClass.FEAT
    return DeviceClass.M2M_MAYBE


def device_vertical(
    profile: DeviceProfile, m2m_set: set[DeviceId], cfg: KeywordConfig
) -> Vertical:
    """Deterministic vertical: best m2m keyword across APNs, else consumer,
    else unknown (property-propagated devices carry no APN evidence)."""
    rank = _m2m_keyword_rank(profile, cfg)
    if rank is not None:
        return cfg.m2m_keywords[rank][1]
    if _has_consumer_apn(profile, cfg):
        return Vertical.CONSUMER
    return Vertical.UNKNOWN


class SmipTag(Enum):
    NATIVE = "smip-native"
    ROAMING = "smip-roaming"


DEFAULT_SMIP_ENERGY_KEYWORDS: tuple[str, ...] = (
    "elster",
    "rwe",
    "centricaplc",
    "ge",
    "bglobal",
)


@dataclass(frozen=True)
class SmipConfig:
    """Smart-meter identification rules (UK smart metering programme)."""

    native_imsi_prefixes: tuple[str, ...] = ("23415999",)
    energy_apn_keywords: tuple[str, ...] = DEFAULT_SMIP_ENERGY_KEYWORDS
    expected_home_plmn: Plmn = plmn("204", "04")
    expected_manufacturers: frozenset[str] = frozenset({"gemalto", "telit"})

    def __post_init__(self) -> None:
        if not self.native_imsi_prefixes:
            raise ValueError("native_imsi_prefixes must be non-empty")
        if not self.energy_apn_keywords:
            raise ValueError("energy_apn_keywords must be non-empty")
        if not self.expected_manufacturers:
            raise ValueError("expected_manufacturers must be non-empty")


def tag_smip(
    profile: DeviceProfile, roaming_label: RoamingLabel | None, cfg: SmipConfig
) -> SmipTag | None:
    """Tag smart meters: dedicated-range natives, or roaming meters by the
    four-way conjunction (energy APN, expected home operator, expected
    manufacturer, inbound-roamer label). Anything else gets no tag."""
    if roaming_label == HH and any(
        profile.device.startswith(p) for p in cfg.native_imsi_prefixes
    ):
        return SmipTag.NATIVE
    if roaming_label == IH:
        energy = any(
            kw in a.network_identifier.lower()
            for a in profile.apns
            for kw in cfg.energy_apn_keywords
        )
        manufacturer = (
            profile.tac_entry.manufacturer.lower() if profile.tac_entry else ""
        )
        if (
            energy
            and profile.sim_plmn == cfg.expected_home_plmn
            and manufacturer in cfg.expected_manufacturers
        ):
            return SmipTag.ROAMING
    return None


@dataclass(frozen=True, slots=True)
class ClassificationRow:
    """One device's classifier verdict plus the rule that fired."""

    device: DeviceId
    device_class: DeviceClass
    vertical: Vertical
    smip: SmipTag | None
    evidence: str


def _evidence(
    profile: DeviceProfile,
    cls: DeviceClass,
    seed: set[DeviceId],
    cfg: KeywordConfig,
) -> str:
    if cls is DeviceClass.M2M:
        rank = _m2m_keyword_rank(profile, cfg)
        if profile.device in seed and rank is not None:
            return f"m2m:apn-keyword:{cfg.m2m_keywords[rank][0]}"
        if profile.tac_entry is not None:
            pair = f"{profile.tac_entry.manufacturer}/{profile.tac_entry.model}"
            return f"m2m:properties:{pair}"
        return "m2m:properties"
    if cls is DeviceClass.SMART:
        return "smart:os+consumer-apn"
    if cls is DeviceClass.FEAT:
        hint = profile.tac_entry.gsma_class_hint if profile.tac_entry else None
        if hint is GsmaClassHint.FEATURE_PHONE:
            return "feat:gsma-hint"
        return "feat:consumer-apn"
    return "maybe:residual"


def classify_all(
    profiles: Iterable[DeviceProfile],
    keyword_cfg: KeywordConfig,
    smip_cfg: SmipConfig,
    labels: Mapping[DeviceId, RoamingLabel] | None = None,
) -> list[ClassificationRow]:
    """Run the full chain over a profile set; output sorted by device id.

    ``labels`` maps device to its majority roaming label over the window
    (needed only for SMIP tagging; absent labels mean no tag).
    """
    profiles = sorted(profiles, key=lambda p: p.device)
    labels = labels or {}
    seed = seed_m2m(profiles, keyword_cfg)
    m2m_set = propagate_by_properties(seed, profiles)
    rows = []
    for p in profiles:
        cls = classify_device(p, m2m_set, keyword_cfg)
        rows.append(
            ClassificationRow(
                device=p.device,
                device_class=cls,
                vertical=device_vertical(p, m2m_set, keyword_cfg),
                smip=tag_smip(p, labels.get(p.device), smip_cfg),
                evidence=_evidence(p, cls, seed, keyword_cfg),
            )
        )
    return rows


CLASSIFICATION_SCHEMA = "# schema=classification.v1"
_CLASSIFICATION_HEADER = ["device", "class", "vertical", "smip", "evidence"]


def write_classification(path, rows: Iterable[ClassificationRow]) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(CLASSIFICATION_SCHEMA + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_CLASSIFICATION_HEADER)
        for r in rows:
            writer.writerow(
                [
                    r.device,
                    r.device_class.render(),
                    r.vertical.render(),
                    r.smip.value if r.smip else "",
                    r.evidence,
                ]
            )
    os.replace(tmp, path)


def read_classification(path) -> list[ClassificationRow]:
    from .ingest import _read_header_csv  # shared header/schema plumbing

    rows = []
    for _line_no, row in _read_header_csv(path, CLASSIFICATION_SCHEMA, _CLASSIFICATION_HEADER):
        device, cls, vertical, smip, evidence = row
        rows.append(
            ClassificationRow(
                device=device,
                device_class=DeviceClass.parse(cls),
                vertical=Vertical.parse(vertical),
                smip=SmipTag(smip) if smip else None,
                evidence=evidence,
            )
        )
    return rows
