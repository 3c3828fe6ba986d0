"""Run configuration: one TOML file with documented sections.

Sections (all optional; defaults reconstruct the shipped setup):

  [inputs]    signaling / radio / usage / tac_catalog / sectors paths
  [run]       out_dir, strict, workers, excluded_classes
  [window]    start_day (ISO date), n_days
  [labeler]   home_plmn, mvno_plmns
  [keywords]  m2m = [["scania", "automotive"], ...], consumer = [...],
              major_os = [...]
  [smip]      native_imsi_prefixes, energy_keywords, home_plmn, manufacturers
  [apn]       mnc3_mccs = [310, ...]   countries with 3-digit MNCs
  [platform]  min_share, [platform.native_networks] "234-30" = "234-15"

Command-line flags override file values; the file overrides defaults.
"""

from __future__ import annotations

import datetime
import os
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from .core import DeviceClass, Plmn, RoamKitError, Vertical, plmn
from .classifier import KeywordConfig, SmipConfig
from .labeler import LabelerConfig

try:  # 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - 3.10 fallback
    import tomli as tomllib


class ConfigError(RoamKitError):
    """Bad run configuration; the message names the offending field."""


_EPOCH = datetime.date(1970, 1, 1).toordinal()


def iso_to_day(text: str) -> int:
    try:
        return datetime.date.fromisoformat(text).toordinal() - _EPOCH
    except ValueError:
        raise ConfigError(f"bad ISO date {text!r}") from None


def _cfg_plmn(text, where: str) -> Plmn:
    try:
        return Plmn.parse(str(text))
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass(frozen=True)
class RunConfig:
    signaling: str | None = None
    radio: str | None = None
    usage: str | None = None
    tac_catalog: str | None = None
    sectors: str | None = None
    out_dir: str = "out"
    strict: bool = False
    workers: int = 1
    excluded_classes: frozenset[DeviceClass] = frozenset({DeviceClass.M2M_MAYBE})
    start_day: int | None = None
    n_days: int | None = None
    labeler: LabelerConfig = field(
        default_factory=lambda: LabelerConfig(
            home_plmn=plmn("234", "15"), mvno_plmns=frozenset()
        )
    )
    keywords: KeywordConfig = field(default_factory=KeywordConfig)
    smip: SmipConfig = field(default_factory=SmipConfig)
    mnc_len_by_mcc: Mapping[str, int] | None = None
    native_networks: Mapping[Plmn, Plmn] = field(default_factory=dict)
    min_share: float = 0.001

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ConfigError("run.workers must be >= 1")
        if self.n_days is not None and self.n_days < 1:
            raise ConfigError("window.n_days must be >= 1")
        if not (0.0 <= self.min_share < 1.0):
            raise ConfigError("platform.min_share out of [0,1)")


def _build_labeler(table: Mapping) -> LabelerConfig:
    home = _cfg_plmn(table.get("home_plmn", "234-15"), "labeler.home_plmn")
    mvnos = frozenset(
        _cfg_plmn(t, "labeler.mvno_plmns") for t in table.get("mvno_plmns", [])
    )
    try:
        return LabelerConfig(home_plmn=home, mvno_plmns=mvnos)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _build_keywords(table: Mapping) -> KeywordConfig:
    kwargs = {}
    if "m2m" in table:
        pairs = []
        for item in table["m2m"]:
            if len(item) != 2:
                raise ConfigError(f"keywords.m2m entry {item!r}: want [keyword, vertical]")
            kw, vert = item
            try:
                pairs.append((str(kw), Vertical.parse(str(vert))))
            except ValueError as exc:
                raise ConfigError(f"keywords.m2m: {exc}") from None
        kwargs["m2m_keywords"] = tuple(pairs)
    if "consumer" in table:
        kwargs["consumer_keywords"] = tuple(str(k) for k in table["consumer"])
    if "major_os" in table:
        kwargs["major_os_set"] = frozenset(str(k) for k in table["major_os"])
    try:
        return KeywordConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"keywords: {exc}") from None


def _build_smip(table: Mapping) -> SmipConfig:
    kwargs = {}
    if "native_imsi_prefixes" in table:
        kwargs["native_imsi_prefixes"] = tuple(str(p) for p in table["native_imsi_prefixes"])
    if "energy_keywords" in table:
        kwargs["energy_apn_keywords"] = tuple(str(k) for k in table["energy_keywords"])
    if "home_plmn" in table:
        kwargs["expected_home_plmn"] = _cfg_plmn(table["home_plmn"], "smip.home_plmn")
    if "manufacturers" in table:
        kwargs["expected_manufacturers"] = frozenset(
            str(m).lower() for m in table["manufacturers"]
        )
    try:
        return SmipConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"smip: {exc}") from None


_INPUT_KEYS = ("signaling", "radio", "usage", "tac_catalog", "sectors")


def run_config_from_dict(raw: Mapping) -> RunConfig:
    known = {"inputs", "run", "window", "labeler", "keywords", "smip", "apn", "platform"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")

    inputs = raw.get("inputs", {})
    bad = set(inputs) - set(_INPUT_KEYS)
    if bad:
        raise ConfigError(f"unknown input keys {sorted(bad)}")
    run = raw.get("run", {})
    window = raw.get("window", {})
    apn = raw.get("apn", {})
    plat = raw.get("platform", {})

    excluded = frozenset(
        DeviceClass.parse(str(c)) for c in run.get("excluded_classes", ["m2m-maybe"])
    )
    mnc_len = None
    if "mnc3_mccs" in apn:
        mnc_len = {f"{int(m):03d}": 3 for m in apn["mnc3_mccs"]}
    native = {}
    for k, v in plat.get("native_networks", {}).items():
        native[_cfg_plmn(k, "platform.native_networks")] = _cfg_plmn(
            v, "platform.native_networks"
        )

    try:
        return RunConfig(
            signaling=inputs.get("signaling"),
            radio=inputs.get("radio"),
            usage=inputs.get("usage"),
            tac_catalog=inputs.get("tac_catalog"),
            sectors=inputs.get("sectors"),
            out_dir=str(run.get("out_dir", "out")),
            strict=bool(run.get("strict", False)),
            workers=int(run.get("workers", 1)),
            excluded_classes=excluded,
            start_day=(
                iso_to_day(str(window["start_day"])) if "start_day" in window else None
            ),
            n_days=int(window["n_days"]) if "n_days" in window else None,
            labeler=_build_labeler(raw.get("labeler", {})),
            keywords=_build_keywords(raw.get("keywords", {})),
            smip=_build_smip(raw.get("smip", {})),
            mnc_len_by_mcc=mnc_len,
            native_networks=native,
            min_share=float(plat.get("min_share", 0.001)),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def load_run_config(path: str | None) -> RunConfig:
    """Load the config file, or the all-defaults config when path is None."""
    if path is None:
        return RunConfig()
    if not os.path.exists(path):
        raise ConfigError(f"config file {path} does not exist")
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"bad TOML in {path}: {exc}") from None
    return run_config_from_dict(raw)


def apply_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    """Apply non-None command-line overrides on top of a loaded config."""
    fields = {k: v for k, v in overrides.items() if v is not None}
    if "home_plmn" in fields:
        cfg = replace(
            cfg,
            labeler=LabelerConfig(
                home_plmn=_cfg_plmn(fields.pop("home_plmn"), "--home-plmn"),
                mvno_plmns=cfg.labeler.mvno_plmns,
            ),
        )
    if "excluded_classes" in fields:
        raw: Sequence[str] = fields.pop("excluded_classes")
        try:
            fields["excluded_classes"] = frozenset(DeviceClass.parse(c) for c in raw)
        except ValueError as exc:
            raise ConfigError(f"--exclude-class: {exc}") from None
    if "start_day" in fields:
        fields["start_day"] = iso_to_day(fields.pop("start_day"))
    try:
        return replace(cfg, **fields) if fields else cfg
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
