"""Roaming label assignment for device-days.

Each observed record pairs a SIM PLMN with a visited PLMN; the pair maps
to one of six labels <X:Y> where X in {H, V, N, I} describes the SIM
owner relative to the studied operator and Y in {H, A} describes where
the device was seen. A device-day gets the majority label over its
records, ties broken by a fixed precedence.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from .core import (
    LABEL_PRECEDENCE,
    NetworkSide,
    Plmn,
    RoamKitError,
    RoamingLabel,
    SimSide,
)


class OutOfScopeObservation(RoamKitError):
    """A (sim, visited) pair that the studied operator's probes cannot emit.

    Two cases: a non-home, non-MVNO SIM observed abroad (the operator has
    no visibility there), and a visited network in the home country that
    is not the operator's own. Either one signals corrupted input.
    """


class EmptyDay(RoamKitError):
    """label_device_day was called with zero records."""


@dataclass(frozen=True, slots=True)
class LabelerConfig:
    """Identity of the studied operator: its PLMN and its hosted MVNOs."""

    home_plmn: Plmn
    mvno_plmns: frozenset[Plmn] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.home_plmn in self.mvno_plmns:
            raise ValueError("home_plmn must not appear in mvno_plmns")

    @property
    def home_country_mcc(self) -> str:
        return self.home_plmn.mcc


def label_roaming(sim: Plmn, visited: Plmn, cfg: LabelerConfig) -> RoamingLabel:
    """Label one (sim, visited) observation.

    X: H if the SIM is the operator's own, V if an MVNO it hosts, N if
    another operator of the home country, I otherwise. Y: H if seen on
    the operator's network, A if seen abroad. N/I SIMs abroad and
    home-country networks other than the operator's are out of scope.
    """
    if sim == cfg.home_plmn:
        x = SimSide.H
    elif sim in cfg.mvno_plmns:
        x = SimSide.V
    elif sim.mcc == cfg.home_country_mcc:
        x = SimSide.N
    else:
        x = SimSide.I

    if visited == cfg.home_plmn:
        y = NetworkSide.H
    elif visited.mcc != cfg.home_country_mcc:
        y = NetworkSide.A
    else:
        raise OutOfScopeObservation(
            f"visited network {visited.render()} is in the home country "
            f"but is not the studied operator"
        )

    if y is NetworkSide.A and x in (SimSide.N, SimSide.I):
        raise OutOfScopeObservation(
            f"SIM {sim.render()} seen abroad on {visited.render()}: "
            f"not observable from the studied operator"
        )
    return RoamingLabel(x, y)


_RANK = {label: i for i, label in enumerate(LABEL_PRECEDENCE)}


def label_device_day(
    pairs: Iterable[tuple[Plmn, Plmn]], cfg: LabelerConfig
) -> RoamingLabel:
    """Majority label over one device-day's (sim, visited) pairs.

    Ties break by precedence H:H > V:H > N:H > I:H > H:A > V:A. The
    result is independent of record order.
    """
    counts: Counter[RoamingLabel] = Counter()
    for sim, visited in pairs:
        counts[label_roaming(sim, visited, cfg)] += 1
    if not counts:
        raise EmptyDay("no records for device-day")
    return min(counts, key=lambda lab: (-counts[lab], _RANK[lab]))
