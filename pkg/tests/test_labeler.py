"""Roaming-label assignment rules and the daily majority vote."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from roamkit.core import HA, HH, IH, NH, VA, VH, plmn
from roamkit.labeler import (
    EmptyDay,
    LabelerConfig,
    OutOfScopeObservation,
    label_device_day,
    label_roaming,
)

HOME = plmn("234", "15")
MVNO = plmn("234", "38")
NATIONAL = plmn("234", "20")
FOREIGN_SIM = plmn("214", "07")
ABROAD = plmn("208", "01")

CFG = LabelerConfig(home_plmn=HOME, mvno_plmns=frozenset({MVNO}))


class TestLabelRoaming:
    def test_native(self):
        assert label_roaming(HOME, HOME, CFG) == HH

    def test_inbound_roamer(self):
        assert label_roaming(FOREIGN_SIM, HOME, CFG) == IH

    def test_outbound_roamer(self):
        assert label_roaming(HOME, ABROAD, CFG) == HA

    def test_mvno_at_home(self):
        assert label_roaming(MVNO, HOME, CFG) == VH

    def test_national_roamer(self):
        assert label_roaming(NATIONAL, HOME, CFG) == NH

    def test_mvno_abroad(self):
        assert label_roaming(MVNO, ABROAD, CFG) == VA

    def test_foreign_sim_abroad_is_out_of_scope(self):
        with pytest.raises(OutOfScopeObservation):
            label_roaming(FOREIGN_SIM, ABROAD, CFG)

    def test_national_sim_abroad_is_out_of_scope(self):
        with pytest.raises(OutOfScopeObservation):
            label_roaming(NATIONAL, ABROAD, CFG)

    def test_home_country_non_home_network_is_out_of_scope(self):
        # visited shares the home MCC but is not the studied network:
        # the studied operator's probes cannot see this attachment
        other_national_net = plmn("234", "30")
        with pytest.raises(OutOfScopeObservation):
            label_roaming(HOME, other_national_net, CFG)

    def test_self_consistency(self):
        # H:H iff sim = visited = home
        assert label_roaming(HOME, HOME, CFG) == HH
        for sim in (MVNO, NATIONAL, FOREIGN_SIM):
            assert label_roaming(sim, HOME, CFG) != HH


class TestConfig:
    def test_home_in_mvnos_rejected(self):
        with pytest.raises(ValueError):
            LabelerConfig(home_plmn=HOME, mvno_plmns=frozenset({HOME}))

    def test_home_country_mcc_derived(self):
        assert CFG.home_country_mcc == "234"


mccs = st.from_regex(r"[0-9]{3}", fullmatch=True)
mncs = st.from_regex(r"[0-9]{2,3}", fullmatch=True)
sims = st.builds(plmn, mccs, mncs)
visiteds = st.one_of(
    st.just(HOME),
    st.builds(plmn, st.sampled_from(["208", "262", "310"]), mncs),
)


class TestExhaustiveness:
    @given(sims, visiteds)
    def test_every_in_scope_pair_labels_or_raises(self, sim, visited):
        """Each (sim, visited) pair either yields one of the 6 labels or is
        explicitly out of observational scope; nothing else."""
        try:
            label = label_roaming(sim, visited, CFG)
        except OutOfScopeObservation:
            if visited == HOME:
                pytest.fail("visited=home can always be labeled")
            # abroad: only foreign/national SIMs are out of scope
            assert sim != HOME and sim != MVNO
            return
        assert label in (HH, VH, NH, IH, HA, VA)
        if visited == HOME:
            assert label.network_side.value == "H"
        else:
            assert label.network_side.value == "A"
            assert label.sim_side.value in ("H", "V")


class TestDeviceDay:
    def test_unanimous(self):
        pairs = [(FOREIGN_SIM, HOME)] * 10
        assert label_device_day(pairs, CFG) == IH

    def test_tie_broken_by_precedence(self):
        pairs = [(HOME, HOME)] * 3 + [(HOME, ABROAD)] * 3
        assert label_device_day(pairs, CFG) == HH

    def test_majority_wins_over_precedence(self):
        pairs = [(HOME, HOME)] * 2 + [(HOME, ABROAD)] * 3
        assert label_device_day(pairs, CFG) == HA

    def test_empty_day(self):
        with pytest.raises(EmptyDay):
            label_device_day([], CFG)

    def test_propagates_out_of_scope(self):
        with pytest.raises(OutOfScopeObservation):
            label_device_day([(FOREIGN_SIM, ABROAD)], CFG)

    @given(
        st.lists(
            st.tuples(
                st.sampled_from([HOME, MVNO, NATIONAL, FOREIGN_SIM]),
                st.sampled_from([HOME, ABROAD]),
            ),
            min_size=1,
            max_size=30,
        ).filter(
            lambda pairs: all(
                v == HOME or s in (HOME, MVNO) for s, v in pairs
            )
        ),
        st.randoms(),
    )
    def test_permutation_invariance(self, pairs, rng):
        before = label_device_day(pairs, CFG)
        shuffled = list(pairs)
        rng.shuffle(shuffled)
        assert label_device_day(shuffled, CFG) == before
