"""Domain vocabulary: identities, render/parse round-trips, validation."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from roamkit.core import (
    HA,
    HH,
    IH,
    LABEL_PRECEDENCE,
    NH,
    RESULT_OK,
    RESULT_ROAMING_NOT_ALLOWED,
    VA,
    VH,
    DeviceClass,
    GsmaClassHint,
    MessageType,
    Plmn,
    RadioFlags,
    Rat,
    ResultCode,
    RoamingLabel,
    UsageKind,
    Vertical,
    plmn,
    plmn_concat,
)

mccs = st.from_regex(r"[0-9]{3}", fullmatch=True)
mncs = st.from_regex(r"[0-9]{2,3}", fullmatch=True)
plmns = st.builds(plmn, mccs, mncs)


class TestPlmn:
    def test_concat_examples(self):
        assert plmn("204", "04").concat() == "20404"
        assert plmn("310", "410").concat() == "310410"

    def test_render(self):
        assert plmn("234", "15").render() == "234-15"

    def test_parse_render_inverse(self):
        assert Plmn.parse("234-15") == plmn("234", "15")

    @given(plmns)
    def test_round_trip(self, p):
        assert Plmn.parse(p.render()) == p

    @given(plmns)
    def test_concat_agrees_with_fields(self, p):
        assert plmn_concat(p) == p.mcc + p.mnc

    def test_mnc_length_preserved(self):
        # 020 and 20 are different network codes
        assert plmn("334", "020") != plmn("334", "20")

    @pytest.mark.parametrize("mcc,mnc", [("23", "15"), ("2345", "15"), ("abc", "15"),
                                         ("234", "1"), ("234", "1234"), ("234", "xy")])
    def test_invalid(self, mcc, mnc):
        with pytest.raises(ValueError):
            plmn(mcc, mnc)

    def test_factory_interns(self):
        assert plmn("234", "15") is plmn("234", "15")


class TestResultCode:
    def test_ok_is_success(self):
        assert RESULT_OK.is_success()
        assert not RESULT_ROAMING_NOT_ALLOWED.is_success()

    def test_unknown_text_is_failure_but_known_flag(self):
        odd = ResultCode.parse("SOME_VENDOR_CODE")
        assert not odd.is_success()
        assert not odd.is_known()
        assert RESULT_OK.is_known()

    @given(st.from_regex(r"[A-Z_]{1,20}", fullmatch=True))
    def test_round_trip(self, text):
        assert ResultCode.parse(text).render() == text


class TestEnums:
    @pytest.mark.parametrize("enum_cls", [MessageType, DeviceClass, Vertical, Rat,
                                          GsmaClassHint, UsageKind])
    def test_render_parse_round_trip(self, enum_cls):
        for member in enum_cls:
            assert enum_cls.parse(member.render()) is member

    def test_unknown_message_type(self):
        with pytest.raises(ValueError):
            MessageType.parse("REBOOT")


class TestRoamingLabel:
    def test_render(self):
        assert HH.render() == "H:H"
        assert VA.render() == "V:A"

    @pytest.mark.parametrize("label", [HH, VH, NH, IH, HA, VA])
    def test_round_trip(self, label):
        assert RoamingLabel.parse(label.render()) == label

    def test_precedence_order(self):
        assert LABEL_PRECEDENCE == (HH, VH, NH, IH, HA, VA)

    def test_parse_rejects_garbage(self):
        with pytest.raises(ValueError):
            RoamingLabel.parse("X:Y")
        with pytest.raises(ValueError):
            RoamingLabel.parse("HH")


class TestRadioFlags:
    def test_render_parse(self):
        f = RadioFlags(g2=True, g3=True, g4=False)
        assert f.render() == "110"
        assert RadioFlags.parse("110") == f

    @given(st.booleans(), st.booleans(), st.booleans())
    def test_round_trip(self, a, b, c):
        f = RadioFlags(a, b, c)
        assert RadioFlags.parse(f.render()) == f

    def test_or_accumulates(self):
        assert (RadioFlags(True, False, False) | RadioFlags(False, False, True)) == \
            RadioFlags(True, False, True)

    def test_rats(self):
        assert RadioFlags(True, False, True).rats() == frozenset({Rat.G2, Rat.G4})
        assert not RadioFlags(False, False, False).any()
