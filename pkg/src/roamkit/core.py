"""Shared domain vocabulary: identifiers, PLMN codes, labels, classes, enums.

All types here are immutable values, safe to copy and share between
concurrent workers. Canonical text renderings (label ``X:Y``, PLMN
``MCCMNC``) are part of the report file contract and must stay bit-exact.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache


class RoamKitError(Exception):
    """Base class for all toolkit errors."""


class InternalError(RoamKitError):
    """An internal invariant was violated (maps to exit code 3)."""


_MCC_RE = re.compile(r"[0-9]{3}\Z")
_MNC_RE = re.compile(r"[0-9]{2,3}\Z")

# A device identifier is an opaque, pre-hashed string. Never parsed.
DeviceId = str


@dataclass(frozen=True, slots=True)
class Plmn:
    """Public Land Mobile Network identity: 3-digit MCC + 2/3-digit MNC.

    Equality is string equality, so MNC "04" and "004" are distinct values;
    normalization happens at parse time (see ingest.parse_apn).
    """

    mcc: str
    mnc: str

    def __post_init__(self) -> None:
        if not _MCC_RE.match(self.mcc):
            raise ValueError(f"invalid MCC {self.mcc!r}: want 3 decimal digits")
        if not _MNC_RE.match(self.mnc):
            raise ValueError(f"invalid MNC {self.mnc!r}: want 2 or 3 decimal digits")

    def concat(self) -> str:
        """Canonical "MCCMNC" rendering, e.g. ("204", "04") -> "20404"."""
        return self.mcc + self.mnc

    def render(self) -> str:
        """Separator form "MCC-MNC"; unambiguous, used in config and CSVs."""
        return f"{self.mcc}-{self.mnc}"

    @classmethod
    def parse(cls, text: str) -> "Plmn":
        """Parse the "MCC-MNC" separator form."""
        mcc, sep, mnc = text.partition("-")
        if not sep:
            raise ValueError(f"invalid PLMN {text!r}: want MCC-MNC")
        return plmn(mcc, mnc)


@lru_cache(maxsize=None)
def plmn(mcc: str, mnc: str) -> Plmn:
    """Interning constructor; parsers call this to amortize validation."""
    return Plmn(mcc, mnc)


def plmn_concat(p: Plmn) -> str:
    """Render a PLMN as MCC immediately followed by MNC, no separator."""
    return p.concat()


class MessageType(Enum):
    """Control-plane procedure kinds in signaling transactions (closed set)."""

    AUTHENTICATION = "AUTHENTICATION"
    UPDATE_LOCATION = "UPDATE_LOCATION"
    CANCEL_LOCATION = "CANCEL_LOCATION"

    def render(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "MessageType":
        try:
            return cls(text)
        except ValueError:
            raise ValueError(f"unknown message type {text!r}") from None


# Result strings are an open set on the wire; anything unknown is preserved
# verbatim. Analytics treats every non-OK result as a failure.
_KNOWN_RESULTS = frozenset(
    {"OK", "ROAMING_NOT_ALLOWED", "UNKNOWN_SUBSCRIPTION", "FEATURE_UNSUPPORTED"}
)


@dataclass(frozen=True, slots=True)
class ResultCode:
    """Outcome of a signaling or radio procedure; raw wire text preserved."""

    text: str

    def is_success(self) -> bool:
        return self.text == "OK"

    def is_known(self) -> bool:
        return self.text in _KNOWN_RESULTS

    def render(self) -> str:
        return self.text

    @classmethod
    def parse(cls, text: str) -> "ResultCode":
        return cls(text)


RESULT_OK = ResultCode("OK")
RESULT_ROAMING_NOT_ALLOWED = ResultCode("ROAMING_NOT_ALLOWED")
RESULT_UNKNOWN_SUBSCRIPTION = ResultCode("UNKNOWN_SUBSCRIPTION")
RESULT_FEATURE_UNSUPPORTED = ResultCode("FEATURE_UNSUPPORTED")


class SimSide(Enum):
    """SIM-side of a roaming label: home / virtual / national / international."""

    H = "H"
    V = "V"
    N = "N"
    I = "I"


class NetworkSide(Enum):
    """Network-side of a roaming label: home network / abroad."""

    H = "H"
    A = "A"


@dataclass(frozen=True, slots=True)
class RoamingLabel:
    """Device roaming status ``<X:Y>`` (SIM side x network side).

    N:A and I:A are representable but never produced by the labeler: a
    foreign-SIM device observed abroad is invisible to the studied operator.
    """

    sim_side: SimSide
    network_side: NetworkSide

    def render(self) -> str:
        return f"{self.sim_side.value}:{self.network_side.value}"

    @classmethod
    def parse(cls, text: str) -> "RoamingLabel":
        x, sep, y = text.partition(":")
        if not sep:
            raise ValueError(f"invalid roaming label {text!r}: want X:Y")
        try:
            return cls(SimSide(x), NetworkSide(y))
        except ValueError:
            raise ValueError(f"invalid roaming label {text!r}") from None


HH = RoamingLabel(SimSide.H, NetworkSide.H)
VH = RoamingLabel(SimSide.V, NetworkSide.H)
NH = RoamingLabel(SimSide.N, NetworkSide.H)
IH = RoamingLabel(SimSide.I, NetworkSide.H)
HA = RoamingLabel(SimSide.H, NetworkSide.A)
VA = RoamingLabel(SimSide.V, NetworkSide.A)

# The six labels that can occur in output, in tie-break precedence order.
LABEL_PRECEDENCE: tuple[RoamingLabel, ...] = (HH, VH, NH, IH, HA, VA)


class DeviceClass(Enum):
    """Final device classification."""

    SMART = "smart"
    FEAT = "feat"
    M2M = "m2m"
    M2M_MAYBE = "m2m-maybe"

    def render(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "DeviceClass":
        try:
            return cls(text)
        except ValueError:
            raise ValueError(f"unknown device class {text!r}") from None


class Vertical(Enum):
    """IoT vertical, assigned from APN keyword configuration only."""

    ENERGY = "energy"
    AUTOMOTIVE = "automotive"
    GLOBAL_IOT_SIM = "global-iot-sim"
    CONSUMER = "consumer"
    OTHER_M2M = "other-m2m"
    UNKNOWN = "unknown"

    def render(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "Vertical":
        try:
            return cls(text)
        except ValueError:
            raise ValueError(f"unknown vertical {text!r}") from None


class Rat(Enum):
    """Radio access technology generation."""

    G2 = "2G"
    G3 = "3G"
    G4 = "4G"

    def render(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "Rat":
        try:
            return cls(text)
        except ValueError:
            raise ValueError(f"unknown RAT {text!r}") from None


@dataclass(frozen=True, slots=True)
class RadioFlags:
    """Three 1-bit flags, set only by a successful communication on 2G/3G/4G."""

    g2: bool = False
    g3: bool = False
    g4: bool = False

    def render(self) -> str:
        return f"{int(self.g2)}{int(self.g3)}{int(self.g4)}"

    @classmethod
    def parse(cls, text: str) -> "RadioFlags":
        if len(text) != 3 or any(c not in "01" for c in text):
            raise ValueError(f"invalid radio flags {text!r}: want three 0/1 bits")
        return cls(text[0] == "1", text[1] == "1", text[2] == "1")

    def __or__(self, other: "RadioFlags") -> "RadioFlags":
        return RadioFlags(self.g2 or other.g2, self.g3 or other.g3, self.g4 or other.g4)

    def any(self) -> bool:
        return self.g2 or self.g3 or self.g4

    def rats(self) -> frozenset[Rat]:
        out = set()
        if self.g2:
            out.add(Rat.G2)
        if self.g3:
            out.add(Rat.G3)
        if self.g4:
            out.add(Rat.G4)
        return frozenset(out)


class GsmaClassHint(Enum):
    """Device-class hint carried by the TAC catalog."""

    SMARTPHONE = "SMARTPHONE"
    FEATURE_PHONE = "FEATURE_PHONE"
    MODEM = "MODEM"
    MODULE = "MODULE"
    OTHER = "OTHER"

    def render(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "GsmaClassHint":
        try:
            return cls(text)
        except ValueError:
            raise ValueError(f"unknown class hint {text!r}") from None


class UsageKind(Enum):
    """Service usage record kind."""

    VOICE = "VOICE"
    DATA = "DATA"

    def render(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "UsageKind":
        try:
            return cls(text)
        except ValueError:
            raise ValueError(f"unknown usage kind {text!r}") from None
