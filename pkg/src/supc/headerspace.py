"""Set algebra over the seven-field flow match space.

A :class:`MatchSet` is the Cartesian product of seven per-field sets:
source/destination MAC, source/destination IPv4 prefix, source/destination
port, and protocol.  Every field is either a wildcard or one concrete
value, except IP fields which are CIDR prefixes.  Because prefixes nest,
the intersection of two fields is always one of the operands (or empty),
which keeps the algebra closed and exact.

Empty results are returned as ``None`` and are never wrapped in a
``MatchSet``, so every constructed ``MatchSet`` is nonempty.
"""

from __future__ import annotations

import enum
import ipaddress
import re
from dataclasses import dataclass, field
from typing import Optional, Union

WILDCARD = "*"

_MAC_RE = re.compile(r"^[0-9a-fA-F]{2}([:-][0-9a-fA-F]{2}){5}$")


class Proto(enum.Enum):
    # declaration order is the witness preference order
    TCP = "tcp"
    UDP = "udp"
    ICMP = "icmp"

    @classmethod
    def parse(cls, text: str) -> "Proto":
        try:
            return cls(text.lower())
        except ValueError:
            raise ValueError(f"unknown protocol {text!r}") from None


PROTO_ORDER = tuple(Proto)


@dataclass(frozen=True, slots=True)
class MacField:
    """A 48-bit MAC address, or the wildcard when ``value`` is None."""

    value: Optional[int] = None

    def __post_init__(self):
        if self.value is not None and not 0 <= self.value < 1 << 48:
            raise ValueError(f"MAC value out of range: {self.value}")

    @classmethod
    def parse(cls, text: str) -> "MacField":
        if text == WILDCARD:
            return cls()
        if not _MAC_RE.match(text):
            raise ValueError(f"invalid MAC address {text!r}")
        return cls(int(re.sub(r"[:-]", "", text), 16))

    @property
    def is_wildcard(self) -> bool:
        return self.value is None

    def __contains__(self, mac: int) -> bool:
        return self.value is None or self.value == mac

    def __str__(self):
        if self.value is None:
            return WILDCARD
        return format_mac(self.value)


@dataclass(frozen=True, slots=True)
class IpField:
    """An IPv4 prefix; prefix length 0 is the wildcard."""

    network: int = 0
    prefixlen: int = 0
    mask: int = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if not 0 <= self.prefixlen <= 32:
            raise ValueError(f"prefix length out of range: {self.prefixlen}")
        object.__setattr__(self, "mask", (0xFFFFFFFF << (32 - self.prefixlen)) & 0xFFFFFFFF)
        if not 0 <= self.network < 1 << 32:
            raise ValueError(f"IPv4 address out of range: {self.network}")
        if self.network & ~self.mask & 0xFFFFFFFF:
            raise ValueError("host bits set below the prefix length")

    @classmethod
    def parse(cls, text: str) -> "IpField":
        """Parse ``a.b.c.d`` or ``a.b.c.d/len``; host bits are cleared."""
        if text == WILDCARD:
            return cls()
        try:
            net = ipaddress.IPv4Network(text, strict=False)
        except (ipaddress.AddressValueError, ipaddress.NetmaskValueError, ValueError):
            raise ValueError(f"invalid IPv4/CIDR {text!r}") from None
        return cls(int(net.network_address), net.prefixlen)

    @property
    def is_wildcard(self) -> bool:
        return self.prefixlen == 0

    @property
    def first(self) -> int:
        return self.network

    @property
    def last(self) -> int:
        return self.network | (~self.mask & 0xFFFFFFFF)

    def __contains__(self, addr: int) -> bool:
        return addr & self.mask == self.network

    def __str__(self):
        if self.prefixlen == 0:
            return WILDCARD
        return f"{format_ip(self.network)}/{self.prefixlen}"


@dataclass(frozen=True, slots=True)
class PortField:
    value: Optional[int] = None

    def __post_init__(self):
        if self.value is not None and not 0 <= self.value <= 0xFFFF:
            raise ValueError(f"port out of range: {self.value}")

    @classmethod
    def parse(cls, text: str) -> "PortField":
        if text == WILDCARD:
            return cls()
        if not (text.isascii() and text.isdigit()):
            raise ValueError(f"invalid port {text!r}")
        port = int(text)
        if port > 0xFFFF:
            raise ValueError(f"invalid port {text!r}")
        return cls(port)

    @property
    def is_wildcard(self) -> bool:
        return self.value is None

    def __contains__(self, port: int) -> bool:
        return self.value is None or self.value == port

    def __str__(self):
        return WILDCARD if self.value is None else str(self.value)


@dataclass(frozen=True, slots=True)
class ProtoField:
    value: Optional[Proto] = None

    @classmethod
    def parse(cls, text: str) -> "ProtoField":
        if text == WILDCARD:
            return cls()
        return cls(Proto.parse(text))

    @property
    def is_wildcard(self) -> bool:
        return self.value is None

    def __contains__(self, proto: Proto) -> bool:
        return self.value is None or self.value is proto

    def __str__(self):
        return WILDCARD if self.value is None else self.value.value


Field = Union[MacField, IpField, PortField, ProtoField]


def field_intersect(a: Field, b: Field) -> Optional[Field]:
    """Largest field value contained in both ``a`` and ``b``, or None."""
    if isinstance(a, IpField):
        return _ip_meet(a, b)
    return _exact_meet(a, b)


def field_subset(a: Field, b: Field) -> bool:
    """True iff every value of ``a`` is also a value of ``b``."""
    if isinstance(a, IpField):
        return a.prefixlen >= b.prefixlen and a.network & b.mask == b.network
    return b.value is None or a.value == b.value


FIELD_NAMES = ("proto", "l2s", "l2d", "l3s", "l3d", "l4s", "l4d")


@dataclass(frozen=True, slots=True)
class MatchSet:
    """Seven-field header predicate; denotes the product of its field sets."""

    l2s: MacField = MacField()
    l2d: MacField = MacField()
    l3s: IpField = IpField()
    l3d: IpField = IpField()
    l4s: PortField = PortField()
    l4d: PortField = PortField()
    proto: ProtoField = ProtoField()

    @classmethod
    def build(cls, *, proto="*", l2s="*", l2d="*", l3s="*", l3d="*", l4s="*", l4d="*"):
        """Construct from the textual form of each field (``"*"`` for any)."""
        return cls(
            l2s=MacField.parse(l2s),
            l2d=MacField.parse(l2d),
            l3s=IpField.parse(l3s),
            l3d=IpField.parse(l3d),
            l4s=PortField.parse(str(l4s)),
            l4d=PortField.parse(str(l4d)),
            proto=ProtoField.parse(proto),
        )

    def fields(self) -> tuple:
        return (self.l2s, self.l2d, self.l3s, self.l3d, self.l4s, self.l4d, self.proto)

    def to_dict(self) -> dict:
        return {name: str(getattr(self, name)) for name in FIELD_NAMES}

    @classmethod
    def from_dict(cls, d: dict) -> "MatchSet":
        return cls.build(**{name: d.get(name, WILDCARD) for name in FIELD_NAMES})

    def __str__(self):
        # hosts render with an explicit /32
        return " ".join(f"{name}={getattr(self, name)}" for name in FIELD_NAMES)


def _ip_meet(a: IpField, b: IpField) -> Optional[IpField]:
    if a.prefixlen <= b.prefixlen:
        return b if b.network & a.mask == a.network else None
    return a if a.network & b.mask == b.network else None


def _exact_meet(a, b):
    if a.value is None:
        return b
    if b.value is None or a.value == b.value:
        return a
    return None


def match_intersect(a: MatchSet, b: MatchSet) -> Optional[MatchSet]:
    """Field-wise intersection; None as soon as any field is empty."""
    # hot path of every detector: unrolled, cheapest fields first
    proto = _exact_meet(a.proto, b.proto)
    if proto is None:
        return None
    l4s = _exact_meet(a.l4s, b.l4s)
    if l4s is None:
        return None
    l4d = _exact_meet(a.l4d, b.l4d)
    if l4d is None:
        return None
    l3s = _ip_meet(a.l3s, b.l3s)
    if l3s is None:
        return None
    l3d = _ip_meet(a.l3d, b.l3d)
    if l3d is None:
        return None
    l2s = _exact_meet(a.l2s, b.l2s)
    if l2s is None:
        return None
    l2d = _exact_meet(a.l2d, b.l2d)
    if l2d is None:
        return None
    return MatchSet(l2s, l2d, l3s, l3d, l4s, l4d, proto)


def match_overlaps(a: MatchSet, b: MatchSet) -> bool:
    return (
        _exact_meet(a.proto, b.proto) is not None
        and _exact_meet(a.l4s, b.l4s) is not None
        and _exact_meet(a.l4d, b.l4d) is not None
        and _ip_meet(a.l3s, b.l3s) is not None
        and _ip_meet(a.l3d, b.l3d) is not None
        and _exact_meet(a.l2s, b.l2s) is not None
        and _exact_meet(a.l2d, b.l2d) is not None
    )


def match_subset(a: MatchSet, b: MatchSet) -> bool:
    return all(field_subset(fa, fb) for fa, fb in zip(a.fields(), b.fields()))


def match_reverse(m: MatchSet) -> MatchSet:
    """Swap source and destination at L2, L3 and L4; protocol is kept."""
    return MatchSet(m.l2d, m.l2s, m.l3d, m.l3s, m.l4d, m.l4s, m.proto)


@dataclass(frozen=True, slots=True)
class PacketHeader:
    src_mac: int
    dst_mac: int
    src_ip: int
    dst_ip: int
    src_port: int
    dst_port: int
    proto: Proto

    def to_dict(self) -> dict:
        return {
            "src_mac": format_mac(self.src_mac),
            "dst_mac": format_mac(self.dst_mac),
            "src_ip": format_ip(self.src_ip),
            "dst_ip": format_ip(self.dst_ip),
            "src_port": self.src_port,
            "dst_port": self.dst_port,
            "proto": self.proto.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PacketHeader":
        return cls(
            MacField.parse(d["src_mac"]).value,
            MacField.parse(d["dst_mac"]).value,
            int(ipaddress.IPv4Address(d["src_ip"])),
            int(ipaddress.IPv4Address(d["dst_ip"])),
            int(d["src_port"]),
            int(d["dst_port"]),
            Proto.parse(d["proto"]),
        )

    def reversed(self) -> "PacketHeader":
        return PacketHeader(
            self.dst_mac, self.src_mac, self.dst_ip, self.src_ip,
            self.dst_port, self.src_port, self.proto,
        )


def contains_header(m: MatchSet, h: PacketHeader) -> bool:
    return (
        h.src_mac in m.l2s
        and h.dst_mac in m.l2d
        and h.src_ip in m.l3s
        and h.dst_ip in m.l3d
        and h.src_port in m.l4s
        and h.dst_port in m.l4d
        and h.proto in m.proto
    )


def pick_witness(m: MatchSet) -> PacketHeader:
    """Smallest concrete header inside ``m``, field by field."""
    return PacketHeader(
        src_mac=m.l2s.value or 0,
        dst_mac=m.l2d.value or 0,
        src_ip=m.l3s.network,
        dst_ip=m.l3d.network,
        src_port=m.l4s.value or 0,
        dst_port=m.l4d.value or 0,
        proto=m.proto.value or PROTO_ORDER[0],
    )


def format_ip(addr: int) -> str:
    return str(ipaddress.IPv4Address(addr))


def format_mac(value: int) -> str:
    raw = f"{value:012x}"
    return ":".join(raw[i:i + 2] for i in range(0, 12, 2))
