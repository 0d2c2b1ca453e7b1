"""Core value types: ports, addresses, flits, packets and flow descriptions.

Everything in this module is a plain immutable-ish value; the simulator owns
all mutable state. Flits carry their destination address on the wire so each
router can arbitrate locally, one flit at a time.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional, Union


class PortId(Enum):
    """The eight router ports, named after compass points.

    The four cardinal ports are the designated priority channels: they are
    the ones used for inter-router links in a mesh and get multi-flit
    sequential credit at the arbiters.
    """

    NN = "NN"
    NE = "NE"
    EE = "EE"
    SE = "SE"
    SS = "SS"
    SW = "SW"
    WW = "WW"
    NW = "NW"

    @property
    def is_cardinal(self) -> bool:
        return self in CARDINAL_PORTS

    @property
    def opposite(self) -> "PortId":
        return _OPPOSITE[self]

    def __repr__(self) -> str:  # compact in traces
        return self.value


CARDINAL_PORTS = frozenset({PortId.NN, PortId.SS, PortId.EE, PortId.WW})

# Arbitration rank used when an arbiter is initialised: cardinals first,
# then diagonals, each group in a fixed order.
PORT_RANK = {
    PortId.NN: 0,
    PortId.SS: 1,
    PortId.EE: 2,
    PortId.WW: 3,
    PortId.NE: 4,
    PortId.SE: 5,
    PortId.SW: 6,
    PortId.NW: 7,
}

_OPPOSITE = {
    PortId.NN: PortId.SS,
    PortId.SS: PortId.NN,
    PortId.EE: PortId.WW,
    PortId.WW: PortId.EE,
    PortId.NE: PortId.SW,
    PortId.SW: PortId.NE,
    PortId.SE: PortId.NW,
    PortId.NW: PortId.SE,
}


class Coord(NamedTuple):
    """Mesh coordinate. x grows eastward, y grows northward."""

    x: int
    y: int


class Address(NamedTuple):
    """A core attachment point: a router plus one of its ports."""

    router: Coord
    port: PortId


class FlitKind(Enum):
    PAYLOAD = 0
    HEADER = 1
    TAIL = 2
    HEADER_TAIL = 3  # single-flit packets only

    @property
    def is_header(self) -> bool:
        return self in (FlitKind.HEADER, FlitKind.HEADER_TAIL)

    @property
    def is_tail(self) -> bool:
        return self in (FlitKind.TAIL, FlitKind.HEADER_TAIL)


@dataclass(frozen=True)
class Flit:
    """One routed unit. ``src`` and ``seq`` are simulator metadata; only
    kind, destination and data travel on the wire."""

    kind: FlitKind
    dst: Address
    data: int
    src: Optional[Address] = None
    seq: int = 0
    flow: Optional[str] = None
    packet_no: int = 0


@dataclass
class Packet:
    flits: list
    f: int
    inject_time: int
    flow: str = ""

    def __post_init__(self):
        if len(self.flits) != self.f:
            raise ValueError("flit list does not match declared length")


class SizeError(ValueError):
    pass


@dataclass(frozen=True)
class Fixed:
    f: int


@dataclass(frozen=True)
class UniformRange:
    f_min: int
    f_max: int


@dataclass(frozen=True)
class Saturating:
    pass


@dataclass(frozen=True)
class Periodic:
    period: int
    offset: int = 0


@dataclass(frozen=True)
class SingleShot:
    at: int


SizeLaw = Union[Fixed, UniformRange]
RateLaw = Union[Saturating, Periodic, SingleShot]


@dataclass(frozen=True)
class FlowSpec:
    """A recurring source-to-destination traffic stream."""

    id: str
    src: Address
    dst: Address
    size_law: SizeLaw
    rate_law: RateLaw
    # Base for the 16-bit data words carried by this flow's flits. Flit i of
    # a packet carries data_base + i + 1, so a base of 0x0870 yields the
    # words 0871..0876 for a six-flit packet.
    data_base: Optional[int] = None

    def __post_init__(self):
        if isinstance(self.size_law, Fixed) and self.size_law.f < 1:
            raise SizeError(f"flow {self.id}: fixed size must be >= 1")
        if isinstance(self.size_law, UniformRange):
            if self.size_law.f_min < 1 or self.size_law.f_max < self.size_law.f_min:
                raise SizeError(f"flow {self.id}: bad size range")

    @property
    def max_f(self) -> int:
        if isinstance(self.size_law, Fixed):
            return self.size_law.f
        return self.size_law.f_max

    def data_word(self, seq: int, width: int = 16) -> int:
        base = self.data_base
        if base is None:
            # Deterministic fallback derived from the flow id.
            base = (zlib.crc32(self.id.encode()) & 0xFF) << 8
        return (base + seq + 1) & ((1 << width) - 1)


def make_packet(flow: FlowSpec, f: int, inject_time: int, packet_no: int = 0) -> Packet:
    """Break a request of ``f`` flits into header/payload/tail flits."""
    if f < 1:
        raise SizeError("packet size must be at least one flit")
    flits = []
    for i in range(f):
        if f == 1:
            kind = FlitKind.HEADER_TAIL
        elif i == 0:
            kind = FlitKind.HEADER
        elif i == f - 1:
            kind = FlitKind.TAIL
        else:
            kind = FlitKind.PAYLOAD
        flits.append(
            Flit(
                kind=kind,
                dst=flow.dst,
                src=flow.src,
                data=flow.data_word(i),
                seq=i,
                flow=flow.id,
                packet_no=packet_no,
            )
        )
    return Packet(flits=flits, f=f, inject_time=inject_time, flow=flow.id)


# ---------------------------------------------------------------------------
# Wire encoding
# ---------------------------------------------------------------------------


class EncodingError(ValueError):
    pass


class DecodeError(ValueError):
    pass


@dataclass(frozen=True)
class FlitLayout:
    """Bit packing for on-wire flits.

    Word layout, most significant field first:
        kind (2) | dst.x (x_bits) | dst.y (y_bits) | dst.port (3) | data (data_bits)

    Source address and sequence number are simulator metadata and are not
    packed onto the wire.
    """

    x_bits: int
    y_bits: int
    data_bits: int = 16
    port_bits: int = 3
    kind_bits: int = 2

    @classmethod
    def for_mesh(cls, width: int, height: int, data_bits: int = 16) -> "FlitLayout":
        return cls(
            x_bits=max(1, (width - 1).bit_length()),
            y_bits=max(1, (height - 1).bit_length()),
            data_bits=data_bits,
        )

    @property
    def word_bits(self) -> int:
        return self.kind_bits + self.x_bits + self.y_bits + self.port_bits + self.data_bits


_PORT_CODE = {p: i for i, p in enumerate(PortId)}
_PORT_FROM_CODE = {i: p for i, p in enumerate(PortId)}


def encode_flit(flit: Flit, layout: FlitLayout) -> int:
    """Pack a flit into a wire word; inverse of :func:`decode_flit`."""
    if flit.dst.router.x >= (1 << layout.x_bits):
        raise EncodingError(f"dst.x {flit.dst.router.x} overflows {layout.x_bits} bits")
    if flit.dst.router.y >= (1 << layout.y_bits):
        raise EncodingError(f"dst.y {flit.dst.router.y} overflows {layout.y_bits} bits")
    if not 0 <= flit.data < (1 << layout.data_bits):
        raise EncodingError(f"data {flit.data:#x} overflows {layout.data_bits} bits")
    word = flit.kind.value
    word = (word << layout.x_bits) | flit.dst.router.x
    word = (word << layout.y_bits) | flit.dst.router.y
    word = (word << layout.port_bits) | _PORT_CODE[flit.dst.port]
    word = (word << layout.data_bits) | flit.data
    return word


def decode_flit(word: int, layout: FlitLayout) -> Flit:
    """Unpack a wire word. Source and sequence come back as metadata defaults."""
    if not 0 <= word < (1 << layout.word_bits):
        raise DecodeError(f"word {word:#x} does not fit a {layout.word_bits}-bit layout")
    data = word & ((1 << layout.data_bits) - 1)
    word >>= layout.data_bits
    port = _PORT_FROM_CODE[word & ((1 << layout.port_bits) - 1)]
    word >>= layout.port_bits
    y = word & ((1 << layout.y_bits) - 1)
    word >>= layout.y_bits
    x = word & ((1 << layout.x_bits) - 1)
    word >>= layout.x_bits
    kind = FlitKind(word)
    return Flit(kind=kind, dst=Address(Coord(x, y), port), data=data)


def render_trace_word(flit: Flit, data_bits: int = 16) -> int:
    """Trace word as it appears in delivered-flit dumps: a 4 nibble marks
    header and tail flits, payload flits carry a 0 nibble, followed by the
    raw data field."""
    marker = 0x4 if (flit.kind.is_header or flit.kind.is_tail) else 0x0
    return (marker << data_bits) | flit.data


def format_trace_word(flit: Flit, data_bits: int = 16) -> str:
    digits = (data_bits + 4 + 3) // 4
    return f"{render_trace_word(flit, data_bits):0{digits}X}"


def parse_trace_word(word: int, data_bits: int = 16) -> tuple:
    """Split a trace word into (is_boundary, data): the marker nibble tells
    packet-boundary flits (header/tail) from payload, the rest is the data
    field. The marker alone cannot distinguish header from tail; position
    in the delivered stream does."""
    marker = word >> data_bits
    if marker not in (0x0, 0x4):
        raise DecodeError(f"trace word {word:#x} has no valid marker nibble")
    return marker == 0x4, word & ((1 << data_bits) - 1)
