import pytest
from hypothesis import given, strategies as st

from flitnoc.core import (
    Address,
    Coord,
    DecodeError,
    Fixed,
    Flit,
    FlitKind,
    FlitLayout,
    FlowSpec,
    PortId,
    Saturating,
    SizeError,
    decode_flit,
    encode_flit,
    EncodingError,
    format_trace_word,
    make_packet,
    parse_trace_word,
)


def _flow(f=6, data_base=None):
    return FlowSpec(
        id="s7",
        src=Address(Coord(1, 0), PortId.SE),
        dst=Address(Coord(0, 1), PortId.NW),
        size_law=Fixed(f),
        rate_law=Saturating(),
        data_base=data_base,
    )


class TestMakePacket:
    def test_six_flit_kind_sequence(self):
        pkt = make_packet(_flow(), 6, inject_time=0)
        kinds = [fl.kind for fl in pkt.flits]
        assert kinds == [
            FlitKind.HEADER,
            FlitKind.PAYLOAD,
            FlitKind.PAYLOAD,
            FlitKind.PAYLOAD,
            FlitKind.PAYLOAD,
            FlitKind.TAIL,
        ]
        assert [fl.seq for fl in pkt.flits] == list(range(6))

    def test_single_flit_packet(self):
        pkt = make_packet(_flow(1), 1, inject_time=0)
        assert [fl.kind for fl in pkt.flits] == [FlitKind.HEADER_TAIL]

    def test_two_flit_packet(self):
        pkt = make_packet(_flow(2), 2, inject_time=5)
        assert [fl.kind for fl in pkt.flits] == [FlitKind.HEADER, FlitKind.TAIL]
        assert pkt.inject_time == 5

    def test_zero_size_rejected(self):
        with pytest.raises(SizeError):
            make_packet(_flow(), 0, inject_time=0)

    def test_addresses_constant_across_packet(self):
        pkt = make_packet(_flow(), 6, inject_time=0)
        assert len({fl.dst for fl in pkt.flits}) == 1
        assert len({fl.src for fl in pkt.flits}) == 1


class TestTraceWords:
    def test_table_words_for_probe_flow(self):
        pkt = make_packet(_flow(data_base=0x0870), 6, inject_time=0)
        words = [format_trace_word(fl) for fl in pkt.flits]
        assert words == ["40871", "00872", "00873", "00874", "00875", "40876"]

    def test_payload_word(self):
        pkt = make_packet(_flow(data_base=0x0830), 6, inject_time=0)
        assert format_trace_word(pkt.flits[2]) == "00833"

    def test_tail_word(self):
        pkt = make_packet(_flow(data_base=0x0830), 6, inject_time=0)
        assert format_trace_word(pkt.flits[5]) == "40836"

    def test_parse_trace_word(self):
        assert parse_trace_word(0x40836) == (True, 0x0836)
        assert parse_trace_word(0x00000) == (False, 0)
        with pytest.raises(DecodeError):
            parse_trace_word(0x70000)


LAYOUT = FlitLayout.for_mesh(2, 2)

addresses = st.builds(
    Address,
    st.builds(Coord, st.integers(0, 1), st.integers(0, 1)),
    st.sampled_from(list(PortId)),
)
flits = st.builds(
    Flit,
    kind=st.sampled_from(list(FlitKind)),
    dst=addresses,
    data=st.integers(0, (1 << 16) - 1),
)


class TestEncoding:
    @given(flits)
    def test_roundtrip_wire_fields(self, flit):
        out = decode_flit(encode_flit(flit, LAYOUT), LAYOUT)
        assert (out.kind, out.dst, out.data) == (flit.kind, flit.dst, flit.data)

    @given(st.integers(0, (1 << LAYOUT.word_bits) - 1))
    def test_word_roundtrip(self, word):
        assert encode_flit(decode_flit(word, LAYOUT), LAYOUT) == word

    def test_zero_word_is_payload(self):
        flit = decode_flit(0, LAYOUT)
        assert flit.kind is FlitKind.PAYLOAD
        assert flit.data == 0

    def test_field_overflow_rejected(self):
        fat = Flit(kind=FlitKind.HEADER, dst=Address(Coord(5, 0), PortId.NN), data=0)
        with pytest.raises(EncodingError):
            encode_flit(fat, LAYOUT)

    def test_layout_width_for_default_mesh(self):
        # 2 kind + 1 x + 1 y + 3 port + 16 data
        assert LAYOUT.word_bits == 23
