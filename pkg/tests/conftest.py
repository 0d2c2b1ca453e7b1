"""Shared test fixtures: the golden 2x2/24-core network and helpers."""

import pytest

from flitnoc.core import Address, Coord, Fixed, FlowSpec, PortId, Saturating, SingleShot
from flitnoc.network import build_mesh

P = PortId

FIG7_FREE_PORTS = {
    Coord(0, 0): [P.NE, P.SE, P.SW, P.NW, P.SS, P.WW],
    Coord(1, 0): [P.NE, P.SE, P.SW, P.NW, P.SS, P.EE],
    Coord(0, 1): [P.NW, P.NE, P.SE, P.SW, P.NN, P.WW],
    Coord(1, 1): [P.NE, P.SE, P.SW, P.NW, P.NN, P.EE],
}

DATA_NIBBLE = {3: 0x3, 7: 0x7, 13: 0xD, 18: 0xE, 23: 0xF}


def fig7_placements():
    placements = []
    cid = 0
    for rc in [Coord(0, 0), Coord(1, 0), Coord(0, 1), Coord(1, 1)]:
        for port in FIG7_FREE_PORTS[rc]:
            placements.append((cid, Address(rc, port)))
            cid += 1
    return placements


def make_fig7_network(**kwargs):
    kwargs.setdefault("fifo_depth", 4)
    return build_mesh(2, 2, fig7_placements(), **kwargs)


def make_fig7_flows(net, probe_at=None):
    """Four saturating competitors plus the probe flow; the probe fires a
    single packet at ``probe_at`` (far future when None)."""
    flows = [
        FlowSpec(
            f"sigma{c}",
            net.cores[c],
            net.cores[12],
            Fixed(6),
            Saturating(),
            data_base=0x0800 | (DATA_NIBBLE[c] << 4),
        )
        for c in (3, 13, 18, 23)
    ]
    flows.append(
        FlowSpec(
            "sigma7",
            net.cores[7],
            net.cores[12],
            Fixed(6),
            SingleShot(probe_at if probe_at is not None else 10**9),
            data_base=0x0870,
        )
    )
    return flows


def all_port_mesh(w, h, depth=4, kind="rts", **kwargs):
    skeleton = build_mesh(w, h, [], fifo_depth=depth, router_kind=kind)
    placements = []
    cid = 0
    for rc in skeleton.routers():
        for port in P:
            if not skeleton.is_link(rc, port):
                placements.append((cid, Address(rc, port)))
                cid += 1
    return build_mesh(w, h, placements, fifo_depth=depth, router_kind=kind, **kwargs)


@pytest.fixture
def fig7_net():
    return make_fig7_network()
