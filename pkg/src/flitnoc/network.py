"""Mesh topology: routers, inter-router links, core attachment points and
the structural contention parameters the latency bound is computed from.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .arbiter import xy_route
from .core import Address, CARDINAL_PORTS, Coord, FlitLayout, FlowSpec, PortId


class PlacementError(ValueError):
    pass


class BoundsError(ValueError):
    pass


class LookupError_(KeyError):
    pass


# Direction a cardinal output port points in.
_LINK_DELTA = {
    PortId.NN: (0, 1),
    PortId.SS: (0, -1),
    PortId.EE: (1, 0),
    PortId.WW: (-1, 0),
}


@dataclass
class Network:
    """A built mesh: immutable topology plus per-run knobs.

    ``link_ports`` holds every (router, port) wired to a neighbouring
    router; any other port may host a core. ``fifo_depth`` (B) bounds the
    per-core tx and rx interface FIFOs.
    """

    width: int
    height: int
    fifo_depth: int
    router_kind: str  # "rts" | "wormhole"
    cores: Dict[int, Address] = field(default_factory=dict)
    core_at: Dict[Address, int] = field(default_factory=dict)
    link_ports: FrozenSet[Tuple[Coord, PortId]] = frozenset()
    # Destination cores drain this many flits per cycle from their rx FIFO.
    drain_rate: int = 1
    # Foreign flits pre-loaded into every rx FIFO, modelling interfaces that
    # are not empty when a measured packet arrives. Zero leaves the buffer
    # term of the analytic bound out of play.
    rx_prefill: int = 0
    # Destination cores do not read before this cycle; with a prefill this
    # makes the interface backlog actually delay deliveries.
    rx_stall_until: int = 0
    layout: FlitLayout = field(default_factory=lambda: FlitLayout(1, 1))

    def routers(self) -> List[Coord]:
        return [Coord(x, y) for y in range(self.height) for x in range(self.width)]

    def router_id(self, c: Coord) -> int:
        return c.y * self.width + c.x

    def in_bounds(self, c: Coord) -> bool:
        return 0 <= c.x < self.width and 0 <= c.y < self.height

    def is_link(self, router: Coord, port: PortId) -> bool:
        return (router, port) in self.link_ports

    def neighbour(self, router: Coord, port: PortId) -> Coord:
        dx, dy = _LINK_DELTA[port]
        return Coord(router.x + dx, router.y + dy)

    @property
    def buffer_term_active(self) -> bool:
        """Whether the interface FIFOs can contribute waiting time.

        With the default drain of one flit per cycle and empty interfaces
        the rx FIFO never backs up, so the analytic bound carries no buffer
        term; pre-filled or stalled interfaces switch it on.
        """
        return self.rx_prefill > 0 or self.rx_stall_until > 0

    @property
    def analysis_fifo_depth(self) -> int:
        return self.fifo_depth if self.buffer_term_active else 0


def build_mesh(
    width: int,
    height: int,
    placements: Sequence[Tuple[int, Address]],
    fifo_depth: int,
    router_kind: str = "rts",
    drain_rate: int = 1,
    rx_prefill: int = 0,
    rx_stall_until: int = 0,
) -> Network:
    """Wire up a width x height mesh and attach cores to free ports."""
    if width < 1 or height < 1:
        raise BoundsError("mesh dimensions must be positive")
    if fifo_depth < 1:
        raise ValueError("interface FIFO depth must be at least 1")
    if router_kind not in ("rts", "wormhole"):
        raise ValueError(f"unknown router kind {router_kind!r}")

    links = set()
    for y in range(height):
        for x in range(width):
            c = Coord(x, y)
            for port, (dx, dy) in _LINK_DELTA.items():
                n = Coord(x + dx, y + dy)
                if 0 <= n.x < width and 0 <= n.y < height:
                    links.add((c, port))

    net = Network(
        width=width,
        height=height,
        fifo_depth=fifo_depth,
        router_kind=router_kind,
        link_ports=frozenset(links),
        drain_rate=drain_rate,
        rx_prefill=rx_prefill,
        rx_stall_until=rx_stall_until,
        layout=FlitLayout.for_mesh(width, height),
    )

    for core_id, addr in placements:
        if not net.in_bounds(addr.router):
            raise BoundsError(f"core {core_id}: router {addr.router} outside the mesh")
        if net.is_link(addr.router, addr.port):
            raise PlacementError(
                f"core {core_id}: port {addr.port.value} of {addr.router} is an inter-router link"
            )
        if addr in net.core_at:
            raise PlacementError(f"core {core_id}: {addr} already hosts core {net.core_at[addr]}")
        if core_id in net.cores:
            raise PlacementError(f"duplicate core id {core_id}")
        net.cores[core_id] = addr
        net.core_at[addr] = core_id
    return net


def xy_path(net: Network, src: Address, dst: Address) -> List[Tuple[Coord, PortId]]:
    """The unique XY path from one core to another, as (router, output
    port) pairs; the last entry is the delivery port at the destination
    router. Its length is the hop count used by the analytics."""
    for addr in (src, dst):
        if addr not in net.core_at:
            raise LookupError_(f"{addr} is not a core attachment point")
    path = []
    here = src.router
    while True:
        out = xy_route(here, dst)
        path.append((here, out))
        if here == dst.router and out == dst.port:
            return path
        if not net.is_link(here, out):
            raise LookupError_(f"route from {src} to {dst} falls off the mesh at {here}")
        here = net.neighbour(here, out)


def entry_port(flow_path: List[Tuple[Coord, PortId]], src: Address, router: Coord) -> PortId:
    """Input channel through which a flow's flits reach ``router``."""
    if router == src.router:
        return src.port
    for i, (r, out) in enumerate(flow_path):
        if i + 1 < len(flow_path) and flow_path[i + 1][0] == router:
            return out.opposite
    raise LookupError_(f"{router} is not on the path")


@dataclass(frozen=True)
class ContentionProfile:
    """Structural contention along one flow's path.

    ``n_per_hop`` counts, per hop, the input channels contending for that
    hop's output (the flow's own channel included): one grant round of the
    output arbiter touches each of them at most once while a header waits.
    ``k`` counts the flows addressing the same destination core, the
    quantity that fixes the steady per-flow service rate there.
    """

    flow: str
    n_per_hop: Tuple[int, ...]
    k: int
    h_path: int
    hops: Tuple[Tuple[Coord, PortId], ...] = ()


def contention_profile(net: Network, flows: Sequence[FlowSpec], target: str) -> ContentionProfile:
    by_id = {f.id: f for f in flows}
    if target not in by_id:
        raise LookupError_(f"flow {target!r} not in the flow list")
    tgt = by_id[target]
    tgt_path = xy_path(net, tgt.src, tgt.dst)

    paths = {f.id: xy_path(net, f.src, f.dst) for f in flows}
    n_per_hop = []
    for router, out in tgt_path:
        inputs = set()
        for f in flows:
            if (router, out) in paths[f.id]:
                inputs.add(entry_port(paths[f.id], f.src, router))
        n_per_hop.append(len(inputs))

    k = sum(1 for f in flows if f.dst == tgt.dst)
    return ContentionProfile(
        flow=target,
        n_per_hop=tuple(n_per_hop),
        k=k,
        h_path=len(tgt_path),
        hops=tuple(tgt_path),
    )


def derive_credits(
    net: Network, flows: Sequence[FlowSpec]
) -> Dict[Tuple[Coord, PortId], Dict[PortId, int]]:
    """Sequential-grant budgets for the priority channels, per output.

    A cardinal input channel earns one credit per flow it funnels toward a
    given output, so a link that merges two upstream flows may forward two
    flits back to back and the arbitration round stays proportional to the
    flows behind each channel. Channels that carry a single flow get the
    minimum budget of one.
    """
    counts: Dict[Tuple[Coord, PortId], Dict[PortId, int]] = {}
    for f in flows:
        path = xy_path(net, f.src, f.dst)
        for router, out in path:
            inp = entry_port(path, f.src, router)
            if inp not in CARDINAL_PORTS:
                continue
            per_out = counts.setdefault((router, out), {})
            per_out[inp] = per_out.get(inp, 0) + 1
    for per_out in counts.values():
        for port in per_out:
            per_out[port] = max(1, per_out[port])
    return counts


def channel_dependency_edges(net: Network) -> List[Tuple[Tuple[Coord, PortId], Tuple[Coord, PortId]]]:
    """Directed edges between link channels used consecutively by some XY
    path; acyclicity of this graph is what rules out routing deadlock."""
    edges = set()
    core_addrs = list(net.cores.values())
    for src in core_addrs:
        for dst in core_addrs:
            if src == dst:
                continue
            path = xy_path(net, src, dst)
            link_hops = [(r, p) for r, p in path if net.is_link(r, p)]
            for a, b in zip(link_hops, link_hops[1:]):
                edges.add((a, b))
    return sorted(edges, key=lambda e: (e[0][0], e[0][1].value, e[1][0], e[1][1].value))


def dependency_graph_is_acyclic(net: Network) -> bool:
    edges = channel_dependency_edges(net)
    nodes = {n for e in edges for n in e}
    out = {n: [] for n in nodes}
    indeg = {n: 0 for n in nodes}
    for a, b in edges:
        out[a].append(b)
        indeg[b] += 1
    queue = [n for n in nodes if indeg[n] == 0]
    seen = 0
    while queue:
        n = queue.pop()
        seen += 1
        for m in out[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                queue.append(m)
    return seen == len(nodes)
