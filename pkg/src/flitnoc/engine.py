"""Deterministic cycle-driven simulation kernel.

Each cycle runs in two phases. The decision phase reads only state from the
start of the cycle: traffic generation, interface drains, output
arbitration and injection planning. The commit phase then moves flits: the
previous cycle's grants land at their destinations, this cycle's grants
enter the output pipeline stages, and planned injections latch at the
source routers. Router evaluation order therefore cannot influence the
outcome, and identical configurations with identical seeds produce
identical metrics.

Grant gating follows ready/valid flow control: an output only arbitrates
when its pipeline stage is empty and the downstream latch (or destination
FIFO) can take the flit when it lands. A grant may also target a latch
whose occupant is itself granted this cycle; grants are evaluated to a
fixpoint so a vacancy created anywhere propagates upstream within the
cycle. The fixpoint is monotone (grants are only ever added) so the result
is order-independent.

Timestamps: a transfer committed at the end of cycle t is stamped t+1, the
first cycle the flit is present at its new location. A packet's
inject_cycle is the cycle its header first sits on the source router input
channel; packet latency runs from there to the cycle its tail appears at
the destination interface.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .core import (
    Address,
    Coord,
    Fixed,
    Flit,
    FlowSpec,
    Periodic,
    PortId,
    Saturating,
    SingleShot,
    format_trace_word,
    make_packet,
)
from .arbiter import xy_route
from .network import Network
from .router import RtsRouter, TopologyError, WormholeRouter, _RouterBase


@dataclass
class SimConfig:
    network: Network
    flows: List[FlowSpec]
    duration: int
    seed: int = 0
    clock_ns: float = 10.0
    credits: Optional[Dict[Tuple[Coord, PortId], Dict[PortId, int]]] = None

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")


@dataclass
class PacketRecord:
    flow: str
    packet_no: int
    f: int
    enqueue_cycle: int
    inject_cycle: Optional[int] = None
    header_arrival_cycle: Optional[int] = None
    tail_departure_cycle: Optional[int] = None

    @property
    def complete(self) -> bool:
        return self.tail_departure_cycle is not None

    @property
    def header_latency(self) -> Optional[int]:
        if self.header_arrival_cycle is None or self.inject_cycle is None:
            return None
        return self.header_arrival_cycle - self.inject_cycle

    @property
    def packet_latency(self) -> Optional[int]:
        if self.tail_departure_cycle is None or self.inject_cycle is None:
            return None
        return self.tail_departure_cycle - self.inject_cycle


@dataclass
class FlowStats:
    flow: str
    packets_delivered: int = 0
    flits_delivered: int = 0
    avg_latency: Optional[float] = None
    max_latency: Optional[int] = None
    max_header_latency: Optional[int] = None
    throughput: float = 0.0
    in_order: bool = True


@dataclass
class Metrics:
    duration: int
    clock_ns: float
    packets: List[PacketRecord] = field(default_factory=list)
    # Delivered-flit log per destination core: (cycle, flow, packet_no, seq, trace_word)
    rx_log: Dict[int, List[Tuple[int, str, int, int, str]]] = field(default_factory=dict)
    flits_enqueued: int = 0
    flits_delivered: int = 0
    flits_inflight_end: int = 0

    def completed(self, flow: Optional[str] = None) -> List[PacketRecord]:
        return [
            p
            for p in self.packets
            if p.complete and (flow is None or p.flow == flow)
        ]

    def flow_stats(self, flow: str) -> FlowStats:
        done = self.completed(flow)
        stats = FlowStats(flow=flow)
        stats.packets_delivered = len(done)
        stats.flits_delivered = sum(p.f for p in done)
        stats.throughput = stats.flits_delivered / self.duration if self.duration else 0.0
        if done:
            lat = [p.packet_latency for p in done]
            stats.avg_latency = sum(lat) / len(lat)
            stats.max_latency = max(lat)
            stats.max_header_latency = max(p.header_latency for p in done)
        stats.in_order = self.delivery_in_order(flow)
        return stats

    def delivery_in_order(self, flow: str) -> bool:
        """Flits of a flow must arrive in exactly injection order."""
        seen: List[Tuple[int, int]] = []
        for log in self.rx_log.values():
            for _, fl, pkt, seq, _ in log:
                if fl == flow:
                    seen.append((pkt, seq))
        return seen == sorted(seen)


class _TrafficSource:
    """Applies a flow's rate and size laws, one packet at a time."""

    def __init__(self, spec: FlowSpec, seed: int):
        self.spec = spec
        self.rng = random.Random(f"{seed}:{spec.id}")
        self.packets_made = 0
        self.backlog: deque = deque()  # flits of generated, not yet enqueued packets

    def _sample_f(self) -> int:
        law = self.spec.size_law
        if isinstance(law, Fixed):
            return law.f
        return self.rng.randint(law.f_min, law.f_max)

    def _emit(self, t: int, records: Dict[Tuple[str, int], PacketRecord]):
        pkt = make_packet(self.spec, self._sample_f(), t, packet_no=self.packets_made)
        records[(self.spec.id, self.packets_made)] = PacketRecord(
            flow=self.spec.id, packet_no=self.packets_made, f=pkt.f, enqueue_cycle=t
        )
        self.packets_made += 1
        self.backlog.extend(pkt.flits)

    def generate(self, t: int, records) -> None:
        law = self.spec.rate_law
        if isinstance(law, Saturating):
            if not self.backlog:
                self._emit(t, records)
        elif isinstance(law, Periodic):
            if t >= law.offset and (t - law.offset) % law.period == 0:
                self._emit(t, records)
        elif isinstance(law, SingleShot):
            if t == law.at:
                self._emit(t, records)


class _Interface:
    """End-point network interface: bounded tx and rx FIFOs of depth B."""

    def __init__(self, core_id: int, depth: int, rx_prefill: int):
        self.core_id = core_id
        self.depth = depth
        self.tx: deque = deque()
        self.rx_occupancy = min(rx_prefill, depth)


class Simulation:
    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        net = cfg.network
        self.net = net
        cls = RtsRouter if net.router_kind == "rts" else WormholeRouter
        credits = cfg.credits or {}
        self.routers: Dict[Coord, _RouterBase] = {}
        for coord in net.routers():
            per_out = {out: credits[(coord, out)] for out in PortId if (coord, out) in credits}
            self.routers[coord] = cls(coord, list(PortId), per_out)
        self.ifaces: Dict[int, _Interface] = {
            cid: _Interface(cid, net.fifo_depth, net.rx_prefill) for cid in sorted(net.cores)
        }
        self.flow_by_id = {f.id: f for f in cfg.flows}
        self.sources: Dict[int, List[_TrafficSource]] = {}
        for f in cfg.flows:
            if f.src not in net.core_at:
                raise TopologyError(f"flow {f.id}: source {f.src} hosts no core")
            if f.dst not in net.core_at:
                raise TopologyError(f"flow {f.id}: destination {f.dst} hosts no core")
            cid = net.core_at[f.src]
            self.sources.setdefault(cid, []).append(_TrafficSource(f, cfg.seed))
        self.records: Dict[Tuple[str, int], PacketRecord] = {}
        self.metrics = Metrics(duration=cfg.duration, clock_ns=cfg.clock_ns)
        self.t = 0

    # -- helpers -----------------------------------------------------------

    def _route(self, coord: Coord, flit: Flit) -> PortId:
        return xy_route(coord, flit.dst)

    def inflight_flits(self) -> int:
        total = sum(len(ifc.tx) for ifc in self.ifaces.values())
        total += sum(r.occupancy() for r in self.routers.values())
        return total

    # -- one cycle ---------------------------------------------------------

    def step(self) -> None:
        t = self.t
        net = self.net

        # Traffic generation and tx enqueue.
        for cid in sorted(self.sources):
            ifc = self.ifaces[cid]
            for src in self.sources[cid]:
                src.generate(t, self.records)
                while src.backlog and len(ifc.tx) < ifc.depth:
                    ifc.tx.append(src.backlog.popleft())
                    self.metrics.flits_enqueued += 1

        # Destination cores read delivered flits.
        if t >= net.rx_stall_until:
            for ifc in self.ifaces.values():
                ifc.rx_occupancy = max(0, ifc.rx_occupancy - net.drain_rate)

        # Arbitration to a fixpoint: grants create vacancies that enable
        # upstream grants within the same cycle.
        granted: Dict[Tuple[Coord, PortId], Tuple[PortId, Flit]] = {}
        vacated: set = set()
        candidates: List[Tuple[Coord, PortId, Dict[PortId, Flit]]] = []
        for coord in sorted(self.routers, key=lambda c: (c.y, c.x)):
            router = self.routers[coord]
            requests_by_out: Dict[PortId, Dict[PortId, Flit]] = {}
            for p in PortId:
                flit = router.latch[p]
                if flit is None:
                    continue
                requests_by_out.setdefault(self._route(coord, flit), {})[p] = flit
            for out in PortId:
                if out in requests_by_out:
                    candidates.append((coord, out, requests_by_out[out]))

        done: set = set()
        changed = True
        while changed:
            changed = False
            for coord, out, reqs in candidates:
                key = (coord, out)
                if key in done:
                    continue
                router = self.routers[coord]
                if router.pipe[out] is not None:
                    done.add(key)  # traversal in progress, no arbitration this cycle
                    continue
                if net.is_link(coord, out):
                    nb = net.neighbour(coord, out)
                    into = out.opposite
                    ready = self.routers[nb].latch[into] is None or (nb, into) in vacated
                else:
                    addr = Address(coord, out)
                    cid = net.core_at.get(addr)
                    if cid is None:
                        raise TopologyError(f"flit routed to unattached port {addr}")
                    ready = self.ifaces[cid].rx_occupancy < net.fifo_depth
                if not ready:
                    continue
                done.add(key)
                g = router.arbitrate(out, reqs, t)
                if g is not None:
                    granted[key] = (g, reqs[g])
                    vacated.add((coord, g))
                    changed = True

        # Injection planning: a latch freed this cycle may be refilled in
        # the same commit, so a source can sustain the channel rate.
        injections: List[Tuple[int, Coord, PortId]] = []
        for cid in sorted(self.ifaces):
            ifc = self.ifaces[cid]
            if not ifc.tx:
                continue
            addr = self.net.cores[cid]
            router = self.routers[addr.router]
            if router.latch[addr.port] is None or (addr.router, addr.port) in vacated:
                injections.append((cid, addr.router, addr.port))

        # ---- commit ----
        landings = []
        for coord in self.routers:
            router = self.routers[coord]
            for out in PortId:
                if router.pipe[out] is not None:
                    landings.append((coord, out, router.pipe[out]))
                    router.pipe[out] = None

        for (coord, out), (g, flit) in granted.items():
            self.routers[coord].latch[g] = None

        for coord, out, flit in landings:
            if net.is_link(coord, out):
                nb = net.neighbour(coord, out)
                into = out.opposite
                assert self.routers[nb].latch[into] is None, "landing into occupied latch"
                self.routers[nb].latch[into] = flit
            else:
                cid = net.core_at[Address(coord, out)]
                self._deliver(cid, flit, t + 1)

        for (coord, out), (g, flit) in granted.items():
            self.routers[coord].pipe[out] = flit

        for cid, rcoord, port in injections:
            router = self.routers[rcoord]
            assert router.latch[port] is None
            flit = self.ifaces[cid].tx.popleft()
            router.latch[port] = flit
            if flit.kind.is_header:
                rec = self.records[(flit.flow, flit.packet_no)]
                rec.inject_cycle = t + 1

        self.t += 1

    def _deliver(self, core_id: int, flit: Flit, when: int) -> None:
        ifc = self.ifaces[core_id]
        ifc.rx_occupancy += 1
        assert ifc.rx_occupancy <= ifc.depth, "rx FIFO overflow"
        self.metrics.flits_delivered += 1
        self.metrics.rx_log.setdefault(core_id, []).append(
            (when, flit.flow, flit.packet_no, flit.seq, format_trace_word(flit))
        )
        rec = self.records[(flit.flow, flit.packet_no)]
        if flit.kind.is_header:
            rec.header_arrival_cycle = when
        if flit.kind.is_tail:
            rec.tail_departure_cycle = when

    def run(self) -> Metrics:
        for _ in range(self.cfg.duration):
            self.step()
        self.metrics.packets = [
            self.records[key] for key in sorted(self.records, key=lambda k: (k[0], k[1]))
        ]
        self.metrics.flits_inflight_end = self.inflight_flits()
        return self.metrics


def run(cfg: SimConfig) -> Metrics:
    """Simulate ``cfg.duration`` cycles and return the collected metrics."""
    return Simulation(cfg).run()


def probe_latency(metrics: Metrics, flow: str) -> Tuple[Optional[int], Optional[int]]:
    """Header and packet latency of a flow's first completed packet."""
    done = metrics.completed(flow)
    if not done:
        return None, None
    first = min(done, key=lambda p: p.packet_no)
    return first.header_latency, first.packet_latency


@dataclass
class SweepRow:
    offered_load: float
    avg_latency: Optional[float]
    max_latency: Optional[int]
    reachable: bool = True


def offered_load_sweep(
    base: SimConfig,
    target_flow: str,
    load_points: Sequence[float],
) -> List[SweepRow]:
    """Re-run the configuration at several competitor loads.

    The offered load is the fraction of the shared channel's capacity (one
    flit per two cycles) presented by the competitor flows together; their
    periods are rescaled accordingly. A requested point the competitors
    cannot sustain is flagged rather than rejected.
    """
    rows = []
    competitors = [f for f in base.flows if f.id != target_flow]
    for load in load_points:
        if not 0.0 <= load <= 1.0:
            raise ValueError(f"load point {load} outside [0, 1]")
        flows = [f for f in base.flows if f.id == target_flow]
        reachable = True
        if load > 0 and competitors:
            per_flow_rate = load * 0.5 / len(competitors)
            for comp in competitors:
                f_nominal = comp.max_f
                period = max(1, round(f_nominal / per_flow_rate))
                if f_nominal / period > 0.5 + 1e-9:
                    reachable = False
                    period = 2 * f_nominal
                flows.append(
                    FlowSpec(
                        id=comp.id,
                        src=comp.src,
                        dst=comp.dst,
                        size_law=comp.size_law,
                        rate_law=Periodic(period=period, offset=0),
                        data_base=comp.data_base,
                    )
                )
        cfg = SimConfig(
            network=base.network,
            flows=flows,
            duration=base.duration,
            seed=base.seed,
            clock_ns=base.clock_ns,
            credits=base.credits,
        )
        metrics = run(cfg)
        stats = metrics.flow_stats(target_flow)
        rows.append(
            SweepRow(
                offered_load=load,
                avg_latency=stats.avg_latency,
                max_latency=stats.max_latency,
                reachable=reachable,
            )
        )
    return rows
