"""Closed-form latency models.

Covers the basic topology-driven latency, the saturating best-effort
(wormhole) latency under offered load, the flit-interleaving latency under
per-router competition, the worst-case latency bound built from structural
contention, and the slot-table (TDM) throughput model used for the
guaranteed-service network comparison.

All rates are in flits per cycle and latencies in cycles. The interleaving
router forwards one flit per two cycles on a channel, so the per-grant
period of 2 cycles appears as the hard-coded factor in the worst-case
pieces.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .core import FlowSpec, Saturating
from .engine import Metrics
from .network import Network, contention_profile


class DomainError(ValueError):
    pass


class SaturationError(ValueError):
    """Offered load at or beyond the available bandwidth."""


GRANT_PERIOD = 2  # cycles per arbitration grant on a channel


def latency_basic(t_h: float, f: float, b: float) -> float:
    """Header time plus serialisation time of an f-flit packet at rate b."""
    if b <= 0:
        raise DomainError("channel bandwidth must be positive")
    return t_h + f / b


def latency_topo(h_path: int, t_r: float, f: float, b: float) -> float:
    """Contention-free latency: per-router delay along the path, then
    serialisation."""
    return latency_basic(h_path * t_r, f, b)


def latency_wormhole_be(h_path: int, t_r: float, f: float, b: float, b_occupied: float) -> float:
    """Best-effort wormhole latency when competitors occupy part of the
    bandwidth; grows without bound as the channel saturates."""
    if b_occupied < 0:
        raise DomainError("occupied bandwidth cannot be negative")
    if b_occupied >= b:
        raise SaturationError(f"offered load {b_occupied} saturates bandwidth {b}")
    return h_path * t_r + f / (b - b_occupied)

def latency_interleave(h_path: int, t_r: float, n: int, f: float, b: float) -> float:
    """Interleaving latency with n packets competing at each router on the
    path: the packet effectively grows n times, independent of how much
    load the competitors offer."""
    if n < 1:
        raise DomainError("competitor count must be at least 1")
    if b <= 0:
        raise DomainError("channel bandwidth must be positive")
    return h_path * t_r + n * (f / b)


@dataclass(frozen=True)
class TransactionParams:
    t_wait_req: float = 0.0
    t_req: float = 0.0
    t_wait_reply: float = 0.0
    t_reply: float = 0.0
    t_core: float = 0.0


def transaction_time(params: TransactionParams) -> Tuple[float, float]:
    """Network share and total time of a request/reply transaction."""
    t_noc = params.t_wait_req + params.t_req + params.t_wait_reply + params.t_reply
    return t_noc, t_noc + params.t_core


def header_wcl(n_per_hop: Sequence[int]) -> int:
    """Worst-case header latency: one grant round per hop, two cycles per
    contending channel."""
    hops = list(n_per_hop)
    if not hops:
        raise DomainError("path must have at least one hop")
    if any(n < 1 for n in hops):
        raise DomainError("every hop has at least the analysed flow contending")
    return GRANT_PERIOD * sum(hops)


def payload_tail_wcl(k: int, f: int) -> int:
    """Worst-case latency of the flits behind the header: with k flows
    feeding the destination, each of the remaining f-1 flits waits at most
    one full service round of 2k cycles."""
    if k < 1:
        raise DomainError("destination contender count includes the flow itself")
    if f < 1:
        raise DomainError("packets have at least one flit")
    return GRANT_PERIOD * k * (f - 1)


def packet_wcl(n_per_hop: Sequence[int], k: int, f: int, fifo_depth: int) -> int:
    """Total worst-case packet latency, including the allowance for both
    end-point FIFOs holding foreign flits."""
    if fifo_depth < 0:
        raise DomainError("FIFO depth cannot be negative")
    return header_wcl(n_per_hop) + payload_tail_wcl(k, f) + 2 * fifo_depth


def wcl_for_flow(
    net: Network,
    flows: Sequence[FlowSpec],
    target: str,
    f: Optional[int] = None,
) -> int:
    """Worst-case latency bound for one flow in a built network.

    ``f`` defaults to the flow's largest packet size. The buffer term uses
    the network's effective interface depth: zero when destination cores
    read flits as soon as they are delivered, the configured depth when the
    interfaces may hold foreign flits.
    """
    profile = contention_profile(net, flows, target)
    if f is None:
        f = next(fl for fl in flows if fl.id == target).max_f
    return packet_wcl(profile.n_per_hop, profile.k, f, net.analysis_fifo_depth)


@dataclass
class BoundViolation:
    flow: str
    packet_no: int
    latency: int
    bound: int


def check_latency_bounds(
    net: Network, flows: Sequence[FlowSpec], metrics: Metrics
) -> List[BoundViolation]:
    """Compare every delivered packet of the measurable flows against its
    per-packet worst-case bound.

    Saturating flows are excluded: their packets queue behind earlier
    packets of the same flow at the interface, a delay the bound does not
    model (the worst-case analysis applies to packets entering the network,
    matching how latency is measured on the input channel).
    """
    by_id = {fl.id: fl for fl in flows}
    profiles = {
        fl.id: contention_profile(net, flows, fl.id)
        for fl in flows
        if not isinstance(fl.rate_law, Saturating)
    }
    violations = []
    for rec in metrics.packets:
        if not rec.complete or rec.flow not in profiles:
            continue
        prof = profiles[rec.flow]
        bound = packet_wcl(prof.n_per_hop, prof.k, rec.f, net.analysis_fifo_depth)
        if rec.packet_latency > bound:
            violations.append(
                BoundViolation(rec.flow, rec.packet_no, rec.packet_latency, bound)
            )
    return violations


# ---------------------------------------------------------------------------
# Slot-table (TDM) model for the guaranteed-service comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TdmParams:
    """Slot-table configuration of the reservation-based reference network.

    ``p`` of the ``period`` slots belong to a virtual circuit, each slot
    lasting ``slot_cycles`` cycles, and one transaction carries
    ``packets_per_transaction`` packets. Guaranteed-service circuits that
    leave part of their slots unused may donate the remainder to
    best-effort traffic when ``slot_reuse`` is on.
    """

    p: int
    packets_per_transaction: int
    period: int
    slot_cycles: int
    gs_flows: int = 0
    gs_utilization: float = 1.0
    slot_reuse: bool = False

    def __post_init__(self):
        if self.period <= 0 or self.slot_cycles <= 0:
            raise DomainError("slot table period and slot duration must be positive")
        if self.p > self.period:
            raise DomainError("cannot assign more slots than the table period")
        if not 0.0 <= self.gs_utilization <= 1.0:
            raise DomainError("slot utilisation is a fraction")


def tdm_throughput(params: TdmParams) -> float:
    """Bandwidth of a circuit owning p of P slots, in channel units."""
    return (params.p * params.packets_per_transaction) / (params.period * params.slot_cycles)


def tdm_be_bandwidth(params: TdmParams) -> float:
    """Bandwidth available to best-effort traffic.

    Without slot reuse only the dedicated best-effort slot counts; with
    reuse, the unused fraction of every guaranteed-service circuit's slots
    is donated on top.
    """
    base = tdm_throughput(params)
    if not params.slot_reuse:
        return base
    gs_share = params.gs_flows * (params.packets_per_transaction / (params.period * params.slot_cycles))
    return base + (1.0 - params.gs_utilization) * gs_share


def tdm_be_latency(
    h_path: int,
    t_r: float,
    f: int,
    params: TdmParams,
    b_occupied: float,
) -> float:
    """Best-effort latency on the slot-table network at a given occupied
    bandwidth (same saturating form as the wormhole model, with the
    slot-table bandwidth in place of the raw channel)."""
    b = tdm_be_bandwidth(params)
    return latency_wormhole_be(h_path, t_r, f, b, b_occupied)
