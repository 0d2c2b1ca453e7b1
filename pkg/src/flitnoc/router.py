"""Cycle-level router models.

Both router kinds share the same plumbing: a single-flit latch per input
port and, per output, a one-stage pipeline register that realises the
two-cycle forwarding delay (cycle one routes and arbitrates, cycle two
traverses to the output). A granted flit therefore reaches the next
router's latch, or the destination interface, exactly two cycles after it
became visible at the input. An output whose pipeline register is occupied
does not arbitrate, which caps every channel at one flit per two cycles.

The interleaving router arbitrates every output independently with the
weighted round-robin arbiter, so flits of different packets alternate on a
contended channel. The wormhole baseline locks an output to the input that
won the header arbitration until the tail has passed.
"""

from __future__ import annotations

from typing import Dict, List, Optional

from .arbiter import ArbiterState, arbiter_grant, init_arbiter
from .core import Coord, Flit, PORT_RANK, PortId


class TopologyError(ValueError):
    pass


class _RouterBase:
    def __init__(self, coord: Coord, ports: List[PortId]):
        self.coord = coord
        self.ports = list(ports)
        self.latch: Dict[PortId, Optional[Flit]] = {p: None for p in self.ports}
        self.pipe: Dict[PortId, Optional[Flit]] = {p: None for p in self.ports}

    def occupied_latches(self) -> List[PortId]:
        return [p for p in self.ports if self.latch[p] is not None]

    def occupancy(self) -> int:
        flits = sum(1 for p in self.ports if self.latch[p] is not None)
        flits += sum(1 for p in self.ports if self.pipe[p] is not None)
        return flits


class RtsRouter(_RouterBase):
    """Flit-interleaving router: per-output weighted round-robin arbiters."""

    kind = "rts"

    def __init__(
        self,
        coord: Coord,
        ports: List[PortId],
        credits_by_output: Optional[Dict[PortId, Dict[PortId, int]]] = None,
    ):
        super().__init__(coord, ports)
        credits_by_output = credits_by_output or {}
        self.arb: Dict[PortId, ArbiterState] = {
            out: init_arbiter(self.ports, credits_by_output.get(out)) for out in self.ports
        }

    def arbitrate(self, out: PortId, requests: Dict[PortId, Flit], t: int) -> Optional[PortId]:
        granted, self.arb[out] = arbiter_grant(self.arb[out], requests.keys())
        return granted


class WormholeRouter(_RouterBase):
    """Best-effort baseline: plain round-robin header arbitration, and the
    winning input holds the output until its tail has departed.

    Releasing an output is a registered state update: the arbiter sees the
    channel free one cycle after the tail has traversed, so packet handoff
    on a contended output costs one extra cycle.
    """

    kind = "wormhole"

    def __init__(self, coord: Coord, ports: List[PortId], credits_by_output=None):
        super().__init__(coord, ports)
        self.owner: Dict[PortId, Optional[PortId]] = {p: None for p in self.ports}
        self.free_at: Dict[PortId, Optional[int]] = {p: None for p in self.ports}
        self.order: Dict[PortId, List[PortId]] = {
            p: sorted(self.ports, key=lambda q: PORT_RANK[q]) for p in self.ports
        }

    def _is_free(self, out: PortId, t: int) -> bool:
        if self.owner[out] is None:
            return True
        release = self.free_at[out]
        return release is not None and t >= release

    def arbitrate(self, out: PortId, requests: Dict[PortId, Flit], t: int) -> Optional[PortId]:
        if self._is_free(out, t):
            headers = {p: f for p, f in requests.items() if f.kind.is_header}
            if not headers:
                return None
            granted = next(p for p in self.order[out] if p in headers)
            self.owner[out] = granted
            # Tail grant schedules the release: the tail lands downstream at
            # the end of the next cycle and the cleared ownership becomes
            # visible one cycle after that.
            self.free_at[out] = t + 3 if headers[granted].kind.is_tail else None
            self.order[out] = [p for p in self.order[out] if p != granted] + [granted]
            return granted
        owner = self.owner[out]
        if owner in requests:
            flit = requests[owner]
            if flit.kind.is_header:
                return None  # next packet on the same input waits for the release
            if flit.kind.is_tail:
                self.free_at[out] = t + 3
            return owner
        return None
