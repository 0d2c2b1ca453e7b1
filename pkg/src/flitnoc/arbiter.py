"""Per-router decision procedures: XY output selection and the weighted
round-robin output arbiter with priority-channel credits.

Both are pure state-transition functions; the router model threads the
arbiter state through successive arbitration rounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Tuple

from .core import Address, CARDINAL_PORTS, Coord, PORT_RANK, PortId


class ConfigError(ValueError):
    pass


class ProtocolError(ValueError):
    pass


def xy_route(current: Coord, dst: Address) -> PortId:
    """Dimension-order routing: correct x fully, then y, then deliver.

    Total on valid coordinates, static, and deadlock-free on meshes.
    """
    if dst.router.x > current.x:
        return PortId.EE
    if dst.router.x < current.x:
        return PortId.WW
    if dst.router.y > current.y:
        return PortId.NN
    if dst.router.y < current.y:
        return PortId.SS
    return dst.port


@dataclass(frozen=True)
class ArbiterState:
    """State of one output channel's arbiter.

    priority_order ranks the registered input channels, most preferred
    first. Priority (cardinal) channels may hold the grant for several
    consecutive rounds; ``credit`` is their configured sequential budget and
    ``remaining`` what is left of the current burst. A channel that wins
    with no budget, or whose budget runs out, moves to the back of the
    order.
    """

    priority_order: Tuple[PortId, ...]
    credit: Dict[PortId, int]
    remaining: Dict[PortId, int]
    last_granted: Optional[PortId] = None

    def registered(self) -> Tuple[PortId, ...]:
        return self.priority_order


def init_arbiter(
    registered_inputs: Iterable[PortId],
    credit_config: Optional[Dict[PortId, int]] = None,
) -> ArbiterState:
    """Build the initial arbiter state for one output channel.

    Cardinal channels are ranked ahead of diagonal/core channels and are the
    only ones allowed to carry credit.
    """
    inputs = list(registered_inputs)
    if not inputs:
        raise ConfigError("arbiter needs at least one registered input")
    if len(set(inputs)) != len(inputs):
        raise ConfigError(f"duplicate channels registered: {inputs}")
    credit_config = dict(credit_config or {})
    for port, value in credit_config.items():
        if port not in CARDINAL_PORTS:
            raise ConfigError(f"credit configured for non-priority channel {port}")
        if value < 1:
            raise ConfigError(f"credit for {port} must be positive")
    order = tuple(sorted(inputs, key=lambda p: PORT_RANK[p]))
    credit = {p: credit_config.get(p, 0) for p in inputs}
    return ArbiterState(
        priority_order=order,
        credit=credit,
        remaining=dict(credit),
        last_granted=None,
    )


def _demote(order: Tuple[PortId, ...], port: PortId) -> Tuple[PortId, ...]:
    rest = tuple(p for p in order if p != port)
    return rest + (port,)


def arbiter_grant(
    state: ArbiterState, requests: Iterable[PortId]
) -> Tuple[Optional[PortId], ArbiterState]:
    """One arbitration round. Returns the granted channel (or None for an
    empty request set) and the successor state.

    Rules:
      * no requests: nothing happens, state is unchanged;
      * a priority channel that won last round, still has burst budget and
        is requesting again keeps the grant;
      * a mid-burst channel that stopped requesting forfeits the rest of
        its burst, reloads and drops to the back of the order;
      * otherwise the requesting channel ranked first wins;
      * after a win, channels without budget drop to the back; a budgeted
        channel only drops (and reloads) once the burst is spent.
    """
    req = set(requests)
    if not req:
        return None, state
    for port in req:
        if port not in state.priority_order:
            raise ProtocolError(f"request from unregistered channel {port}")

    order = state.priority_order
    remaining = dict(state.remaining)
    last = state.last_granted

    retained = (
        last is not None
        and state.credit.get(last, 0) > 0
        and 0 < remaining.get(last, 0) < state.credit[last]
    )
    if retained and last not in req:
        # Burst broken by an idle round: forfeit the remainder.
        order = _demote(order, last)
        remaining[last] = state.credit[last]
        retained = False

    if retained and last in req:
        granted = last
    else:
        granted = next(p for p in order if p in req)

    if state.credit.get(granted, 0) > 0:
        remaining[granted] -= 1
        if remaining[granted] == 0:
            order = _demote(order, granted)
            remaining[granted] = state.credit[granted]
    else:
        order = _demote(order, granted)

    return granted, ArbiterState(
        priority_order=order,
        credit=state.credit,
        remaining=remaining,
        last_granted=granted,
    )
