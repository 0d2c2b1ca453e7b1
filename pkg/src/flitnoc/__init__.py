"""flitnoc: cycle-accurate flit-interleaving NoC simulator and worst-case
latency toolkit, with a wormhole best-effort baseline and a slot-table
analytic reference."""

from .core import (
    Address,
    Coord,
    Fixed,
    Flit,
    FlitKind,
    FlitLayout,
    FlowSpec,
    Periodic,
    PortId,
    Saturating,
    SingleShot,
    UniformRange,
    decode_flit,
    encode_flit,
    format_trace_word,
    make_packet,
    render_trace_word,
)
from .arbiter import ArbiterState, arbiter_grant, init_arbiter, xy_route
from .network import (
    ContentionProfile,
    Network,
    build_mesh,
    contention_profile,
    derive_credits,
    xy_path,
)
from .engine import Metrics, SimConfig, offered_load_sweep, probe_latency, run
from . import analytics

__all__ = [
    "Address",
    "ArbiterState",
    "ContentionProfile",
    "Coord",
    "Fixed",
    "Flit",
    "FlitKind",
    "FlitLayout",
    "FlowSpec",
    "Metrics",
    "Network",
    "Periodic",
    "PortId",
    "Saturating",
    "SimConfig",
    "SingleShot",
    "UniformRange",
    "analytics",
    "arbiter_grant",
    "build_mesh",
    "contention_profile",
    "decode_flit",
    "derive_credits",
    "encode_flit",
    "format_trace_word",
    "init_arbiter",
    "make_packet",
    "offered_load_sweep",
    "probe_latency",
    "render_trace_word",
    "run",
    "xy_path",
    "xy_route",
]

__version__ = "0.1.0"
