"""Scenario configuration: a line-oriented structured-text format with
section headers, and the machinery that turns a parsed scenario into
simulation runs or analytic sweeps.

Builtin scenarios are committed files shipped with the package; running a
builtin by name is exactly running its file.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, List, Optional, Sequence, Tuple

from .core import (
    Address,
    Coord,
    Fixed,
    FlowSpec,
    Periodic,
    PortId,
    Saturating,
    SingleShot,
    UniformRange,
)
from .engine import Metrics, SimConfig, SweepRow, offered_load_sweep, run
from .network import Network, build_mesh, contention_profile, derive_credits, xy_path, entry_port
from .analytics import (
    TdmParams,
    check_latency_bounds,
    latency_interleave,
    latency_wormhole_be,
    latency_topo,
    packet_wcl,
    tdm_be_bandwidth,
    tdm_be_latency,
    wcl_for_flow,
)


class ScenarioError(ValueError):
    """Configuration problem, reported with file and line."""

    def __init__(self, source: str, line: int, message: str):
        super().__init__(f"{source}:{line}: {message}")
        self.source = source
        self.line = line


BUILTIN_SCENARIOS = ("fig5_analytic", "fig7_wcl", "fig9_compare", "random_vbr")


@dataclass
class ProbeSpec:
    flow: str
    warmup: int
    offset: int


@dataclass
class RandomSpec:
    seeds: List[int]
    flows: int
    f_min: int
    f_max: int
    period_slack: int
    duration: int


@dataclass
class Scenario:
    name: str
    mode: str  # simulate | analytic | both
    source: str = "<memory>"
    # network
    width: int = 0
    height: int = 0
    fifo_depth: int = 4
    router_kind: str = "rts"
    drain_rate: int = 1
    rx_prefill: int = 0
    rx_stall_until: int = 0
    place_all: bool = False
    placements: List[Tuple[int, Address]] = field(default_factory=list)
    # traffic
    flows: List[dict] = field(default_factory=list)  # raw flow rows
    probe: Optional[ProbeSpec] = None
    rand: Optional[RandomSpec] = None
    # run
    duration: int = 1000
    seed: int = 0
    clock_ns: float = 10.0
    # analytic
    model: str = ""
    analytic: Dict[str, str] = field(default_factory=dict)
    # sweep (simulate mode)
    sweep_target: Optional[str] = None
    sweep_loads: List[float] = field(default_factory=list)


_PORT_NAMES = {p.value: p for p in PortId}


def _parse_loads(text: str) -> List[float]:
    """'0:0.99:0.01' inclusive range, or a comma list."""
    if ":" in text:
        lo_s, hi_s, step_s = text.split(":")
        lo, hi, step = float(lo_s), float(hi_s), float(step_s)
        loads = []
        x = lo
        while x <= hi + 1e-9:
            loads.append(round(x, 10))
            x += step
        return loads
    return [float(x) for x in text.split(",") if x.strip()]


def parse_scenario(text: str, source: str = "<memory>") -> Scenario:
    sc = Scenario(name="", mode="", source=source)
    section = None
    seen_flow_ids = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in (
                "network",
                "cores",
                "flows",
                "probe",
                "run",
                "analytic",
                "random",
                "sweep",
            ):
                raise ScenarioError(source, lineno, f"unknown section [{section}]")
            continue
        if section is None:
            raise ScenarioError(source, lineno, "content before the first section header")

        if section == "cores":
            parts = line.split()
            if len(parts) != 6 or parts[0] != "core" or parts[2] != "at":
                raise ScenarioError(source, lineno, "expected: core <id> at <x> <y> <PORT>")
            try:
                cid, x, y = int(parts[1]), int(parts[3]), int(parts[4])
            except ValueError:
                raise ScenarioError(source, lineno, "core id and coordinates must be integers")
            port = _PORT_NAMES.get(parts[5].upper())
            if port is None:
                raise ScenarioError(source, lineno, f"unknown port {parts[5]!r}")
            sc.placements.append((cid, Address(Coord(x, y), port)))
            continue

        if section == "flows":
            parts = line.split()
            if len(parts) < 6 or parts[0] != "flow" or parts[2] != "from" or parts[4] != "to":
                raise ScenarioError(
                    source, lineno, "expected: flow <id> from <core> to <core> key=val..."
                )
            row = {"id": parts[1], "_line": lineno}
            if row["id"] in seen_flow_ids:
                raise ScenarioError(source, lineno, f"duplicate flow id {row['id']!r}")
            seen_flow_ids.add(row["id"])
            try:
                row["src"] = int(parts[3])
                row["dst"] = int(parts[5])
            except ValueError:
                raise ScenarioError(source, lineno, "flow endpoints are core ids")
            for kv in parts[6:]:
                if "=" not in kv:
                    raise ScenarioError(source, lineno, f"expected key=value, got {kv!r}")
                key, val = kv.split("=", 1)
                row[key] = val
            sc.flows.append(row)
            continue

        # key = value sections
        if "=" not in line:
            raise ScenarioError(source, lineno, f"expected key = value, got {line!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        try:
            if section == "network":
                if key == "width":
                    sc.width = int(val)
                elif key == "height":
                    sc.height = int(val)
                elif key == "fifo_depth":
                    sc.fifo_depth = int(val)
                elif key == "router":
                    sc.router_kind = val
                elif key == "drain_rate":
                    sc.drain_rate = int(val)
                elif key == "rx_prefill":
                    sc.rx_prefill = int(val)
                elif key == "rx_stall_until":
                    sc.rx_stall_until = int(val)
                elif key == "cores" and val == "all":
                    sc.place_all = True
                else:
                    raise ScenarioError(source, lineno, f"unknown network key {key!r}")
            elif section == "probe":
                if key == "flow":
                    sc.probe = sc.probe or ProbeSpec("", 0, 0)
                    sc.probe.flow = val
                elif key == "warmup":
                    sc.probe = sc.probe or ProbeSpec("", 0, 0)
                    sc.probe.warmup = int(val)
                elif key == "offset":
                    sc.probe = sc.probe or ProbeSpec("", 0, 0)
                    sc.probe.offset = int(val)
                else:
                    raise ScenarioError(source, lineno, f"unknown probe key {key!r}")
            elif section == "run":
                if key == "name":
                    sc.name = val
                elif key == "mode":
                    sc.mode = val
                elif key == "duration":
                    sc.duration = int(val)
                elif key == "seed":
                    sc.seed = int(val)
                elif key == "clock_ns":
                    sc.clock_ns = float(val)
                elif key == "model":
                    sc.model = val
                else:
                    raise ScenarioError(source, lineno, f"unknown run key {key!r}")
            elif section == "analytic":
                sc.analytic[key] = val
            elif section == "random":
                sc.rand = sc.rand or RandomSpec([], 8, 1, 8, 30, 4000)
                if key == "seeds":
                    sc.rand.seeds = [int(s) for s in val.split(",") if s.strip()]
                elif key == "flows":
                    sc.rand.flows = int(val)
                elif key == "f_min":
                    sc.rand.f_min = int(val)
                elif key == "f_max":
                    sc.rand.f_max = int(val)
                elif key == "period_slack":
                    sc.rand.period_slack = int(val)
                elif key == "duration":
                    sc.rand.duration = int(val)
                else:
                    raise ScenarioError(source, lineno, f"unknown random key {key!r}")
            elif section == "sweep":
                if key == "target":
                    sc.sweep_target = val
                elif key == "loads":
                    sc.sweep_loads = _parse_loads(val)
                else:
                    raise ScenarioError(source, lineno, f"unknown sweep key {key!r}")
        except ScenarioError:
            raise
        except ValueError as exc:
            raise ScenarioError(source, lineno, f"bad value for {key!r}: {exc}")

    if not sc.name:
        sc.name = source.rsplit("/", 1)[-1].rsplit(".", 1)[0]
    if sc.mode not in ("simulate", "analytic", "both"):
        raise ScenarioError(source, 0, f"run mode must be simulate/analytic/both, got {sc.mode!r}")
    return sc


def load_builtin(name: str) -> str:
    if name not in BUILTIN_SCENARIOS:
        raise KeyError(f"unknown builtin scenario {name!r}")
    return resources.files("flitnoc.scenarios").joinpath(f"{name}.scn").read_text()


def load_scenario(name_or_path: str) -> Scenario:
    if name_or_path in BUILTIN_SCENARIOS:
        return parse_scenario(load_builtin(name_or_path), source=f"{name_or_path}.scn")
    with open(name_or_path) as fh:
        return parse_scenario(fh.read(), source=name_or_path)


# ---------------------------------------------------------------------------
# Building networks and flows from a scenario
# ---------------------------------------------------------------------------


def _all_port_placements(width: int, height: int, fifo_depth: int) -> List[Tuple[int, Address]]:
    probe_net = build_mesh(width, height, [], fifo_depth=fifo_depth)
    placements = []
    cid = 0
    for rc in probe_net.routers():
        for port in PortId:
            if not probe_net.is_link(rc, port):
                placements.append((cid, Address(rc, port)))
                cid += 1
    return placements


def build_network(sc: Scenario) -> Network:
    if sc.width < 1 or sc.height < 1:
        raise ScenarioError(sc.source, 0, "simulate scenarios need [network] width and height")
    placements = sc.placements
    if sc.place_all:
        placements = _all_port_placements(sc.width, sc.height, sc.fifo_depth)
    return build_mesh(
        sc.width,
        sc.height,
        placements,
        fifo_depth=sc.fifo_depth,
        router_kind=sc.router_kind,
        drain_rate=sc.drain_rate,
        rx_prefill=sc.rx_prefill,
        rx_stall_until=sc.rx_stall_until,
    )


def _parse_size(text: str, source: str, line: int):
    kind, _, rest = text.partition(":")
    try:
        if kind == "fixed":
            return Fixed(int(rest))
        if kind == "uniform":
            lo, hi = rest.split(":")
            return UniformRange(int(lo), int(hi))
    except ValueError:
        pass
    raise ScenarioError(source, line, f"bad size law {text!r} (fixed:<f> or uniform:<lo>:<hi>)")


def _parse_rate(text: str, probe: Optional[ProbeSpec], flow_id: str, source: str, line: int):
    kind, _, rest = text.partition(":")
    try:
        if kind == "saturating":
            return Saturating()
        if kind == "periodic":
            if "+" in rest:
                per, off = rest.split("+")
                return Periodic(int(per), int(off))
            return Periodic(int(rest))
        if kind == "single_shot":
            return SingleShot(int(rest))
        if kind == "probe":
            if probe is None or probe.flow != flow_id:
                raise ScenarioError(
                    source, line, f"flow {flow_id!r} uses rate=probe but no [probe] names it"
                )
            return SingleShot(probe.warmup + probe.offset)
    except ScenarioError:
        raise
    except ValueError:
        pass
    raise ScenarioError(source, line, f"bad rate law {text!r}")


def build_flows(sc: Scenario, net: Network) -> List[FlowSpec]:
    flows = []
    for row in sc.flows:
        line = row["_line"]
        for endpoint in ("src", "dst"):
            if row[endpoint] not in net.cores:
                raise ScenarioError(sc.source, line, f"core {row[endpoint]} does not exist")
        size = _parse_size(row.get("size", "fixed:1"), sc.source, line)
        rate = _parse_rate(row.get("rate", "saturating"), sc.probe, row["id"], sc.source, line)
        data_base = int(row["data"], 16) if "data" in row else None
        flows.append(
            FlowSpec(
                id=row["id"],
                src=net.cores[row["src"]],
                dst=net.cores[row["dst"]],
                size_law=size,
                rate_law=rate,
                data_base=data_base,
            )
        )
    return flows


def validate_scenario(sc: Scenario) -> Dict[str, object]:
    """Full configuration check without running; returns diagnostics
    including the probe flow's contention profile when one is defined."""
    info: Dict[str, object] = {"name": sc.name, "mode": sc.mode}
    if sc.mode in ("simulate", "both") and sc.rand is None:
        net = build_network(sc)
        flows = build_flows(sc, net)
        if not flows:
            raise ScenarioError(sc.source, 0, "simulate scenarios need at least one flow")
        flow_ids = {f.id for f in flows}
        if sc.probe and sc.probe.flow not in flow_ids:
            raise ScenarioError(sc.source, 0, f"probe flow {sc.probe.flow!r} is not defined")
        if sc.sweep_target and sc.sweep_target not in flow_ids:
            raise ScenarioError(sc.source, 0, f"sweep target {sc.sweep_target!r} is not defined")
        info["cores"] = len(net.cores)
        info["flows"] = sorted(flow_ids)
        target = sc.probe.flow if sc.probe else flows[0].id
        prof = contention_profile(net, flows, target)
        info["profile_flow"] = target
        info["n_per_hop"] = list(prof.n_per_hop)
        info["k"] = prof.k
        info["h_path"] = prof.h_path
        info["wcl"] = wcl_for_flow(net, flows, target)
    if sc.mode in ("simulate", "both") and sc.rand is not None:
        if not sc.rand.seeds:
            raise ScenarioError(sc.source, 0, "[random] needs at least one seed")
        net = build_network(sc)
        info["cores"] = len(net.cores)
        info["seeds"] = list(sc.rand.seeds)
    if sc.mode in ("analytic", "both"):
        if sc.model not in ("be_vs_interleave", "tdm_compare"):
            raise ScenarioError(
                sc.source, 0, f"analytic scenarios need model=be_vs_interleave|tdm_compare, got {sc.model!r}"
            )
    return info


# ---------------------------------------------------------------------------
# Randomized stress expansion
# ---------------------------------------------------------------------------


def compatible_flow_set(net: Network, flows: Sequence[FlowSpec], cand: FlowSpec) -> bool:
    """Admission rule for randomized stress traffic.

    Two conditions keep every flow's analytic bound applicable:
      * flows sharing any output channel address the same destination, the
        regime the payload/tail bound is derived for;
      * at every hop of every flow, each competing input channel other than
        the flow's own carries a single flow, so one arbitration round
        costs at most one grant per foreign channel even with sequential
        credits in play.
    """
    trial = list(flows) + [cand]
    paths = {f.id: xy_path(net, f.src, f.dst) for f in trial}
    hop_users: Dict[Tuple[Coord, PortId], List[FlowSpec]] = {}
    for f in trial:
        for hop in paths[f.id]:
            hop_users.setdefault(hop, []).append(f)
    for users in hop_users.values():
        if len({f.dst for f in users}) > 1:
            return False
    for f in trial:
        for router, out in paths[f.id]:
            my_in = entry_port(paths[f.id], f.src, router)
            per_input: Dict[PortId, int] = {}
            for g in hop_users[(router, out)]:
                gin = entry_port(paths[g.id], g.src, router)
                per_input[gin] = per_input.get(gin, 0) + 1
            if any(cnt > 1 for gin, cnt in per_input.items() if gin != my_in):
                return False
    return True


def random_flow_set(net: Network, spec: RandomSpec, seed: int) -> List[FlowSpec]:
    """Rejection-sample a compatible set of paced flows with randomized
    sizes, destinations and phases. Periods exceed each flow's bound so a
    packet never queues behind its own flow."""
    rng = random.Random(f"vbr:{seed}")
    cores = sorted(net.cores)
    flows: List[FlowSpec] = []
    tries = 0
    while len(flows) < spec.flows and tries < 60 * spec.flows:
        tries += 1
        src, dst = rng.sample(cores, 2)
        f_max = rng.randint(max(2, spec.f_min), spec.f_max)
        f_min = rng.randint(spec.f_min, f_max)
        cand = FlowSpec(
            id=f"v{len(flows)}",
            src=net.cores[src],
            dst=net.cores[dst],
            size_law=UniformRange(f_min, f_max),
            rate_law=Periodic(1),
        )
        if compatible_flow_set(net, flows, cand):
            flows.append(cand)
    paced = []
    for f in flows:
        bound = wcl_for_flow(net, flows, f.id)
        period = bound + rng.randint(2, max(3, spec.period_slack))
        paced.append(
            FlowSpec(f.id, f.src, f.dst, f.size_law, Periodic(period, rng.randint(0, period - 1)))
        )
    return paced


# ---------------------------------------------------------------------------
# Running scenarios
# ---------------------------------------------------------------------------


@dataclass
class FlowResult:
    scenario: str
    mode: str
    offered_load: Optional[float]
    flow: str
    seed: int
    avg_latency_cycles: Optional[float]
    max_latency_cycles: Optional[int]
    max_header_latency_cycles: Optional[int]
    wcl_cycles: Optional[int]
    throughput_flits_per_cycle: float
    clock_ns: float
    bound_ok: Optional[bool]

    @property
    def max_latency_ns(self) -> Optional[float]:
        if self.max_latency_cycles is None:
            return None
        return self.max_latency_cycles * self.clock_ns

    @property
    def max_header_latency_ns(self) -> Optional[float]:
        if self.max_header_latency_cycles is None:
            return None
        return self.max_header_latency_cycles * self.clock_ns


@dataclass
class ScenarioOutcome:
    scenario: Scenario
    flow_rows: List[FlowResult] = field(default_factory=list)
    analytic_rows: List[dict] = field(default_factory=list)
    sweep_rows: List[dict] = field(default_factory=list)
    metrics: List[Metrics] = field(default_factory=list)
    summary: List[str] = field(default_factory=list)
    violations: List[str] = field(default_factory=list)


def _simulate_once(
    sc: Scenario,
    net: Network,
    flows: List[FlowSpec],
    seed: int,
    duration: int,
    outcome: ScenarioOutcome,
) -> Metrics:
    cfg = SimConfig(
        network=net,
        flows=flows,
        duration=duration,
        seed=seed,
        clock_ns=sc.clock_ns,
        credits=derive_credits(net, flows),
    )
    metrics = run(cfg)
    outcome.metrics.append(metrics)

    bound_failures = (
        check_latency_bounds(net, flows, metrics) if net.router_kind == "rts" else []
    )
    failed_flows = {v.flow for v in bound_failures}
    for v in bound_failures:
        outcome.violations.append(
            f"{v.flow} packet {v.packet_no}: latency {v.latency} > bound {v.bound}"
        )

    for f in flows:
        stats = metrics.flow_stats(f.id)
        if not stats.in_order:
            outcome.violations.append(f"{f.id}: flits delivered out of order")
        measurable = not isinstance(f.rate_law, Saturating)
        wcl = wcl_for_flow(net, flows, f.id) if measurable else None
        bound_ok: Optional[bool] = None
        if measurable and net.router_kind == "rts" and stats.packets_delivered:
            bound_ok = f.id not in failed_flows
        outcome.flow_rows.append(
            FlowResult(
                scenario=sc.name,
                mode="simulate",
                offered_load=None,
                flow=f.id,
                seed=seed,
                avg_latency_cycles=stats.avg_latency,
                max_latency_cycles=stats.max_latency,
                max_header_latency_cycles=stats.max_header_latency,
                wcl_cycles=wcl,
                throughput_flits_per_cycle=stats.throughput,
                clock_ns=sc.clock_ns,
                bound_ok=bound_ok,
            )
        )
    if metrics.flits_enqueued != metrics.flits_delivered + metrics.flits_inflight_end:
        outcome.violations.append("flit conservation failed")
    return metrics


def _run_analytic(sc: Scenario, outcome: ScenarioOutcome) -> None:
    a = sc.analytic
    loads = _parse_loads(a.get("loads", "0:0.99:0.01"))
    if sc.model == "be_vs_interleave":
        h = int(a.get("h_path", "4"))
        t_r = float(a.get("t_r", "3"))
        f = int(a.get("f", "100"))
        n = int(a.get("n", "3"))
        b = float(a.get("b", "1"))
        for load in loads:
            occupied = load * b
            try:
                be = latency_wormhole_be(h, t_r, f, b, occupied)
            except Exception:
                be = float("inf")
            outcome.analytic_rows.append(
                {
                    "scenario": sc.name,
                    "mode": "analytic",
                    "offered_load": load,
                    "wormhole_be_cycles": be,
                    "interleave_cycles": latency_interleave(h, t_r, n, f, b),
                }
            )
        outcome.summary.append(
            f"analytic sweep over {len(loads)} load points "
            f"(wormhole saturating form vs constant interleave latency)"
        )
    elif sc.model == "tdm_compare":
        f = int(a.get("f", "9"))
        tdm_h = int(a.get("tdm_hops", "8"))
        tdm_t_r = float(a.get("tdm_t_r", "2"))
        params_off = TdmParams(
            p=int(a.get("p", "1")),
            packets_per_transaction=int(a.get("packets_per_transaction", "1")),
            period=int(a.get("period", "4")),
            slot_cycles=int(a.get("slot_cycles", "1")),
            gs_flows=int(a.get("gs_flows", "3")),
            gs_utilization=float(a.get("gs_utilization", "0.6")),
            slot_reuse=False,
        )
        params_on = TdmParams(
            p=params_off.p,
            packets_per_transaction=params_off.packets_per_transaction,
            period=params_off.period,
            slot_cycles=params_off.slot_cycles,
            gs_flows=params_off.gs_flows,
            gs_utilization=params_off.gs_utilization,
            slot_reuse=True,
        )
        rts_h = int(a.get("rts_hops", "2"))
        rts_t_r = float(a.get("rts_t_r", "2"))
        rts_b = float(a.get("rts_b", "0.5"))
        rts_n = [int(x) for x in a.get("rts_n", "2,2").split(",")]
        rts_k = int(a.get("rts_k", "8"))
        rts_min = latency_topo(rts_h, rts_t_r, f, rts_b)
        rts_max = packet_wcl(rts_n, rts_k, f, 0)
        b_off = tdm_be_bandwidth(params_off)
        b_on = tdm_be_bandwidth(params_on)
        for load in loads:
            def lat(params, b_avail):
                try:
                    return tdm_be_latency(tdm_h, tdm_t_r, f, params, load * b_avail)
                except Exception:
                    return float("inf")

            outcome.analytic_rows.append(
                {
                    "scenario": sc.name,
                    "mode": "analytic",
                    "offered_load": load,
                    "tdm_be_only_cycles": lat(params_off, b_off),
                    "tdm_gs_reuse_cycles": lat(params_on, b_on),
                    "rts_min_cycles": rts_min,
                    "rts_max_cycles": rts_max,
                }
            )
        outcome.summary.append(
            f"slot-table comparison: rts bound {rts_max} cycles, contention-free {rts_min:.0f}"
        )
    else:
        raise ScenarioError(sc.source, 0, f"unknown analytic model {sc.model!r}")


def run_scenario(sc: Scenario) -> ScenarioOutcome:
    outcome = ScenarioOutcome(scenario=sc)

    if sc.mode in ("analytic", "both"):
        _run_analytic(sc, outcome)

    if sc.mode in ("simulate", "both"):
        if sc.rand is not None:
            net = build_network(sc)
            total_packets = 0
            for seed in sc.rand.seeds:
                flows = random_flow_set(net, sc.rand, seed)
                metrics = _simulate_once(sc, net, flows, seed, sc.rand.duration, outcome)
                total_packets += len(metrics.completed())
            outcome.summary.append(
                f"randomized stress: {total_packets} packets over {len(sc.rand.seeds)} seeds, "
                f"{len(outcome.violations)} invariant violations"
            )
        else:
            net = build_network(sc)
            flows = build_flows(sc, net)
            metrics = _simulate_once(sc, net, flows, sc.seed, sc.duration, outcome)
            if sc.probe:
                stats = metrics.flow_stats(sc.probe.flow)
                wcl = wcl_for_flow(net, flows, sc.probe.flow)
                outcome.summary.append(
                    f"probe {sc.probe.flow}: wcl={wcl} observed header="
                    f"{stats.max_header_latency} packet={stats.max_latency} "
                    f"({'PASS' if stats.max_latency is not None and stats.max_latency <= wcl else 'FAIL'})"
                )
            if sc.sweep_target and sc.sweep_loads:
                cfg = SimConfig(
                    network=net,
                    flows=flows,
                    duration=sc.duration,
                    seed=sc.seed,
                    clock_ns=sc.clock_ns,
                    credits=derive_credits(net, flows),
                )
                for row in offered_load_sweep(cfg, sc.sweep_target, sc.sweep_loads):
                    outcome.sweep_rows.append(
                        {
                            "scenario": sc.name,
                            "mode": "simulate-sweep",
                            "offered_load": row.offered_load,
                            "flow": sc.sweep_target,
                            "avg_latency_cycles": row.avg_latency,
                            "max_latency_cycles": row.max_latency,
                            "reachable": row.reachable,
                        }
                    )

    return outcome
