"""Point-queue benchmark controls on the same grid: MP-1, MP-R, FCFS-R.

All three track vehicles individually over the unchanged one-way grid with
unbounded link queues.  Links are traversed at free-flow speed; service
happens only at crossroads.  Max-pressure (MP) switches the whole
crossroads between two phases on a fixed slot: every horizontal approach
moves, or every vertical one.  MP-1 vehicles keep one shortest path drawn
at entry; MP-R and FCFS-R re-choose their next link each time they cross,
using live queue estimates.  FCFS-R has no phases at all: each crossroads
grants conflict-free crossing epochs strictly in request order, spacing
same-axis followers by the car-following headway and perpendicular
followers by the larger conflict-clearance gap.

Delay for a benchmark vehicle is total trip time minus the free-flow time
of the shortest path, which matches the rhythmic controller's boundary
wait plus distance detour accounting: both charge exactly the time lost
relative to an unimpeded shortest ride.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csgraph

from .network import KIND_CROSSROADS, GridNetwork, ShortestPathSet
from .simulation import DemandScenario, MetricsReport, generate_arrivals

MP1 = "MP-1"
MPR_BENCH = "MP-R"
FCFS = "FCFS-R"
CONTROLLERS = (MP1, MPR_BENCH, FCFS)


class BenchmarkError(Exception):
    pass


@dataclass(frozen=True)
class BenchmarkParams:
    """Shared physical constants; defaults mirror the rhythmic setup."""

    speed_mps: float = 15.0
    headway_s: float = 0.5
    cross_gap_s: float = 1.0
    slot_s: float = 5.0
    saturation_vps: float = 2.0
    lanes: int = 2
    #: per-vehicle service estimate used by adaptive route choice
    wait_est_s: float = 0.5
    #: arrival stamps are binned by this period so a benchmark run consumes
    #: the identical stream as the rhythmic run it is paired with
    arrival_rhythm_s: float = 10.0

    @property
    def slot_discharge(self) -> int:
        return int(math.floor(self.saturation_vps * self.lanes * self.slot_s + 1e-9))


@dataclass
class _Vehicle:
    vid: int
    od: tuple[int, int]
    arrival_s: float
    fixed_path: tuple[int, ...] | None = None
    path_pos: int = 0
    dist_m: float = 0.0
    exit_s: float | None = None


class _Topology:
    """Per-destination distances and node/link lookups shared by engines."""

    def __init__(self, net: GridNetwork, params: BenchmarkParams):
        self.net = net
        self.params = params
        self.out_links: dict[int, list[int]] = {}
        for link in net.links:
            self.out_links.setdefault(link.tail, []).append(link.id)
        for outs in self.out_links.values():
            outs.sort()
        self._dist: dict[int, np.ndarray] = {}
        self._adj = net.adjacency().T.tocsr()

    def dist_to(self, dest: int) -> np.ndarray:
        if dest not in self._dist:
            self._dist[dest] = csgraph.dijkstra(self._adj, indices=dest)
        return self._dist[dest]

    def tau(self, link_id: int) -> float:
        return self.net.link(link_id).length / self.params.speed_mps

    def is_crossroads(self, node_id: int) -> bool:
        return self.net.node(node_id).kind == KIND_CROSSROADS

    def walk_to_service(self, node: int, dest: int, t: float, veh: _Vehicle,
                        choose_link) -> tuple[str, int | None, float]:
        """Advance through junction/pass-through nodes until a crossroads
        queue or the destination; returns ("done"|"queue", link, time)."""
        while True:
            if node == dest:
                veh.exit_s = t
                return ("done", None, t)
            link_id = choose_link(veh, node, t)
            link = self.net.link(link_id)
            t = t + self.tau(link_id)
            veh.dist_m += link.length
            node = link.head
            if node == dest:
                veh.exit_s = t
                return ("done", None, t)
            if self.is_crossroads(node):
                return ("queue", link_id, t)


def _spawn_vehicles(
    net: GridNetwork,
    scn: DemandScenario,
    horizon_s: float,
    seed: int,
    params: BenchmarkParams,
) -> list[_Vehicle]:
    """The same per-interval Poisson stream the rhythmic run consumes."""
    rates = scn.od_rates(net)
    T = params.arrival_rhythm_s
    vehicles: list[_Vehicle] = []
    for interval in range(int(round(horizon_s / T))):
        for od, stamps in generate_arrivals(
            scn, net, interval, seed, T, rates=rates
        ).items():
            for stamp in stamps:
                vehicles.append(_Vehicle(len(vehicles), od, stamp))
    return vehicles


def _fixed_paths(net, vehicles, seed):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(3,)))
    sps: dict[int, ShortestPathSet] = {}
    for veh in vehicles:
        origin, dest = veh.od
        if origin not in sps:
            sps[origin] = ShortestPathSet(net, origin)
        veh.fixed_path = tuple(sps[origin].extract(dest, rng=rng))


def _fixed_next(topo: _Topology):
    def choose(veh: _Vehicle, node: int, t: float) -> int:
        link_id = veh.fixed_path[veh.path_pos]
        if topo.net.link(link_id).tail != node:
            raise BenchmarkError("fixed path lost its position")
        veh.path_pos += 1
        return link_id

    return choose


def _adaptive_next(topo: _Topology, queue_len):
    """Least estimated remaining time: free flow + queue wait + tail ride."""
    params = topo.params

    def choose(veh: _Vehicle, node: int, t: float) -> int:
        dest = veh.od[1]
        dist = topo.dist_to(dest)
        best = None
        for link_id in topo.out_links[node]:
            head = topo.net.link(link_id).head
            remain = dist[head]
            if not np.isfinite(remain):
                continue
            est = (
                topo.tau(link_id)
                + queue_len(link_id) * params.wait_est_s
                + remain / params.speed_mps
            )
            if best is None or est < best[0] - 1e-12:
                best = (est, link_id)
        if best is None:
            raise BenchmarkError(f"destination {dest} unreachable from {node}")
        return best[1]

    return choose


def mp_phase_select(pressures: dict[str, float]) -> str:
    """Argmax phase; exact ties go to the horizontal phase."""
    if pressures.get("h", 0.0) >= pressures.get("v", 0.0):
        return "h"
    return "v"


def _run_max_pressure(
    net: GridNetwork,
    scn: DemandScenario,
    horizon_s: float,
    seed: int,
    params: BenchmarkParams,
    adaptive: bool,
) -> tuple[list[_Vehicle], int]:
    vehicles = _spawn_vehicles(net, scn, horizon_s, seed, params)
    topo = _Topology(net, params)
    queues: dict[int, list[tuple[float, int]]] = {}

    def queue_len(link_id: int) -> int:
        return len(queues.get(link_id, ()))

    if adaptive:
        choose = _adaptive_next(topo, queue_len)
    else:
        _fixed_paths(net, vehicles, seed)
        choose = _fixed_next(topo)

    def enqueue_from(node: int, t: float, veh: _Vehicle):
        state, link_id, t_ready = topo.walk_to_service(
            node, veh.od[1], t, veh, choose
        )
        if state == "queue":
            queues.setdefault(link_id, []).append((t_ready, veh.vid))

    crossroads = sorted(
        n.id for n in net.nodes if n.kind == KIND_CROSSROADS
    )
    in_links: dict[int, list[tuple[int, str]]] = {c: [] for c in crossroads}
    for link in net.links:
        if link.head in in_links:
            axis = net.streets[link.street].axis
            in_links[link.head].append((link.id, axis))
    for c in crossroads:
        in_links[c].sort()

    by_vid = {veh.vid: veh for veh in vehicles}
    pending = sorted(vehicles, key=lambda v: (v.arrival_s, v.vid))
    next_entry = 0
    slots = int(math.ceil(horizon_s / params.slot_s))
    cap = params.slot_discharge
    per_lane_headway = params.headway_s / params.lanes

    for slot in range(slots):
        now = slot * params.slot_s
        while next_entry < len(pending) and pending[next_entry].arrival_s <= now:
            veh = pending[next_entry]
            next_entry += 1
            enqueue_from(veh.od[0], veh.arrival_s, veh)
        for c in crossroads:
            pressures = {"h": 0.0, "v": 0.0}
            ready: dict[int, list[tuple[float, int]]] = {}
            for link_id, axis in in_links[c]:
                q = queues.get(link_id, [])
                ready_here = [item for item in q if item[0] <= now + 1e-9]
                ready[link_id] = ready_here
                if not ready_here:
                    continue
                # unit-weight pressure: waiting here minus waiting on each
                # vehicle's chosen outgoing link, movement by movement
                for t_ready, vid in ready_here:
                    veh = by_vid[vid]
                    if veh.fixed_path is not None:
                        nxt = veh.fixed_path[veh.path_pos]
                    else:
                        nxt = choose(veh, c, now)  # probe only, no commit
                    pressures[axis] += 1.0 - queue_len(nxt) / max(
                        1, queue_len(link_id)
                    )
            phase = mp_phase_select(pressures)
            for link_id, axis in in_links[c]:
                if axis != phase:
                    continue
                q = queues.get(link_id, [])
                served = 0
                while q and served < cap and q[0][0] <= now + 1e-9:
                    t_ready, vid = q.pop(0)
                    veh = by_vid[vid]
                    t_cross = now + served * per_lane_headway
                    served += 1
                    enqueue_from(c, t_cross, veh)
    return vehicles, len(vehicles)


def fcfs_reserve(
    requests: list[tuple[float, str]],
    headway_s: float = 0.5,
    cross_gap_s: float = 1.0,
) -> list[float]:
    """Crossing epochs for stamped (epoch, axis) requests, in given order.

    Followers on the same axis wait at least the headway behind the last
    grant; a perpendicular follower waits the conflict-clearance gap.
    Earlier requests are never displaced: grants are issued in input order
    and are non-decreasing.
    """
    grants: list[float] = []
    last_t = -math.inf
    last_axis = None
    for stamp, axis in requests:
        gap = headway_s if axis == last_axis else cross_gap_s
        if last_axis is None:
            grant = stamp
        else:
            grant = max(stamp, last_t + gap)
        grants.append(grant)
        last_t, last_axis = grant, axis
    return grants


def _run_fcfs(
    net: GridNetwork,
    scn: DemandScenario,
    horizon_s: float,
    seed: int,
    params: BenchmarkParams,
) -> tuple[list[_Vehicle], int]:
    vehicles = _spawn_vehicles(net, scn, horizon_s, seed, params)
    topo = _Topology(net, params)
    # per crossroads: last grant epoch + axis; per approach link: queue tail
    last_grant: dict[int, tuple[float, str]] = {}
    pending_count: dict[int, int] = {}
    axis_of = {
        link.id: net.streets[link.street].axis for link in net.links
    }

    def queue_len(link_id: int) -> int:
        return pending_count.get(link_id, 0)

    choose = _adaptive_next(topo, queue_len)
    counter = 0
    heap: list[tuple[float, int, int, int | None]] = []

    def feed(node: int, t: float, veh: _Vehicle):
        nonlocal counter
        state, link_id, t_ready = topo.walk_to_service(
            node, veh.od[1], t, veh, choose
        )
        if state == "queue":
            pending_count[link_id] = pending_count.get(link_id, 0) + 1
            counter += 1
            heapq.heappush(heap, (t_ready, counter, veh.vid, link_id))

    by_vid = {veh.vid: veh for veh in vehicles}
    for veh in sorted(vehicles, key=lambda v: (v.arrival_s, v.vid)):
        feed(veh.od[0], veh.arrival_s, veh)

    while heap:
        stamp, _, vid, link_id = heapq.heappop(heap)
        if stamp > horizon_s:
            break
        veh = by_vid[vid]
        pending_count[link_id] -= 1
        node = net.link(link_id).head
        axis = axis_of[link_id]
        prev = last_grant.get(node)
        if prev is None:
            grant = stamp
        else:
            gap = params.headway_s if prev[1] == axis else params.cross_gap_s
            grant = max(stamp, prev[0] + gap)
        last_grant[node] = (grant, axis)
        feed(node, grant, veh)
    return vehicles, len(vehicles)


def run_benchmark(
    net: GridNetwork,
    controller: str,
    scn: DemandScenario,
    horizon_s: float = 1800.0,
    seed: int = 0,
    params: BenchmarkParams | None = None,
) -> MetricsReport:
    """Roll out one benchmark controller; same report schema as RC runs."""
    params = params or BenchmarkParams()
    if controller == MP1:
        vehicles, generated = _run_max_pressure(
            net, scn, horizon_s, seed, params, adaptive=False
        )
    elif controller == MPR_BENCH:
        vehicles, generated = _run_max_pressure(
            net, scn, horizon_s, seed, params, adaptive=True
        )
    elif controller == FCFS:
        vehicles, generated = _run_fcfs(net, scn, horizon_s, seed, params)
    else:
        raise BenchmarkError(f"unknown controller {controller!r}")

    sps: dict[int, ShortestPathSet] = {}
    delays = []
    dist_total = 0.0
    time_total = 0.0
    done = 0
    for veh in vehicles:
        if veh.exit_s is None or veh.exit_s > horizon_s:
            continue
        origin, dest = veh.od
        if origin not in sps:
            sps[origin] = ShortestPathSet(net, origin)
        free_s = sps[origin].distance(dest) / params.speed_mps
        delays.append((veh.exit_s - veh.arrival_s) - free_s)
        dist_total += veh.dist_m
        time_total += veh.exit_s - veh.arrival_s
        done += 1
    return MetricsReport(
        scenario=scn.id,
        demand_vph=scn.total_vph,
        router=controller,
        rhythm_s=params.arrival_rhythm_s,
        seed=seed,
        horizon_s=horizon_s,
        generated=generated,
        admitted=done,
        throughput=done,
        avg_delay_s=float(np.mean(delays)) if delays else 0.0,
        std_delay_s=float(np.std(delays)) if delays else 0.0,
        avg_speed_mps=dist_total / time_total if time_total > 0 else 0.0,
        mean_solve_ms=0.0,
        p95_solve_ms=0.0,
    )
