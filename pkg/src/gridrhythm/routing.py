"""Per-interval assignment of queued vehicles to platoon paths.

Once per rhythm period the queued vehicles of every origin-destination pair
are offered to the network: each admitted vehicle is bound to a concrete
sequence of (link, interval) platoon slots, called temporal links, and each
temporal link has a hard remaining capacity.  Two program shapes exist:

* single-path (SPR): one randomly chosen shortest path per OD pair; the
  objective charges every vehicle left behind its OD's waiting penalty.
* multi-path (MPR): every path within a detour budget is a column, plus a
  slack column per OD absorbing vehicles that stay queued at penalty cost.

Both are integer programs solved approximately: LP relaxation, then
repeatedly bound the most fractional variable to its nearer integer and
re-solve warm-started.  The first relaxation value and the final integer
value bracket the exact optimum, which is what the gap report states.

Path costs are free-flow traversal times (length over cruise speed).  The
temporal-link timing, however, is exact: a turning vehicle waits for the
next platoon of the perpendicular street, so the interval labels of the
post-turn links reflect that street's entry offset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csgraph

from .lp import INFEASIBLE, LE, EQ, OPTIMAL, LinearProgram, LPSolution
from .lp import solve as lp_solve
from .network import (
    KIND_ENTRANCE,
    KIND_JUNCTION,
    GridNetwork,
    ShortestPathSet,
)
from .rhythm import EntrySchedule, RhythmConfig, build_schedule

TIME_EPS = 1e-9
SPR = "SPR"
MPR = "MPR"


class RoutingError(Exception):
    """Malformed routing input or a violated internal invariant."""


@dataclass(frozen=True)
class TemporalLink:
    """One link in one routing interval, with its unreserved capacity."""

    link: int
    interval: int
    remaining_capacity: int


@dataclass(frozen=True)
class TimedPath:
    """A link path bound to concrete platoons.

    ``epochs[i]`` is when the platoon carrying the vehicle starts traversing
    ``links[i]``; ``temporal_links[i]`` labels that traversal with its
    routing interval.  Straight continuations keep the same platoon, so the
    epoch advances by exactly the link travel time; turns wait for the next
    platoon of the new street.  Interval labels never decrease along the
    path, and strictly increase when every link spans a whole block.

    ``cost_s`` is the free-flow traversal time (path length over cruise
    speed); ``exit_epoch - start_epoch`` additionally includes turn waits.
    """

    od: tuple[int, int]
    links: tuple[int, ...]
    travel_times: tuple[float, ...]
    start_epoch: float
    start_interval: int
    epochs: tuple[float, ...]
    temporal_links: tuple[tuple[int, int], ...]
    cost_s: float
    exit_epoch: float


@dataclass
class RoutingInstance:
    """One interval's admission program, ready to relax and round.

    Columns are the timed paths in ``paths`` order; MPR instances append one
    slack column per OD after the path columns.  ``binding`` lists the
    temporal links touched by at least one path, in (interval, link) order;
    these are the capacity rows.
    """

    kind: str
    interval: int
    paths: list[TimedPath]
    od_order: list[tuple[int, int]]
    od_of_col: list[int]
    demands: dict[tuple[int, int], int]
    penalties: dict[tuple[int, int], float]
    counters: dict[tuple[int, int], int]
    binding: list[tuple[int, int]]
    row_caps: list[int]
    detour_budget_s: float | None = None
    od_min_cost: dict[tuple[int, int], float] | None = None

    def path_coefficient(self, col: int) -> float:
        """Objective coefficient of a path column.

        MPR charges each path its detour beyond the OD's cheapest eligible
        path, so a queued vehicle (penalty at least one period) is never
        preferred over a free shortest-path slot; penalties only arbitrate
        who gets scarce slots and which detours are worth taking.
        """
        tp = self.paths[col]
        if self.od_min_cost is None:
            return tp.cost_s
        od = self.od_order[self.od_of_col[col]]
        return tp.cost_s - self.od_min_cost.get(od, 0.0)

    @property
    def n_paths(self) -> int:
        return len(self.paths)

    @property
    def n_columns(self) -> int:
        extra = len(self.od_order) if self.kind == MPR else 0
        return len(self.paths) + extra

    def slack_column(self, od_index: int) -> int:
        if self.kind != MPR:
            raise RoutingError("only MPR instances carry slack columns")
        return len(self.paths) + od_index

    def incidence_matrix(self) -> np.ndarray:
        """0/1 matrix: capacity block over binding rows, then demand rows.

        Columns are the path columns only; slack columns are unit columns by
        construction and carry no structure worth analyzing.
        """
        row_of = {te: i for i, te in enumerate(self.binding)}
        mat = np.zeros((len(self.binding) + len(self.od_order), len(self.paths)))
        for col, tp in enumerate(self.paths):
            for te in tp.temporal_links:
                mat[row_of[te], col] += 1.0
            mat[len(self.binding) + self.od_of_col[col], col] = 1.0
        if mat.size and mat.max() > 1.0:
            raise RoutingError("a path traverses one temporal link twice")
        return mat

    def to_lp(self) -> LinearProgram:
        ncols = self.n_columns
        A = np.zeros((len(self.binding), ncols))
        row_of = {te: i for i, te in enumerate(self.binding)}
        for col, tp in enumerate(self.paths):
            for te in tp.temporal_links:
                A[row_of[te], col] = 1.0
        senses = [LE] * len(self.binding)
        b = np.array([float(c) for c in self.row_caps])
        c = np.zeros(ncols)
        lower = np.zeros(ncols)
        upper = np.full(ncols, math.inf)
        if self.kind == SPR:
            for col, tp in enumerate(self.paths):
                od = self.od_order[self.od_of_col[col]]
                c[col] = -self.penalties[od]
                upper[col] = float(self.demands[od])
        elif self.kind == MPR:
            for col in range(len(self.paths)):
                c[col] = self.path_coefficient(col)
            dem_rows = np.zeros((len(self.od_order), ncols))
            dem_b = np.zeros(len(self.od_order))
            for col in range(len(self.paths)):
                dem_rows[self.od_of_col[col], col] = 1.0
            for oi, od in enumerate(self.od_order):
                sc = self.slack_column(oi)
                dem_rows[oi, sc] = 1.0
                dem_b[oi] = float(self.demands[od])
                c[sc] = self.penalties[od]
            A = np.vstack([A, dem_rows])
            senses = senses + [EQ] * len(self.od_order)
            b = np.concatenate([b, dem_b])
        else:
            raise RoutingError(f"unknown instance kind {self.kind!r}")
        return LinearProgram(c=c, A=A, senses=senses, b=b, lower=lower, upper=upper)

    def objective_value(self, x: np.ndarray) -> float:
        """Instance objective in its native (minimization) terms."""
        x = np.asarray(x, dtype=float)
        if self.kind == SPR:
            total = 0.0
            admitted = np.zeros(len(self.od_order))
            for col in range(len(self.paths)):
                admitted[self.od_of_col[col]] += x[col]
            for oi, od in enumerate(self.od_order):
                total += self.penalties[od] * (self.demands[od] - admitted[oi])
            return float(total)
        total = 0.0
        for col in range(len(self.paths)):
            total += self.path_coefficient(col) * x[col]
        for oi, od in enumerate(self.od_order):
            total += self.penalties[od] * x[self.slack_column(oi)]
        return float(total)

    def dump_text(self) -> str:
        """Structured plain-text snapshot for debugging and analysis."""
        out = [
            f"kind {self.kind} interval {self.interval} "
            f"paths {len(self.paths)} ods {len(self.od_order)}"
        ]
        if self.detour_budget_s is not None:
            out[0] += f" detour_budget_s {self.detour_budget_s}"
        for oi, od in enumerate(self.od_order):
            cols = [c for c in range(len(self.paths)) if self.od_of_col[c] == oi]
            out.append(
                f"od {od[0]}->{od[1]} demand {self.demands[od]} "
                f"penalty {self.penalties[od]} counter {self.counters[od]} cols {cols}"
            )
        for (a, e), cap in zip(self.binding, self.row_caps):
            cols = [
                c
                for c, tp in enumerate(self.paths)
                if (a, e) in tp.temporal_links
            ]
            out.append(f"row link {a} interval {e} cap {cap} cols {cols}")
        mat = self.incidence_matrix()
        out.append("matrix")
        for row in mat:
            out.append(" ".join(str(int(v)) for v in row))
        return "\n".join(out)


class Reservations:
    """Remaining capacity per temporal link, materialized on first touch.

    ``commit`` permanently removes slots; an audit trail of everything ever
    committed survives :meth:`trim`, so capacity safety can be checked after
    a whole run even though expired intervals are dropped along the way.
    """

    def __init__(self, ctx: "RoutingContext"):
        self.ctx = ctx
        self._left: dict[tuple[int, int], int] = {}
        self._committed: dict[tuple[int, int], int] = {}

    def remaining(self, link_id: int, interval: int) -> int:
        return self._left.get((link_id, interval), self.ctx.capacity(link_id))

    def temporal_link(self, link_id: int, interval: int) -> TemporalLink:
        return TemporalLink(link_id, interval, self.remaining(link_id, interval))

    def commit(self, link_id: int, interval: int, count: int):
        if count < 0:
            raise RoutingError("cannot commit a negative count")
        left = self.remaining(link_id, interval) - count
        if left < 0:
            raise RoutingError(
                f"over-commit on link {link_id} interval {interval}: "
                f"{count} requested, {left + count} remaining"
            )
        self._left[(link_id, interval)] = left
        key = (link_id, interval)
        self._committed[key] = self._committed.get(key, 0) + count

    def committed(self) -> dict[tuple[int, int], int]:
        return dict(self._committed)

    def trim(self, before_interval: int):
        """Forget remaining-capacity entries of expired intervals."""
        for key in [k for k in self._left if k[1] < before_interval]:
            del self._left[key]


class RoutingContext:
    """Network, rhythm and schedule glue shared by instance builders.

    Precomputes per-link phases and capacities, caches shortest-path sets
    per origin and eligible path sets per OD.  Platoon entries repeat every
    period, so timed paths computed once for interval 0 are reused for any
    interval by shifting epochs a whole number of periods.
    """

    def __init__(
        self,
        net: GridNetwork,
        cfg: RhythmConfig,
        schedule: EntrySchedule | None = None,
    ):
        self.net = net
        self.cfg = cfg
        if schedule is None:
            schedule = build_schedule(cfg, net, horizon_s=cfg.rhythm_s)
        self.schedule = schedule
        T = cfg.rhythm_s
        self._shift: dict[int, float | None] = {}
        for street in net.streets:
            epochs = schedule.street_epochs.get(street.id, ())
            self._shift[street.id] = (epochs[0] % T) if epochs else None
        self._tail_dist: dict[int, float] = {}
        self._tau: dict[int, float] = {}
        for street in net.streets:
            dist = 0.0
            for link_id in street.links:
                link = net.link(link_id)
                self._tail_dist[link_id] = dist
                self._tau[link_id] = link.length / cfg.speed_mps
                dist += link.length
        self._cap = {link.id: cfg.link_capacity(net, link.id) for link in net.links}
        self._spaths: dict[int, ShortestPathSet] = {}
        self._rev_dist: dict[int, np.ndarray] = {}
        self._base_paths: dict[tuple[int, ...], TimedPath] = {}
        self._eligible: dict[tuple[int, int, float], list[tuple[int, ...]]] = {}

    # -- lookups ------------------------------------------------------------

    def capacity(self, link_id: int) -> int:
        return self._cap[link_id]

    def tau(self, link_id: int) -> float:
        return self._tau[link_id]

    def shortest_paths(self, origin: int) -> ShortestPathSet:
        if origin not in self._spaths:
            self._spaths[origin] = ShortestPathSet(self.net, origin)
        return self._spaths[origin]

    def distance_to(self, dest: int) -> np.ndarray:
        """Shortest driving distance from every node to ``dest``."""
        if dest not in self._rev_dist:
            self._rev_dist[dest] = csgraph.dijkstra(
                self.net.adjacency().T.tocsr(), indices=dest
            )
        return self._rev_dist[dest]

    # -- platoon timing -----------------------------------------------------

    def board_epoch(self, link_id: int, at_or_after: float) -> float:
        """Epoch when the next platoon starts traversing ``link_id``.

        Platoons of the link's street pass the link tail at
        ``shift + tail_distance/speed`` plus whole periods; the first such
        epoch at or after the given time is returned.  The schedule is
        periodic and treated as already running, so the pass phase is
        reduced into ``[0, rhythm)``: a boarding point deep along a street
        is served in the first interval by the platoon that entered the
        street before time zero, not by the street's first post-zero
        release.
        """
        link = self.net.link(link_id)
        shift = self._shift[link.street]
        if shift is None:
            raise RoutingError(
                f"no scheduled platoon serves street {link.street}"
            )
        T = self.cfg.rhythm_s
        phase = (shift + self._tail_dist[link_id] / self.cfg.speed_mps) % T
        k = math.ceil((at_or_after - phase) / T - TIME_EPS)
        return max(k, 0) * T + phase

    def interval_of(self, epoch: float) -> int:
        return int(math.floor(epoch / self.cfg.rhythm_s + TIME_EPS))

    # -- eligible paths -----------------------------------------------------

    def eligible_link_paths(
        self,
        origin: int,
        dest: int,
        detour_budget_s: float,
        max_paths: int = 1024,
        max_expansions: int = 500_000,
    ) -> list[tuple[int, ...]]:
        """Every link path within the free-flow detour budget.

        A path is eligible when its length is at most the shortest distance
        plus ``speed * budget``; loops are allowed as long as the total stays
        within that cap.  Depth-first over sorted out-links, so the order is
        deterministic; the result is sorted by (length, link sequence) and
        truncated at ``max_paths``.
        """
        key = (origin, dest, round(detour_budget_s, 9))
        if key in self._eligible:
            return self._eligible[key]
        if origin == dest:
            raise RoutingError("origin and destination coincide")
        lb = self.distance_to(dest)
        shortest = lb[origin]
        if not math.isfinite(shortest):
            raise RoutingError(f"node {dest} unreachable from {origin}")
        max_len = shortest + self.cfg.speed_mps * detour_budget_s
        out: list[tuple[float, tuple[int, ...]]] = []
        path: list[int] = []
        budget = {"n": max_expansions}

        def dfs(node: int, used: float):
            if budget["n"] <= 0:
                raise RoutingError("eligible-path search exceeded expansion cap")
            budget["n"] -= 1
            for link_id in self.net.out_links(node):
                link = self.net.link(link_id)
                length = used + link.length
                if length + lb[link.head] > max_len + 1e-6:
                    continue
                path.append(link_id)
                if link.head == dest:
                    out.append((length, tuple(path)))
                else:
                    dfs(link.head, length)
                path.pop()

        dfs(origin, 0.0)
        out.sort()
        result = [links for _, links in out[:max_paths]]
        self._eligible[key] = result
        return result

    # -- timed paths ----------------------------------------------------------

    def timed_path(self, links, interval: int) -> TimedPath:
        """Timed path at the given interval, via the interval-0 cache."""
        key = tuple(links)
        base = self._base_paths.get(key)
        if base is None:
            base = compute_incidence(key, 0, self)
            self._base_paths[key] = base
        return shift_timed_path(base, interval, self.cfg.rhythm_s)


def compute_incidence(path, start_interval: int, ctx: RoutingContext) -> TimedPath:
    """Bind a link path to platoons from a given routing interval.

    The vehicle boards the first platoon passing the path origin at or after
    the interval start.  Straight continuations ride the same platoon, so
    the next link's epoch is exactly the previous epoch plus its travel
    time; at a turn the vehicle waits for the next platoon of the new
    street.  Each link is labeled with the routing interval containing the
    epoch at which its traversal starts.
    """
    if not path:
        raise RoutingError("empty path")
    net, cfg = ctx.net, ctx.cfg
    T = cfg.rhythm_s
    links = [net.link(l) for l in path]
    for a, b in zip(links, links[1:]):
        if a.head != b.tail:
            raise RoutingError("links do not chain into a path")
    origin = links[0].tail
    kind = net.node(origin).kind
    if kind not in (KIND_ENTRANCE, KIND_JUNCTION):
        raise RoutingError(f"path must start at an entrance or junction, not a {kind}")
    t = ctx.board_epoch(path[0], start_interval * T)
    start_epoch = t
    epochs, temporal, taus = [], [], []
    prev_street = None
    for link_id, link in zip(path, links):
        if prev_street is not None and link.street != prev_street:
            t = ctx.board_epoch(link_id, t)
        epochs.append(t)
        temporal.append((link_id, ctx.interval_of(t)))
        taus.append(ctx.tau(link_id))
        t += ctx.tau(link_id)
        prev_street = link.street
    for (_, e1), (_, e2) in zip(temporal, temporal[1:]):
        if e2 < e1:
            raise RoutingError("interval labels decreased along a path")
    return TimedPath(
        od=(origin, links[-1].head),
        links=tuple(path),
        travel_times=tuple(taus),
        start_epoch=start_epoch,
        start_interval=start_interval,
        epochs=tuple(epochs),
        temporal_links=tuple(temporal),
        cost_s=sum(taus),
        exit_epoch=t,
    )


def shift_timed_path(base: TimedPath, interval: int, rhythm_s: float) -> TimedPath:
    """Re-time a path a whole number of intervals later (exact by periodicity)."""
    k = interval - base.start_interval
    if k == 0:
        return base
    if k < 0:
        raise RoutingError("cannot shift a timed path backwards")
    dt = k * rhythm_s
    return TimedPath(
        od=base.od,
        links=base.links,
        travel_times=base.travel_times,
        start_epoch=base.start_epoch + dt,
        start_interval=interval,
        epochs=tuple(t + dt for t in base.epochs),
        temporal_links=tuple((a, e + k) for a, e in base.temporal_links),
        cost_s=base.cost_s,
        exit_epoch=base.exit_epoch + dt,
    )


def _normalized_queues(queues) -> list[tuple[tuple[int, int], int]]:
    out = []
    for od in sorted(queues):
        demand = queues[od]
        if demand < 0:
            raise RoutingError(f"negative demand for OD {od}")
        if demand > 0:
            out.append((od, int(demand)))
    return out


def _collect_binding(paths, reservations) -> tuple[list[tuple[int, int]], list[int]]:
    touched = sorted(
        {te for tp in paths for te in tp.temporal_links},
        key=lambda te: (te[1], te[0]),
    )
    caps = [reservations.remaining(a, e) for a, e in touched]
    return touched, caps


def _default_penalties(ods, counters, rhythm_s):
    return {od: (1 + counters.get(od, 0)) * rhythm_s for od in ods}


def build_spr(
    ctx: RoutingContext,
    interval: int,
    queues: dict[tuple[int, int], int],
    reservations: Reservations,
    rng_seed=0,
    penalties: dict[tuple[int, int], float] | None = None,
    counters: dict[tuple[int, int], int] | None = None,
) -> RoutingInstance:
    """Single-path instance: one random shortest path per demanded OD.

    The path is drawn uniformly among the OD's shortest paths with the given
    seed; ODs are visited in sorted order, so the draw is reproducible.
    Only temporal links touched by a selected path become rows, and only
    ODs with positive demand become columns.
    """
    rng = np.random.default_rng(rng_seed)
    pairs = _normalized_queues(queues)
    counters = counters or {}
    ods = [od for od, _ in pairs]
    priced = _default_penalties(ods, counters, ctx.cfg.rhythm_s)
    if penalties:
        priced.update({od: float(penalties[od]) for od in ods if od in penalties})
    paths, od_of_col = [], []
    for oi, (od, demand) in enumerate(pairs):
        link_path = ctx.shortest_paths(od[0]).extract(od[1], rng=rng)
        paths.append(ctx.timed_path(link_path, interval))
        od_of_col.append(oi)
    binding, caps = _collect_binding(paths, reservations)
    return RoutingInstance(
        kind=SPR,
        interval=interval,
        paths=paths,
        od_order=ods,
        od_of_col=od_of_col,
        demands={od: d for od, d in pairs},
        penalties=priced,
        counters={od: int(counters.get(od, 0)) for od in ods},
        binding=binding,
        row_caps=caps,
    )


def build_mpr(
    ctx: RoutingContext,
    interval: int,
    queues: dict[tuple[int, int], int],
    reservations: Reservations,
    detour_budget_s: float = 40.0,
    penalties: dict[tuple[int, int], float] | None = None,
    counters: dict[tuple[int, int], int] | None = None,
    max_paths_per_od: int = 1024,
) -> RoutingInstance:
    """Multi-path instance over every path within the detour budget.

    A budget of zero admits exactly the shortest paths.  Each OD gets a
    slack column priced at its waiting penalty, and the demand rows hold
    with equality: every queued vehicle is either assigned a path or
    explicitly left waiting.
    """
    if detour_budget_s < 0:
        raise RoutingError("detour budget must be non-negative")
    pairs = _normalized_queues(queues)
    counters = counters or {}
    ods = [od for od, _ in pairs]
    priced = _default_penalties(ods, counters, ctx.cfg.rhythm_s)
    if penalties:
        priced.update({od: float(penalties[od]) for od in ods if od in penalties})
    paths, od_of_col = [], []
    od_min_cost: dict[tuple[int, int], float] = {}
    for oi, (od, demand) in enumerate(pairs):
        for link_path in ctx.eligible_link_paths(
            od[0], od[1], detour_budget_s, max_paths=max_paths_per_od
        ):
            tp = ctx.timed_path(link_path, interval)
            paths.append(tp)
            od_of_col.append(oi)
            od_min_cost[od] = min(od_min_cost.get(od, math.inf), tp.cost_s)
    binding, caps = _collect_binding(paths, reservations)
    return RoutingInstance(
        kind=MPR,
        interval=interval,
        paths=paths,
        od_order=ods,
        od_of_col=od_of_col,
        demands={od: d for od, d in pairs},
        penalties=priced,
        counters={od: int(counters.get(od, 0)) for od in ods},
        binding=binding,
        row_caps=caps,
        detour_budget_s=detour_budget_s,
        od_min_cost=od_min_cost,
    )


def most_fractional_index(x: np.ndarray, tol: float = 1e-6) -> int | None:
    """Index of the entry farthest from an integer, or None if all settle.

    Ties go to the smallest index.  Shared by every rounding loop in the
    package so the cut selection rule cannot drift between callers.
    """
    frac = x - np.floor(x + tol)
    dist = np.minimum(frac, 1.0 - frac)
    dist[dist <= tol] = 0.0
    j = int(np.argmax(dist))
    return j if dist[j] > 0.0 else None


def integer_bound_trials(value: float, tol: float = 1e-6) -> list[int]:
    """Integer bounds to try for a fractional value, nearer side first.

    Exact ties prefer the floor.
    """
    floor_v = math.floor(value + tol)
    prefer_floor = (value - floor_v) <= (floor_v + 1 - value)
    return [floor_v, floor_v + 1] if prefer_floor else [floor_v + 1, floor_v]


@dataclass
class RoundingReport:
    """Integer assignment with its optimality bracket.

    ``lower_bound`` is the first LP relaxation value, ``upper_bound`` the
    final integer value; the exact integer optimum lies between them, which
    bounds the relative ``gap``.
    """

    x: np.ndarray
    admitted: dict[tuple[int, int], int]
    slack: dict[tuple[int, int], int]
    lower_bound: float
    upper_bound: float
    gap: float
    rounding_steps: int
    lp_iterations: int


def solve_rounding(
    instance: RoutingInstance,
    solver=None,
    tol: float = 1e-6,
    max_rounds: int | None = None,
) -> RoundingReport:
    """LP relaxation plus most-fractional rounding with warm restarts.

    The variable farthest from an integer is bounded to its nearer one
    (floor on ties, smallest column index on metric ties) and the LP is
    re-solved from the previous basis.  If the chosen bound is infeasible
    the opposite bound is tried; if both fail the instance aborts with
    diagnostics.
    """
    solver = solver or lp_solve
    ncols = instance.n_columns
    if ncols == 0:
        return RoundingReport(
            x=np.zeros(0),
            admitted={},
            slack={},
            lower_bound=0.0,
            upper_bound=0.0,
            gap=0.0,
            rounding_steps=0,
            lp_iterations=0,
        )
    program = instance.to_lp()
    cur_lower = program.lower.copy()
    cur_upper = program.upper.copy()
    sol = solver(program)
    if sol.status != OPTIMAL:
        raise RoutingError(
            f"relaxation came back {sol.status}; instance:\n{instance.dump_text()}"
        )
    lower_bound = instance.objective_value(sol.x)
    budget = max_rounds if max_rounds is not None else 1000 + 10 * ncols
    steps = 0
    while True:
        j = most_fractional_index(sol.x, tol)
        if j is None:
            break
        if steps >= budget:
            raise RoutingError(
                f"rounding exceeded {budget} steps; instance:\n{instance.dump_text()}"
            )
        steps += 1
        value = sol.x[j]
        accepted, accepted_bound = None, None
        for bound in integer_bound_trials(value, tol):
            if bound < cur_lower[j] - tol or bound > cur_upper[j] + tol:
                continue
            nxt = _rebound(solver, program, sol, j, bound, cur_lower[j], cur_upper[j])
            if nxt.status == OPTIMAL:
                accepted, accepted_bound = nxt, bound
                break
        if accepted is None:
            raise RoutingError(
                f"both integer bounds infeasible for column {j}; "
                f"instance:\n{instance.dump_text()}"
            )
        if accepted_bound <= value:
            cur_upper[j] = float(accepted_bound)
        else:
            cur_lower[j] = float(accepted_bound)
        sol = accepted
    x_int = np.rint(sol.x)
    if np.any(np.abs(sol.x - x_int) > 1e-5):
        raise RoutingError("rounding loop ended on a fractional point")
    _check_assignment(instance, x_int)
    upper_bound = instance.objective_value(x_int)
    gap = max(upper_bound - lower_bound, 0.0) / max(lower_bound, 1e-9)
    admitted = {od: 0 for od in instance.od_order}
    for col in range(len(instance.paths)):
        admitted[instance.od_order[instance.od_of_col[col]]] += int(x_int[col])
    slack = {}
    if instance.kind == MPR:
        for oi, od in enumerate(instance.od_order):
            slack[od] = int(x_int[instance.slack_column(oi)])
    return RoundingReport(
        x=x_int,
        admitted=admitted,
        slack=slack,
        lower_bound=lower_bound,
        upper_bound=upper_bound,
        gap=gap,
        rounding_steps=steps,
        lp_iterations=sol.iterations,
    )


def _rebound(solver, program, prev, var, bound, cur_lo, cur_hi):
    """Bound column ``var`` on one side of an integer, warm when possible.

    The untouched side is re-asserted from the tracked current bounds so a
    failed opposite-side trial from the same round leaves no residue.
    """
    if bound <= prev.x[var]:
        lo, hi = float(cur_lo), float(bound)
    else:
        lo, hi = float(bound), float(cur_hi)
    if lo > hi:
        return LPSolution(INFEASIBLE, None, None, 0)
    if prev.context is not None:
        return prev.context.resolve_with_bound(var, lower=lo, upper=hi)
    program.lower[var] = lo
    program.upper[var] = hi
    return solver(program)


def _check_assignment(instance: RoutingInstance, x: np.ndarray):
    """Defensive re-check of capacities and demand balance on integers."""
    totals: dict[tuple[int, int], int] = {}
    for col, tp in enumerate(instance.paths):
        n = int(x[col])
        if n < 0:
            raise RoutingError("negative admitted flow")
        for te in tp.temporal_links:
            totals[te] = totals.get(te, 0) + n
    for te, cap in zip(instance.binding, instance.row_caps):
        if totals.get(te, 0) > cap:
            raise RoutingError(f"capacity violated on temporal link {te}")
    admitted = {od: 0 for od in instance.od_order}
    for col in range(len(instance.paths)):
        admitted[instance.od_order[instance.od_of_col[col]]] += int(x[col])
    for oi, od in enumerate(instance.od_order):
        if instance.kind == MPR:
            if admitted[od] + int(x[instance.slack_column(oi)]) != instance.demands[od]:
                raise RoutingError(f"demand row violated for OD {od}")
        elif admitted[od] > instance.demands[od]:
            raise RoutingError(f"admitted more than queued for OD {od}")


def escalate_penalties(
    queues: dict[tuple[int, int], int],
    served: dict[tuple[int, int], int],
    counters: dict[tuple[int, int], int],
    rhythm_s: float,
) -> tuple[dict[tuple[int, int], float], dict[tuple[int, int], int]]:
    """Update starvation counters and waiting penalties after one interval.

    An OD whose queue was non-empty and not fully served keeps starving: its
    counter grows by one and its penalty becomes (1 + counter) periods.  A
    cleared (or empty) queue resets the counter.
    """
    new_counters: dict[tuple[int, int], int] = {}
    penalties: dict[tuple[int, int], float] = {}
    for od in sorted(set(queues) | set(counters) | set(served)):
        demand = queues.get(od, 0)
        done = served.get(od, 0)
        if done > demand:
            raise RoutingError(f"served more than queued for OD {od}")
        starving = demand > 0 and done < demand
        level = counters.get(od, 0) + 1 if starving else 0
        new_counters[od] = level
        penalties[od] = (1 + level) * rhythm_s
    return penalties, new_counters


def commit_reservations(
    assignment,
    instance: RoutingInstance,
    reservations: Reservations,
) -> Reservations:
    """Deduct an integer assignment from the remaining capacities.

    All-or-nothing: totals are validated against every touched temporal
    link first, so an over-commit aborts without partial mutation.
    """
    x = assignment.x if isinstance(assignment, RoundingReport) else np.asarray(assignment)
    totals: dict[tuple[int, int], int] = {}
    for col, tp in enumerate(instance.paths):
        value = float(x[col])
        n = int(round(value))
        if abs(value - n) > 1e-6 or n < 0:
            raise RoutingError("assignment must be non-negative integers")
        if n == 0:
            continue
        for te in tp.temporal_links:
            totals[te] = totals.get(te, 0) + n
    for (a, e), n in totals.items():
        if n > reservations.remaining(a, e):
            raise RoutingError(
                f"over-commit on link {a} interval {e}: {n} requested, "
                f"{reservations.remaining(a, e)} remaining"
            )
    for (a, e), n in sorted(totals.items()):
        reservations.commit(a, e, n)
    return reservations


def reservation_horizon_intervals(ctx: RoutingContext, detour_budget_s: float = 40.0) -> int:
    """Intervals to keep reservations for: longest admissible trip plus one.

    Bounded by the network perimeter (no shortest trip is longer) plus the
    detour allowance, in periods.
    """
    xs = [node.x for node in ctx.net.nodes]
    ys = [node.y for node in ctx.net.nodes]
    perimeter = 2.0 * ((max(xs) - min(xs)) + (max(ys) - min(ys)))
    seconds = perimeter / ctx.cfg.speed_mps + detour_budget_s
    return int(math.ceil(seconds / ctx.cfg.rhythm_s)) + 1
