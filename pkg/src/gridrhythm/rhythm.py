"""Network rhythm: staggered platoon entries and conflict-free crossings.

Every street releases one virtual platoon per rhythm period.  Horizontal
streets release at k*T, vertical streets at (k + share)*T, so platoons from
perpendicular streets reach each crossroads in alternating half-windows and
never meet, provided the inter-crossroads travel time is an integer number
of periods and platoons are short enough to clear within their half-window.

The conflict checker below does not trust that argument: it traces every
platoon's position along its street at constant speed and reports any pair
of perpendicular occupancy windows that overlap at a crossroads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lp import EQ, LE, OPTIMAL, LinearProgram, solve
from .network import KIND_CROSSROADS, GridNetwork, ShortestPathSet

TIME_EPS = 1e-9


def platoon_capacity(
    rhythm_s: float,
    headway_s: float,
    buffer_veh: int,
    share: float = 1.0,
) -> tuple[int, int]:
    """Vehicle slots per platoon: (raw, valid).

    raw counts every headway slot inside the platoon's passing window
    (share * rhythm); valid drops ``buffer_veh`` slots at both ends, which
    stay empty so late joiners and early leavers cannot clip a neighbor.
    """
    if rhythm_s <= 0 or headway_s <= 0:
        raise ValueError("rhythm and headway must be positive")
    if buffer_veh < 0:
        raise ValueError("buffer_veh must be >= 0")
    raw = math.floor(share * rhythm_s / headway_s + TIME_EPS)
    valid = max(raw - 2 * buffer_veh, 0)
    return raw, valid


@dataclass
class RhythmConfig:
    """All timing constants of one rhythm.

    ``blocks_per_rhythm`` is the integer number of periods a platoon needs
    between consecutive crossroads; the cruise speed and block length of the
    target network must actually produce that travel time, which
    :func:`verify_conflict_free` checks from raw geometry.
    """

    rhythm_s: float
    speed_mps: float = 15.0
    blocks_per_rhythm: int = 1
    platoon_length_m: float | None = None
    entry_travel_s: float | None = None
    horizontal_share: float = 0.5
    buffer_veh: int = 2
    headway_s: float = 0.5
    validate: bool = True

    def __post_init__(self):
        if self.rhythm_s <= 0:
            raise ValueError("rhythm_s must be positive")
        if self.speed_mps <= 0:
            raise ValueError("speed_mps must be positive")
        if self.blocks_per_rhythm < 1 or int(self.blocks_per_rhythm) != self.blocks_per_rhythm:
            raise ValueError("blocks_per_rhythm must be a positive integer")
        if self.platoon_length_m is None:
            # longest platoon that clears a crossroads within either window
            window = min(self.horizontal_share, 1.0 - self.horizontal_share)
            self.platoon_length_m = window * self.rhythm_s * self.speed_mps
        if self.entry_travel_s is None:
            self.entry_travel_s = self.crossing_travel_s
        if self.validate:
            if not 0.0 < self.horizontal_share < 1.0:
                raise ValueError("horizontal_share must lie strictly inside (0, 1)")
            occupancy = self.platoon_length_m / self.speed_mps
            if occupancy > self.horizontal_share * self.rhythm_s + TIME_EPS:
                raise ValueError("platoon cannot clear within the horizontal window")
            if occupancy > (1.0 - self.horizontal_share) * self.rhythm_s + TIME_EPS:
                raise ValueError("platoon cannot clear within the vertical window")

    @property
    def crossing_travel_s(self) -> float:
        """Travel time between consecutive crossroads."""
        return self.blocks_per_rhythm * self.rhythm_s

    @property
    def occupancy_s(self) -> float:
        """Time one platoon blocks a crossroads."""
        return self.platoon_length_m / self.speed_mps

    @property
    def capacity_raw(self) -> int:
        return platoon_capacity(self.rhythm_s, self.headway_s, self.buffer_veh)[0]

    @property
    def capacity_valid(self) -> int:
        """Vehicle slots usable when the platoon ends at a crossroads."""
        return platoon_capacity(self.rhythm_s, self.headway_s, self.buffer_veh)[1]

    @property
    def capacity_segment(self) -> int:
        """Slots usable when the link ends mid-segment: one buffer end only."""
        return self.capacity_valid + self.buffer_veh

    @property
    def valid_share(self) -> float:
        raw, valid = platoon_capacity(self.rhythm_s, self.headway_s, self.buffer_veh)
        return valid / raw if raw else 0.0

    def link_capacity(self, net: GridNetwork, link_id: int) -> int:
        """Per-platoon vehicle cap of one link, by its downstream node kind."""
        head = net.node(net.link(link_id).head)
        if head.kind == KIND_CROSSROADS:
            return self.capacity_valid
        return self.capacity_segment

    def to_dict(self) -> dict:
        return {
            "rhythm_s": self.rhythm_s,
            "speed_mps": self.speed_mps,
            "blocks_per_rhythm": self.blocks_per_rhythm,
            "platoon_length_m": self.platoon_length_m,
            "entry_travel_s": self.entry_travel_s,
            "horizontal_share": self.horizontal_share,
            "buffer_veh": self.buffer_veh,
            "headway_s": self.headway_s,
        }

    @staticmethod
    def from_dict(data: dict) -> "RhythmConfig":
        return RhythmConfig(**data)


@dataclass
class EntrySchedule:
    """Per-street platoon entry epochs over one horizon."""

    street_epochs: dict[int, tuple[float, ...]]
    rhythm_s: float
    horizon_s: float

    def epochs(self, street_id: int) -> tuple[float, ...]:
        return self.street_epochs[street_id]

    def offset(self, street_id: int, net: GridNetwork) -> float:
        """Phase of this street's first platoon inside the rhythm."""
        return self.street_epochs[street_id][0] if self.street_epochs[street_id] else 0.0


def build_schedule(
    cfg: RhythmConfig,
    net: GridNetwork,
    horizon_s: float,
    strict: bool = True,
) -> EntrySchedule:
    """Entry epochs: horizontal streets at k*T, vertical at (k+share)*T."""
    if strict:
        RhythmConfig(**cfg.to_dict())  # re-run validation
    if horizon_s <= 0:
        raise ValueError("horizon must be positive")
    T = cfg.rhythm_s
    count = int(math.floor((horizon_s - TIME_EPS) / T)) + 1
    epochs = {}
    for street in net.streets:
        shift = 0.0 if street.axis == "h" else cfg.horizontal_share * T
        seq = tuple(k * T + shift for k in range(count) if k * T + shift < horizon_s)
        epochs[street.id] = seq
    return EntrySchedule(epochs, T, horizon_s)


def _street_positions(net: GridNetwork, street) -> list[tuple[int, float]]:
    """(node id, running distance from the street's entrance)."""
    out = [(street.nodes[0], 0.0)]
    dist = 0.0
    for link_id in street.links:
        link = net.link(link_id)
        dist += link.length
        out.append((link.head, dist))
    return out


def verify_conflict_free(
    cfg: RhythmConfig,
    net: GridNetwork,
    schedule: EntrySchedule,
    horizon_s: float | None = None,
    travel_s: dict[tuple[int, int], float] | None = None,
) -> list[tuple[int, float]]:
    """Trajectory-based conflict scan; empty result means conflict-free.

    Platoon heads move at constant ``speed_mps`` from their street entrance;
    a platoon occupies a crossroads from head arrival until the tail clears,
    ``occupancy_s`` later.  Every overlapping horizontal/vertical occupancy
    pair at a crossroads is reported as (crossroads id, overlap start).
    Deliberately reimplements nothing from the scheduling arithmetic: only
    geometry and the entry epochs enter the computation.

    ``travel_s`` replaces the constant-speed entrance-to-crossroads time for
    selected (street id, crossroads id) pairs; variable-speed profiles supply
    their own arrival offsets this way.
    """
    horizon = horizon_s if horizon_s is not None else schedule.horizon_s
    occupancy = cfg.occupancy_s
    windows: dict[int, dict[str, list[float]]] = {}
    for street in net.streets:
        positions = _street_positions(net, street)
        for node_id, dist in positions:
            if net.node(node_id).kind != KIND_CROSSROADS:
                continue
            travel = dist / cfg.speed_mps
            if travel_s is not None:
                travel = travel_s.get((street.id, node_id), travel)
            for entry in schedule.epochs(street.id):
                arrival = entry + travel
                if arrival >= horizon:
                    break
                windows.setdefault(node_id, {"h": [], "v": []})[street.axis].append(arrival)
    conflicts: list[tuple[int, float]] = []
    for node_id, by_axis in sorted(windows.items()):
        hs = sorted(by_axis["h"])
        vs = sorted(by_axis["v"])
        i = j = 0
        while i < len(hs) and j < len(vs):
            start = max(hs[i], vs[j])
            end = min(hs[i] + occupancy, vs[j] + occupancy)
            if end - start > TIME_EPS:
                conflicts.append((node_id, start))
            if hs[i] + occupancy <= vs[j] + occupancy:
                i += 1
            else:
                j += 1
    return conflicts


def crossroads_passages(
    cfg: RhythmConfig,
    net: GridNetwork,
    schedule: EntrySchedule,
    node_id: int,
    horizon_s: float,
) -> list[tuple[float, str]]:
    """Sorted (arrival, axis) passages of one crossroads; test helper."""
    passages = []
    for street in net.streets:
        for nid, dist in _street_positions(net, street):
            if nid != node_id:
                continue
            travel = dist / cfg.speed_mps
            for entry in schedule.epochs(street.id):
                arrival = entry + travel
                if arrival < horizon_s:
                    passages.append((arrival, street.axis))
    return sorted(passages)


def link_flow_capacity_vps(
    rhythm_s: float,
    lanes: int,
    saturation_vps: float,
    valid_share: float,
) -> float:
    """Sustainable flow of one link in vehicles/second.

    Each street fills one platoon per period, and only half of each period
    is that street's passing window, hence the 1/2 factor.
    """
    return 0.5 * valid_share * lanes * saturation_vps


def choose_rhythm_length(
    candidates: list[float],
    demand: dict[tuple[int, int], float],
    net: GridNetwork,
    gamma: float = 0.5,
    saturation_vps: float = 2.0,
    valid_share_map=None,
    path_provider=None,
    buffer_veh: int = 2,
) -> float:
    """Shortest rhythm whose relaxed routing polytope still fits the demand.

    For every candidate period (ascending) a feasibility LP assigns the
    hourly OD rates to paths subject to per-link caps gamma * C where C is
    the link's sustainable flow at that period.  The first feasible
    candidate wins; if none fits, the longest period is returned as the
    stated fallback.

    ``valid_share_map`` maps period -> valid-zone proportion (defaults to
    the platoon-capacity rule with headway 1/saturation).  ``path_provider``
    maps (net, origin, dest) -> list of link-id paths; the default routes
    every OD over its single deterministic shortest path.
    """
    if not candidates:
        raise ValueError("no candidate rhythm lengths")
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    pairs = [(od, rate) for od, rate in sorted(demand.items()) if rate > 0]
    ordered = sorted(candidates)
    if not pairs:
        return ordered[0]

    if path_provider is None:
        cache: dict[int, ShortestPathSet] = {}

        def path_provider(net_, origin, dest):
            if origin not in cache:
                cache[origin] = ShortestPathSet(net_, origin)
            try:
                return [cache[origin].extract(dest)]
            except ValueError:
                return []

    od_paths = []
    for (origin, dest), rate in pairs:
        paths = path_provider(net, origin, dest)
        if not paths:
            return max(ordered)  # unreachable demand can never be feasible
        od_paths.append(paths)

    columns = sum(len(p) for p in od_paths)
    link_rows: dict[int, list[tuple[int, float]]] = {}
    col = 0
    demand_rows = []
    for paths, ((origin, dest), rate) in zip(od_paths, pairs):
        cols_here = []
        for path in paths:
            for link_id in path:
                link_rows.setdefault(link_id, []).append((col, 1.0))
            cols_here.append(col)
            col += 1
        demand_rows.append((cols_here, rate))

    for T in ordered:
        if valid_share_map is None:
            headway = 1.0 / saturation_vps
            raw, valid = platoon_capacity(T, headway, buffer_veh)
            share = valid / raw if raw else 0.0
        elif callable(valid_share_map):
            share = valid_share_map(T)
        else:
            share = valid_share_map[T]
        rows, senses, rhs = [], [], []
        for link_id, touched in sorted(link_rows.items()):
            row = np.zeros(columns)
            for c, coef in touched:
                row[c] = coef
            cap_vps = gamma * link_flow_capacity_vps(
                T, net.lanes, saturation_vps, share
            )
            rows.append(row)
            senses.append(LE)
            rhs.append(cap_vps * 3600.0)
        for cols_here, rate in demand_rows:
            row = np.zeros(columns)
            row[cols_here] = 1.0
            rows.append(row)
            senses.append(EQ)
            rhs.append(rate)
        lp = LinearProgram(
            c=np.zeros(columns),
            A=np.array(rows),
            senses=senses,
            b=np.array(rhs),
            lower=np.zeros(columns),
            upper=np.full(columns, math.inf),
        )
        if solve(lp).status == OPTIMAL:
            return T
    return max(ordered)
