"""One-way grid street networks.

A network consists of ``m`` horizontal and ``n`` vertical one-way streets
(both counts even) crossing each other on a rectangular lattice.  Street
directions alternate: the bottom horizontal street runs rightward, the
leftmost vertical street runs downward.  With even ``m`` and ``n`` the four
border streets then form a counterclockwise loop, which is what makes every
origin reach every destination.

Each street carries one entrance at its upstream end and one exit at its
downstream end.  Optional junctions (minor access points) are placed evenly
on the segments between consecutive crossroads; vehicles may enter or leave
the network there as well.

Geometry is explicit: every node has coordinates, every link a length, so
detour ratios against Manhattan distance can be computed exactly.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

KIND_CROSSROADS = "crossroads"
KIND_ENTRANCE = "entrance"
KIND_EXIT = "exit"
KIND_JUNCTION = "junction"


@dataclass(frozen=True)
class Node:
    id: int
    kind: str
    x: float
    y: float


@dataclass(frozen=True)
class Link:
    """Directed road piece between two consecutive nodes of one street."""

    id: int
    tail: int
    head: int
    length: float
    street: int
    seq: int  # position of this link along its street, 0 = entrance link


@dataclass(frozen=True)
class Street:
    """One arterial: ordered nodes entrance -> ... -> exit and its links."""

    id: int
    axis: str          # "h" or "v"
    index: int         # 0-based within its axis, bottom-up / left-right
    heading: str       # "E", "W", "N", "S"
    nodes: tuple[int, ...]
    links: tuple[int, ...]


class GridNetwork:
    """Built road network plus constant-time lookup tables.

    Instances are created through :func:`build_grid`; the constructor only
    wires lookup structures and performs no validation of its own.
    """

    def __init__(self, m, n, lanes, nodes, links, streets, params):
        self.m = m
        self.n = n
        self.lanes = lanes
        self.nodes: list[Node] = nodes
        self.links: list[Link] = links
        self.streets: list[Street] = streets
        self._params = params  # construction arguments, kept for serialization
        self._out = {node.id: [] for node in nodes}
        self._in = {node.id: [] for node in nodes}
        for link in links:
            self._out[link.tail].append(link.id)
            self._in[link.head].append(link.id)
        for seq in self._out.values():
            seq.sort()
        for seq in self._in.values():
            seq.sort()
        self._crossroads = {}
        for node in nodes:
            if node.kind == KIND_CROSSROADS:
                i, j = params["_cross_index"][node.id]
                self._crossroads[(i, j)] = node.id

    # -- basic lookups ----------------------------------------------------

    def node(self, node_id: int) -> Node:
        return self.nodes[node_id]

    def link(self, link_id: int) -> Link:
        return self.links[link_id]

    def street(self, street_id: int) -> Street:
        return self.streets[street_id]

    def out_links(self, node_id: int) -> list[int]:
        return self._out[node_id]

    def in_links(self, node_id: int) -> list[int]:
        return self._in[node_id]

    def crossroads_at(self, i: int, j: int) -> int:
        """Node id of the crossroads of horizontal street i and vertical j."""
        return self._crossroads[(i, j)]

    def nodes_of_kind(self, *kinds: str) -> list[int]:
        return [node.id for node in self.nodes if node.kind in kinds]

    def origins(self) -> list[int]:
        """Nodes where vehicles may enter: entrances and junctions."""
        return self.nodes_of_kind(KIND_ENTRANCE, KIND_JUNCTION)

    def destinations(self) -> list[int]:
        """Nodes where vehicles may leave: exits and junctions."""
        return self.nodes_of_kind(KIND_EXIT, KIND_JUNCTION)

    def od_pairs(self, universe: str = "terminals") -> list[tuple[int, int]]:
        """Ordered origin-destination node pairs for a named universe.

        ``terminals``    entrances+junctions to exits+junctions
        ``entrance-exit``  entrances to exits only
        ``crossroads``   ordered pairs of distinct crossroads
        ``boundary``     terminal pairs with at least one endpoint on the
                         perimeter (no junction-to-junction trips)
        """
        if universe == "terminals":
            orig, dest = self.origins(), self.destinations()
        elif universe == "entrance-exit":
            orig = self.nodes_of_kind(KIND_ENTRANCE)
            dest = self.nodes_of_kind(KIND_EXIT)
        elif universe == "crossroads":
            orig = dest = self.nodes_of_kind(KIND_CROSSROADS)
        elif universe == "boundary":
            ent = self.nodes_of_kind(KIND_ENTRANCE)
            ext = self.nodes_of_kind(KIND_EXIT)
            junc = self.nodes_of_kind(KIND_JUNCTION)
            pairs = [(o, d) for o in ent for d in ext + junc]
            pairs += [(o, d) for o in junc for d in ext]
            return pairs
        else:
            raise ValueError(f"unknown OD universe: {universe!r}")
        return [(o, d) for o in orig for d in dest if o != d]

    def adjacency(self) -> sparse.csr_matrix:
        """Sparse node-node matrix of link lengths (for csgraph routines)."""
        size = len(self.nodes)
        rows = [link.tail for link in self.links]
        cols = [link.head for link in self.links]
        vals = [link.length for link in self.links]
        return sparse.csr_matrix((vals, (rows, cols)), shape=(size, size))

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        p = self._params
        return {
            "schema": "gridrhythm-network/1",
            "m": self.m,
            "n": self.n,
            "lanes": self.lanes,
            "h_spacings": list(p["h_spacings"]),
            "v_spacings": list(p["v_spacings"]),
            "entrance_span": p["entrance_span"],
            "exit_span": p["exit_span"],
            "junctions_per_segment": p["junctions_per_segment"],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @staticmethod
    def from_dict(data: dict) -> "GridNetwork":
        if data.get("schema") != "gridrhythm-network/1":
            raise ValueError(f"unsupported network schema: {data.get('schema')!r}")
        return build_grid(
            data["m"],
            data["n"],
            lanes=data["lanes"],
            h_spacings=data["h_spacings"],
            v_spacings=data["v_spacings"],
            entrance_span=data["entrance_span"],
            exit_span=data["exit_span"],
            junctions_per_segment=data["junctions_per_segment"],
        )

    @staticmethod
    def from_json(text: str) -> "GridNetwork":
        return GridNetwork.from_dict(json.loads(text))


def build_grid(
    m: int,
    n: int,
    block_length: float = 150.0,
    *,
    lanes: int = 2,
    junctions_per_segment: int = 0,
    h_spacings=None,
    v_spacings=None,
    entrance_span: float | None = None,
    exit_span: float | None = None,
) -> GridNetwork:
    """Construct an m-by-n one-way grid.

    Parameters
    ----------
    m, n : int
        Number of horizontal / vertical streets.  Both must be even and at
        least 2, otherwise the border streets cannot close into a loop and
        global accessibility breaks down.
    block_length : float
        Uniform spacing between parallel streets, used when explicit
        spacings are not given.
    junctions_per_segment : int
        Junction nodes placed evenly inside every segment between two
        consecutive crossroads (none on entrance or exit spans).
    h_spacings : sequence of float, optional
        Distances between consecutive vertical streets (length n-1); these
        are the block lengths traversed by horizontal streets.
    v_spacings : sequence of float, optional
        Distances between consecutive horizontal streets (length m-1).
    entrance_span, exit_span : float, optional
        Length of the approach from an entrance to its first crossroads and
        from the last crossroads to the exit.  Defaults to the adjacent
        block length of the street.
    """
    if m < 2 or n < 2 or m % 2 or n % 2:
        raise ValueError(f"grid dimensions must be even and >= 2, got {m}x{n}")
    if lanes < 1:
        raise ValueError("lanes must be >= 1")
    if junctions_per_segment < 0:
        raise ValueError("junctions_per_segment must be >= 0")
    if block_length <= 0:
        raise ValueError("block_length must be positive")

    h_spacings = list(h_spacings) if h_spacings is not None else [block_length] * (n - 1)
    v_spacings = list(v_spacings) if v_spacings is not None else [block_length] * (m - 1)
    if len(h_spacings) != n - 1:
        raise ValueError(f"h_spacings must have length n-1={n - 1}")
    if len(v_spacings) != m - 1:
        raise ValueError(f"v_spacings must have length m-1={m - 1}")
    if any(s <= 0 for s in h_spacings) or any(s <= 0 for s in v_spacings):
        raise ValueError("street spacings must be positive")
    if entrance_span is not None and entrance_span <= 0:
        raise ValueError("entrance_span must be positive")
    if exit_span is not None and exit_span <= 0:
        raise ValueError("exit_span must be positive")

    xs = [0.0]
    for s in h_spacings:
        xs.append(xs[-1] + s)
    ys = [0.0]
    for s in v_spacings:
        ys.append(ys[-1] + s)

    nodes: list[Node] = []
    links: list[Link] = []
    streets: list[Street] = []
    cross_index: dict[int, tuple[int, int]] = {}

    def add_node(kind, x, y):
        node = Node(len(nodes), kind, x, y)
        nodes.append(node)
        return node.id

    cross = {}
    for i in range(m):
        for j in range(n):
            node_id = add_node(KIND_CROSSROADS, xs[j], ys[i])
            cross[(i, j)] = node_id
            cross_index[node_id] = (i, j)

    def add_street(axis, index, heading, waypoints, spans):
        """waypoints: crossroads ids in travel order; spans: gap lengths."""
        street_id = len(streets)
        e_span = entrance_span if entrance_span is not None else spans[0]
        x_span = exit_span if exit_span is not None else spans[-1]
        dx, dy = {"E": (1, 0), "W": (-1, 0), "N": (0, 1), "S": (0, -1)}[heading]
        first = nodes[waypoints[0]]
        last = nodes[waypoints[-1]]
        entrance = add_node(KIND_ENTRANCE, first.x - dx * e_span, first.y - dy * e_span)
        exit_ = add_node(KIND_EXIT, last.x + dx * x_span, last.y + dy * x_span)

        seq_nodes = [entrance]
        seq_lens = []
        seq_nodes.append(waypoints[0])
        seq_lens.append(e_span)
        for k in range(len(waypoints) - 1):
            span = spans[k]
            a, b = nodes[waypoints[k]], nodes[waypoints[k + 1]]
            for jj in range(1, junctions_per_segment + 1):
                f = jj / (junctions_per_segment + 1)
                seq_nodes.append(add_node(KIND_JUNCTION, a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f))
                seq_lens.append(span / (junctions_per_segment + 1))
            seq_nodes.append(waypoints[k + 1])
            seq_lens.append(span / (junctions_per_segment + 1))
        seq_nodes.append(exit_)
        seq_lens.append(x_span)

        street_links = []
        for k in range(len(seq_nodes) - 1):
            link = Link(len(links), seq_nodes[k], seq_nodes[k + 1], seq_lens[k], street_id, k)
            links.append(link)
            street_links.append(link.id)
        streets.append(Street(street_id, axis, index, heading, tuple(seq_nodes), tuple(street_links)))

    # horizontal streets: bottom (index 0) runs E, alternating upward
    for i in range(m):
        heading = "E" if i % 2 == 0 else "W"
        cols = range(n) if heading == "E" else range(n - 1, -1, -1)
        waypoints = [cross[(i, j)] for j in cols]
        spans = [h_spacings[min(j1, j2)] for j1, j2 in zip(cols, list(cols)[1:])]
        add_street("h", i, heading, waypoints, spans)

    # vertical streets: leftmost (index 0) runs S, alternating rightward
    for j in range(n):
        heading = "S" if j % 2 == 0 else "N"
        rows = range(m - 1, -1, -1) if heading == "S" else range(m)
        waypoints = [cross[(i, j)] for i in rows]
        spans = [v_spacings[min(i1, i2)] for i1, i2 in zip(rows, list(rows)[1:])]
        add_street("v", j, heading, waypoints, spans)

    params = {
        "h_spacings": h_spacings,
        "v_spacings": v_spacings,
        "entrance_span": entrance_span,
        "exit_span": exit_span,
        "junctions_per_segment": junctions_per_segment,
        "_cross_index": cross_index,
    }
    return GridNetwork(m, n, lanes, nodes, links, streets, params)


# -- accessibility ---------------------------------------------------------


def check_global_accessibility(net: GridNetwork) -> bool:
    """True iff every origin (entrance/junction) reaches every destination.

    The interior of a valid grid is one strongly connected component;
    entrances feed into it and exits hang off it.  Checking the component
    structure is equivalent to checking all origin-destination pairs but
    runs in linear time.
    """
    count, labels = csgraph.connected_components(net.adjacency(), connection="strong")
    interior = net.nodes_of_kind(KIND_CROSSROADS, KIND_JUNCTION)
    core_labels = {labels[v] for v in interior}
    if len(core_labels) != 1:
        return False
    core = core_labels.pop()
    for node_id in net.nodes_of_kind(KIND_ENTRANCE):
        if not any(labels[net.link(l).head] == core for l in net.out_links(node_id)):
            return False
    for node_id in net.nodes_of_kind(KIND_EXIT):
        if not any(labels[net.link(l).tail] == core for l in net.in_links(node_id)):
            return False
    return True


# -- shortest paths --------------------------------------------------------


def manhattan(net: GridNetwork, a: int, b: int) -> float:
    na, nb = net.node(a), net.node(b)
    return abs(na.x - nb.x) + abs(na.y - nb.y)


def shortest_distances(net: GridNetwork, sources: list[int]) -> np.ndarray:
    """Matrix of shortest driving distances from each source to all nodes."""
    return csgraph.dijkstra(net.adjacency(), indices=sources)


class ShortestPathSet:
    """All minimum-distance paths out of one origin.

    Dijkstra once from the origin, then the subgraph of links lying on a
    shortest path forms a DAG.  Path counts over that DAG give exact uniform
    sampling among the minimum-distance paths of any destination, and a
    deterministic variant always follows the smallest link id.
    """

    def __init__(self, net: GridNetwork, origin: int):
        self.net = net
        self.origin = origin
        size = len(net.nodes)
        dist = [math.inf] * size
        dist[origin] = 0.0
        heap = [(0.0, origin)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u] + 1e-12:
                continue
            for link_id in net.out_links(u):
                link = net.link(link_id)
                nd = d + link.length
                if nd < dist[link.head] - 1e-9:
                    dist[link.head] = nd
                    heapq.heappush(heap, (nd, link.head))
        self.dist = dist
        # incoming DAG links per node, sorted for deterministic extraction
        self.dag_in: list[list[int]] = [[] for _ in range(size)]
        for link in net.links:
            if math.isfinite(dist[link.tail]) and abs(dist[link.tail] + link.length - dist[link.head]) <= 1e-9:
                self.dag_in[link.head].append(link.id)
        for seq in self.dag_in:
            seq.sort()
        # number of shortest origin->node paths (float: counts can be large)
        order = sorted((d, v) for v, d in enumerate(dist) if math.isfinite(d))
        self.count = [0.0] * size
        self.count[origin] = 1.0
        for _, v in order:
            for link_id in self.dag_in[v]:
                self.count[v] += self.count[self.net.link(link_id).tail]

    def distance(self, dest: int) -> float:
        return self.dist[dest]

    def path_count(self, dest: int) -> float:
        return self.count[dest]

    def extract(self, dest: int, rng: np.random.Generator | None = None) -> list[int]:
        """One shortest path origin->dest as a list of link ids.

        With ``rng`` the path is drawn uniformly among all shortest paths;
        without it the result is the lexicographically smallest link-id
        sequence, which makes repeated extractions reproducible.
        """
        if not math.isfinite(self.dist[dest]) or self.count[dest] == 0:
            raise ValueError(f"node {dest} unreachable from {self.origin}")
        # nodes that still reach dest inside the shortest-path DAG, plus the
        # number of DAG paths from each of them to dest
        paths_to = {dest: 1.0}
        frontier = [dest]
        while frontier:
            nxt = []
            for v in frontier:
                for link_id in self.dag_in[v]:
                    u = self.net.link(link_id).tail
                    if u not in paths_to:
                        paths_to[u] = 0.0
                        nxt.append(u)
            frontier = nxt
        for v in sorted(paths_to, key=lambda v: -self.dist[v]):
            if v == dest:
                continue
            total = 0.0
            for link_id in self.net.out_links(v):
                link = self.net.link(link_id)
                if link.head in paths_to and abs(
                    self.dist[v] + link.length - self.dist[link.head]
                ) <= 1e-9:
                    total += paths_to[link.head]
            paths_to[v] = total
        path = []
        v = self.origin
        while v != dest:
            candidates = [
                link_id
                for link_id in self.net.out_links(v)
                if self.net.link(link_id).head in paths_to
                and abs(self.dist[v] + self.net.link(link_id).length
                        - self.dist[self.net.link(link_id).head]) <= 1e-9
                and paths_to[self.net.link(link_id).head] > 0
            ]
            if rng is None or len(candidates) == 1:
                pick = min(candidates)
            else:
                weights = np.array([paths_to[self.net.link(l).head] for l in candidates])
                pick = candidates[rng.choice(len(candidates), p=weights / weights.sum())]
            path.append(pick)
            v = self.net.link(pick).head
        return path


def path_length(net: GridNetwork, path: list[int]) -> float:
    return sum(net.link(l).length for l in path)


def path_nodes(net: GridNetwork, path: list[int]) -> list[int]:
    if not path:
        return []
    seq = [net.link(path[0]).tail]
    for link_id in path:
        link = net.link(link_id)
        if link.tail != seq[-1]:
            raise ValueError("links do not chain into a path")
        seq.append(link.head)
    return seq


# -- detour ratios ----------------------------------------------------------


def average_detour_ratio(
    net: GridNetwork,
    od_set=None,
    universe: str = "crossroads",
    method: str = "mean-ratio",
) -> float:
    """Average detour of one-way driving relative to Manhattan distance.

    ``od_set`` is an explicit iterable of (origin, destination) node-id
    pairs; when omitted the named ``universe`` generates it (see
    :meth:`GridNetwork.od_pairs`).

    ``method='mean-ratio'`` averages the per-pair ratio over the OD
    universe; ``method='flow-weighted'`` divides total driving distance by
    total Manhattan distance (identical weights on every pair, so long
    trips weigh more).
    """
    pairs = list(od_set) if od_set is not None else net.od_pairs(universe)
    if not pairs:
        raise ValueError("empty OD set")
    sources = sorted({o for o, _ in pairs})
    index = {o: k for k, o in enumerate(sources)}
    dist = shortest_distances(net, sources)
    xs = np.array([node.x for node in net.nodes])
    ys = np.array([node.y for node in net.nodes])

    actual = np.array([dist[index[o], d] for o, d in pairs])
    base = np.array([abs(xs[o] - xs[d]) + abs(ys[o] - ys[d]) for o, d in pairs])
    if np.any(~np.isfinite(actual)):
        raise ValueError("OD universe contains unreachable pairs")
    if np.any(base <= 0):
        raise ValueError("OD universe contains pairs with zero Manhattan distance")
    if method == "mean-ratio":
        return float(np.mean(actual / base))
    if method == "flow-weighted":
        return float(actual.sum() / base.sum())
    raise ValueError(f"unknown method: {method!r}")


def detour_ratio_table(
    sizes=(2, 4, 6, 8, 10, 12, 14, 16),
    block_length: float = 150.0,
    universe: str = "crossroads",
    method: str = "mean-ratio",
    junctions_per_segment: int = 0,
    entrance_span: float | None = None,
    exit_span: float | None = None,
) -> np.ndarray:
    """Detour-ratio matrix over grid sizes (rows: m, columns: n)."""
    table = np.zeros((len(sizes), len(sizes)))
    for a, m in enumerate(sizes):
        for b, n in enumerate(sizes):
            net = build_grid(
                m, n, block_length,
                junctions_per_segment=junctions_per_segment,
                entrance_span=entrance_span, exit_span=exit_span,
            )
            table[a, b] = average_detour_ratio(net, universe=universe, method=method)
    return table
