"""Tree-consistent Dijkstra variants: do any yield a zero-loop 4x4?"""
from gridrhythm.network import build_grid, ShortestPathSet
from gridrhythm.rhythm import RhythmConfig
from gridrhythm.routing import RoutingContext
from exp_variants import all_shortest_link_paths, census, turn_positions
import heapq
import math
import sys


def dijkstra_tree(net, origin, heap_key, relax):
    """Standard single-source Dijkstra; parent[] defines one path per node.

    heap_key: 'node' -> (dist, node) heap; 'fifo' -> (dist, counter).
    relax: 'strict' -> first settled predecessor wins; 'lte' -> last wins.
    """
    size = len(net.nodes)
    dist = [math.inf] * size
    parent_link = [None] * size
    dist[origin] = 0.0
    counter = 0
    heap = [(0.0, 0, origin)]
    seen = [False] * size
    while heap:
        d, _, u = heapq.heappop(heap)
        if seen[u]:
            continue
        seen[u] = True
        for link_id in net.out_links(u):
            link = net.link(link_id)
            nd = d + link.length
            v = link.head
            better = nd < dist[v] - 1e-9
            equal = abs(nd - dist[v]) <= 1e-9
            if better or (relax == "lte" and equal and not seen[v]):
                dist[v] = min(dist[v], nd)
                parent_link[v] = link_id
                counter += 1
                key = v if heap_key == "node" else counter
                heapq.heappush(heap, (nd, key, v))
    return parent_link


def tree_path(net, parent_link, origin, dest):
    path = []
    node = dest
    while node != origin:
        lid = parent_link[node]
        if lid is None:
            raise ValueError("unreachable")
        path.append(lid)
        node = net.link(lid).tail
    path.reverse()
    return tuple(path)


def paths_for(net, policy):
    dests = {}
    for o, d in net.od_pairs("terminals"):
        dests.setdefault(o, []).append(d)
    out = []
    if policy.startswith("fwd"):
        _, heap_key, relax = policy.split("-")
        for o in sorted(dests):
            parent = dijkstra_tree(net, o, heap_key, relax)
            for d in dests[o]:
                out.append(tree_path(net, parent, o, d))
    elif policy == "zigzag":
        for o in sorted(dests):
            sps = ShortestPathSet(net, o)
            for d in dests[o]:
                cands = all_shortest_link_paths(sps, d)
                best = min(
                    (((-len(turn_positions(net, p)), tuple(turn_positions(net, p)), p)), p)
                    for p in cands
                )
                out.append(best[1])
    elif policy.startswith("rev"):
        # per-destination trees on the reversed graph
        _, heap_key, relax = policy.split("-")
        rev = ReversedNet(net)
        by_dest = {}
        for o, d in net.od_pairs("terminals"):
            by_dest.setdefault(d, []).append(o)
        picks = {}
        for d in sorted(by_dest):
            parent = dijkstra_tree(rev, d, heap_key, relax)
            for o in by_dest[d]:
                p = tree_path(rev, parent, d, o)
                picks[(o, d)] = tuple(reversed(p))
        dests2 = {}
        for o, d in net.od_pairs("terminals"):
            dests2.setdefault(o, []).append(d)
        for o in sorted(dests2):
            for d in dests2[o]:
                out.append(picks[(o, d)])
    else:
        raise ValueError(policy)
    return out


class ReversedNet:
    """Adapter presenting the grid with all links reversed."""

    def __init__(self, net):
        self.net = net
        self.nodes = net.nodes
        self._in = {}
        for link in net.links:
            self._in.setdefault(link.head, []).append(link.id)
        for seq in self._in.values():
            seq.sort()

    def out_links(self, u):
        return self._in.get(u, [])

    def link(self, lid):
        return _RevLink(self.net.link(lid))


class _RevLink:
    def __init__(self, link):
        self.id = link.id
        self.tail = link.head
        self.head = link.tail
        self.length = link.length
        self.street = link.street


def main():
    cfg = RhythmConfig(rhythm_s=10.0, speed_mps=15.0)
    m = int(sys.argv[1]) if len(sys.argv) > 1 else 4
    net = build_grid(m, m, junctions_per_segment=1)
    ctx = RoutingContext(net, cfg)
    for policy in ("fwd-node-strict", "fwd-node-lte", "fwd-fifo-strict",
                   "fwd-fifo-lte", "rev-node-strict", "rev-fifo-strict",
                   "zigzag"):
        paths = paths_for(net, policy)
        traces = [ctx.timed_path(p, 0).temporal_links for p in paths]
        n = census(traces, False)
        print(f"{policy:16s} {m}x{m}: loops={n}")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
