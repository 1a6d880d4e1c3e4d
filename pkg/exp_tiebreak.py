"""Experiment: which canonical shortest-path choice kills 3-path loops."""
from gridrhythm.network import build_grid, ShortestPathSet
from gridrhythm.rhythm import RhythmConfig
from gridrhythm.routing import RoutingContext
from gridrhythm.integrality import count_3path_loops
import math
import sys


def all_shortest_link_paths(sps, dest):
    """Every minimum-distance path origin->dest as link-id tuples."""
    net = sps.net
    out = []
    stack = [(dest, [])]
    while stack:
        node, suffix = stack.pop()
        if node == sps.origin:
            out.append(tuple(suffix))
            continue
        for link_id in sps.dag_in[node]:
            link = net.link(link_id)
            stack.append((link.tail, [link_id] + suffix))
    return out


def turn_positions(net, path):
    pos = []
    for i in range(1, len(path)):
        if net.link(path[i]).street != net.link(path[i - 1]).street:
            pos.append(i)
    return pos


def pick(net, ctx, paths, policy):
    if policy == "lex":
        return min(paths)
    keyed = []
    for p in paths:
        tp = turn_positions(net, p)
        if policy == "early":
            key = (tuple(tp), p)
        elif policy == "late":
            key = (tuple(-x for x in tp), p)
        elif policy == "minturn_early":
            key = (len(tp), tuple(tp), p)
        elif policy == "minturn_late":
            key = (len(tp), tuple(-x for x in tp), p)
        elif policy == "time":
            t = ctx.timed_path(p, 0)
            key = (t.exit_epoch, p)
        else:
            raise ValueError(policy)
        keyed.append((key, p))
    return min(keyed)[1]


def census(m, policy):
    cfg = RhythmConfig(rhythm_s=10.0, speed_mps=15.0)
    net = build_grid(m, m, junctions_per_segment=1)
    ctx = RoutingContext(net, cfg)
    dests = {}
    for o, d in net.od_pairs("terminals"):
        dests.setdefault(o, []).append(d)
    traces = []
    for o in sorted(dests):
        sps = ShortestPathSet(net, o)
        for d in dests[o]:
            paths = all_shortest_link_paths(sps, d)
            p = pick(net, ctx, paths, policy)
            traces.append(ctx.timed_path(tuple(p), 0).temporal_links)
    loops, pairs = count_3path_loops(traces)
    return len(traces), pairs, loops


if __name__ == "__main__":
    policies = sys.argv[1:] or ["lex", "early", "late", "minturn_early", "minturn_late", "time"]
    for policy in policies:
        for m in (2, 4):
            n, pairs, loops = census(m, policy)
            print(f"{policy:15s} {m}x{m}: paths={n} pairs={pairs} loops={loops}")
        sys.stdout.flush()
