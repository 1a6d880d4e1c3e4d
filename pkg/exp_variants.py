"""Grid-search census model variants for the zero-loop 4x4 target."""
from gridrhythm.network import build_grid, ShortestPathSet
from gridrhythm.rhythm import RhythmConfig
from gridrhythm.routing import RoutingContext
from collections import defaultdict
from itertools import combinations
import math
import sys

T = 10.0
V = 15.0


def all_shortest_link_paths(sps, dest):
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
    return [i for i in range(1, len(path))
            if net.link(path[i]).street != net.link(path[i - 1]).street]


def pick(net, paths, policy):
    if policy == "lex":
        return min(paths)
    best = None
    for p in paths:
        tp = turn_positions(net, p)
        if policy == "minturn_early":
            key = (len(tp), tuple(tp), p)
        elif policy == "late":
            key = (tuple(-x for x in tp), p)
        else:
            raise ValueError(policy)
        if best is None or key < best[0]:
            best = (key, p)
    return best[1]


def street_shift(net, ctx, street_id):
    s = ctx._shift[street_id]
    return s


def tail_dist(ctx, link_id):
    return ctx._tail_dist[link_id]


def ff_trace(net, ctx, path, start_mode):
    """Free-flow accumulation stamping per the arrival-time protocol."""
    first = net.link(path[0])
    shift = street_shift(net, ctx, first.street)
    if start_mode == "phase":
        t = (shift + tail_dist(ctx, path[0]) / V) % T
    elif start_mode == "zero":
        t = 0.0
    elif start_mode == "shift":
        t = shift % T
    else:
        raise ValueError(start_mode)
    out = []
    for lid in path:
        out.append((lid, int(math.floor(t / T + 1e-9))))
        t += net.link(lid).length / V
    return tuple(out)


def build_seg_map(net):
    """half-link id -> (street, segment ordinal). Stub links get their own."""
    seg = {}
    for street in net.streets:
        ordinal = 0
        pos = 0.0
        for lid in street.links:
            link = net.link(lid)
            seg[lid] = (street.id, ordinal)
            pos += link.length
            # segment boundary every 150 m of street length
            if abs(pos / 150.0 - round(pos / 150.0)) < 1e-9:
                ordinal += 1
    return seg


def transform(net, trace, od, seg_map, use_seg, drop_first, drop_last):
    o_kind = net.node(od[0]).kind
    d_kind = net.node(od[1]).kind
    items = list(trace)
    if drop_first and o_kind == "junction" and items:
        items = items[1:]
    if drop_last and d_kind == "junction" and items:
        items = items[:-1]
    if use_seg:
        out = []
        for lid, e in items:
            sid = seg_map[lid]
            if out and out[-1][0] == sid:
                continue
            out.append((sid, e))
        return tuple(out)
    return tuple(items)


def census(traces, strict):
    link_paths = defaultdict(set)
    for i, tr in enumerate(traces):
        for t in tr:
            link_paths[t].add(i)
    pair_links = defaultdict(set)
    for t, ps in link_paths.items():
        if len(ps) < 2:
            continue
        for a, b in combinations(sorted(ps), 2):
            pair_links[(a, b)].add(t)
    adj = defaultdict(set)
    for (a, b) in pair_links:
        adj[a].add(b)
        adj[b].add(a)
    loops = set()
    sets = [set(tr) for tr in traces]
    for (a, b) in list(pair_links):
        for c in adj[a] & adj[b]:
            if c < b:
                continue
            key = (a, b, c) if b < c else (a, c, b) if a < c else (c, a, b)
            if key in loops:
                continue
            t_ab = pair_links[(a, b)]
            t_ac = pair_links[(min(a, c), max(a, c))]
            t_bc = pair_links[(min(b, c), max(b, c))]
            hit = False
            for t1 in t_ab:
                if hit:
                    break
                for t2 in t_ac:
                    if t2 == t1:
                        continue
                    if strict and t2[1] == t1[1]:
                        continue
                    if hit:
                        break
                    for t3 in t_bc:
                        if t3 in (t1, t2):
                            continue
                        if strict and (t3[1] == t1[1] or t3[1] == t2[1]):
                            continue
                        trio = {t1, t2, t3}
                        if trio <= sets[a] or trio <= sets[b] or trio <= sets[c]:
                            continue
                        hit = True
                        break
            if hit:
                loops.add(key)
    return len(loops)


def main():
    m = int(sys.argv[1]) if len(sys.argv) > 1 else 4
    cfg = RhythmConfig(rhythm_s=T, speed_mps=V)
    net = build_grid(m, m, junctions_per_segment=1)
    ctx = RoutingContext(net, cfg)
    seg_map = build_seg_map(net)
    dests = {}
    for o, d in net.od_pairs("terminals"):
        dests.setdefault(o, []).append(d)
    ods = []
    for o in sorted(dests):
        for d in dests[o]:
            ods.append((o, d))

    for policy in ("lex", "minturn_early", "late"):
        paths = []
        for o in sorted(dests):
            sps = ShortestPathSet(net, o)
            for d in dests[o]:
                paths.append(pick(net, all_shortest_link_paths(sps, d), policy))
        timings = {
            "snap": [ctx.timed_path(tuple(p), 0).temporal_links for p in paths],
            "ff-phase": [ff_trace(net, ctx, p, "phase") for p in paths],
            "ff-zero": [ff_trace(net, ctx, p, "zero") for p in paths],
            "ff-shift": [ff_trace(net, ctx, p, "shift") for p in paths],
        }
        for tname, base in timings.items():
            for use_seg in (False, True):
                for dropF in (False, True):
                    for dropL in (False, True):
                        traces = [
                            transform(net, tr, od, seg_map, use_seg, dropF, dropL)
                            for tr, od in zip(base, ods)
                        ]
                        for strict in (False, True):
                            n = census(traces, strict)
                            tag = f"{policy:13s} {tname:8s} seg={int(use_seg)} dF={int(dropF)} dL={int(dropL)} strict={int(strict)}"
                            print(f"{tag}  loops={n}")
                            sys.stdout.flush()


if __name__ == "__main__":
    main()
