"""Full lex-tie-break census across trace conventions."""
from gridrhythm.network import build_grid, ShortestPathSet
from gridrhythm.rhythm import RhythmConfig
from gridrhythm.routing import RoutingContext
from exp_variants import census
import sys
import time


def build(m):
    cfg = RhythmConfig(rhythm_s=10.0, speed_mps=15.0)
    net = build_grid(m, m, junctions_per_segment=1)
    ctx = RoutingContext(net, cfg)
    seg_of = {}
    for st_id in range(len(net.streets)):
        links = [ln for ln in net.links if ln.street == st_id]
        links.sort(key=lambda ln: ln.seq)
        pos = 0.0
        for ln in links:
            seg_of[ln.id] = (st_id, int(pos // 150.0 + 1e-9))
            pos += ln.length
    return net, ctx, seg_of


def trace_variant(net, seg_of, path, tp, rep, drop_first, drop_last):
    o_junc = net.nodes[net.links[path[0]].tail].kind == "junction"
    d_junc = net.nodes[net.links[path[-1]].head].kind == "junction"
    items = list(zip(path, tp.temporal_links))
    if drop_first and o_junc:
        items = items[1:]
    if drop_last and d_junc:
        items = items[:-1]
    if rep == "half":
        return tuple(tl for _, tl in items)
    out = []
    seen = set()
    for lid, (a, e) in items:
        sid = seg_of[lid]
        if sid not in seen:
            seen.add(sid)
            out.append((sid, e))
    return tuple(out)


def main():
    m = int(sys.argv[1]) if len(sys.argv) > 1 else 4
    net, ctx, seg_of = build(m)
    dests = {}
    for o, d in net.od_pairs("terminals"):
        dests.setdefault(o, []).append(d)
    raw = []
    for o in sorted(dests):
        sps = ShortestPathSet(net, o)
        for d in dests[o]:
            p = sps.extract(d)
            raw.append((tuple(p), ctx.timed_path(tuple(p), 0)))
    for rep in ("half", "seg"):
        for dF in (0, 1):
            for dL in (0, 1):
                t0 = time.time()
                traces = [trace_variant(net, seg_of, p, tp, rep, dF, dL)
                          for p, tp in raw]
                n = census(traces, strict=False)
                print(f"{m}x{m} rep={rep} dropF={dF} dropL={dL}:"
                      f" loops={n} ({time.time()-t0:.1f}s)")


if __name__ == "__main__":
    main()
