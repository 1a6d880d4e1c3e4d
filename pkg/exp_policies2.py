"""Do simple tie-break policies reach zero under the drop conventions?"""
from gridrhythm.network import build_grid, ShortestPathSet
from gridrhythm.rhythm import RhythmConfig
from gridrhythm.routing import RoutingContext
from exp_variants import all_shortest_link_paths, census
from exp_census2 import build, trace_variant
import sys
import time

m = int(sys.argv[1]) if len(sys.argv) > 1 else 4
net, ctx, seg_of = build(m)
dests = {}
for o, d in net.od_pairs("terminals"):
    dests.setdefault(o, []).append(d)


def turn_positions(path):
    out = []
    for i in range(1, len(path)):
        if net.links[path[i]].street != net.links[path[i - 1]].street:
            out.append(i)
    return tuple(out)


def keyfn(policy, path, tp):
    tps = turn_positions(path)
    if policy == "lex":
        return path
    if policy == "early":
        return (tps, path)
    if policy == "late":
        return (tuple(-t for t in tps), path)
    if policy == "minturn_early":
        return (len(tps), tps, path)
    if policy == "minturn_late":
        return (len(tps), tuple(-t for t in tps), path)
    if policy == "time":
        return (tp.exit_epoch, path)
    raise ValueError(policy)


raw = []
for o in sorted(dests):
    sps = ShortestPathSet(net, o)
    for d in dests[o]:
        cands = sorted(all_shortest_link_paths(sps, d))
        raw.append([(tuple(p), ctx.timed_path(tuple(p), 0)) for p in cands])

for policy in ("lex", "early", "late", "minturn_early", "minturn_late",
               "time"):
    t0 = time.time()
    traces = []
    for cands in raw:
        p, tp = min(cands, key=lambda it: keyfn(policy, it[0], it[1]))
        traces.append(trace_variant(net, seg_of, p, tp, "seg", 1, 1))
    n = census(traces, strict=False)
    print(f"{m}x{m} seg dF=1 dL=1 policy={policy}: loops={n}"
          f" ({time.time()-t0:.1f}s)")
