"""Infeasibility matrix: representation x partial-trace conventions.

For each config: forced-baseline loop count, and how many tied ODs have no
candidate clean against the forced baseline (>0 means zero total loops is
impossible for every tie-break under that convention).
"""
from gridrhythm.network import build_grid, ShortestPathSet
from gridrhythm.rhythm import RhythmConfig
from gridrhythm.routing import RoutingContext
from exp_variants import all_shortest_link_paths
from exp_zero import LoopState
import sys
import time

m = int(sys.argv[1]) if len(sys.argv) > 1 else 4
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

# a segment is partial for a path when the path covers only one half of it:
# junction-origin first link, junction-destination last link
def make_trace(path, tp, rep, drop_first, drop_last):
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

dests = {}
for o, d in net.od_pairs("terminals"):
    dests.setdefault(o, []).append(d)
raw = []  # (od, [(path, timed)])
for o in sorted(dests):
    sps = ShortestPathSet(net, o)
    for d in dests[o]:
        cands = sorted(all_shortest_link_paths(sps, d))
        raw.append(((o, d), [(p, ctx.timed_path(tuple(p), 0)) for p in cands]))

for rep in ("half", "seg"):
    for dF in (False, True):
        for dL in (False, True):
            t0 = time.time()
            entries = []
            for od, cands in raw:
                entries.append((od, [frozenset(make_trace(p, tp, rep, dF, dL))
                                     for p, tp in cands]))
            n = len(entries)
            tied = [i for i in range(n) if len(entries[i][1]) > 1]
            forced = [i for i in range(n) if len(entries[i][1]) == 1]
            st = LoopState(n)
            for i in forced:
                st.place(i, set(entries[i][1][0]))
            base = len(st.loops)
            bad = 0
            for i in tied:
                ok = any(st.score(i, set(tr), bound=1) == 0
                         for tr in entries[i][1])
                if not ok:
                    bad += 1
            print(f"rep={rep} dropF={int(dF)} dropL={int(dL)}: "
                  f"forced_loops={base} bad_tied_ods={bad}"
                  f" ({time.time()-t0:.1f}s)")
