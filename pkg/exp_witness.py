"""Dissect the two 4x4 ODs whose every shortest path loops vs forced set."""
from gridrhythm.network import build_grid, ShortestPathSet
from gridrhythm.rhythm import RhythmConfig
from gridrhythm.routing import RoutingContext
from exp_variants import all_shortest_link_paths
from exp_zero import LoopState, build_entries
import time

cfg = RhythmConfig(rhythm_s=10.0, speed_mps=15.0)
net = build_grid(4, 4, junctions_per_segment=1)
ctx = RoutingContext(net, cfg)

def node_desc(nid):
    node = net.nodes[nid]
    return f"node {nid} kind={node.kind} xy=({node.x},{node.y})"

def link_desc(lid):
    ln = net.links[lid]
    return (f"link {lid}: {ln.tail}->{ln.head} street={ln.street}"
            f" seq={ln.seq} len={ln.length}")

entries = build_entries(4)
idx_of = {entries[i][0]: i for i in range(len(entries))}
forced = [i for i in range(len(entries)) if len(entries[i][1]) == 1]

st = LoopState(len(entries))
for i in forced:
    st.place(i, set(entries[i][1][0]))

for od in [(38, 47), (53, 42)]:
    i = idx_of[od]
    o, d = od
    print("=" * 70)
    print(f"OD {od}")
    print(" origin:", node_desc(o))
    print(" dest:  ", node_desc(d))
    sps = ShortestPathSet(net, o)
    cands = sorted(all_shortest_link_paths(sps, d))
    for ci, path in enumerate(cands):
        tp = ctx.timed_path(tuple(path), 0)
        print(f" candidate {ci}: links={list(path)}")
        for lid, ep, tl in zip(path, tp.epochs, tp.temporal_links):
            print(f"   {link_desc(lid)} epoch={ep} tl={tl}")
        tset = set(tp.temporal_links)
        meets = st._meets(tset, i)
        xs = sorted(meets)
        hits = []
        for a_i, x in enumerate(xs):
            sx = st.sets[x]
            for y in xs[a_i + 1:]:
                t_xy = st.pair_shared.get((x, y))
                if not t_xy:
                    continue
                if LoopState._closes(tset, meets[x], meets[y], t_xy, sx,
                                     st.sets[y]):
                    hits.append((x, y))
        print(f"   -> loops with {len(hits)} forced pairs")
        for x, y in hits[:3]:
            print(f"   loop partners: od_x={entries[x][0]} od_y={entries[y][0]}")
            print(f"     cand shares with x: {sorted(meets[x])}")
            print(f"     cand shares with y: {sorted(meets[y])}")
            print(f"     x shares with y:    {sorted(st.pair_shared.get((x,y)))}")
            px = entries[x][1][0]
            py = entries[y][1][0]
            print(f"     x trace: {sorted(px)}")
            print(f"     y trace: {sorted(py)}")
