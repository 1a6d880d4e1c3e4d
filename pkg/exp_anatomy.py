"""Tabulate loop-trio composition by origin/dest kind on the 4x4."""
from gridrhythm.network import build_grid
from gridrhythm.rhythm import RhythmConfig
from gridrhythm.integrality import shortest_path_traces
from collections import defaultdict, Counter
from itertools import combinations
import sys

m = int(sys.argv[1]) if len(sys.argv) > 1 else 4
T = float(sys.argv[2]) if len(sys.argv) > 2 else 10.0
cfg = RhythmConfig(rhythm_s=T, speed_mps=15.0)
net = build_grid(m, m, junctions_per_segment=1)
traces = shortest_path_traces(net, cfg)
ods = []
dests_by_origin = {}
for o, d in net.od_pairs("terminals"):
    dests_by_origin.setdefault(o, []).append(d)
for o in sorted(dests_by_origin):
    for d in dests_by_origin[o]:
        ods.append((o, d))

link_paths = defaultdict(set)
for i, tr in enumerate(traces):
    for t in tr:
        link_paths[t].add(i)
pair_links = defaultdict(set)
for t, ps in link_paths.items():
    for a, b in combinations(sorted(ps), 2):
        pair_links[(a, b)].add(t)

# adjacency over the interconnection graph
adj = defaultdict(set)
for (a, b) in pair_links:
    adj[a].add(b)
    adj[b].add(a)

loops = set()
for (a, b), t_ab in pair_links.items():
    for c in adj[a] & adj[b]:
        if c <= b:
            pass
        key = tuple(sorted((a, b, c)))
        if key in loops:
            continue
        t_ac = pair_links[tuple(sorted((a, c)))]
        t_bc = pair_links[tuple(sorted((b, c)))]
        sets = [set(traces[a]), set(traces[b]), set(traces[c])]
        hit = False
        for t1 in t_ab:
            if hit:
                break
            for t2 in t_ac:
                if t2 == t1:
                    continue
                if hit:
                    break
                for t3 in t_bc:
                    if t3 in (t1, t2):
                        continue
                    trio = {t1, t2, t3}
                    if any(trio <= s for s in sets):
                        continue
                    hit = True
                    break
        if hit:
            loops.add(key)

comp = Counter()
for key in loops:
    kinds = tuple(sorted(net.node(ods[i][0]).kind for i in key))
    comp[kinds] += 1
print("total loops:", len(loops))
for kinds, n in comp.most_common():
    print(" ", kinds, n)

# street orientation of origins: are coherent-subpopulation loops present?
def phase_class(i):
    o = ods[i][0]
    node = net.node(o)
    # entrance on H street -> release 0 mod 10; V entrance -> 5
    # H junction -> 5; V junction -> 0 (for 150 m blocks, 15 m/s, T=10)
    first = traces[i][0][1] if traces[i] else None
    return (node.kind, net.street(net.link(traces[i][0][0]).street).orientation if traces[i] else None)

comp2 = Counter()
for key in loops:
    cls = tuple(sorted(str(phase_class(i)) for i in key))
    comp2[cls] += 1
print("\nby (kind, street orientation):")
for cls, n in comp2.most_common(12):
    print(" ", cls, n)
