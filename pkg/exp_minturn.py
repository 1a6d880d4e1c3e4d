"""Zero-search with candidates restricted to minimum-turn shortest paths."""
from exp_census2 import build, trace_variant
from exp_variants import all_shortest_link_paths
from exp_zero4 import BitLoopState, census_with_loops
from gridrhythm.network import ShortestPathSet
from collections import defaultdict
import random
import sys
import time


def turn_count(net, path):
    return sum(1 for i in range(1, len(path))
               if net.links[path[i]].street != net.links[path[i - 1]].street)


def build_entries_minturn(m, rep="seg", dF=1, dL=1):
    net, ctx, seg_of = build(m)
    dests = {}
    for o, d in net.od_pairs("terminals"):
        dests.setdefault(o, []).append(d)
    link_ids = {}
    entries = []
    for o in sorted(dests):
        sps = ShortestPathSet(net, o)
        for d in dests[o]:
            cands = sorted(all_shortest_link_paths(sps, d))
            tc = [turn_count(net, p) for p in cands]
            mt = min(tc)
            cands = [p for p, t in zip(cands, tc) if t == mt]
            masks = []
            for p in cands:
                tp = ctx.timed_path(tuple(p), 0)
                mask = 0
                for te in trace_variant(net, seg_of, p, tp, rep, dF, dL):
                    bit = link_ids.setdefault(te, len(link_ids))
                    mask |= 1 << bit
                masks.append(mask)
            entries.append(((o, d), masks))
    return entries, link_ids


def main():
    m = int(sys.argv[1]) if len(sys.argv) > 1 else 4
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 0
    iters = int(sys.argv[3]) if len(sys.argv) > 3 else 20000
    t0 = time.time()
    entries, link_ids = build_entries_minturn(m)
    n = len(entries)
    tied = [i for i in range(n) if len(entries[i][1]) > 1]
    forced = [i for i in range(n) if len(entries[i][1]) == 1]
    print(f"{m}x{m} minturn: {n} ODs, {len(forced)} forced,"
          f" {len(tied)} tied ({time.time()-t0:.1f}s)")
    st = BitLoopState(n)
    fmasks = [entries[i][1][0] if len(entries[i][1]) == 1 else 0
              for i in range(n)]
    lp = defaultdict(set)
    for i in forced:
        mm = fmasks[i]
        while mm:
            low = mm & -mm
            lp[low.bit_length() - 1].add(i)
            mm ^= low
    floops, _ = census_with_loops(fmasks, lp)
    st.bulk_load(fmasks, forced, floops)
    print(f"forced loops={len(floops)} ({time.time()-t0:.1f}s)")

    lb = 0
    bad = 0
    for i in tied:
        best = min(st.score(i, mk) for mk in entries[i][1])
        lb += best
        bad += best > 0
    print(f"unary LB={lb} bad_ods={bad} ({time.time()-t0:.1f}s)")

    choice = {}
    for i in sorted(tied, key=lambda i: (len(entries[i][1]), i)):
        best = None
        for j, mk in enumerate(entries[i][1]):
            c = st.score(i, mk)
            if best is None or c < best[0]:
                best = (c, j)
            if c == 0:
                break
        choice[i] = best[1]
        st.place(i, entries[i][1][best[1]])
    print(f"greedy: loops={len(st.loops)} ({time.time()-t0:.1f}s)")

    for sweep in range(30):
        before = len(st.loops)
        looped = sorted({p for key in st.loops for p in key if p in choice})
        for i in looped:
            st.remove(i)
            best = None
            for j, mk in enumerate(entries[i][1]):
                c = st.score(i, mk)
                if best is None or c < best[0]:
                    best = (c, j)
                if c == 0:
                    break
            choice[i] = best[1]
            st.place(i, entries[i][1][best[1]])
        if len(st.loops) >= before:
            break
    print(f"sweeps done: loops={len(st.loops)} ({time.time()-t0:.1f}s)")

    rng = random.Random(seed)
    best_loops = len(st.loops)
    it = 0
    while st.loops and it < iters:
        it += 1
        key = min(st.loops) if rng.random() < 0.2 else \
            rng.choice(tuple(st.loops))
        members = [p for p in key if p in choice]
        if not members:
            continue
        i = rng.choice(members)
        st.remove(i)
        scored = [(st.score(i, mk), j)
                  for j, mk in enumerate(entries[i][1])]
        cbest = min(c for c, _ in scored)
        if cbest > 0 and rng.random() < 0.08:
            jpick = rng.randrange(len(entries[i][1]))
        else:
            jpick = rng.choice([j for c, j in scored if c == cbest])
        choice[i] = jpick
        st.place(i, entries[i][1][jpick])
        best_loops = min(best_loops, len(st.loops))
    print(f"final: loops={len(st.loops)} best={best_loops} it={it}"
          f" ({time.time()-t0:.1f}s)")


if __name__ == "__main__":
    main()
