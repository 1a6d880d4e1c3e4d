"""Annealed loop minimization: bad-first greedy init, SA with best tracking."""
from exp_census2 import build, trace_variant
from exp_variants import all_shortest_link_paths
from exp_zero4 import BitLoopState, census_with_loops
from gridrhythm.network import ShortestPathSet
from collections import defaultdict
import math
import random
import sys
import time


def build_entries(m, rep="seg", dF=1, dL=1):
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
            masks = []
            for p in cands:
                tp = ctx.timed_path(tuple(p), 0)
                mask = 0
                for te in trace_variant(net, seg_of, p, tp, rep, dF, dL):
                    bit = link_ids.setdefault(te, len(link_ids))
                    mask |= 1 << bit
                masks.append(mask)
            entries.append(((o, d), masks))
    return entries


def main():
    m = int(sys.argv[1]) if len(sys.argv) > 1 else 6
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 0
    iters = int(sys.argv[3]) if len(sys.argv) > 3 else 60000
    t0 = time.time()
    entries = build_entries(m)
    n = len(entries)
    tied = [i for i in range(n) if len(entries[i][1]) > 1]
    forced = [i for i in range(n) if len(entries[i][1]) == 1]
    print(f"{m}x{m}: {n} ODs, {len(forced)} forced, {len(tied)} tied"
          f" ({time.time()-t0:.1f}s)", flush=True)

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
    print(f"forced loops={len(floops)} ({time.time()-t0:.1f}s)", flush=True)

    # unary scores vs the forced core decide placement order: bad ODs first
    base = {i: min(st.score(i, mk) for mk in entries[i][1]) for i in tied}
    order = sorted(tied, key=lambda i: (-base[i], len(entries[i][1]), i))
    choice = {}
    for i in order:
        best = None
        for j, mk in enumerate(entries[i][1]):
            c = st.score(i, mk)
            if best is None or c < best[0]:
                best = (c, j)
            if c == 0:
                break
        choice[i] = best[1]
        st.place(i, entries[i][1][best[1]])
    print(f"greedy(bad-first): loops={len(st.loops)}"
          f" ({time.time()-t0:.1f}s)", flush=True)

    for sweep in range(40):
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
        print(f"sweep {sweep}: {before} -> {len(st.loops)}"
              f" ({time.time()-t0:.1f}s)", flush=True)
        if len(st.loops) >= before:
            break

    rng = random.Random(seed)
    cur = len(st.loops)
    best_count = cur
    best_choice = dict(choice)
    T0, T1 = 3.0, 0.02
    for it in range(1, iters + 1):
        if not st.loops:
            break
        T = T0 * (T1 / T0) ** (it / iters)
        key = rng.choice(tuple(st.loops))
        members = [p for p in key if p in choice]
        if not members:
            continue
        i = rng.choice(members)
        oldj = choice[i]
        removed = len(st.loops_of[i])
        st.remove(i)
        opts = [(st.score(i, mk), j) for j, mk in enumerate(entries[i][1])]
        newc, newj = min(opts)
        if newc - removed > 0 or newj == oldj:
            # no strict improvement via greedy: propose a random alternative
            c, j = opts[rng.randrange(len(opts))]
            delta = c - removed
            if delta <= 0 or rng.random() < math.exp(-delta / T):
                newj = j
            else:
                newj = oldj
        choice[i] = newj
        st.place(i, entries[i][1][newj])
        cur = len(st.loops)
        if cur < best_count:
            best_count = cur
            best_choice = dict(choice)
        if it % 4000 == 0:
            print(f"it={it}: cur={cur} best={best_count} T={T:.3f}"
                  f" ({time.time()-t0:.1f}s)", flush=True)
    print(f"FINAL: cur={cur} best={best_count} ({time.time()-t0:.1f}s)",
          flush=True)


if __name__ == "__main__":
    main()
