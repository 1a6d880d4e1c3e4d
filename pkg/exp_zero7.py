"""LNS loop minimization: destroy loop-connected clusters, rebuild greedily."""
from exp_zero4 import BitLoopState, census_with_loops
from exp_zero6 import build_entries
from collections import defaultdict
import random
import sys
import time


def greedy_place(st, entries, ids, rng=None):
    order = list(ids)
    if rng is not None:
        rng.shuffle(order)
    else:
        order.sort(key=lambda i: (len(entries[i][1]), i))
    out = {}
    for i in order:
        scored = []
        for j, mk in enumerate(entries[i][1]):
            c = st.score(i, mk)
            scored.append((c, j))
            if c == 0:
                break
        cbest = min(c for c, _ in scored)
        js = [j for c, j in scored if c == cbest]
        j = js[0] if rng is None else rng.choice(js)
        out[i] = j
        st.place(i, entries[i][1][j])
    return out


def main():
    m = int(sys.argv[1]) if len(sys.argv) > 1 else 6
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 0
    iters = int(sys.argv[3]) if len(sys.argv) > 3 else 3000
    t0 = time.time()
    entries = build_entries(m)
    n = len(entries)
    tied = [i for i in range(n) if len(entries[i][1]) > 1]
    forced = [i for i in range(n) if len(entries[i][1]) == 1]
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
    print(f"{m}x{m}: {len(forced)} forced ({len(floops)} loops), "
          f"{len(tied)} tied ({time.time()-t0:.1f}s)", flush=True)

    choice = greedy_place(st, entries, tied)
    print(f"greedy: {len(st.loops)} ({time.time()-t0:.1f}s)", flush=True)

    for sweep in range(40):
        before = len(st.loops)
        for i in sorted({p for k in st.loops for p in k if p in choice}):
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
    print(f"sweeps: {len(st.loops)} ({time.time()-t0:.1f}s)", flush=True)

    rng = random.Random(seed)
    best_count = len(st.loops)
    best_choice = dict(choice)
    since = 0
    for it in range(1, iters + 1):
        if not st.loops:
            break
        k = rng.randint(10, 60)
        seed_key = rng.choice(tuple(st.loops))
        cluster = set(p for p in seed_key if p in choice)
        frontier = list(cluster)
        while frontier and len(cluster) < k:
            p = frontier.pop(rng.randrange(len(frontier)))
            for key in list(st.loops_of[p]):
                for q in key:
                    if q in choice and q not in cluster:
                        cluster.add(q)
                        frontier.append(q)
                        if len(cluster) >= k:
                            break
                if len(cluster) >= k:
                    break
        old = {i: choice[i] for i in cluster}
        cur = len(st.loops)
        for i in cluster:
            st.remove(i)
        trial = greedy_place(st, entries, cluster, rng)
        new = len(st.loops)
        if new <= cur:
            choice.update(trial)
            if new < best_count:
                best_count = new
                best_choice = dict(choice)
                since = 0
        else:
            for i in cluster:
                st.remove(i)
            for i, j in old.items():
                st.place(i, entries[i][1][j])
            since += 1
        if it % 200 == 0:
            print(f"it={it}: cur={len(st.loops)} best={best_count}"
                  f" ({time.time()-t0:.1f}s)", flush=True)
    print(f"FINAL best={best_count} ({time.time()-t0:.1f}s)", flush=True)


if __name__ == "__main__":
    main()
