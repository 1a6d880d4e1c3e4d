"""Greedy + sweep descent + stochastic repair; find the 6x6 floor."""
from exp_zero4 import build_entries, BitLoopState, census_with_loops
from collections import defaultdict
import random
import sys
import time


def run(m, seed, sweeps_cap, repair_iters, report=print):
    t0 = time.time()
    entries, link_ids = build_entries(m)
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
    report(f"{m}x{m}: forced={len(forced)} tied={len(tied)}"
           f" forced_loops={len(floops)} ({time.time()-t0:.1f}s)")

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
    report(f"greedy: loops={len(st.loops)} ({time.time()-t0:.1f}s)")

    # deterministic coordinate-descent sweeps over looped tied ODs
    for sweep in range(sweeps_cap):
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
        report(f"sweep {sweep}: loops={len(st.loops)}"
               f" ({time.time()-t0:.1f}s)")
        if len(st.loops) >= before:
            break

    # stochastic repair with restarts from the best state
    rng = random.Random(seed)
    best_loops = len(st.loops)
    best_choice = dict(choice)
    it = 0
    since_best = 0
    while st.loops and it < repair_iters:
        it += 1
        since_best += 1
        key = min(st.loops) if rng.random() < 0.2 else \
            rng.choice(tuple(st.loops))
        members = [p for p in key if p in choice]
        if not members:
            report("  all-forced loop; skip")
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
        if len(st.loops) < best_loops:
            best_loops = len(st.loops)
            best_choice = dict(choice)
            since_best = 0
            if best_loops % 200 < 2 or best_loops < 1200:
                report(f"  it={it}: loops={best_loops}"
                       f" ({time.time()-t0:.1f}s)")
        elif since_best > 4000:
            # restart from best state
            for i in list(choice):
                if choice[i] != best_choice[i]:
                    st.remove(i)
                    choice[i] = best_choice[i]
                    st.place(i, entries[i][1][choice[i]])
            since_best = 0
            report(f"  it={it}: restart at {len(st.loops)}"
                   f" ({time.time()-t0:.1f}s)")
    report(f"final: best={best_loops} it={it} ({time.time()-t0:.1f}s)")
    return best_loops


if __name__ == "__main__":
    m = int(sys.argv[1]) if len(sys.argv) > 1 else 6
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 0
    sweeps = int(sys.argv[3]) if len(sys.argv) > 3 else 20
    iters = int(sys.argv[4]) if len(sys.argv) > 4 else 40000
    run(m, seed, sweeps, iters)
