"""Zero-loop assignment search under partial-trace-drop conventions."""
from gridrhythm.network import build_grid, ShortestPathSet
from gridrhythm.rhythm import RhythmConfig
from gridrhythm.routing import RoutingContext
from exp_variants import all_shortest_link_paths
from exp_zero import LoopState
from exp_census2 import build, trace_variant
import random
import sys
import time


def build_entries(m, rep, dF, dL):
    net, ctx, seg_of = build(m)
    dests = {}
    for o, d in net.od_pairs("terminals"):
        dests.setdefault(o, []).append(d)
    entries = []
    for o in sorted(dests):
        sps = ShortestPathSet(net, o)
        for d in dests[o]:
            cands = sorted(all_shortest_link_paths(sps, d))
            traces = []
            for p in cands:
                tp = ctx.timed_path(tuple(p), 0)
                traces.append(frozenset(
                    trace_variant(net, seg_of, p, tp, rep, dF, dL)))
            entries.append(((o, d), traces))
    return entries


def search(m, rep, dF, dL, seed, budget_s, report=True):
    t0 = time.time()
    entries = build_entries(m, rep, dF, dL)
    n = len(entries)
    tied = [i for i in range(n) if len(entries[i][1]) > 1]
    forced = [i for i in range(n) if len(entries[i][1]) == 1]
    st = LoopState(n)
    for i in forced:
        st.place(i, set(entries[i][1][0]))
    if report:
        print(f"{m}x{m} rep={rep} dF={dF} dL={dL}: forced={len(forced)}"
              f" tied={len(tied)}, forced loops={len(st.loops)}"
              f" ({time.time()-t0:.1f}s)")

    clean = {}
    bad = []
    for i in tied:
        ok = [j for j, tr in enumerate(entries[i][1])
              if st.score(i, set(tr), bound=1) == 0]
        if not ok:
            bad.append(i)
        clean[i] = ok or list(range(len(entries[i][1])))
    if bad:
        print(f"  INFEASIBLE at unary level: {len(bad)} ODs,"
              f" e.g. {[entries[i][0] for i in bad[:5]]}")
        return None
    if report:
        print(f"  unary clean ({time.time()-t0:.1f}s)")

    rng = random.Random(seed)
    choice = {}
    for i in sorted(tied, key=lambda i: (len(clean[i]), i)):
        best = None
        for j in clean[i]:
            c = st.score(i, set(entries[i][1][j]))
            if best is None or c < best[0]:
                best = (c, j)
            if c == 0:
                break
        choice[i] = best[1]
        st.place(i, set(entries[i][1][best[1]]))
    if report:
        print(f"  greedy: {len(st.loops)} loops ({time.time()-t0:.1f}s)")

    best_total = len(st.loops)
    it = 0
    while st.loops and time.time() - t0 < budget_s:
        it += 1
        key = rng.choice(list(st.loops))
        members = [p for p in key if p in choice]
        if not members:
            print(f"  loop {sorted(key)} is all-forced, impossible")
            return None
        i = rng.choice(members)
        st.remove(i)
        scored = [(st.score(i, set(entries[i][1][j])), j) for j in clean[i]]
        cbest = min(c for c, _ in scored)
        if cbest > 0 and rng.random() < 0.1:
            jpick = rng.choice(clean[i])
        else:
            jpick = rng.choice([j for c, j in scored if c == cbest])
        choice[i] = jpick
        st.place(i, set(entries[i][1][jpick]))
        if len(st.loops) < best_total:
            best_total = len(st.loops)
            if report and (best_total < 10 or it % 200 == 0):
                print(f"  it={it}: loops={best_total} ({time.time()-t0:.1f}s)")
    done = len(st.loops)
    print(f"  final: loops={done} (best {best_total}), it={it},"
          f" {time.time()-t0:.1f}s")
    if done == 0:
        nonlex = sorted((entries[i][0], choice[i])
                        for i in tied if choice[i] != 0)
        print(f"  ZERO FOUND; non-lex choices {len(nonlex)}/{len(tied)}")
        return {entries[i][0]: choice[i] for i in tied}
    return None


if __name__ == "__main__":
    m = int(sys.argv[1]) if len(sys.argv) > 1 else 4
    rep = sys.argv[2] if len(sys.argv) > 2 else "seg"
    dF = int(sys.argv[3]) if len(sys.argv) > 3 else 1
    dL = int(sys.argv[4]) if len(sys.argv) > 4 else 1
    seed = int(sys.argv[5]) if len(sys.argv) > 5 else 0
    budget = float(sys.argv[6]) if len(sys.argv) > 6 else 180.0
    search(m, rep, dF, dL, seed, budget)
