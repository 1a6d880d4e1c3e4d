"""Min-conflicts repair over tied-OD path choices, seeking zero loops."""
from gridrhythm.network import build_grid, ShortestPathSet
from gridrhythm.rhythm import RhythmConfig
from gridrhythm.routing import RoutingContext
from exp_variants import all_shortest_link_paths
from collections import defaultdict
import random
import sys
import time


class State:
    """Trace multiset with incremental 3-path-loop bookkeeping."""

    def __init__(self, n):
        self.traces = [None] * n
        self.sets = [None] * n
        self.link_paths = defaultdict(set)

    def meets(self, i_exclude, tset):
        by_path = defaultdict(set)
        for t in tset:
            for x in self.link_paths.get(t, ()):
                if x != i_exclude and self.traces[x] is not None:
                    by_path[x].add(t)
        return by_path

    def shared(self, x, y):
        sx, sy = self.sets[x], self.sets[y]
        if sx is None or sy is None:
            return ()
        if len(sx) > len(sy):
            sx, sy = sy, sx
        return [t for t in sx if t in sy]

    def loops_with(self, i, tset):
        by_path = self.meets(i, tset)
        xs = sorted(by_path)
        count = 0
        for ii, x in enumerate(xs):
            sx = self.sets[x]
            for y in xs[ii + 1:]:
                t_xy = self.shared(x, y)
                if not t_xy:
                    continue
                if self._closes(tset, by_path[x], by_path[y], t_xy, sx, self.sets[y]):
                    count += 1
        return count

    @staticmethod
    def _closes(tset, t_ix, t_iy, t_xy, sx, sy):
        for t1 in t_ix:
            for t2 in t_iy:
                if t2 == t1:
                    continue
                for t3 in t_xy:
                    if t3 == t1 or t3 == t2:
                        continue
                    trio = {t1, t2, t3}
                    if trio <= tset or trio <= sx or trio <= sy:
                        continue
                    return True
        return False

    def place(self, i, trace):
        self.traces[i] = trace
        self.sets[i] = set(trace)
        for t in self.sets[i]:
            self.link_paths[t].add(i)

    def remove(self, i):
        for t in self.sets[i]:
            self.link_paths[t].discard(i)
        self.traces[i] = None
        self.sets[i] = None


def main():
    m = int(sys.argv[1]) if len(sys.argv) > 1 else 4
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 0
    budget_s = float(sys.argv[3]) if len(sys.argv) > 3 else 240.0
    cfg = RhythmConfig(rhythm_s=10.0, speed_mps=15.0)
    net = build_grid(m, m, junctions_per_segment=1)
    ctx = RoutingContext(net, cfg)
    dests = {}
    for o, d in net.od_pairs("terminals"):
        dests.setdefault(o, []).append(d)

    entries = []  # (od, [trace candidates])
    for o in sorted(dests):
        sps = ShortestPathSet(net, o)
        for d in dests[o]:
            cands = all_shortest_link_paths(sps, d)
            traces = [ctx.timed_path(tuple(p), 0).temporal_links
                      for p in sorted(cands)]
            entries.append(((o, d), traces))

    n = len(entries)
    state = State(n)
    rng = random.Random(seed)
    t0 = time.time()

    # greedy seed, most constrained first
    order = sorted(range(n), key=lambda i: (len(entries[i][1]), i))
    choice = [0] * n
    for i in order:
        cands = entries[i][1]
        best = None
        for j, tr in enumerate(cands):
            c = state.loops_with(i, set(tr))
            if best is None or c < best[0]:
                best = (c, j)
            if c == 0:
                break
        choice[i] = best[1]
        state.place(i, cands[best[1]])

    def conflicted():
        out = []
        for i in range(n):
            c = state.loops_with(i, state.sets[i])
            if c:
                out.append((i, c))
        return out

    bad = conflicted()
    total = sum(c for _, c in bad)
    print(f"{m}x{m} seed={seed}: after greedy, {len(bad)} conflicted paths,"
          f" loop-incidences {total} ({time.time()-t0:.1f}s)")

    best_bad = len(bad)
    it = 0
    while bad and time.time() - t0 < budget_s:
        it += 1
        i, _ = bad[rng.randrange(len(bad))]
        cands = entries[i][1]
        cur = choice[i]
        state.remove(i)
        scored = []
        for j, tr in enumerate(cands):
            c = state.loops_with(i, set(tr))
            scored.append((c, j))
        scored.sort()
        cbest, jbest = scored[0]
        ties = [j for c, j in scored if c == cbest]
        jpick = rng.choice(ties)
        # sideways moves allowed; occasionally random restart kick
        if cbest > 0 and rng.random() < 0.05:
            jpick = rng.randrange(len(cands))
        choice[i] = jpick
        state.place(i, entries[i][1][jpick])
        if it % 50 == 0:
            bad = conflicted()
            if len(bad) < best_bad:
                best_bad = len(bad)
                print(f"  it={it}: conflicted={len(bad)} ({time.time()-t0:.1f}s)")
        else:
            # cheap refresh: recheck only i and its meets
            bad = conflicted() if cbest == 0 else bad
    bad = conflicted()
    print(f"final: conflicted paths={len(bad)}, iterations={it},"
          f" elapsed {time.time()-t0:.1f}s")
    if not bad:
        print("ZERO-LOOP ASSIGNMENT FOUND")
        sig = [(entries[i][0], choice[i]) for i in range(n)
               if len(entries[i][1]) > 1]
        nonzero = [(od, j) for od, j in sig if j != 0]
        print(f"tied ODs: {sum(1 for e in entries if len(e[1])>1)},"
              f" non-lex choices: {len(nonzero)}")


if __name__ == "__main__":
    main()
