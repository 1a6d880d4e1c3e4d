"""Zero-loop search with set-intersection incremental loop detection."""
from gridrhythm.network import build_grid, ShortestPathSet
from gridrhythm.rhythm import RhythmConfig
from gridrhythm.routing import RoutingContext
from exp_variants import all_shortest_link_paths
from exp_census2 import build, trace_variant
from collections import defaultdict
import random
import sys
import time


class FastLoopState:
    def __init__(self, n):
        self.sets = [None] * n
        self.link_paths = defaultdict(set)
        self.adj = defaultdict(set)
        self.loops = set()
        self.loops_of = defaultdict(set)

    @staticmethod
    def _closes(tset, t_ix, t_iy, t_xy, sx, sy):
        for t1 in t_ix:
            for t2 in t_iy:
                if t2 == t1:
                    continue
                for t3 in t_xy:
                    if t3 == t1 or t3 == t2:
                        continue
                    if t3 in tset or t2 in sx or t1 in sy:
                        continue
                    return True
        return False

    def _by_path(self, tset, skip):
        by_path = defaultdict(set)
        lp = self.link_paths
        for t in tset:
            for x in lp.get(t, ()):
                if x != skip:
                    by_path[x].add(t)
        return by_path

    def _scan(self, i, tset, collect, bound):
        """Triangles candidate (i, tset) forms with placed paths."""
        by_path = self._by_path(tset, i)
        if len(by_path) < 2:
            return 0
        partners = set(by_path)
        seen = set()
        count = 0
        for x in by_path:
            common = self.adj[x] & partners
            if not common:
                continue
            sx = self.sets[x]
            t_ix = by_path[x]
            for y in common:
                if (y, x) in seen:
                    continue
                seen.add((x, y))
                sy = self.sets[y]
                t_xy = sx & sy
                if not t_xy:
                    continue
                if self._closes(tset, t_ix, by_path[y], t_xy, sx, sy):
                    count += 1
                    if collect is not None:
                        collect.append((x, y))
                    if bound is not None and count >= bound:
                        return count
        return count

    def score(self, i, tset, bound=None):
        return self._scan(i, tset, None, bound)

    def place(self, i, tset):
        hits = []
        self._scan(i, tset, hits, None)
        for x, y in hits:
            key = frozenset((i, x, y))
            self.loops.add(key)
            for p in key:
                self.loops_of[p].add(key)
        for t in tset:
            lp = self.link_paths[t]
            for x in lp:
                self.adj[x].add(i)
            self.adj[i] |= lp
            lp.add(i)
        self.sets[i] = tset

    def remove(self, i):
        for t in self.sets[i]:
            self.link_paths[t].discard(i)
        for x in self.adj[i]:
            self.adj[x].discard(i)
        self.adj[i].clear()
        for key in list(self.loops_of[i]):
            self.loops.discard(key)
            for p in key:
                if p != i:
                    self.loops_of[p].discard(key)
        self.loops_of[i].clear()
        self.sets[i] = None


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


def search(m, rep, dF, dL, seed, budget_s):
    t0 = time.time()
    entries = build_entries(m, rep, dF, dL)
    n = len(entries)
    ncand = sum(len(e[1]) for e in entries)
    tied = [i for i in range(n) if len(entries[i][1]) > 1]
    forced = [i for i in range(n) if len(entries[i][1]) == 1]
    print(f"{m}x{m} rep={rep} dF={dF} dL={dL}: {n} ODs, {ncand} candidates,"
          f" {len(forced)} forced, {len(tied)} tied"
          f" ({time.time()-t0:.1f}s)")
    st = FastLoopState(n)
    for i in forced:
        st.place(i, entries[i][1][0])
    print(f"  forced loops={len(st.loops)} ({time.time()-t0:.1f}s)")

    choice = {}
    stuck = 0
    for i in sorted(tied, key=lambda i: (len(entries[i][1]), i)):
        best = None
        for j, tr in enumerate(entries[i][1]):
            c = st.score(i, tr)
            if best is None or c < best[0]:
                best = (c, j)
            if c == 0:
                break
        if best[0] > 0:
            stuck += 1
        choice[i] = best[1]
        st.place(i, entries[i][1][best[1]])
    print(f"  greedy: loops={len(st.loops)} stuck_ods={stuck}"
          f" ({time.time()-t0:.1f}s)")

    rng = random.Random(seed)
    best_total = len(st.loops)
    it = 0
    while st.loops and time.time() - t0 < budget_s:
        it += 1
        key = rng.choice(sorted(st.loops))
        members = [p for p in key if p in choice]
        if not members:
            print(f"  all-forced loop {sorted(key)}; impossible")
            break
        i = rng.choice(members)
        st.remove(i)
        scored = [(st.score(i, tr), j)
                  for j, tr in enumerate(entries[i][1])]
        cbest = min(c for c, _ in scored)
        if cbest > 0 and rng.random() < 0.1:
            jpick = rng.choice(range(len(entries[i][1])))
        else:
            jpick = rng.choice([j for c, j in scored if c == cbest])
        choice[i] = jpick
        st.place(i, entries[i][1][jpick])
        if len(st.loops) < best_total:
            best_total = len(st.loops)
            print(f"  it={it}: loops={best_total} ({time.time()-t0:.1f}s)")
    print(f"  final: loops={len(st.loops)} it={it} ({time.time()-t0:.1f}s)")
    if not st.loops:
        nonlex = sum(1 for i in tied if choice[i] != 0)
        print(f"  ZERO FOUND; non-lex {nonlex}/{len(tied)}")


if __name__ == "__main__":
    m = int(sys.argv[1]) if len(sys.argv) > 1 else 4
    rep = sys.argv[2] if len(sys.argv) > 2 else "seg"
    dF = int(sys.argv[3]) if len(sys.argv) > 3 else 1
    dL = int(sys.argv[4]) if len(sys.argv) > 4 else 1
    seed = int(sys.argv[5]) if len(sys.argv) > 5 else 0
    budget = float(sys.argv[6]) if len(sys.argv) > 6 else 300.0
    search(m, rep, dF, dL, seed, budget)
