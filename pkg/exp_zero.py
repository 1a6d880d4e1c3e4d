"""Search for a zero-loop assignment of tied-OD shortest paths.

Stages: forced baseline (known loop-free), unary clean filter per tied OD
(no clean candidate => infeasibility proof, loops are monotone under path
addition), greedy seed, then min-conflicts repair over clean candidates.
"""
from gridrhythm.network import build_grid, ShortestPathSet
from gridrhythm.rhythm import RhythmConfig
from gridrhythm.routing import RoutingContext
from exp_variants import all_shortest_link_paths
from collections import defaultdict
import random
import sys
import time


class LoopState:
    def __init__(self, n):
        self.sets = [None] * n
        self.link_paths = defaultdict(set)
        self.pair_shared = {}
        self.partners = defaultdict(set)
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
                    trio = {t1, t2, t3}
                    if trio <= tset or trio <= sx or trio <= sy:
                        continue
                    return True
        return False

    def _meets(self, tset, skip):
        meets = defaultdict(set)
        for t in tset:
            for x in self.link_paths.get(t, ()):
                if x != skip:
                    meets[x].add(t)
        return meets

    def score(self, i, tset, bound=None):
        """Loops that placing set tset as path i would create."""
        meets = self._meets(tset, i)
        if len(meets) < 2:
            return 0
        count = 0
        xs = sorted(meets)
        for ii, x in enumerate(xs):
            sx = self.sets[x]
            for y in xs[ii + 1:]:
                k = (x, y)
                t_xy = self.pair_shared.get(k)
                if not t_xy:
                    continue
                if self._closes(tset, meets[x], meets[y], t_xy, sx,
                                self.sets[y]):
                    count += 1
                    if bound is not None and count >= bound:
                        return count
        return count

    def place(self, i, tset):
        meets = self._meets(tset, i)
        xs = sorted(meets)
        for ii, x in enumerate(xs):
            sx = self.sets[x]
            for y in xs[ii + 1:]:
                t_xy = self.pair_shared.get((x, y))
                if not t_xy:
                    continue
                if self._closes(tset, meets[x], meets[y], t_xy, sx,
                                self.sets[y]):
                    key = frozenset((i, x, y))
                    self.loops.add(key)
                    for p in key:
                        self.loops_of[p].add(key)
        for x, shared in meets.items():
            k = (x, i) if x < i else (i, x)
            self.pair_shared[k] = frozenset(shared)
            self.partners[i].add(x)
            self.partners[x].add(i)
        self.sets[i] = tset
        for t in tset:
            self.link_paths[t].add(i)

    def remove(self, i):
        for t in self.sets[i]:
            self.link_paths[t].discard(i)
        for x in self.partners[i]:
            self.pair_shared.pop((x, i) if x < i else (i, x), None)
            self.partners[x].discard(i)
        self.partners[i].clear()
        for key in list(self.loops_of[i]):
            self.loops.discard(key)
            for p in key:
                if p != i:
                    self.loops_of[p].discard(key)
        self.loops_of[i].clear()
        self.sets[i] = None


def build_entries(m):
    cfg = RhythmConfig(rhythm_s=10.0, speed_mps=15.0)
    net = build_grid(m, m, junctions_per_segment=1)
    ctx = RoutingContext(net, cfg)
    dests = {}
    for o, d in net.od_pairs("terminals"):
        dests.setdefault(o, []).append(d)
    entries = []
    for o in sorted(dests):
        sps = ShortestPathSet(net, o)
        for d in dests[o]:
            cands = all_shortest_link_paths(sps, d)
            traces = [frozenset(ctx.timed_path(tuple(p), 0).temporal_links)
                      for p in sorted(cands)]
            entries.append(((o, d), traces))
    return entries


def main():
    m = int(sys.argv[1]) if len(sys.argv) > 1 else 4
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 0
    budget_s = float(sys.argv[3]) if len(sys.argv) > 3 else 300.0
    t0 = time.time()
    entries = build_entries(m)
    n = len(entries)
    tied = [i for i in range(n) if len(entries[i][1]) > 1]
    forced = [i for i in range(n) if len(entries[i][1]) == 1]
    print(f"{m}x{m}: {n} ODs, {len(forced)} forced, {len(tied)} tied"
          f" ({time.time()-t0:.1f}s build)")

    st = LoopState(n)
    for i in forced:
        st.place(i, set(entries[i][1][0]))
    print(f"forced baseline loops: {len(st.loops)} ({time.time()-t0:.1f}s)")

    # unary filter: candidates loop-free against forced baseline only
    clean = {}
    bad_ods = []
    for i in tied:
        ok = [j for j, tr in enumerate(entries[i][1])
              if st.score(i, set(tr), bound=1) == 0]
        if not ok:
            bad_ods.append(i)
        clean[i] = ok or list(range(len(entries[i][1])))
    if bad_ods:
        print(f"INFEASIBLE: {len(bad_ods)} tied ODs have no candidate clean"
              " against forced paths alone:")
        for i in bad_ods[:10]:
            print(f"  od={entries[i][0]} candidates={len(entries[i][1])}")
        return
    multi = sum(1 for i in tied if len(clean[i]) > 1)
    print(f"unary filter: all tied ODs have a clean candidate"
          f" ({multi} still have >1) ({time.time()-t0:.1f}s)")

    # greedy seed over clean candidates, most constrained first
    rng = random.Random(seed)
    choice = {}
    order = sorted(tied, key=lambda i: (len(clean[i]), i))
    for i in order:
        best = None
        for j in clean[i]:
            c = st.score(i, set(entries[i][1][j]), bound=None)
            if best is None or c < best[0]:
                best = (c, j)
            if c == 0:
                break
        choice[i] = best[1]
        st.place(i, set(entries[i][1][best[1]]))
    print(f"greedy seed: {len(st.loops)} loops ({time.time()-t0:.1f}s)")

    best_total = len(st.loops)
    it = 0
    last_report = time.time()
    while st.loops and time.time() - t0 < budget_s:
        it += 1
        key = next(iter(st.loops)) if rng.random() < 0.5 else \
            rng.choice(list(st.loops))
        members = [p for p in key if p in choice]
        if not members:
            print(f"loop {sorted(key)} has no tied member, cannot repair")
            break
        i = rng.choice(members)
        st.remove(i)
        scored = []
        for j in clean[i]:
            scored.append((st.score(i, set(entries[i][1][j])), j))
        cbest = min(c for c, _ in scored)
        ties = [j for c, j in scored if c == cbest]
        if cbest > 0 and rng.random() < 0.1:
            jpick = rng.choice(clean[i])
        else:
            jpick = rng.choice(ties)
        choice[i] = jpick
        st.place(i, set(entries[i][1][jpick]))
        if len(st.loops) < best_total:
            best_total = len(st.loops)
            if time.time() - last_report > 5 or best_total < 20:
                print(f"  it={it}: loops={best_total}"
                      f" ({time.time()-t0:.1f}s)")
                last_report = time.time()
    print(f"final: loops={len(st.loops)}, best={best_total}, it={it},"
          f" {time.time()-t0:.1f}s")
    if not st.loops:
        print("ZERO-LOOP ASSIGNMENT FOUND")
        nonlex = sorted((entries[i][0], choice[i])
                        for i in tied if choice[i] != 0)
        print(f"non-lex choices: {len(nonlex)} of {len(tied)} tied")
        for od, j in nonlex[:40]:
            print(f"  {od} -> cand {j}")


if __name__ == "__main__":
    main()
