"""Bitmask loop state + bulk census init; repair from lex assignment."""
from exp_census2 import build, trace_variant
from exp_variants import all_shortest_link_paths
from gridrhythm.network import ShortestPathSet
from collections import defaultdict
import itertools
import random
import sys
import time


def census_with_loops(masks, link_paths_by_id):
    """Pair-reduction census returning the set of looping path triples.

    masks: list of int bitmasks; link ids are bit positions.
    """
    pair_paths = {}
    path_links = []
    for p, mask in enumerate(masks):
        links = []
        mm = mask
        while mm:
            low = mm & -mm
            links.append(low.bit_length() - 1)
            mm ^= low
        path_links.append(links)
        for t1, t2 in itertools.combinations(links, 2):
            pair_paths.setdefault((t1, t2), set()).add(p)
    adj = defaultdict(set)
    for t1, t2 in pair_paths:
        adj[t1].add(t2)
        adj[t2].add(t1)
    loops = set()
    for (t1, t2), first in pair_paths.items():
        closing = adj[t1] & adj[t2]
        for t3 in closing:
            if t3 <= t2:
                continue
            lp3 = link_paths_by_id[t3]
            through = first & lp3
            side_a = first - through
            if not side_a:
                continue
            side_b = pair_paths[(t2, t3)] - through
            if not side_b:
                continue
            side_c = pair_paths[(t1, t3)] - through
            if not side_c:
                continue
            for ra in side_a:
                for rb in side_b:
                    for rc in side_c:
                        loops.add(frozenset((ra, rb, rc)))
    return loops, len(pair_paths)


class BitLoopState:
    """Incremental 3-path-loop bookkeeping over bitmask traces."""

    def __init__(self, n):
        self.mask = [0] * n
        self.link_paths = defaultdict(set)
        self.loops = set()
        self.loops_of = defaultdict(set)

    def bulk_load(self, masks, placed, loops):
        for i in placed:
            self.mask[i] = masks[i]
            mm = masks[i]
            while mm:
                low = mm & -mm
                self.link_paths[low.bit_length() - 1].add(i)
                mm ^= low
        self.loops = set(loops)
        for key in loops:
            for p in key:
                self.loops_of[p].add(key)

    def partners(self, i, mask):
        out = defaultdict(int)
        mm = mask
        while mm:
            low = mm & -mm
            t = low.bit_length() - 1
            for x in self.link_paths.get(t, ()):
                if x != i:
                    out[x] |= low
            mm ^= low
        return out

    def scan(self, i, mask, collect, bound):
        by = self.partners(i, mask)
        if len(by) < 2:
            return 0
        xs = list(by)
        count = 0
        for a in range(len(xs)):
            x = xs[a]
            bx = self.mask[x]
            t_ix = by[x]
            for b in range(a + 1, len(xs)):
                y = xs[b]
                byy = self.mask[y]
                r = bx & byy & ~mask
                if not r:
                    continue
                if (t_ix & ~byy) and (by[y] & ~bx):
                    count += 1
                    if collect is not None:
                        collect.append((x, y))
                    if bound is not None and count >= bound:
                        return count
        return count

    def score(self, i, mask, bound=None):
        return self.scan(i, mask, None, bound)

    def place(self, i, mask):
        hits = []
        self.scan(i, mask, hits, None)
        for x, y in hits:
            key = frozenset((i, x, y))
            self.loops.add(key)
            for p in key:
                self.loops_of[p].add(key)
        self.mask[i] = mask
        mm = mask
        while mm:
            low = mm & -mm
            self.link_paths[low.bit_length() - 1].add(i)
            mm ^= low

    def remove(self, i):
        mm = self.mask[i]
        while mm:
            low = mm & -mm
            self.link_paths[low.bit_length() - 1].discard(i)
            mm ^= low
        for key in list(self.loops_of[i]):
            self.loops.discard(key)
            for p in key:
                if p != i:
                    self.loops_of[p].discard(key)
        self.loops_of[i].clear()
        self.mask[i] = 0


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
    return entries, link_ids


def main():
    m = int(sys.argv[1]) if len(sys.argv) > 1 else 4
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 0
    max_iters = int(sys.argv[3]) if len(sys.argv) > 3 else 4000
    init = sys.argv[4] if len(sys.argv) > 4 else "lex"
    t0 = time.time()
    entries, link_ids = build_entries(m)
    n = len(entries)
    tied = [i for i in range(n) if len(entries[i][1]) > 1]
    print(f"{m}x{m}: {n} ODs, {len(tied)} tied, {len(link_ids)} temporal"
          f" links ({time.time()-t0:.1f}s)")

    choice = {i: 0 for i in range(n)}
    st = BitLoopState(n)
    if init == "lex":
        masks = [entries[i][1][0] for i in range(n)]
        link_paths_by_id = defaultdict(set)
        for p, mask in enumerate(masks):
            mm = mask
            while mm:
                low = mm & -mm
                link_paths_by_id[low.bit_length() - 1].add(p)
                mm ^= low
        loops, npairs = census_with_loops(masks, link_paths_by_id)
        print(f"lex census: loops={len(loops)} pairs={npairs}"
              f" ({time.time()-t0:.1f}s)")
        st.bulk_load(masks, range(n), loops)
    else:
        forced = [i for i in range(n) if len(entries[i][1]) == 1]
        fmasks = [entries[i][1][0] if len(entries[i][1]) == 1 else 0
                  for i in range(n)]
        lp = defaultdict(set)
        for i in forced:
            mm = fmasks[i]
            while mm:
                low = mm & -mm
                lp[low.bit_length() - 1].add(i)
                mm ^= low
        floops, _ = census_with_loops(
            [fmasks[i] for i in range(n)], lp)
        st.bulk_load(fmasks, forced, floops)
        print(f"forced loops={len(st.loops)} ({time.time()-t0:.1f}s)")
        stuck = 0
        for i in sorted(tied, key=lambda i: (len(entries[i][1]), i)):
            best_c = None
            for j, mk in enumerate(entries[i][1]):
                c = st.score(i, mk)
                if best_c is None or c < best_c[0]:
                    best_c = (c, j)
                if c == 0:
                    break
            if best_c[0] > 0:
                stuck += 1
            choice[i] = best_c[1]
            st.place(i, entries[i][1][best_c[1]])
        print(f"greedy: loops={len(st.loops)} stuck={stuck}"
              f" ({time.time()-t0:.1f}s)")
    rng = random.Random(seed)
    best = len(st.loops)
    it = 0
    while st.loops and it < max_iters:
        it += 1
        key = min(st.loops) if rng.random() < 0.25 else \
            rng.choice(tuple(st.loops))
        members = [p for p in key if len(entries[p][1]) > 1]
        if not members:
            print(f"  all-forced loop {sorted(key)}: stuck")
            break
        i = rng.choice(members)
        st.remove(i)
        scored = [(st.score(i, mk), j)
                  for j, mk in enumerate(entries[i][1])]
        cbest = min(c for c, _ in scored)
        if cbest > 0 and rng.random() < 0.1:
            jpick = rng.randrange(len(entries[i][1]))
        else:
            jpick = rng.choice([j for c, j in scored if c == cbest])
        choice[i] = jpick
        st.place(i, entries[i][1][jpick])
        if len(st.loops) < best:
            best = len(st.loops)
            if best % 256 == 0 or best < 8:
                print(f"  it={it}: loops={best} ({time.time()-t0:.1f}s)")
    print(f"final: loops={len(st.loops)} it={it} ({time.time()-t0:.1f}s)")
    if not st.loops:
        nonlex = sum(1 for i in tied if choice[i] != 0)
        print(f"ZERO FOUND; non-lex {nonlex}/{len(tied)}")


if __name__ == "__main__":
    main()
