"""Greedy completion: add tied ODs one by one, avoiding new loops."""
from gridrhythm.network import build_grid, ShortestPathSet
from gridrhythm.rhythm import RhythmConfig
from gridrhythm.routing import RoutingContext
from exp_variants import all_shortest_link_paths
from collections import defaultdict
import sys
import time


class IncrementalCensus:
    def __init__(self):
        self.traces = []
        self.sets = []
        self.link_paths = defaultdict(set)
        self.pair_links = defaultdict(set)
        self.adj = defaultdict(set)

    def new_loops(self, trace):
        """Count loops a candidate trace would create against current set."""
        tset = set(trace)
        meets = defaultdict(set)
        for t in tset:
            for x in self.link_paths.get(t, ()):
                meets[x].add(t)
        if len(meets) < 2:
            return 0
        count = 0
        xs = sorted(meets)
        for ii, x in enumerate(xs):
            for y in xs[ii + 1:]:
                key = (x, y)
                shared_xy = self.pair_links.get(key)
                if not shared_xy:
                    continue
                if self._closes(tset, meets[x], meets[y], shared_xy, x, y):
                    count += 1
        return count

    def _closes(self, tset, t_ix, t_iy, t_xy, x, y):
        sx, sy = self.sets[x], self.sets[y]
        for t1 in t_ix:
            for t2 in t_iy:
                if t2 == t1:
                    continue
                for t3 in t_xy:
                    if t3 is t1 or t3 == t1 or t3 == t2:
                        continue
                    trio = {t1, t2, t3}
                    if trio <= tset or trio <= sx or trio <= sy:
                        continue
                    return True
        return False

    def add(self, trace):
        i = len(self.traces)
        self.traces.append(trace)
        self.sets.append(set(trace))
        for t in set(trace):
            for x in self.link_paths[t]:
                key = (x, i)
                self.pair_links[key].add(t)
                self.adj[x].add(i)
                self.adj[i].add(x)
            self.link_paths[t].add(i)
        return i


def main():
    m = int(sys.argv[1]) if len(sys.argv) > 1 else 4
    cfg = RhythmConfig(rhythm_s=10.0, speed_mps=15.0)
    net = build_grid(m, m, junctions_per_segment=1)
    ctx = RoutingContext(net, cfg)
    dests = {}
    for o, d in net.od_pairs("terminals"):
        dests.setdefault(o, []).append(d)

    forced = []
    tied = []
    for o in sorted(dests):
        sps = ShortestPathSet(net, o)
        for d in dests[o]:
            cands = all_shortest_link_paths(sps, d)
            if len(cands) == 1:
                forced.append(cands[0])
            else:
                tied.append(((o, d), sorted(cands)))

    print(f"{m}x{m}: {len(forced)} forced, {len(tied)} tied")
    inc = IncrementalCensus()
    total_loops = 0
    t0 = time.time()
    for p in forced:
        tr = ctx.timed_path(tuple(p), 0).temporal_links
        n = inc.new_loops(tr)
        total_loops += n
        inc.add(tr)
    print(f"after forced: loops={total_loops} ({time.time()-t0:.1f}s)")

    # most constrained first
    tied.sort(key=lambda item: (len(item[1]), item[0]))
    stuck = 0
    for (od, cands) in tied:
        best = None
        for p in cands:
            tr = ctx.timed_path(tuple(p), 0).temporal_links
            n = inc.new_loops(tr)
            if best is None or n < best[0]:
                best = (n, tr)
            if n == 0:
                break
        if best[0] > 0:
            stuck += 1
        total_loops += best[0]
        inc.add(best[1])
    print(f"after tied: loops={total_loops}, ODs without zero-option: {stuck}"
          f" ({time.time()-t0:.1f}s)")


if __name__ == "__main__":
    main()
