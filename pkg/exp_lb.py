"""Per-tied-OD unavoidable-loop lower bound vs the forced core."""
from exp_zero4 import build_entries, BitLoopState, census_with_loops
from collections import defaultdict
import sys
import time

m = int(sys.argv[1]) if len(sys.argv) > 1 else 6
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
print(f"{m}x{m}: forced={len(forced)} tied={len(tied)}"
      f" forced_loops={len(floops)} ({time.time()-t0:.1f}s)")

lb = 0
bad = 0
hist = defaultdict(int)
for i in tied:
    best = min(st.score(i, mk) for mk in entries[i][1])
    lb += best
    hist[best] += 1
    if best:
        bad += 1
print(f"unary lower bound = {lb} over {bad} ODs with no clean candidate"
      f" ({time.time()-t0:.1f}s)")
print("min-score histogram:", dict(sorted(hist.items())))
