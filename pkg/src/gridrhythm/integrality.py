"""When is the routed relaxation integral.

Tools for probing the incidence structure behind the interval router:
a locally-separable check and a total-unimodularity check for small 0/1
matrices, the three-path loop census over a network's shortest paths,
and a randomized stress study measuring how often the first relaxation
of the single-path router lands on an integer vertex.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .network import GridNetwork, ShortestPathSet
from .rhythm import RhythmConfig
from .routing import RoutingContext, integer_bound_trials, most_fractional_index

# hard ceiling on subset enumeration before the checkers refuse
_SUBSET_BUDGET = 5_000_000
_DET_CHUNK = 20_000


class AnalysisError(Exception):
    """Raised on malformed matrices or refused enumerations."""


def _as_binary(matrix) -> np.ndarray:
    arr = np.asarray(matrix)
    if arr.ndim != 2 or arr.size == 0:
        raise AnalysisError("expected a non-empty 2-D matrix")
    if not np.isin(arr, (0, 1)).all():
        raise AnalysisError("entries must be 0 or 1")
    return arr.astype(np.int64)


# -- locally separable ---------------------------------------------------------


@dataclass(frozen=True)
class SeparabilityReport:
    """Verdict plus, when violated, the offending square selection."""

    separable: bool
    paths: tuple[int, ...] | None = None
    links: tuple[int, ...] | None = None

    def __bool__(self) -> bool:
        return self.separable


def is_locally_separable(matrix, k_max: int = 8) -> SeparabilityReport:
    """Check the separation property of a 0/1 link-by-path matrix.

    For every selection of k paths (columns) and k temporal links (rows),
    k up to ``k_max``, one of three escapes must hold: two selected
    columns agree on the selected rows, two selected rows agree on the
    selected columns, or some k0 of the columns avoid k-k0 of the rows
    entirely.  Returns the first selection with no escape as a witness.

    Selections of size one carry no separation content (a single path on
    a single link it traverses has trivially no escape), so enumeration
    starts at k = 2; pairs always separate, but they stay in the scan as
    cheap sanity coverage.
    """
    mat = _as_binary(matrix)
    m, n = mat.shape
    limit = min(k_max, m, n)
    total = sum(math.comb(m, k) * math.comb(n, k) for k in range(2, limit + 1))
    if total > _SUBSET_BUDGET:
        raise AnalysisError(
            f"{total} square selections exceed the enumeration budget "
            f"{_SUBSET_BUDGET}; reduce the matrix or k_max"
        )
    cols = mat.T.copy()  # row-major per path
    for k in range(2, limit + 1):
        full = (1 << k) - 1
        for rowset in itertools.combinations(range(m), k):
            # per-path bitmask over the selected rows
            sel = np.array(rowset)
            bits = 1 << np.arange(k, dtype=np.int64)
            masks_all = [int(v) for v in (cols[:, sel] * bits).sum(axis=1)]
            for colset in itertools.combinations(range(n), k):
                masks = [masks_all[j] for j in colset]
                if len(set(masks)) < k:
                    continue  # two paths identical on these links
                rows_over = [
                    sum(((masks[s] >> t) & 1) << s for s in range(k))
                    for t in range(k)
                ]
                if len(set(rows_over)) < k:
                    continue  # two links identical on these paths
                # escape (iii): some column subset S touches at most |S| rows
                union = [0] * (full + 1)
                found = False
                for s_bits in range(1, full):
                    low = s_bits & -s_bits
                    union[s_bits] = union[s_bits ^ low] | masks[low.bit_length() - 1]
                    if union[s_bits].bit_count() <= s_bits.bit_count():
                        found = True
                        break
                if not found:
                    return SeparabilityReport(False, tuple(colset), tuple(rowset))
    return SeparabilityReport(True)


# -- total unimodularity -------------------------------------------------------


def integer_determinant(matrix) -> int:
    """Exact determinant of a square integer matrix via subset expansion."""
    mat = np.asarray(matrix, dtype=np.int64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise AnalysisError("expected a square matrix")
    n = mat.shape[0]
    if n == 0:
        return 1
    if n > 16:
        raise AnalysisError("subset expansion refused beyond 16x16")
    rows = [[int(v) for v in row] for row in mat]
    dp = [0] * (1 << n)
    dp[0] = 1
    for subset in range(1, 1 << n):
        r = subset.bit_count() - 1  # expand along the last included row
        sign = 1 if r % 2 == 0 else -1
        acc = 0
        rest = subset
        row = rows[r]
        while rest:
            low = rest & -rest
            j = low.bit_length() - 1
            v = row[j]
            if v:
                acc += sign * v * dp[subset ^ low]
            sign = -sign
            rest ^= low
        dp[subset] = acc
    return dp[-1]


def is_totally_unimodular(matrix, size_cap: int = 8) -> bool:
    """Every square submatrix up to ``size_cap`` has determinant -1, 0 or 1.

    0/1 submatrices of size one or two are always unimodular, so the scan
    starts at size three.  Determinants are screened with a batched float
    factorization whose error at these sizes is far below the integer
    grid; any screened violation is confirmed with exact integer
    arithmetic before the matrix is rejected.
    """
    mat = _as_binary(matrix)
    m, n = mat.shape
    limit = min(size_cap, m, n)
    total = sum(math.comb(m, s) * math.comb(n, s) for s in range(3, limit + 1))
    if total > _SUBSET_BUDGET:
        raise AnalysisError(
            f"{total} square submatrices exceed the enumeration budget "
            f"{_SUBSET_BUDGET}; reduce the matrix or size_cap"
        )
    matf = mat.astype(float)
    for s in range(3, limit + 1):
        col_sets = np.array(list(itertools.combinations(range(n), s)))
        for rowset in itertools.combinations(range(m), s):
            band = matf[list(rowset)]
            for start in range(0, len(col_sets), _DET_CHUNK):
                chunk = col_sets[start : start + _DET_CHUNK]
                batch = np.moveaxis(band[:, chunk], 0, 1)
                dets = np.linalg.det(batch)
                nearest = np.rint(dets)
                unclear = np.abs(dets - nearest) > 1e-6
                suspects = np.nonzero(unclear | (np.abs(nearest) > 1.5))[0]
                for idx in suspects:
                    exact = integer_determinant(mat[np.ix_(rowset, chunk[idx])])
                    if abs(exact) > 1:
                        return False
    return True


# -- interconnection loops -----------------------------------------------------


def _intern_traces(traces):
    """Map temporal links to dense ids; return per-path sorted id lists."""
    ids: dict = {}
    path_links = []
    for trace in traces:
        seen = set()
        for te in trace:
            seen.add(ids.setdefault(te, len(ids)))
        path_links.append(sorted(seen))
    return ids, path_links


def count_3path_loops(traces) -> tuple[int, int]:
    """Count distinct 3-path loops in a set of temporal-link traces.

    A loop is an unordered triple of paths meeting pairwise at three
    distinct temporal links, where no member traverses all three links.
    The scan works from co-traversed link pairs: for each pair, closing
    third links are those co-traversed with both ends, and the paths
    realizing the three pairings (minus any traversing the whole triple)
    form loops.  Returns (loop count, co-traversed pair count).
    """
    ids, path_links = _intern_traces(traces)
    link_paths = [set() for _ in range(len(ids))]
    pair_paths: dict[tuple[int, int], set[int]] = {}
    for p, links in enumerate(path_links):
        for t in links:
            link_paths[t].add(p)
        for t1, t2 in itertools.combinations(links, 2):
            pair_paths.setdefault((t1, t2), set()).add(p)
    adj: dict[int, set[int]] = {}
    for t1, t2 in pair_paths:
        adj.setdefault(t1, set()).add(t2)
        adj.setdefault(t2, set()).add(t1)
    loops: set[frozenset[int]] = set()
    for (t1, t2), first in pair_paths.items():
        closing = adj[t1] & adj[t2]
        for t3 in closing:
            if t3 <= t2:
                continue  # each link triple visited once, t1 < t2 < t3
            through_all = first & link_paths[t3]
            side_a = first - through_all
            if not side_a:
                continue
            side_b = pair_paths[(t2, t3)] - through_all
            if not side_b:
                continue
            side_c = pair_paths[(t1, t3)] - through_all
            if not side_c:
                continue
            # the three sides are pairwise disjoint: overlap would mean a
            # path through all three links, removed above
            for ra in side_a:
                for rb in side_b:
                    for rc in side_c:
                        loops.add(frozenset((ra, rb, rc)))
    return len(loops), len(pair_paths)


def has_interconnection_loop(traces, max_order: int | None = None) -> bool:
    """Conservative loop detector over temporal-link traces.

    Returns True when some k-by-k selection (3 <= k <= ``max_order``,
    default every feasible order) of paths and distinct temporal links
    leaves every selected link co-traversed by at least two selected
    paths.  Absence of such a selection forces a near-empty row into
    every square submatrix, which makes the incidence matrix locally
    separable and the relaxation integral; presence only signals that a
    loop-shaped selection exists, to err on the safe side.
    """
    _, path_links = _intern_traces(traces)
    npaths = len(path_links)
    nlinks = max((links[-1] + 1 for links in path_links if links), default=0)
    cap = min(max_order or npaths, npaths, nlinks)
    if npaths > 12:
        raise AnalysisError("loop detection refused beyond 12 paths")
    sets = [set(links) for links in path_links]
    for k in range(3, cap + 1):
        for combo in itertools.combinations(range(npaths), k):
            counts: dict[int, int] = {}
            for p in combo:
                for t in sets[p]:
                    counts[t] = counts.get(t, 0) + 1
            heavy = sum(1 for c in counts.values() if c >= 2)
            if heavy >= k:
                return True
    return False


@dataclass(frozen=True)
class LoopReport:
    """Three-path loop census over a network's shortest paths."""

    grid_m: int
    grid_n: int
    path_count: int
    temporal_pair_count: int
    triple_count: int
    loop_count: int
    probability: float

    def to_row(self) -> dict:
        return {
            "grid": f"{self.grid_m}x{self.grid_n}",
            "paths": self.path_count,
            "triples": self.triple_count,
            "loops": self.loop_count,
            "probability": self.probability,
        }


def shortest_path_traces(net: GridNetwork, cfg: RhythmConfig):
    """One deterministic shortest path per terminal OD, with timings.

    ODs run from every entrance and junction to every exit and junction
    (origin != destination), all released in the first interval.  Ties
    among equal-length paths break lexicographically, so reruns are
    identical; the census below depends on this choice.
    """
    ctx = RoutingContext(net, cfg)
    dests_by_origin: dict[int, list[int]] = {}
    for origin, dest in net.od_pairs("terminals"):
        dests_by_origin.setdefault(origin, []).append(dest)
    traces = []
    for origin in sorted(dests_by_origin):
        sps = ShortestPathSet(net, origin)
        for dest in dests_by_origin[origin]:
            path = sps.extract(dest)
            traces.append(ctx.timed_path(tuple(path), 0).temporal_links)
    return traces


def enumerate_3path_loops(net: GridNetwork, cfg: RhythmConfig) -> LoopReport:
    """Apply the pairwise reduction census to a network's shortest paths."""
    traces = shortest_path_traces(net, cfg)
    loop_count, pair_count = count_3path_loops(traces)
    path_count = len(traces)
    triple_count = math.comb(path_count, 3)
    return LoopReport(
        grid_m=net.m,
        grid_n=net.n,
        path_count=path_count,
        temporal_pair_count=pair_count,
        triple_count=triple_count,
        loop_count=loop_count,
        probability=loop_count / triple_count if triple_count else 0.0,
    )


# -- randomized integrality study ------------------------------------------------


@dataclass(frozen=True)
class ArrayRoundingResult:
    """Outcome of the admission relaxation on explicit arrays."""

    first_objective: float
    final_objective: float
    integral_first: bool
    rounding_steps: int
    x: np.ndarray


def solve_spr_arrays(
    incidence,
    caps: np.ndarray,
    demands: np.ndarray,
    penalties: np.ndarray,
    tol: float = 1e-6,
) -> ArrayRoundingResult:
    """Single-path admission on explicit arrays, sized beyond the router.

    Minimizes the penalty of unserved demand subject to per-row capacity,
    then applies the same most-fractional bounding rule as the interval
    router.  The relaxations run on a sparse dual-simplex backend because
    the study's instances carry thousands of columns, far past the dense
    solver's design point; the rounding rule itself is shared code.
    """
    mat = sparse.csr_matrix(incidence)
    nrows, ncols = mat.shape
    demands = np.asarray(demands, dtype=float)
    penalties = np.asarray(penalties, dtype=float)
    caps = np.asarray(caps, dtype=float)
    base_cost = float(penalties @ demands)
    if base_cost <= tol:
        # nothing to gain from admissions: zero flow is optimal and integer
        return ArrayRoundingResult(0.0, 0.0, True, 0, np.zeros(ncols))
    # rows whose capacity exceeds all demand that can reach them never bind
    load = mat @ demands
    keep = caps < load
    mat_k = mat[keep]
    caps_k = caps[keep]
    cur_lo = np.zeros(ncols)
    cur_hi = demands.copy()

    def relax():
        if mat_k.shape[0] == 0:
            x = cur_hi.copy()
            return 0, x, float(-penalties @ x)
        res = linprog(
            -penalties,
            A_ub=mat_k,
            b_ub=caps_k,
            bounds=np.column_stack([cur_lo, cur_hi]),
            method="highs-ds",
        )
        return res.status, res.x, res.fun

    status, x, fun = relax()
    if status != 0:
        raise AnalysisError(f"first relaxation failed with status {status}")
    first_obj = base_cost + fun
    steps = 0
    budget = 1000 + 10 * ncols
    while True:
        j = most_fractional_index(x, tol)
        if j is None:
            break
        if steps >= budget:
            raise AnalysisError(f"rounding exceeded {budget} steps")
        steps += 1
        accepted = None
        for bound in integer_bound_trials(x[j], tol):
            if bound < cur_lo[j] - tol or bound > cur_hi[j] + tol:
                continue
            save = (cur_lo[j], cur_hi[j])
            if bound <= x[j]:
                cur_hi[j] = bound
            else:
                cur_lo[j] = bound
            status, trial_x, _ = relax()
            if status == 0:
                accepted = trial_x
                break
            cur_lo[j], cur_hi[j] = save
        if accepted is None:
            raise AnalysisError(f"both integer bounds infeasible for column {j}")
        x = accepted
    x_int = np.rint(x)
    if np.any(np.abs(x - x_int) > 1e-5):
        raise AnalysisError("rounding ended on a fractional point")
    if np.any((mat @ x_int) > caps + 1e-9):
        raise AnalysisError("rounded point violates a capacity row")
    final_obj = float(penalties @ (demands - x_int))
    return ArrayRoundingResult(first_obj, final_obj, steps == 0, steps, x_int)


@dataclass(frozen=True)
class IntegralityStudy:
    """Aggregate of the randomized admission trials."""

    trials: int
    seed: int
    integral_trials: int
    max_gap: float
    fractional_trials: tuple[int, ...]

    @property
    def integral_rate(self) -> float:
        return self.integral_trials / self.trials if self.trials else 1.0


def _draw_trial(rng: np.random.Generator, nrows: int, ncols: int):
    """One random capacity/demand/penalty sample.

    Two global scale factors multiply per-row and per-column uniforms,
    each floored and bumped by a fair coin; penalties are uniform on
    [0, 50] and zeroed with a probability that is itself drawn per trial.
    """
    scale_cap = rng.uniform()
    scale_dem = rng.uniform()
    p_zero_penalty = rng.uniform()
    caps = np.floor(scale_cap * rng.uniform(0.0, 16.0, nrows))
    caps += rng.integers(0, 2, nrows)
    demands = np.floor(scale_dem * rng.uniform(0.0, 32.0, ncols))
    demands += rng.integers(0, 2, ncols)
    penalties = rng.uniform(0.0, 50.0, ncols)
    penalties[rng.uniform(size=ncols) < p_zero_penalty] = 0.0
    return caps, demands, penalties


def monte_carlo_integrality(
    net: GridNetwork,
    trials: int = 10_000,
    seed: int = 0,
    cfg: RhythmConfig | None = None,
    gap_tol: float = 1e-9,
) -> IntegralityStudy:
    """How often the first admission relaxation is already integral.

    Builds the one-shortest-path-per-OD incidence once, then repeatedly
    randomizes capacities, demands and waiting penalties and solves the
    admission problem, recording whether the first relaxation came back
    integral and the relative objective regression of the rounded
    answer.  Each trial owns an RNG stream spawned from the master seed,
    so results are independent of trial order and reproducible.
    """
    cfg = cfg or RhythmConfig(rhythm_s=10.0, speed_mps=15.0)
    traces = shortest_path_traces(net, cfg)
    binding = sorted({te for trace in traces for te in trace})
    row_of = {te: i for i, te in enumerate(binding)}
    rows, cols = [], []
    for col, trace in enumerate(traces):
        for te in trace:
            rows.append(row_of[te])
            cols.append(col)
    mat = sparse.csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(len(binding), len(traces))
    )
    integral = 0
    max_gap = 0.0
    fractional: list[int] = []
    for t in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(t,)))
        caps, demands, penalties = _draw_trial(rng, mat.shape[0], mat.shape[1])
        result = solve_spr_arrays(mat, caps, demands, penalties)
        if result.integral_first:
            integral += 1
        else:
            fractional.append(t)
        if result.final_objective > gap_tol:
            gap = (result.final_objective - result.first_objective) / (
                result.final_objective
            )
            max_gap = max(max_gap, gap)
        elif result.first_objective > gap_tol:
            raise AnalysisError(
                "integer objective vanished below the relaxation bound"
            )
    return IntegralityStudy(
        trials=trials,
        seed=seed,
        integral_trials=integral,
        max_gap=max_gap,
        fractional_trials=tuple(fractional),
    )
