"""Bounded-variable linear programming by revised simplex.

Small dense solver tailored to the routing relaxations: every instance has
at most a few thousand columns, demands appear as variable bounds, and the
rounding loop repeatedly tightens one bound and re-solves.  The solver keeps
its basis factorization between calls so those re-solves take a handful of
dual simplex pivots instead of a cold start.

Minimization throughout.  Rows are ``A x <= b`` or ``A x == b``; variables
live in ``[lower, upper]`` where either side may be infinite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

LE = "<="
EQ = "=="

AT_LOWER = 0
AT_UPPER = 1
BASIC = 2
FREE = 3


class LPError(Exception):
    """Malformed input or solver failure."""


class LPDimensionError(LPError):
    pass


class LPIterationLimit(LPError):
    pass


class LPNumericalError(LPError):
    pass


@dataclass
class Tolerances:
    """All numeric thresholds in one place."""

    feasibility: float = 1e-8
    optimality: float = 1e-9
    pivot: float = 1e-10
    complementary: float = 1e-6
    degenerate_pivots: int = 40     # Dantzig pivots without progress before Bland
    refactor_every: int = 120


@dataclass
class LinearProgram:
    """min c.x  s.t.  A x (<=|==) b,  lower <= x <= upper."""

    c: np.ndarray
    A: np.ndarray
    senses: list[str]
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        self.senses = list(self.senses)
        m, n = self.A.shape
        if self.c.shape != (n,):
            raise LPDimensionError(f"c has shape {self.c.shape}, expected ({n},)")
        if self.b.shape != (m,):
            raise LPDimensionError(f"b has shape {self.b.shape}, expected ({m},)")
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise LPDimensionError("bounds must match the number of columns")
        if len(self.senses) != m:
            raise LPDimensionError("one sense per row required")
        for s in self.senses:
            if s not in (LE, EQ):
                raise LPError(f"unknown row sense {s!r}")
        if np.any(self.lower > self.upper + 1e-12):
            raise LPError("crossing variable bounds")
        if not np.all(np.isfinite(self.b)):
            raise LPError("right-hand sides must be finite")

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    def dump(self) -> dict:
        """Plain-data snapshot for debugging and logs."""
        return {
            "c": self.c.tolist(),
            "A": self.A.tolist(),
            "senses": list(self.senses),
            "b": self.b.tolist(),
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
        }


@dataclass
class LPSolution:
    status: str
    x: np.ndarray | None
    objective: float | None
    iterations: int
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    context: "SimplexSolver | None" = field(default=None, repr=False)


class SimplexSolver:
    """Revised simplex over ``[A | I]`` with explicit basis inverse.

    Slack columns: one per row, bounds ``[0, inf)`` for ``<=`` rows and
    ``[0, 0]`` for ``==`` rows.  The object owns its state; reuse it through
    :meth:`resolve_with_bound` for warm restarts, never across threads.
    """

    def __init__(self, lp: LinearProgram, tol: Tolerances | None = None):
        self.lp = lp
        self.tol = tol or Tolerances()
        m, n = lp.shape
        self.m, self.n = m, n
        self.N = n + m
        self.Afull = np.hstack([lp.A, np.eye(m)])
        self.cost = np.concatenate([lp.c, np.zeros(m)])
        slack_hi = np.array([math.inf if s == LE else 0.0 for s in lp.senses])
        self.lo = np.concatenate([lp.lower, np.zeros(m)])
        self.hi = np.concatenate([lp.upper, slack_hi])
        self.basis: list[int] = []
        self.state = np.full(self.N, AT_LOWER, dtype=np.int8)
        self.x = np.zeros(self.N)
        self.B_inv = np.eye(m)
        self.iterations = 0
        self._pivots_since_refactor = 0

    # -- state helpers ----------------------------------------------------

    def _nonbasic_value(self, j: int) -> float:
        if self.state[j] == AT_LOWER:
            return self.lo[j]
        if self.state[j] == AT_UPPER:
            return self.hi[j]
        return 0.0  # free

    def _set_nonbasic_states(self):
        for j in range(self.N):
            if self.state[j] == BASIC:
                continue
            if math.isfinite(self.lo[j]):
                self.state[j] = AT_LOWER
            elif math.isfinite(self.hi[j]):
                self.state[j] = AT_UPPER
            else:
                self.state[j] = FREE
            self.x[j] = self._nonbasic_value(j)

    def _recompute_basics(self):
        rhs = self.lp.b - self.Afull @ self.x + self.Afull[:, self.basis] @ self.x[self.basis]
        # equivalent to b - A_N x_N without building A_N explicitly
        self.x[self.basis] = self.B_inv @ rhs

    def _refactor(self):
        B = self.Afull[:, self.basis]
        try:
            self.B_inv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise LPNumericalError("singular basis") from exc
        self._pivots_since_refactor = 0

    def _eta_update(self, pos: int, u: np.ndarray):
        """B_inv update after column ``pos`` of the basis is replaced."""
        piv = u[pos]
        if abs(piv) < self.tol.pivot:
            raise LPNumericalError("pivot too small")
        row = self.B_inv[pos, :] / piv
        self.B_inv -= np.outer(u, row)
        self.B_inv[pos, :] = row
        self._pivots_since_refactor += 1
        if self._pivots_since_refactor >= self.tol.refactor_every:
            self._refactor()

    def _reduced_costs(self) -> tuple[np.ndarray, np.ndarray]:
        y = self.cost[self.basis] @ self.B_inv
        d = self.cost - y @ self.Afull
        return y, d

    # -- primal simplex ---------------------------------------------------

    def _primal(self, cost: np.ndarray, max_iter: int) -> str:
        """Minimize ``cost`` from the current (primal feasible) basis."""
        saved = self.cost
        self.cost = cost
        degenerate_run = 0
        try:
            for _ in range(max_iter):
                self.iterations += 1
                y = cost[self.basis] @ self.B_inv
                d = cost - y @ self.Afull
                bland = degenerate_run > self.tol.degenerate_pivots
                enter, direction = self._pick_entering(d, bland)
                if enter is None:
                    return OPTIMAL
                u = self.B_inv @ self.Afull[:, enter]
                step, leave_pos, leave_to = self._primal_ratio(enter, direction, u)
                if step is None:
                    return UNBOUNDED
                degenerate_run = 0 if step > self.tol.feasibility else degenerate_run + 1
                self._apply_primal_step(enter, direction, u, step, leave_pos, leave_to)
            raise LPIterationLimit(f"primal simplex exceeded {max_iter} iterations")
        finally:
            self.cost = saved

    def _pick_entering(self, d: np.ndarray, bland: bool):
        tol = self.tol.optimality
        best, best_j, best_dir = tol, None, 0
        for j in range(self.N):
            st = self.state[j]
            if st == BASIC:
                continue
            if st == AT_LOWER or st == FREE:
                if d[j] < -tol:
                    if bland:
                        return j, +1
                    if -d[j] > best:
                        best, best_j, best_dir = -d[j], j, +1
            if st == AT_UPPER or st == FREE:
                if d[j] > tol:
                    if bland:
                        return j, -1
                    if d[j] > best:
                        best, best_j, best_dir = d[j], j, -1
        return best_j, best_dir

    def _primal_ratio(self, enter: int, direction: int, u: np.ndarray):
        """Largest step for the entering variable; returns (step, pos, bound).

        ``pos`` is None for a bound flip; ``bound`` tells which bound the
        leaving variable rests on afterwards.
        """
        tol = self.tol.pivot
        best = self.hi[enter] - self.lo[enter]  # own span: bound flip
        leave_pos, leave_to = None, None
        for p, var in enumerate(self.basis):
            rate = -direction * u[p]  # d x_var / d step
            if rate > tol:            # basic variable rises toward its upper
                room = self.hi[var] - self.x[var]
                if not math.isfinite(self.hi[var]):
                    continue
                ratio = max(room, 0.0) / rate
                if ratio < best - 1e-12 or (
                    abs(ratio - best) <= 1e-12
                    and (leave_pos is None or var < self.basis[leave_pos])
                ):
                    best, leave_pos, leave_to = ratio, p, AT_UPPER
            elif rate < -tol:         # basic variable falls toward its lower
                if not math.isfinite(self.lo[var]):
                    continue
                room = self.x[var] - self.lo[var]
                ratio = max(room, 0.0) / -rate
                if ratio < best - 1e-12 or (
                    abs(ratio - best) <= 1e-12
                    and (leave_pos is None or var < self.basis[leave_pos])
                ):
                    best, leave_pos, leave_to = ratio, p, AT_LOWER
        if not math.isfinite(best):
            return None, None, None
        return best, leave_pos, leave_to

    def _apply_primal_step(self, enter, direction, u, step, leave_pos, leave_to):
        if step > 0:
            self.x[enter] = self._entering_start(enter) + direction * step
            self.x[self.basis] -= direction * step * u
        else:
            self.x[enter] = self._entering_start(enter)
        if leave_pos is None:
            # bound flip: entering variable crossed to its other bound
            self.state[enter] = AT_UPPER if direction > 0 else AT_LOWER
            self.x[enter] = self.hi[enter] if direction > 0 else self.lo[enter]
            return
        leaving = self.basis[leave_pos]
        self.state[leaving] = leave_to
        self.x[leaving] = self.hi[leaving] if leave_to == AT_UPPER else self.lo[leaving]
        self.basis[leave_pos] = enter
        self.state[enter] = BASIC
        self._eta_update(leave_pos, u)

    def _entering_start(self, j: int) -> float:
        return self.x[j]

    # -- dual simplex ------------------------------------------------------

    def _dual(self, max_iter: int) -> str:
        """Restore primal feasibility while staying dual feasible."""
        _, d = self._reduced_costs()
        since_refresh = 0
        for _ in range(max_iter):
            self.iterations += 1
            viol_pos, below = self._most_infeasible_basic()
            if viol_pos is None:
                return OPTIMAL
            leave = self.basis[viol_pos]
            row = self.B_inv[viol_pos] @ self.Afull
            enter = self._dual_ratio(row, d, below)
            if enter is None:
                return INFEASIBLE
            u = self.B_inv @ self.Afull[:, enter]
            if abs(u[viol_pos]) < self.tol.pivot:
                raise LPNumericalError("dual pivot vanished")
            # primal update: entering moves just enough to pull the leaving
            # variable onto its violated bound
            target = self.lo[leave] if below else self.hi[leave]
            step = (self.x[leave] - target) / u[viol_pos]
            self.x[enter] += step
            self.x[self.basis] -= step * u
            self.x[leave] = target
            self.state[leave] = AT_LOWER if below else AT_UPPER
            self.basis[viol_pos] = enter
            self.state[enter] = BASIC
            # reduced-cost update reuses the pivot row already computed
            ratio = d[enter] / row[enter]
            d -= ratio * row
            d[enter] = 0.0
            self._eta_update(viol_pos, u)
            since_refresh += 1
            if since_refresh >= self.tol.refactor_every:
                self._recompute_basics()
                _, d = self._reduced_costs()
                since_refresh = 0
        raise LPIterationLimit(f"dual simplex exceeded {max_iter} iterations")

    def _most_infeasible_basic(self):
        worst, pos, below = self.tol.feasibility, None, False
        for p, var in enumerate(self.basis):
            low_gap = self.lo[var] - self.x[var]
            high_gap = self.x[var] - self.hi[var]
            if low_gap > worst:
                worst, pos, below = low_gap, p, True
            if high_gap > worst:
                worst, pos, below = high_gap, p, False
        return pos, below

    def _dual_ratio(self, row: np.ndarray, d: np.ndarray, below: bool):
        """Entering column keeping reduced costs sign-consistent."""
        tol = self.tol.pivot
        best, best_j = math.inf, None
        for j in range(self.N):
            st = self.state[j]
            if st == BASIC:
                continue
            r = row[j]
            if abs(r) <= tol:
                continue
            # leaving variable must move up (below=True) or down; the
            # entering variable moves opposite to sign(r) accordingly
            if below:
                ok = (st in (AT_LOWER, FREE) and r < 0) or (st in (AT_UPPER, FREE) and r > 0)
            else:
                ok = (st in (AT_LOWER, FREE) and r > 0) or (st in (AT_UPPER, FREE) and r < 0)
            if not ok:
                continue
            ratio = abs(d[j]) / abs(r)
            if ratio < best - 1e-12 or (abs(ratio - best) <= 1e-12 and (best_j is None or j < best_j)):
                best, best_j = ratio, j
        return best_j

    # -- driving ----------------------------------------------------------

    def _crash_slack_basis(self):
        self.basis = list(range(self.n, self.N))
        self.state[:] = AT_LOWER
        self.state[self.basis] = BASIC
        self._set_nonbasic_states()
        self.B_inv = np.eye(self.m)
        self._recompute_basics()

    def _primal_feasible(self) -> bool:
        xb = self.x[self.basis]
        lob = self.lo[self.basis]
        hib = self.hi[self.basis]
        t = self.tol.feasibility * 10
        return bool(np.all(xb >= lob - t) and np.all(xb <= hib + t))

    def _dual_feasible(self) -> bool:
        _, d = self._reduced_costs()
        t = self.tol.complementary
        for j in range(self.N):
            st = self.state[j]
            if st == AT_LOWER and d[j] < -t:
                return False
            if st == AT_UPPER and d[j] > t:
                return False
            if st == FREE and abs(d[j]) > t:
                return False
        return True

    def _phase1(self, max_iter: int) -> str:
        """Drive out slack-basis infeasibility through artificial columns."""
        violated = []
        for p, var in enumerate(self.basis):
            if self.x[var] < self.lo[var] - self.tol.feasibility:
                violated.append((p, var, -1.0))   # slack parks at lower
            elif self.x[var] > self.hi[var] + self.tol.feasibility:
                violated.append((p, var, +1.0))   # slack parks at upper
        if not violated:
            return OPTIMAL
        k = len(violated)
        cols = np.zeros((self.m, k))
        art_cost = np.zeros(self.N + k)
        art_cost[self.N:] = 1.0
        for t, (p, var, sign) in enumerate(violated):
            cols[p, t] = sign
        self.Afull = np.hstack([self.Afull, cols])
        self.cost = np.concatenate([self.cost, np.zeros(k)])
        self.lo = np.concatenate([self.lo, np.zeros(k)])
        self.hi = np.concatenate([self.hi, np.full(k, math.inf)])
        self.state = np.concatenate([self.state, np.full(k, AT_LOWER, dtype=np.int8)])
        self.x = np.concatenate([self.x, np.zeros(k)])
        self.N += k
        # each artificial replaces its violated slack in the basis
        for t, (p, var, sign) in enumerate(violated):
            art = self.N - k + t
            at_lower = sign < 0
            self.state[var] = AT_LOWER if at_lower else AT_UPPER
            self.x[var] = self.lo[var] if at_lower else self.hi[var]
            self.basis[p] = art
            self.state[art] = BASIC
        self._refactor()
        self._recompute_basics()
        status = self._primal(art_cost, max_iter)
        if status == UNBOUNDED:
            raise LPNumericalError("phase 1 cannot be unbounded")
        if float(art_cost @ self.x) > 1e-7:
            return INFEASIBLE
        # freeze artificials at zero for phase 2; basics at 0 are harmless
        self.hi[self.N - k:] = 0.0
        self._recompute_basics()
        return OPTIMAL

    def _reset(self):
        self.__init__(self.lp, self.tol)

    def solve(self, max_iter: int | None = None) -> LPSolution:
        m, n = self.m, self.n
        budget = max_iter or max(200, 60 * (m + n))
        self._reset()
        self._crash_slack_basis()
        # park cost-attracted structurals on their finite upper bound before
        # branching; overshooting rows are then repaired by the dual simplex,
        # which is far cheaper than pivoting columns in one at a time
        flipped = False
        for j in range(n):
            if (
                self.state[j] == AT_LOWER
                and self.cost[j] < -self.tol.optimality
                and math.isfinite(self.hi[j])
            ):
                self.state[j] = AT_UPPER
                self.x[j] = self.hi[j]
                flipped = True
        if flipped:
            self._recompute_basics()
        if self._primal_feasible():
            status = self._primal(self.cost, budget)
        elif self._dual_feasible():
            status = self._dual(budget)
            if status == OPTIMAL:
                status = self._primal(self.cost, budget)  # confirm optimality
        else:
            status = self._phase1(budget)
            if status == OPTIMAL:
                status = self._primal(self.cost, budget)
        return self._package(status)

    def resolve_with_bound(
        self,
        var: int,
        lower: float | None = None,
        upper: float | None = None,
        max_iter: int | None = None,
    ) -> LPSolution:
        """Re-optimize after changing one structural variable's bounds."""
        if not (0 <= var < self.n):
            raise LPDimensionError(f"variable index {var} out of range")
        if lower is not None:
            self.lo[var] = lower
            self.lp.lower[var] = lower
        if upper is not None:
            self.hi[var] = upper
            self.lp.upper[var] = upper
        if self.lo[var] > self.hi[var] + 1e-12:
            return self._package(INFEASIBLE)
        budget = max_iter or max(200, 60 * (self.m + self.n))
        if self.state[var] != BASIC:
            old = self.x[var]
            if self.state[var] == FREE and (math.isfinite(self.lo[var]) or math.isfinite(self.hi[var])):
                self.state[var] = AT_LOWER if math.isfinite(self.lo[var]) else AT_UPPER
            new = self._nonbasic_value(var)
            if abs(new - old) > 0:
                self.x[var] = new
                self._recompute_basics()
        if not self._dual_feasible():
            # bound change never alters reduced costs, but a state change of
            # a FREE variable can; fall back to a cold solve
            return self.solve(max_iter=budget)
        status = self._dual(budget)
        return self._package(status)

    # -- packaging ---------------------------------------------------------

    def _package(self, status: str) -> LPSolution:
        if status != OPTIMAL:
            return LPSolution(status, None, None, self.iterations, context=self)
        self._recompute_basics()
        if not self._primal_feasible():
            raise LPNumericalError("claimed optimal but basis infeasible")
        y, d = self._reduced_costs()
        x = self.x[: self.n].copy()
        obj = float(self.lp.c @ x)
        return LPSolution(
            status=OPTIMAL,
            x=x,
            objective=obj,
            iterations=self.iterations,
            duals=y.copy(),
            reduced_costs=d[: self.n].copy(),
            context=self,
        )


def solve(lp: LinearProgram, tol: Tolerances | None = None) -> LPSolution:
    """Solve a bounded-variable LP; the solution keeps its solver context."""
    return SimplexSolver(lp, tol).solve()


def resolve_with_bound(
    prev: LPSolution,
    var: int,
    lower: float | None = None,
    upper: float | None = None,
) -> LPSolution:
    """Warm restart of a previous solve after one bound change."""
    if prev.context is None:
        raise LPError("solution carries no solver context")
    return prev.context.resolve_with_bound(var, lower=lower, upper=upper)
