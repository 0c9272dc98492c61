"""Dense revised simplex for equality-constrained LPs with variable bounds.

Solves min c.x subject to A x = b, lower <= x <= upper, with a certified
primal/dual pair on success. Geared to the moderately sized, rank-deficient
marginal systems this package produces: a presolve pass removes dependent
equality rows, phase 1 uses auxiliary variables, and callers that know a basic
feasible point can skip phase 1 entirely via warm start.

Determinism: identical inputs take identical pivot sequences. Entering
variables are picked by most-negative reduced cost (ties to the smallest
index) until a run of degenerate pivots trips Bland's smallest-index rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"


class SolverFailure(RuntimeError):
    """Solve ended in a non-optimal status that the caller cannot continue from."""

    def __init__(self, status: str, detail: str = ""):
        self.status = status
        super().__init__(f"LP solve failed with status {status!r}" + (f": {detail}" if detail else ""))


@dataclass
class SolverOptions:
    tol_feas: float = 1e-9
    tol_opt: float = 1e-9
    pivot_tol: float = 1e-10
    degen_tol: float = 1e-11
    bland_streak: int = 50         # degenerate pivots before smallest-index rule kicks in
    refactor_every: int = 100      # basis changes between full refactorizations
    max_pivots: int | None = None  # default 100 * num_vars


@dataclass
class LinearProgram:
    """Standard-form LP: min objective.x with eq_matrix x = eq_rhs, lower <= x <= upper."""

    objective: np.ndarray
    eq_matrix: sp.spmatrix | sp.sparray | np.ndarray
    eq_rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).ravel()
        self.eq_rhs = np.asarray(self.eq_rhs, dtype=float).ravel()
        self.lower = np.asarray(self.lower, dtype=float).ravel()
        self.upper = np.asarray(self.upper, dtype=float).ravel()
        if not sp.issparse(self.eq_matrix):
            self.eq_matrix = np.asarray(self.eq_matrix, dtype=float)
        n = self.objective.size
        r = self.eq_rhs.size
        if self.eq_matrix.shape != (r, n):
            raise ValueError(
                f"eq_matrix shape {self.eq_matrix.shape} inconsistent with "
                f"{r} rhs entries and {n} objective entries"
            )
        if self.lower.size != n or self.upper.size != n:
            raise ValueError("bounds must have one [lower, upper] pair per variable")
        if np.any(self.lower > self.upper):
            raise ValueError("every lower bound must be <= its upper bound")

    @property
    def num_vars(self) -> int:
        return self.objective.size

    @property
    def num_rows(self) -> int:
        return self.eq_rhs.size

    def dense_matrix(self) -> np.ndarray:
        a = self.eq_matrix
        return a.toarray() if sp.issparse(a) else np.asarray(a, dtype=float)


@dataclass
class LPSolution:
    status: str
    primal: np.ndarray | None
    dual: np.ndarray | None
    objective_value: float | None
    iterations: int


def independent_rows(
    matrix: np.ndarray,
    rhs: np.ndarray,
    pivot_tol: float = 1e-10,
    rhs_tol: float = 1e-9,
) -> tuple[list[int], bool]:
    """Select a maximal independent subset of equality rows by row echelon.

    Returns (kept row indices, consistent). A dependent row whose eliminated
    rhs residual exceeds rhs_tol marks the system inconsistent (infeasible);
    dependent consistent rows are safe to drop, with their duals set to 0.
    """
    work = np.hstack([np.asarray(matrix, dtype=float), np.asarray(rhs, float).reshape(-1, 1)])
    r, n1 = work.shape
    active = np.ones(r, dtype=bool)
    keep: list[int] = []
    for col in range(n1 - 1):
        if not active.any():
            break
        rows = np.flatnonzero(active)
        local = np.argmax(np.abs(work[rows, col]))
        piv_row = rows[local]
        piv = work[piv_row, col]
        if abs(piv) <= pivot_tol:
            continue
        keep.append(piv_row)
        active[piv_row] = False
        rows = np.flatnonzero(active)
        if rows.size:
            ratios = work[rows, col] / piv
            work[rows] -= np.outer(ratios, work[piv_row])
    consistent = True
    for row in np.flatnonzero(active):
        if abs(work[row, -1]) > rhs_tol:
            consistent = False
            break
    keep.sort()
    return keep, consistent


class BoundedSimplex:
    """Revised simplex core over dense data; callers manage phases and warm starts.

    The basis inverse is maintained by product-form updates and rebuilt from
    scratch every ``refactor_every`` basis changes (and before an optimality
    claim), which also resets accumulated drift in the basic values.
    """

    def __init__(self, A: np.ndarray, b: np.ndarray, lower: np.ndarray,
                 upper: np.ndarray, opts: SolverOptions):
        self.A = np.ascontiguousarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float).ravel()
        self.lower = np.asarray(lower, dtype=float).ravel()
        self.upper = np.asarray(upper, dtype=float).ravel()
        self.opts = opts
        self.r, self.n = self.A.shape
        self.basis = np.empty(0, dtype=int)
        self.in_basis = np.zeros(self.n, dtype=bool)
        self.at_upper = np.zeros(self.n, dtype=bool)
        self.x = np.zeros(self.n)
        self.Binv = np.empty((self.r, self.r))
        self.pivots = 0
        self.basis_changes = 0
        self.stale_updates = 0  # eta/rank-1 updates applied since the last true refactor
        self._degen_streak = 0
        self._bland = False

    # -- basis bookkeeping -------------------------------------------------

    def set_basis(self, basis: np.ndarray, at_upper: np.ndarray | None = None) -> None:
        self.basis = np.asarray(basis, dtype=int).copy()
        if self.basis.size != self.r:
            raise ValueError(f"basis needs {self.r} columns, got {self.basis.size}")
        self.in_basis[:] = False
        self.in_basis[self.basis] = True
        if at_upper is not None:
            self.at_upper = np.asarray(at_upper, dtype=bool).copy()
        nonbasic = ~self.in_basis
        self.x[nonbasic] = np.where(
            self.at_upper[nonbasic], self.upper[nonbasic], self.lower[nonbasic]
        )
        free = nonbasic & ~np.isfinite(self.x)
        self.x[free] = 0.0
        self.refactor()

    def refactor(self) -> None:
        if self.r == 0:
            return
        self.Binv = np.linalg.inv(self.A[:, self.basis])
        self.stale_updates = 0
        self.recompute_basics()

    def recompute_basics(self) -> None:
        if self.r == 0:
            return
        # only nonbasics sitting away from zero contribute to the rhs
        live = np.flatnonzero(~self.in_basis & (self.x != 0.0))
        rhs = self.b if live.size == 0 else self.b - self.A[:, live] @ self.x[live]
        self.x[self.basis] = self.Binv @ rhs

    def replace_column(self, j: int, col: np.ndarray) -> bool:
        """Overwrite A[:, j] and patch the factorization in place.

        Uses a rank-one (Sherman-Morrison) update when column j is basic, so a
        re-solve after a single-column change avoids a fresh inversion. Returns
        False when the update would be numerically unsafe; the matrix is still
        overwritten and the caller must refactor from scratch.
        """
        col = np.asarray(col, dtype=float).ravel()
        delta = col - self.A[:, j]
        self.A[:, j] = col
        if self.r == 0 or not self.in_basis[j]:
            return True
        q = int(np.flatnonzero(self.basis == j)[0])
        w = self.Binv @ delta
        denom = 1.0 + w[q]
        if abs(denom) < 1e-8:
            return False
        self.Binv -= np.outer(w / denom, self.Binv[q])
        self.stale_updates += 1
        return True

    def duals(self, c: np.ndarray) -> np.ndarray:
        if self.r == 0:
            return np.empty(0)
        return c[self.basis] @ self.Binv

    def primal_residual(self) -> float:
        bound_low = float(np.max(self.lower - self.x, initial=0.0))
        bound_up = float(np.max(self.x - self.upper, initial=0.0))
        if self.r == 0:
            return max(bound_low, bound_up)
        eq = float(np.max(np.abs(self.A @ self.x - self.b)))
        return max(eq, bound_low, bound_up)

    # -- the simplex loop --------------------------------------------------

    def _entering(self, z: np.ndarray) -> tuple[int, int] | None:
        """Pick the entering column; returns (index, direction) or None at optimality."""
        tol = self.opts.tol_opt
        movable = ~self.in_basis & (self.lower < self.upper)
        lo_finite = np.isfinite(self.lower)
        free = movable & ~lo_finite & ~np.isfinite(self.upper)
        down = movable & (self.at_upper | free) & (z > tol)
        up = movable & ~self.at_upper & (z < -tol)
        any_cand = down | up
        if not any_cand.any():
            return None
        if self._bland:
            j = int(np.flatnonzero(any_cand)[0])
        else:
            score = np.where(any_cand, np.abs(z), -1.0)
            j = int(np.argmax(score))
        return j, (-1 if down[j] else +1)

    def run(self, c: np.ndarray, max_pivots: int) -> str:
        """Minimize c.x from the current basic feasible point."""
        opts = self.opts
        verified = False  # has optimality been re-checked after a clean refactor
        while True:
            z = c - (self.duals(c) @ self.A if self.r else 0.0)
            pick = self._entering(z)
            if pick is None:
                # a recent factorization is trusted; only re-check after enough
                # rank-one updates have accumulated to matter
                if verified or self.r == 0 or self.stale_updates <= self.opts.refactor_every:
                    return OPTIMAL
                self.refactor()
                verified = True
                continue
            verified = False
            if self.pivots >= max_pivots:
                return ITERATION_LIMIT
            j, sigma = pick
            w = self.Binv @ self.A[:, j] if self.r else np.empty(0)
            d = -sigma * w  # change of basic values per unit step of x_j

            xB = self.x[self.basis]
            lB = self.lower[self.basis]
            uB = self.upper[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                t_down = np.where(d < -opts.pivot_tol, (xB - lB) / -d, np.inf)
                t_up = np.where(d > opts.pivot_tol, (uB - xB) / d, np.inf)
            t_rows = np.minimum(t_down, t_up)
            np.maximum(t_rows, 0.0, out=t_rows)  # drift can make a ratio slightly negative
            t_row_min = float(np.min(t_rows)) if self.r else np.inf

            t_bound = self.upper[j] - self.lower[j]
            if t_bound < t_row_min:
                # entering variable reaches its opposite bound: no basis change
                self.x[j] += sigma * t_bound
                self.at_upper[j] = not self.at_upper[j]
                if self.r:
                    self.x[self.basis] = xB + t_bound * d
                self.pivots += 1
                self._note_step(t_bound)
                continue
            if not np.isfinite(t_row_min):
                return UNBOUNDED

            ties = np.flatnonzero(t_rows <= t_row_min + 1e-15)
            if self._bland:
                i_star = int(ties[np.argmin(self.basis[ties])])
            else:
                i_star = int(ties[np.argmax(np.abs(d[ties]))])
            t = float(t_rows[i_star])

            leaving = int(self.basis[i_star])
            self.x[j] += sigma * t
            self.x[self.basis] = xB + t * d
            if d[i_star] < 0:
                self.x[leaving] = lB[i_star]
                self.at_upper[leaving] = False
            else:
                self.x[leaving] = uB[i_star]
                self.at_upper[leaving] = True
            self.basis[i_star] = j
            self.in_basis[leaving] = False
            self.in_basis[j] = True

            piv = w[i_star]
            self.Binv[i_star] /= piv
            col = w.copy()
            col[i_star] = 0.0
            self.Binv -= np.outer(col, self.Binv[i_star])
            self.stale_updates += 1

            self.pivots += 1
            self.basis_changes += 1
            if self.basis_changes % opts.refactor_every == 0:
                self.refactor()
            self._note_step(t)

    def _note_step(self, t: float) -> None:
        if t <= self.opts.degen_tol:
            self._degen_streak += 1
            if self._degen_streak >= self.opts.bland_streak:
                self._bland = True
        else:
            self._degen_streak = 0
            self._bland = False

    def dual_run(self, c: np.ndarray, max_pivots: int) -> str:
        """Restore primal feasibility by dual pivots, keeping reduced costs sane.

        Intended for re-solves after a small rhs or matrix change, starting
        from a basis that was optimal before the change: each pivot drives one
        out-of-bounds basic variable to its violated bound. Returns OPTIMAL
        once the basics are within bounds (the caller should confirm with a
        primal run), INFEASIBLE if a violated row has no admissible column.
        """
        opts = self.opts
        while True:
            if self.r == 0:
                return OPTIMAL
            xB = self.x[self.basis]
            below = self.lower[self.basis] - xB
            above = xB - self.upper[self.basis]
            viol = np.maximum(below, above)
            i_star = int(np.argmax(viol))
            if viol[i_star] <= opts.tol_feas:
                return OPTIMAL
            if self.pivots >= max_pivots:
                return ITERATION_LIMIT
            over_upper = above[i_star] > below[i_star]

            z = c - self.duals(c) @ self.A
            alpha = self.Binv[i_star] @ self.A
            movable = ~self.in_basis & (self.lower < self.upper)
            sign = 1.0 if over_upper else -1.0
            ok_low = movable & ~self.at_upper & (sign * alpha > opts.pivot_tol)
            ok_up = movable & self.at_upper & (sign * alpha < -opts.pivot_tol)
            cand = np.flatnonzero(ok_low | ok_up)
            if cand.size == 0:
                return INFEASIBLE
            ratios = np.abs(z[cand] / alpha[cand])
            best = float(np.min(ratios))
            ties = cand[ratios <= best + 1e-12]
            if self._bland:
                j = int(ties.min())
            else:
                j = int(ties[np.argmax(np.abs(alpha[ties]))])

            bound = self.upper[self.basis[i_star]] if over_upper else self.lower[self.basis[i_star]]
            t = (xB[i_star] - bound) / alpha[j]
            w = self.Binv @ self.A[:, j]
            leaving = int(self.basis[i_star])
            self.x[j] += t
            self.x[self.basis] = xB - t * w
            self.x[leaving] = bound
            self.at_upper[leaving] = over_upper
            self.basis[i_star] = j
            self.in_basis[leaving] = False
            self.in_basis[j] = True
            piv = w[i_star]
            self.Binv[i_star] /= piv
            col = w.copy()
            col[i_star] = 0.0
            self.Binv -= np.outer(col, self.Binv[i_star])
            self.stale_updates += 1
            self.pivots += 1
            self.basis_changes += 1
            if self.basis_changes % opts.refactor_every == 0:
                self.refactor()
            self._note_step(abs(t))


def _crash_values(lower: np.ndarray, upper: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nonbasic placement for phase 1: finite lower bound, else upper, else 0."""
    x = np.where(np.isfinite(lower), lower, np.where(np.isfinite(upper), upper, 0.0))
    at_upper = ~np.isfinite(lower) & np.isfinite(upper)
    return x, at_upper


def _two_phase(
    A: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    opts: SolverOptions,
    max_pivots: int,
) -> tuple[str, BoundedSimplex, np.ndarray]:
    """Phase 1 with auxiliary variables, then phase 2. Returns (status, core, c_ext)."""
    r, n = A.shape
    x0, at_up0 = _crash_values(lower, upper)
    res = b - A @ x0
    sgn = np.where(res >= 0, 1.0, -1.0)
    A_ext = np.hstack([A, np.diag(sgn)])
    l_ext = np.concatenate([lower, np.zeros(r)])
    u_ext = np.concatenate([upper, np.full(r, np.inf)])
    core = BoundedSimplex(A_ext, b, l_ext, u_ext, opts)
    core.at_upper[:n] = at_up0
    core.x[:n] = x0
    core.basis = np.arange(n, n + r)
    core.in_basis[:] = False
    core.in_basis[core.basis] = True
    core.Binv = np.diag(sgn)  # the artificial basis is its own inverse
    core.x[n:] = np.abs(res)

    c1 = np.concatenate([np.zeros(n), np.ones(r)])
    status = core.run(c1, max_pivots)
    if status != OPTIMAL:
        return status, core, c1
    if float(c1 @ core.x) > opts.tol_feas:
        return INFEASIBLE, core, c1

    # Pivot remaining zero-valued artificials out of the basis where possible;
    # a row with no eligible pivot is dependent and keeps its artificial pinned.
    for i in range(r):
        if core.basis[i] < n:
            continue
        row = core.Binv[i] @ A
        row[core.in_basis[:n]] = 0.0
        j = int(np.argmax(np.abs(row)))
        if abs(row[j]) > 1e-7:
            leaving = int(core.basis[i])
            w = core.Binv @ A_ext[:, j]
            core.basis[i] = j
            core.in_basis[leaving] = False
            core.in_basis[j] = True
            core.Binv[i] /= w[i]
            col = w.copy()
            col[i] = 0.0
            core.Binv -= np.outer(col, core.Binv[i])
            core.x[leaving] = 0.0
            core.refactor()
    core.lower[n:] = 0.0
    core.upper[n:] = 0.0  # artificials can never re-enter

    c_ext = np.concatenate([c, np.zeros(r)])
    status = core.run(c_ext, max_pivots)
    return status, core, c_ext


def certified_lower_bound(lp: LinearProgram, dual: np.ndarray) -> float:
    """Weak-duality bound on the optimum implied by an arbitrary dual vector.

    For any y: min c.x >= y.b + sum_j min(z_j l_j, z_j u_j) with z = c - A^T y.
    At an optimal basic pair the bound meets the primal objective.
    """
    a = lp.dense_matrix()
    y = np.asarray(dual, dtype=float)
    z = lp.objective - y @ a
    per_var = np.zeros_like(z)
    pos = z > 0
    neg = z < 0
    per_var[pos] = z[pos] * lp.lower[pos]  # -inf when the bound is open: no certificate
    per_var[neg] = z[neg] * lp.upper[neg]
    return float(y @ lp.eq_rhs + per_var.sum())


def dual_residual(lp: LinearProgram, primal: np.ndarray, dual: np.ndarray,
                  tol_active: float = 1e-7) -> float:
    """Largest violation of the dual sign conditions at the given primal point."""
    a = lp.dense_matrix()
    z = lp.objective - np.asarray(dual, float) @ a
    at_low = primal <= lp.lower + tol_active
    at_up = primal >= lp.upper - tol_active
    viol = np.zeros_like(z)
    interior = ~at_low & ~at_up
    viol[interior] = np.abs(z[interior])
    only_low = at_low & ~at_up
    viol[only_low] = np.maximum(-z[only_low], 0.0)
    only_up = at_up & ~at_low
    viol[only_up] = np.maximum(z[only_up], 0.0)
    return float(np.max(viol, initial=0.0))


def solve_lp(
    lp: LinearProgram,
    options: SolverOptions | None = None,
    backend=None,
) -> LPSolution:
    """Solve an LP to a certified optimum, or report a definite failure status.

    ``backend`` substitutes an external solver with the same signature and
    return contract; the in-repo simplex below is the reference implementation
    and the default.
    """
    if backend is not None:
        return backend(lp, options)
    return simplex_backend(lp, options)


def simplex_backend(lp: LinearProgram, options: SolverOptions | None = None) -> LPSolution:
    opts = options or SolverOptions()
    n = lp.num_vars
    max_pivots = opts.max_pivots if opts.max_pivots is not None else 100 * n
    a_full = lp.dense_matrix()
    keep, consistent = independent_rows(a_full, lp.eq_rhs, opts.pivot_tol)
    if not consistent:
        return LPSolution(INFEASIBLE, None, None, None, 0)
    a = a_full[keep]
    b = lp.eq_rhs[keep]

    status, core, c_ext = _two_phase(a, b, lp.objective, lp.lower, lp.upper, opts, max_pivots)
    iterations = core.pivots
    if status != OPTIMAL:
        return LPSolution(status, None, None, None, iterations)

    primal = core.x[:n].copy()
    y = core.duals(c_ext)
    dual = np.zeros(lp.num_rows)
    dual[keep] = y
    value = float(lp.objective @ primal)

    if core.primal_residual() > opts.tol_feas:
        return LPSolution(ITERATION_LIMIT, primal, dual, value, iterations)
    return LPSolution(OPTIMAL, primal, dual, value, iterations)


# -- plain-text LP interchange --------------------------------------------
#
# Line 1: "<num_vars> <num_rows>"; line 2: the objective (num_vars floats);
# line 3: "<nnz>"; then nnz lines "row col value"; then one line with the rhs
# (num_rows floats); then num_vars lines "lower upper". Infinities are the
# tokens "inf" / "-inf". Whitespace-separated, any float precision.

def dump_lp_text(lp: LinearProgram) -> str:
    a = sp.coo_array(lp.eq_matrix)
    fmt = "%.17g"
    lines = [f"{lp.num_vars} {lp.num_rows}"]
    lines.append(" ".join(fmt % v for v in lp.objective))
    order = np.lexsort((a.col, a.row))
    lines.append(str(a.nnz))
    for i in order:
        lines.append(f"{a.row[i]} {a.col[i]} " + fmt % a.data[i])
    lines.append(" ".join(fmt % v for v in lp.eq_rhs))
    for lo, up in zip(lp.lower, lp.upper):
        lines.append((fmt % lo) + " " + (fmt % up))
    return "\n".join(lines) + "\n"


def parse_lp_text(text: str) -> LinearProgram:
    toks = text.split("\n")
    toks = [line for line in toks if line.strip()]
    n, r = (int(v) for v in toks[0].split())
    objective = np.array([float(v) for v in toks[1].split()])
    nnz = int(toks[2])
    rows = np.empty(nnz, dtype=int)
    cols = np.empty(nnz, dtype=int)
    vals = np.empty(nnz)
    for i in range(nnz):
        a, b, v = toks[3 + i].split()
        rows[i], cols[i], vals[i] = int(a), int(b), float(v)
    rhs = np.array([float(v) for v in toks[3 + nnz].split()])
    lower = np.empty(n)
    upper = np.empty(n)
    for j in range(n):
        lo, up = toks[4 + nnz + j].split()
        lower[j], upper[j] = float(lo), float(up)
    matrix = sp.csr_array((vals, (rows, cols)), shape=(r, n))
    return LinearProgram(objective, matrix, rhs, lower, upper)
