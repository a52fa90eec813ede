"""Bounded-variable linear programs and a revised simplex solver.

Problems are stored densely (objective vector, constraint matrix, senses,
right-hand sides, per-variable bounds) and solved by a two-phase revised
simplex that handles variable bounds natively, so box constraints never
become extra rows.  Pricing is Dantzig's rule with a switch to Bland's
rule after a run of degenerate pivots.  The basis factorization is a
dense inverse for small problems and a sparse LU with product-form
updates for large ones; both give bit-identical results for identical
inputs within one build.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

LESS_EQUAL = "<="
EQUAL = "=="
GREATER_EQUAL = ">="
_SENSES = (LESS_EQUAL, EQUAL, GREATER_EQUAL)

# Basis engine switch: below this many rows a dense explicit inverse is
# cheaper than SuperLU calls.
_DENSE_ENGINE_MAX_ROWS = 220
_REFACTOR_INTERVAL = 64
_PIVOT_TOL = 1e-10
_DEGENERATE_STEP = 1e-10
_BLAND_TRIGGER = 50


class LpInputError(ValueError):
    """Malformed problem data: wrong dimensions, NaN coefficients, bad bounds."""


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass(frozen=True)
class ToleranceSettings:
    """Solver tolerances: primal feasibility, reduced-cost optimality, and
    the looser tolerance used when auditing a finished solution."""

    feasibility: float = 1e-9
    optimality: float = 1e-9
    check: float = 1e-7


DEFAULT_TOLERANCES = ToleranceSettings()


class LinearProgram:
    """min c.x  s.t.  A x (<=|==|>=) b,  lower <= x <= upper.

    Lower bounds default to 0 and upper bounds to +inf.  All rows are kept
    dense; ``senses`` holds one of "<=", "==", ">=" per row.
    """

    def __init__(self, num_vars, objective, constraints=(), var_bounds=None):
        rows = []
        senses = []
        rhs = []
        for coeffs, sense, b in constraints:
            rows.append(np.asarray(coeffs, dtype=float))
            senses.append(sense)
            rhs.append(b)
        a = np.vstack(rows) if rows else np.zeros((0, num_vars))
        if var_bounds is None:
            lower = upper = None
        else:
            bounds = list(var_bounds)
            if len(bounds) != num_vars:
                raise LpInputError(
                    f"expected {num_vars} bound pairs, got {len(bounds)}"
                )
            lower = np.array([lo for lo, _ in bounds], dtype=float)
            upper = np.array([hi for _, hi in bounds], dtype=float)
        self._init_from_arrays(
            np.asarray(objective, dtype=float),
            a,
            np.asarray(senses, dtype=object),
            np.asarray(rhs, dtype=float),
            lower,
            upper,
            num_vars,
        )

    @classmethod
    def from_arrays(cls, objective, a, senses, rhs, lower=None, upper=None):
        """Build directly from stacked arrays without per-row copies."""
        self = cls.__new__(cls)
        objective = np.asarray(objective, dtype=float)
        self._init_from_arrays(
            objective,
            np.asarray(a, dtype=float),
            np.asarray(senses, dtype=object),
            np.asarray(rhs, dtype=float),
            None if lower is None else np.asarray(lower, dtype=float),
            None if upper is None else np.asarray(upper, dtype=float),
            objective.shape[0],
        )
        return self

    def _init_from_arrays(self, objective, a, senses, rhs, lower, upper, num_vars):
        if objective.ndim != 1 or objective.shape[0] != num_vars:
            raise LpInputError("objective length does not match num_vars")
        if a.ndim != 2 or (a.shape[0] and a.shape[1] != num_vars):
            raise LpInputError("constraint row length does not match num_vars")
        if a.shape[0] != senses.shape[0] or a.shape[0] != rhs.shape[0]:
            raise LpInputError("constraints, senses and rhs lengths differ")
        if not np.all(np.isfinite(objective)):
            raise LpInputError("objective has NaN or infinite coefficients")
        if a.size and not np.all(np.isfinite(a)):
            raise LpInputError("constraint matrix has NaN or infinite coefficients")
        if rhs.size and not np.all(np.isfinite(rhs)):
            raise LpInputError("right-hand side must be finite")
        for s in senses:
            if s not in _SENSES:
                raise LpInputError(f"unknown constraint sense {s!r}")
        if lower is None:
            lower = np.zeros(num_vars)
        if upper is None:
            upper = np.full(num_vars, np.inf)
        if lower.shape != (num_vars,) or upper.shape != (num_vars,):
            raise LpInputError("bound arrays do not match num_vars")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
            raise LpInputError("bounds may be infinite but not NaN")
        if np.any(lower > upper):
            raise LpInputError("some lower bound exceeds its upper bound")
        self.num_vars = int(num_vars)
        self.objective = objective
        self.a_matrix = a
        self.senses = senses
        self.rhs = rhs
        self.lower = lower
        self.upper = upper

    @property
    def num_constraints(self):
        return self.a_matrix.shape[0]

    @property
    def constraints(self):
        """The rows as (coefficients, sense, rhs) tuples."""
        return [
            (self.a_matrix[i], self.senses[i], self.rhs[i])
            for i in range(self.num_constraints)
        ]

    @property
    def var_bounds(self):
        return list(zip(self.lower, self.upper))


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    x: np.ndarray | None
    objective_value: float | None
    iteration_count: int
    solve_time: float

    @property
    def is_optimal(self):
        return self.status is LpStatus.OPTIMAL


@dataclass(frozen=True)
class Violation:
    kind: str  # "constraint" | "lower" | "upper"
    index: int
    amount: float


@dataclass(frozen=True)
class ViolationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self):
        return not self.violations

    def __len__(self):
        return len(self.violations)


def check_solution(lp: LinearProgram, x, tol: ToleranceSettings | float | None = None) -> ViolationReport:
    """Audit a candidate point against every row and bound of ``lp``.

    A row or bound counts as violated when the raw residual exceeds
    ``tol * max(1, |rhs|)``, i.e. the tolerance is read relative to the
    magnitude of the right-hand side so badly scaled rows are not flagged
    for float rounding alone.  Empty report <=> feasible.
    """
    if tol is None:
        tol = DEFAULT_TOLERANCES.check
    elif isinstance(tol, ToleranceSettings):
        tol = tol.check
    x = np.asarray(x, dtype=float)
    if x.shape != (lp.num_vars,):
        raise LpInputError(
            f"candidate has {x.shape} entries, expected ({lp.num_vars},)"
        )
    out = []
    if lp.num_constraints:
        ax = lp.a_matrix @ x
        for i in range(lp.num_constraints):
            resid = ax[i] - lp.rhs[i]
            sense = lp.senses[i]
            if sense == LESS_EQUAL:
                amount = resid
            elif sense == GREATER_EQUAL:
                amount = -resid
            else:
                amount = abs(resid)
            if amount > tol * max(1.0, abs(lp.rhs[i])):
                out.append(Violation("constraint", i, float(amount)))
    for j in range(lp.num_vars):
        lo, hi = lp.lower[j], lp.upper[j]
        if np.isfinite(lo) and lo - x[j] > tol * max(1.0, abs(lo)):
            out.append(Violation("lower", j, float(lo - x[j])))
        if np.isfinite(hi) and x[j] - hi > tol * max(1.0, abs(hi)):
            out.append(Violation("upper", j, float(x[j] - hi)))
    return ViolationReport(tuple(out))


# ---------------------------------------------------------------------------
# Basis factorization engines
# ---------------------------------------------------------------------------

class _DenseBasis:
    """Explicit dense inverse, O(m^2) per update; wins for small m."""

    def __init__(self, a_cols_dense, basis):
        self._a = a_cols_dense  # m x n_total dense
        self.refactor(basis)

    def refactor(self, basis):
        m = self._a.shape[0]
        if m == 0:
            self._inv = np.zeros((0, 0))
            return
        b = self._a[:, basis]
        self._inv = np.linalg.solve(b, np.eye(m))

    def ftran(self, rhs):
        return self._inv @ rhs

    def btran(self, rhs):
        return self._inv.T @ rhs

    def column(self, j):
        return self._a[:, j]

    def update(self, r, w):
        # Product-form pivot folded straight into the stored inverse.
        inv_r = self._inv[r] / w[r]
        self._inv -= np.outer(w, inv_r)
        self._inv[r] = inv_r

    @property
    def updates_since_refactor(self):
        return 0  # the dense inverse never degrades structurally


class _SparseBasis:
    """Sparse LU refactorized periodically, product-form etas in between."""

    def __init__(self, a_csc, basis):
        self._a = a_csc
        self._col_buf = np.zeros(a_csc.shape[0])
        self.refactor(basis)

    def refactor(self, basis):
        self._lu = splu(self._a[:, basis].tocsc())
        self._etas = []

    def ftran(self, rhs):
        v = self._lu.solve(rhs)
        for r, w in self._etas:
            t = v[r] / w[r]
            v -= w * t
            v[r] = t
        return v

    def btran(self, rhs):
        v = np.array(rhs, dtype=float)
        for r, w in reversed(self._etas):
            v[r] = (v[r] - (w @ v - w[r] * v[r])) / w[r]
        return self._lu.solve(v, trans="T")

    def column(self, j):
        # Direct CSC access; the scipy slicing path is far too slow per pivot.
        a = self._a
        start, end = a.indptr[j], a.indptr[j + 1]
        col = self._col_buf
        col[:] = 0.0
        col[a.indices[start:end]] = a.data[start:end]
        return col.copy()

    def update(self, r, w):
        self._etas.append((r, w.copy()))

    @property
    def updates_since_refactor(self):
        return len(self._etas)


def _fold_row_pairs(a, senses, b):
    """Merge >=/<= row pairs that share a coefficient vector byte-for-byte.

    The pair lo <= v.x <= hi becomes the single row v.x + s = hi with slack
    s in [0, hi - lo].  Pairs whose sides differ by many orders of magnitude
    are left alone: measuring the narrow side through a slack anchored at
    the wide side would drown real violations in float cancellation.
    Unpaired rows keep one-sided slacks: <= gives s in [0, inf), >= gives
    s in (-inf, 0], == pins s at 0.  Returns the folded system plus a flag
    for pairs that contradict (hi < lo).
    """
    m = a.shape[0]
    groups: dict[bytes, dict[str, list[int]]] = {}
    for i in range(m):
        side = groups.setdefault(a[i].tobytes(), {"ge": [], "le": []})
        if senses[i] == GREATER_EQUAL:
            side["ge"].append(i)
        elif senses[i] == LESS_EQUAL:
            side["le"].append(i)

    partner = np.full(m, -1)
    for side in groups.values():
        for i_ge, i_le in zip(side["ge"], side["le"]):
            span = b[i_le] - b[i_ge]
            if span <= 1e4 * (1.0 + min(abs(b[i_le]), abs(b[i_ge]))):
                partner[i_ge] = i_le
                partner[i_le] = i_ge

    keep = []
    lo_list = []
    hi_list = []
    rhs_list = []
    infeasible = False
    for i in range(m):
        j = partner[i]
        if j >= 0 and j < i:
            continue  # folded into its earlier partner
        if j >= 0:
            ge, le = (i, j) if senses[i] == GREATER_EQUAL else (j, i)
            span = b[le] - b[ge]
            if span < 0:
                infeasible = True
                span = 0.0
            keep.append(i)
            rhs_list.append(b[le])
            lo_list.append(0.0)
            hi_list.append(span)
        else:
            keep.append(i)
            rhs_list.append(b[i])
            if senses[i] == LESS_EQUAL:
                lo_list.append(0.0)
                hi_list.append(np.inf)
            elif senses[i] == GREATER_EQUAL:
                lo_list.append(-np.inf)
                hi_list.append(0.0)
            else:
                lo_list.append(0.0)
                hi_list.append(0.0)

    return (
        a[keep] if m else a,
        np.asarray(rhs_list),
        np.asarray(lo_list),
        np.asarray(hi_list),
        infeasible,
    )


# Nonbasic status codes
_AT_LOWER = 0
_AT_UPPER = 1
_BASIC = 2
_FREE = 3  # nonbasic at value 0 with both bounds infinite


class _Simplex:
    """Two-phase bounded revised simplex over rows A x = b with slacks.

    Phase 1 minimizes the total bound violation of the basic variables
    directly (elastic / piecewise-linear objective with a long-step ratio
    test), so a single pivot can repair many violated rows at once.  Phase 2
    is the ordinary bounded simplex on the true objective.
    """

    def __init__(self, lp: LinearProgram, tol: ToleranceSettings):
        self.tol = tol
        n = lp.num_vars
        m_orig = lp.num_constraints

        # Row equilibration by powers of two keeps the arithmetic exact in
        # the solution space while making the feasibility tolerance meaningful
        # for rows whose coefficients are large (bits-per-slot scale).
        row_max = np.abs(lp.a_matrix).max(axis=1, initial=0.0) if m_orig else np.zeros(0)
        row_scale = np.ones(m_orig)
        nz = row_max > 0
        row_scale[nz] = np.exp2(-np.round(np.log2(row_max[nz])))
        a_all = lp.a_matrix * row_scale[:, None] if m_orig else lp.a_matrix
        b_all = lp.rhs * row_scale

        # Two-sided constraints arrive as >=/<= row pairs with identical
        # coefficient vectors (buffer bounds do); fold each pair into one row
        # with a ranged slack, halving the basis size.
        a, b, slack_lo, slack_hi, self.trivially_infeasible = _fold_row_pairs(
            a_all, lp.senses, b_all
        )
        m = a.shape[0]

        self.m = m
        self.n_struct = n
        self.lower = np.concatenate([lp.lower, slack_lo])
        self.upper = np.concatenate([lp.upper, slack_hi])
        self.c = np.concatenate([lp.objective, np.zeros(m)])
        self.b = b

        self._dense = m <= _DENSE_ENGINE_MAX_ROWS
        if self._dense:
            self._cols = np.hstack([a, np.eye(m)]) if m else np.zeros((0, n))
        else:
            self._cols_sp = sp.hstack(
                [sp.csc_matrix(a), sp.eye(m, format="csc")], format="csc"
            )

        self.n_total = n + m
        self.iterations = 0
        self.max_iterations = 50 * (n + m_orig)

    # -- setup ---------------------------------------------------------------

    def _initial_point(self):
        lo, hi = self.lower, self.upper
        n_tot = self.n_total
        self.vstat = np.full(n_tot, _AT_LOWER, dtype=np.int8)
        x = np.where(np.isfinite(lo), lo, 0.0)
        at_upper = ~np.isfinite(lo) & np.isfinite(hi)
        x[at_upper] = hi[at_upper]
        self.vstat[at_upper] = _AT_UPPER
        free = ~np.isfinite(lo) & ~np.isfinite(hi)
        x[free] = 0.0
        self.vstat[free] = _FREE
        return x

    def _setup_basis(self):
        m, n = self.m, self.n_struct
        x = self._initial_point()

        # Slack basis: basic value of slack i is b_i - A_i x_N.  Slacks that
        # land outside their own bounds are left there; phase 1 repairs them.
        struct_x = x[:n]
        if self._dense:
            ax = self._cols[:, :n] @ struct_x if m else np.zeros(0)
        else:
            ax = self._cols_sp[:, :n] @ struct_x if m else np.zeros(0)

        self.basis = np.arange(n, n + m)
        self.vstat[self.basis] = _BASIC
        self.x = x
        self.x[self.basis] = self.b - ax

        if self._dense:
            self.engine = _DenseBasis(self._cols, self.basis)
        else:
            self.engine = _SparseBasis(self._cols_sp, self.basis)

    # -- helpers ---------------------------------------------------------------

    def _nonbasic_rhs(self):
        """b minus the contribution of all nonbasic variables."""
        mask = self.vstat != _BASIC
        xn = np.where(mask, self.x, 0.0)
        if self._dense:
            return self.b - self._cols @ xn
        return self.b - self._cols_sp @ xn

    def _recompute_basics(self):
        if self.m:
            self.x[self.basis] = self.engine.ftran(self._nonbasic_rhs())

    def _reduced_costs(self, c):
        if self.m == 0:
            return c.copy()
        y = self.engine.btran(c[self.basis])
        if self._dense:
            d = c - self._cols.T @ y
        else:
            d = c - self._cols_sp.T @ y
        return d

    # -- main loop ---------------------------------------------------------------

    def _price(self, d, opt_tol, bland):
        """Pick the entering column, or -1 if none is eligible."""
        fixed = self.lower == self.upper
        can_up = (self.vstat == _AT_LOWER) | (self.vstat == _FREE)
        can_dn = (self.vstat == _AT_UPPER) | (self.vstat == _FREE)
        elig_up = can_up & ~fixed & (d < -opt_tol)
        elig_dn = can_dn & ~fixed & (d > opt_tol)
        if bland:
            idx = np.flatnonzero(elig_up | elig_dn)
            return (int(idx[0]) if idx.size else -1)
        vio = np.zeros(self.n_total)
        vio[elig_up] = -d[elig_up]
        vio[elig_dn] = d[elig_dn]
        q = int(np.argmax(vio))
        return q if vio[q] > 0 else -1

    def _ratio_test(self, q, delta, w):
        """Smallest step before a basic variable or the entering bound blocks.

        Returns (step, leaving_position, bound_flip, leaving_to_upper).
        """
        lo_b = self.lower[self.basis]
        hi_b = self.upper[self.basis]
        xb = self.x[self.basis]
        dw = delta * w

        t_best = np.inf
        r_best = -1
        to_upper = False

        dec = dw > _PIVOT_TOL  # basic value decreases toward its lower bound
        inc = dw < -_PIVOT_TOL  # basic value increases toward its upper bound
        with np.errstate(invalid="ignore", divide="ignore"):
            ratios = np.full(self.m, np.inf)
            gap_lo = np.maximum(xb - lo_b, 0.0)
            gap_hi = np.maximum(hi_b - xb, 0.0)
            ratios[dec] = gap_lo[dec] / dw[dec]
            ratios[inc] = gap_hi[inc] / (-dw[inc])
        if self.m:
            t_rows = ratios.min() if ratios.size else np.inf
            if np.isfinite(t_rows):
                near = np.flatnonzero(ratios <= t_rows + 1e-12 * (1.0 + t_rows))
                r_best = int(near[np.argmax(np.abs(dw[near]))])
                t_best = float(ratios[r_best])
                to_upper = bool(inc[r_best])

        # The entering variable may hit its own opposite bound first.
        span = self.upper[q] - self.lower[q]
        if np.isfinite(span) and span < t_best:
            return float(span), -1, True, False
        if not np.isfinite(t_best):
            return np.inf, -1, False, False
        return t_best, r_best, False, to_upper

    def _apply_pivot(self, q, delta, w, step, r, flip, to_upper):
        """Commit a step of the entering variable: flip its bound or swap it
        into the basis at position ``r``."""
        if self.m:
            self.x[self.basis] -= delta * step * w
        if flip:
            if self.vstat[q] == _AT_LOWER:
                self.x[q] = self.upper[q]
                self.vstat[q] = _AT_UPPER
            else:
                self.x[q] = self.lower[q]
                self.vstat[q] = _AT_LOWER
            return
        leaving = self.basis[r]
        self.x[q] = self.x[q] + delta * step
        self.x[leaving] = self.upper[leaving] if to_upper else self.lower[leaving]
        self.vstat[leaving] = _AT_UPPER if to_upper else _AT_LOWER
        self.vstat[q] = _BASIC
        self.basis[r] = q
        self.engine.update(r, w)
        if self.engine.updates_since_refactor >= _REFACTOR_INTERVAL:
            self.engine.refactor(self.basis)
            self._recompute_basics()

    def _infeasibility_masks(self):
        xb = self.x[self.basis]
        lob = self.lower[self.basis]
        hib = self.upper[self.basis]
        eps_lo = self.tol.feasibility * (1.0 + np.abs(np.where(np.isfinite(lob), lob, 0.0)))
        eps_hi = self.tol.feasibility * (1.0 + np.abs(np.where(np.isfinite(hib), hib, 0.0)))
        below = xb < lob - eps_lo
        above = xb > hib + eps_hi
        return below, above

    def _elastic_ratio(self, q, delta, w, d_q, below, above):
        """Long-step ratio test for the infeasibility-sum objective.

        Walks the breakpoints where a basic variable crosses one of its
        bounds; the objective slope rises by |dw| at each crossing and the
        step stops at the first breakpoint where the slope turns nonnegative.
        Returns (step, position, flip, to_upper) like the standard test.
        """
        dw = delta * w
        lob = self.lower[self.basis]
        hib = self.upper[self.basis]
        xb = self.x[self.basis]

        dec = dw > _PIVOT_TOL
        inc = dw < -_PIVOT_TOL

        ts = []
        gains = []
        rows = []
        uppers = []  # whether the variable lands on its upper bound

        def add(mask, t_vals, to_upper_flag):
            idx = np.flatnonzero(mask)
            if idx.size:
                ts.append(np.maximum(t_vals[idx], 0.0))
                gains.append(np.abs(dw[idx]))
                rows.append(idx)
                uppers.append(np.full(idx.size, to_upper_flag))

        with np.errstate(invalid="ignore", divide="ignore"):
            # Decreasing basics: re-enter from above at the upper bound, then
            # block (or start violating) at a finite lower bound.
            m1 = dec & above
            add(m1, (xb - hib) / dw, True)
            m2 = dec & ~below & np.isfinite(lob)
            add(m2, (xb - lob) / dw, False)
            # Increasing basics: re-enter from below, then hit a finite upper.
            m3 = inc & below
            add(m3, (lob - xb) / (-dw), False)
            m4 = inc & ~above & np.isfinite(hib)
            add(m4, (hib - xb) / (-dw), True)

        span = self.upper[q] - self.lower[q]
        if ts:
            t_all = np.concatenate(ts)
            g_all = np.concatenate(gains)
            r_all = np.concatenate(rows)
            u_all = np.concatenate(uppers)
            order = np.lexsort((r_all, t_all))
            slope = d_q if delta > 0 else -d_q  # always negative at t=0
            t_stop = None
            for j in order:
                if np.isfinite(span) and span < t_all[j]:
                    return float(span), -1, True, False
                slope += g_all[j]
                if slope >= -1e-12:
                    return float(t_all[j]), int(r_all[j]), False, bool(u_all[j])
                t_stop = j
            # Slope never turned: the sum of infeasibilities is bounded below
            # by zero, so this can only be roundoff; stop at the last crossing.
            if t_stop is not None:
                j = t_stop
                return float(t_all[j]), int(r_all[j]), False, bool(u_all[j])
        if np.isfinite(span):
            return float(span), -1, True, False
        return np.inf, -1, False, False

    def _phase1(self, cap):
        bland = False
        degenerate_run = 0
        while True:
            below, above = self._infeasibility_masks()
            if not below.any() and not above.any():
                return LpStatus.OPTIMAL
            if self.iterations >= cap:
                return LpStatus.ITERATION_LIMIT
            c1b = np.zeros(self.m)
            c1b[below] = -1.0
            c1b[above] = 1.0
            y = self.engine.btran(c1b)
            if self._dense:
                d = -(self._cols.T @ y)
            else:
                d = -(self._cols_sp.T @ y)
            q = self._price(d, self.tol.optimality, bland)
            if q < 0:
                return LpStatus.INFEASIBLE
            delta = 1.0 if d[q] < 0 else -1.0
            w = self.engine.ftran(self.engine.column(q))
            step, r, flip, to_upper = self._elastic_ratio(q, delta, w, d[q], below, above)
            if not np.isfinite(step):
                # No finite breakpoint would mean the infeasibility sum is
                # unbounded below, which is impossible; treat as a failure.
                return LpStatus.ITERATION_LIMIT
            self.iterations += 1
            if step <= _DEGENERATE_STEP:
                degenerate_run += 1
                if degenerate_run >= _BLAND_TRIGGER:
                    bland = True
            else:
                degenerate_run = 0
                bland = False
            self._apply_pivot(q, delta, w, step, r, flip, to_upper)

    def _phase2(self, cap):
        opt_tol = self.tol.optimality * max(1.0, np.abs(self.c).max(initial=0.0))
        bland = False
        degenerate_run = 0
        while True:
            if self.iterations >= cap:
                return LpStatus.ITERATION_LIMIT
            d = self._reduced_costs(self.c)
            q = self._price(d, opt_tol, bland)
            if q < 0:
                return LpStatus.OPTIMAL
            delta = 1.0 if d[q] < 0 else -1.0
            w = self.engine.ftran(self.engine.column(q)) if self.m else np.zeros(0)
            step, r, flip, to_upper = self._ratio_test(q, delta, w)
            if not np.isfinite(step):
                return LpStatus.UNBOUNDED
            self.iterations += 1
            if step <= _DEGENERATE_STEP:
                degenerate_run += 1
                if degenerate_run >= _BLAND_TRIGGER:
                    bland = True
            else:
                degenerate_run = 0
                bland = False
            self._apply_pivot(q, delta, w, step, r, flip, to_upper)

    def solve(self):
        if self.trivially_infeasible:
            return LpStatus.INFEASIBLE
        self._setup_basis()
        cap = self.max_iterations
        if self.m:
            status = self._phase1(cap)
            if status is not LpStatus.OPTIMAL:
                return status
        status = self._phase2(cap)
        if status is LpStatus.OPTIMAL and self.m:
            # One fresh factorization tightens the reported point.
            self.engine.refactor(self.basis)
            self._recompute_basics()
        return status

    def extract(self):
        x = self.x[: self.n_struct].copy()
        lo = self.lower[: self.n_struct]
        hi = self.upper[: self.n_struct]
        # Snap values that drifted within tolerance back onto their bounds.
        snap = self.tol.feasibility * 10.0
        near_lo = np.isfinite(lo) & (np.abs(x - lo) <= snap * np.maximum(1.0, np.abs(lo)))
        x[near_lo] = lo[near_lo]
        near_hi = np.isfinite(hi) & (np.abs(x - hi) <= snap * np.maximum(1.0, np.abs(hi)))
        x[near_hi] = hi[near_hi]
        return x


def solve_lp(lp: LinearProgram, tol: ToleranceSettings | None = None) -> LpSolution:
    """Solve ``lp`` to a basic optimal point, or classify it as infeasible
    or unbounded.  Deterministic: identical inputs give identical output."""
    if tol is None:
        tol = DEFAULT_TOLERANCES
    start = time.perf_counter()
    engine = _Simplex(lp, tol)
    status = engine.solve()
    elapsed = time.perf_counter() - start
    if status is not LpStatus.OPTIMAL:
        return LpSolution(status, None, None, engine.iterations, elapsed)
    x = engine.extract()
    return LpSolution(
        LpStatus.OPTIMAL,
        x,
        float(lp.objective @ x),
        engine.iterations,
        elapsed,
    )
