"""Dense bounded-variable simplex solver.

Solves   maximize c . x   subject to   A x = b,   lower <= x <= upper,
where either bound may be infinite. Problems in this package are small
(tens of variables), so everything is dense and each iteration refactors
the basis with a fresh linear solve; accuracy is favored over speed.

Pivoting is deterministic: Dantzig pricing with ties broken by lowest
variable index, falling back to Bland's rule after a run of degenerate
steps. Identical inputs therefore produce bit-identical solutions, which
keeps Monte Carlo sweeps reproducible across runs and worker counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InternalCheckError, ParameterError

FEASIBILITY_TOL = 1e-8
REDUCED_COST_TOL = 1e-9

_PIVOT_TOL = 1e-10
_DEGENERATE_STEP = 1e-12
_STALL_LIMIT = 64        # degenerate iterations tolerated before switching to Bland's rule
_MAX_ITERATIONS = 20_000

# nonbasic-at-lower / nonbasic-at-upper / nonbasic free (at zero) / basic
_NB_LOWER, _NB_UPPER, _NB_FREE, _BASIC = 0, 1, 2, 3


class LPStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


def _as_readonly(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LinearProgram:
    """maximize objective . x  s.t.  a_eq x = b_eq  and  lower <= x <= upper."""

    objective: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        obj = _as_readonly(self.objective)
        if obj.ndim != 1:
            raise ParameterError("objective must be one-dimensional")
        n = obj.size
        a = np.array(self.a_eq, dtype=float)
        if a.ndim != 2:
            a = a.reshape(-1, n) if a.size else a.reshape(0, n)
        if a.shape[1] != n:
            raise ParameterError(
                f"constraint matrix has {a.shape[1]} columns for {n} variables"
            )
        a.setflags(write=False)
        b = _as_readonly(self.b_eq)
        if b.shape != (a.shape[0],):
            raise ParameterError("right-hand side length does not match constraint rows")
        lower = _as_readonly(self.lower)
        upper = _as_readonly(self.upper)
        if lower.shape != (n,) or upper.shape != (n,):
            raise ParameterError("bound vectors must have one entry per variable")
        if not np.all(np.isfinite(obj)):
            raise ParameterError("objective coefficients must be finite")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ParameterError("equality constraints must be finite")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
            raise ParameterError("bounds must not be NaN")
        if np.any(lower > upper):
            j = int(np.argmax(lower > upper))
            raise ParameterError(f"variable {j}: lower bound exceeds upper bound")
        object.__setattr__(self, "objective", obj)
        object.__setattr__(self, "a_eq", a)
        object.__setattr__(self, "b_eq", b)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def num_variables(self) -> int:
        return self.objective.size


@dataclass(frozen=True)
class LPSolution:
    """Solver verdict. `values` is empty and the objective NaN unless optimal."""

    status: LPStatus
    values: np.ndarray
    objective_value: float


def _initial_point(lower: np.ndarray, upper: np.ndarray):
    """Start each variable at its lower bound when finite, else upper, else zero."""
    n = lower.size
    x = np.zeros(n)
    stat = np.full(n, _NB_FREE, dtype=np.int8)
    fin_lo = np.isfinite(lower)
    fin_up = np.isfinite(upper)
    x[fin_lo] = lower[fin_lo]
    stat[fin_lo] = _NB_LOWER
    only_up = ~fin_lo & fin_up
    x[only_up] = upper[only_up]
    stat[only_up] = _NB_UPPER
    return x, stat


def _iterate(c, a, b, lower, upper, basis, stat, x) -> str:
    """Run simplex iterations in place; returns 'optimal' or 'unbounded'."""
    m = basis.size
    bland = False
    stall = 0
    for _ in range(_MAX_ITERATIONS):
        if m:
            basis_cols = a[:, basis]
            x_nb = x.copy()
            x_nb[basis] = 0.0
            try:
                x[basis] = np.linalg.solve(basis_cols, b - a @ x_nb)
                y = np.linalg.solve(basis_cols.T, c[basis])
            except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded by pivot tol
                raise InternalCheckError(f"singular simplex basis: {exc}") from exc
            reduced = c - y @ a
        else:
            reduced = c.copy()
        reduced[basis] = 0.0

        can_increase = (stat == _NB_LOWER) | (stat == _NB_FREE)
        can_decrease = (stat == _NB_UPPER) | (stat == _NB_FREE)
        movable = upper > lower
        candidates = movable & (
            (can_increase & (reduced > REDUCED_COST_TOL))
            | (can_decrease & (reduced < -REDUCED_COST_TOL))
        )
        candidates[basis] = False
        idxs = np.flatnonzero(candidates)
        if idxs.size == 0:
            return "optimal"
        if bland:
            enter = int(idxs[0])
        else:
            # Dantzig pricing; np.argmax takes the first maximum, i.e. lowest index
            enter = int(idxs[np.argmax(np.abs(reduced[idxs]))])
        direction = 1.0 if (stat[enter] == _NB_LOWER or reduced[enter] > 0.0) else -1.0

        if m:
            w = np.linalg.solve(basis_cols, a[:, enter])
            g = -direction * w  # per-unit change of each basic variable
            xb = x[basis]
            caps = np.full(m, np.inf)
            hits_upper = g > _PIVOT_TOL
            hits_lower = g < -_PIVOT_TOL
            caps[hits_upper] = (upper[basis[hits_upper]] - xb[hits_upper]) / g[hits_upper]
            caps[hits_lower] = (lower[basis[hits_lower]] - xb[hits_lower]) / g[hits_lower]
            np.maximum(caps, 0.0, out=caps)
            step_basic = float(caps.min())
        else:
            g = np.zeros(0)
            xb = np.zeros(0)
            caps = np.zeros(0)
            step_basic = np.inf
        step_self = upper[enter] - lower[enter]  # bound-to-bound flip distance
        step = min(step_basic, step_self)
        if not np.isfinite(step):
            return "unbounded"

        if step_self < step_basic:
            # entering variable flips to its opposite bound; basis unchanged
            if m:
                x[basis] = xb + g * step
            x[enter] = upper[enter] if direction > 0 else lower[enter]
            stat[enter] = _NB_UPPER if direction > 0 else _NB_LOWER
        else:
            tied = np.flatnonzero(caps <= step + 1e-12)
            leave_pos = int(tied[np.argmin(basis[tied])])  # lowest variable index wins
            leaving = int(basis[leave_pos])
            x[basis] = xb + g * step
            x[enter] += direction * step
            if g[leave_pos] > 0:
                x[leaving] = upper[leaving]
                stat[leaving] = _NB_UPPER
            else:
                x[leaving] = lower[leaving]
                stat[leaving] = _NB_LOWER
            stat[enter] = _BASIC
            basis[leave_pos] = enter

        stall = stall + 1 if step <= _DEGENERATE_STEP else 0
        if stall >= _STALL_LIMIT:
            bland = True
    raise InternalCheckError("simplex iteration cap exceeded")


def _drive_out_artificials(a, lower, upper, basis, stat, x, n_real):
    """Swap zero-valued artificial variables out of the basis where possible.

    A row whose artificial cannot be exchanged for any real column is
    redundant; its artificial stays basic, pinned at zero.
    """
    m = basis.size
    for pos in range(m):
        if basis[pos] < n_real:
            continue
        basis_cols = a[:, basis]
        unit = np.zeros(m)
        unit[pos] = 1.0
        row = np.linalg.solve(basis_cols.T, unit) @ a[:, :n_real]
        pick = -1
        for j in range(n_real):
            if stat[j] != _BASIC and upper[j] > lower[j] and abs(row[j]) > 1e-7:
                pick = j
                break
        if pick < 0:
            for j in range(n_real):
                if stat[j] != _BASIC and abs(row[j]) > 1e-9:
                    pick = j
                    break
        if pick < 0:
            continue
        artificial = int(basis[pos])
        basis[pos] = pick
        stat[pick] = _BASIC
        stat[artificial] = _NB_LOWER
        x[artificial] = 0.0


def solve(lp: LinearProgram) -> LPSolution:
    """Two-phase simplex. Infeasible and unbounded problems are reported
    through the status, never raised; a returned optimum is re-verified
    against the constraints and bounds before it leaves this function.
    """
    c = lp.objective.copy()
    a = lp.a_eq
    b = lp.b_eq
    lower = lp.lower.copy()
    upper = lp.upper.copy()
    n = c.size
    m = b.size

    x0, stat0 = _initial_point(lower, upper)
    empty = _as_readonly(np.zeros(0))

    if m:
        residual = b - a @ x0
        signs = np.where(residual >= 0.0, 1.0, -1.0)
        a1 = np.hstack([a, np.diag(signs)])
        lo1 = np.concatenate([lower, np.zeros(m)])
        up1 = np.concatenate([upper, np.full(m, np.inf)])
        x = np.concatenate([x0, np.abs(residual)])
        stat = np.concatenate([stat0, np.full(m, _BASIC, dtype=np.int8)])
        basis = np.arange(n, n + m)

        c_phase1 = np.concatenate([np.zeros(n), -np.ones(m)])
        outcome = _iterate(c_phase1, a1, b, lo1, up1, basis, stat, x)
        if outcome != "optimal":  # pragma: no cover - phase 1 objective is bounded
            raise InternalCheckError("phase-1 simplex reported unbounded")
        if x[n:].sum() > FEASIBILITY_TOL:
            return LPSolution(LPStatus.INFEASIBLE, empty, float("nan"))
        _drive_out_artificials(a1, lo1, up1, basis, stat, x, n)
        lo1[n:] = 0.0
        up1[n:] = 0.0  # artificials pinned; they can never re-enter
        c_phase2 = np.concatenate([c, np.zeros(m)])
        outcome = _iterate(c_phase2, a1, b, lo1, up1, basis, stat, x)
        values = x[:n]
    else:
        basis = np.zeros(0, dtype=int)
        x = x0
        outcome = _iterate(c, a, b, lower, upper, basis, stat0, x)
        values = x

    if outcome == "unbounded":
        return LPSolution(LPStatus.UNBOUNDED, empty, float("nan"))

    # post-hoc certification; a violation here is a solver bug
    if m:
        eq_residual = float(np.abs(a @ values - b).max())
        if eq_residual > FEASIBILITY_TOL:
            raise InternalCheckError(f"optimal point violates equalities by {eq_residual:.3e}")
    below = lp.lower - values
    above = values - lp.upper
    bound_violation = max(
        float(below[np.isfinite(below)].max(initial=0.0)),
        float(above[np.isfinite(above)].max(initial=0.0)),
    )
    if bound_violation > FEASIBILITY_TOL:
        raise InternalCheckError(f"optimal point violates bounds by {bound_violation:.3e}")

    return LPSolution(LPStatus.OPTIMAL, _as_readonly(values), float(c @ values))
