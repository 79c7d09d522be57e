"""The feasible reward set: per-(s,a) interval bounds, optional general linear
constraints, gaps, and query-driven tightening.

Polytopes are immutable values; every tightening returns a new object.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .lp import LinearProgram, solve_lp

# Gaps at or below this width are treated as resolved (no informative query).
GAP_FLOOR = 1e-9


class EmptyPolytopeError(ValueError):
    """A tightening (or construction) left no feasible reward."""


class QueryResponse(enum.Enum):
    YES = "yes"
    NO = "no"
    UNSURE = "unsure"


@dataclass(frozen=True)
class LinearRewardConstraint:
    """sum coeff * r(s,a) <= rhs, with sparse (s, a, coeff) terms."""

    terms: tuple  # ((s, a, coeff), ...)
    rhs: float

    def row(self, n, k):
        row = np.zeros(n * k)
        for s, a, c in self.terms:
            row[s * k + a] += c
        return row


@dataclass(frozen=True)
class BoundQuery:
    """Is r(s, a) >= b?  ``epsilon`` is the indifference half-width."""

    s: int
    a: int
    b: float
    epsilon: float = 0.0


class RewardPolytope:
    """Box bounds lo <= r <= hi plus optional linear rows C r <= d.

    The box must be finite (this is what guarantees boundedness); emptiness is
    checked on construction and after every tightening that touches a linear
    constraint's support.
    """

    def __init__(self, lo, hi, constraints=(), _skip_check=False):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if lo.ndim != 2 or lo.shape != hi.shape:
            raise ValueError("lo and hi must be matching (n, k) matrices")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("interval bounds must be finite (bounded polytope)")
        if np.any(lo > hi + 1e-12):
            raise EmptyPolytopeError("lo exceeds hi")
        self.lo = lo.copy()
        self.hi = hi.copy()
        self.lo.setflags(write=False)
        self.hi.setflags(write=False)
        self.constraints = tuple(constraints)
        self.n, self.k = lo.shape
        if self.constraints and not _skip_check:
            self._assert_nonempty()

    @property
    def n_pairs(self):
        return self.n * self.k

    def constraint_rows(self):
        if not self.constraints:
            return np.zeros((0, self.n_pairs)), np.zeros(0)
        rows = np.vstack([c.row(self.n, self.k) for c in self.constraints])
        rhs = np.array([c.rhs for c in self.constraints])
        return rows, rhs

    def _feasibility_lp(self, objective):
        rows, rhs = self.constraint_rows()
        return LinearProgram(
            objective=objective,
            a=rows,
            relations=("<=",) * rows.shape[0],
            rhs=rhs,
            lo=self.lo.reshape(-1),
            hi=self.hi.reshape(-1),
        )

    def _assert_nonempty(self):
        sol = solve_lp(self._feasibility_lp(np.zeros(self.n_pairs)))
        if not sol.optimal:
            # Identify a violated constraint for the diagnostic: the row whose
            # best case (componentwise) still exceeds its rhs, if any.
            for i, c in enumerate(self.constraints):
                row = c.row(self.n, self.k)
                best = np.where(row > 0, self.lo.reshape(-1), self.hi.reshape(-1))
                if row @ best > c.rhs + 1e-12:
                    raise EmptyPolytopeError(
                        f"constraint {i} ({c.terms} <= {c.rhs}) is unsatisfiable"
                    )
            raise EmptyPolytopeError("linear constraints jointly unsatisfiable")

    def contains(self, r, tol=1e-9):
        r = np.asarray(r, dtype=float).reshape(-1)
        if np.any(r < self.lo.reshape(-1) - tol) or np.any(r > self.hi.reshape(-1) + tol):
            return False
        rows, rhs = self.constraint_rows()
        return not rows.shape[0] or bool(np.all(rows @ r <= rhs + tol))

    def midpoint(self):
        return ((self.lo + self.hi) / 2.0).reshape(-1)

    def is_box(self):
        return not self.constraints

    def __repr__(self):
        return (
            f"RewardPolytope(n={self.n}, k={self.k}, "
            f"constraints={len(self.constraints)}, mass={interval_mass(self):.4g})"
        )


def gap(R: RewardPolytope, s, a) -> float:
    """Width of the feasible range of r(s,a): max minus min over the polytope."""
    if R.is_box():
        return float(R.hi[s, a] - R.lo[s, a])
    obj = np.zeros(R.n_pairs)
    obj[s * R.k + a] = 1.0
    top = solve_lp(R._feasibility_lp(obj))
    bot = solve_lp(R._feasibility_lp(-obj))
    if not (top.optimal and bot.optimal):
        raise EmptyPolytopeError("polytope is empty")
    return float(top.value + bot.value)  # max r_sa + max(-r_sa)


def pointwise_extrema(R: RewardPolytope):
    """Componentwise (min, max) of r over the polytope, as flat vectors.

    The assembled extreme vectors need not themselves be feasible points;
    that is deliberate (they only feed value bounds).
    """
    if R.is_box():
        return R.lo.reshape(-1).copy(), R.hi.reshape(-1).copy()
    r_lo = np.empty(R.n_pairs)
    r_hi = np.empty(R.n_pairs)
    for j in range(R.n_pairs):
        obj = np.zeros(R.n_pairs)
        obj[j] = 1.0
        top = solve_lp(R._feasibility_lp(obj))
        bot = solve_lp(R._feasibility_lp(-obj))
        if not (top.optimal and bot.optimal):
            raise EmptyPolytopeError("polytope is empty")
        r_hi[j] = top.value
        r_lo[j] = -bot.value
    return r_lo, r_hi


def apply_response(R: RewardPolytope, q: BoundQuery, resp: QueryResponse) -> RewardPolytope:
    """Tighten the queried interval: Yes raises lo to b, No lowers hi to b,
    Unsure clamps both bounds to within epsilon of b."""
    lo = R.lo.copy()
    hi = R.hi.copy()
    if not lo[q.s, q.a] < q.b < hi[q.s, q.a]:
        raise ValueError(f"query bound {q.b} outside the open interval at ({q.s},{q.a})")
    if resp is QueryResponse.YES:
        lo[q.s, q.a] = q.b
    elif resp is QueryResponse.NO:
        hi[q.s, q.a] = q.b
    else:
        lo[q.s, q.a] = max(lo[q.s, q.a], q.b - q.epsilon)
        hi[q.s, q.a] = min(hi[q.s, q.a], q.b + q.epsilon)

    # Pure-box updates can never empty the set; re-check only when some linear
    # constraint involves the tightened coordinate.
    touched = any(
        (s, a) == (q.s, q.a) for c in R.constraints for s, a, _ in c.terms
    )
    return RewardPolytope(lo, hi, R.constraints, _skip_check=not touched)


def interval_mass(R: RewardPolytope) -> float:
    """chi: the summed length of the raw box intervals."""
    return float(np.sum(R.hi - R.lo))
