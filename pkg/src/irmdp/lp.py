"""Linear programs and small binary MIPs, solved exactly via HiGHS.

Every optimization in this package bottoms out here.  Programs are stated in
maximization form with explicit per-variable bounds; constraint rows carry a
relation in {"<=", "=", ">="}.  Duals are reported for the *maximization*
problem: ``duals[i]`` is the sensitivity of the optimal objective to the
right-hand side of row i.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

# Solver-side feasibility tolerance handed to HiGHS, and the (relative)
# tolerance at which reported solutions are re-validated before being
# returned.  HiGHS enforces its tolerance on the scaled problem, so unscaled
# violations on badly conditioned rows can exceed it by an order of
# magnitude; the check guards against gross errors, not solver slop.  MIP
# incumbents are validated more loosely still: HiGHS's MIP feasibility
# tolerance cannot be tightened safely (see solve_binary_mip).
SOLVER_TOL = 1e-9
CHECK_TOL = 1e-6
MIP_CHECK_TOL = 1e-5
# Absolute optimality gap for branch and bound.
MIP_GAP = 1e-7

RELATIONS = ("<=", "=", ">=")


class LpInputError(ValueError):
    """Structurally malformed program (dimension mismatch, bad bounds)."""


class LpNumericalError(RuntimeError):
    """Solver stalled or returned a solution that fails validation."""


@dataclass
class LinearProgram:
    """max objective . x  subject to rows and per-variable bounds.

    ``a`` may be dense or scipy-sparse; ``from_rows`` builds it from
    (coefficients, relation, rhs) triples.  Bounds default to free variables;
    use +-inf for one-sided bounds.
    """

    objective: np.ndarray
    a: object  # (m, n) ndarray or scipy sparse
    relations: tuple
    rhs: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        self.rhs = np.asarray(self.rhs, dtype=float)
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        n = self.objective.shape[0]
        m = self.rhs.shape[0]
        if not sp.issparse(self.a):
            self.a = np.asarray(self.a, dtype=float).reshape(m, -1) if m else np.zeros((0, n))
        if self.a.shape != (m, n):
            raise LpInputError(f"constraint matrix is {self.a.shape}, expected {(m, n)}")
        if len(self.relations) != m:
            raise LpInputError("one relation per constraint row required")
        for rel in self.relations:
            if rel not in RELATIONS:
                raise LpInputError(f"unknown relation {rel!r}")
        if self.lo.shape != (n,) or self.hi.shape != (n,):
            raise LpInputError("bounds must have one (lo, hi) pair per variable")
        if np.any(self.lo > self.hi):
            raise LpInputError("variable lower bound exceeds upper bound")

    @property
    def n_vars(self):
        return self.objective.shape[0]

    @classmethod
    def from_rows(cls, objective, rows, bounds=None):
        """Build from a list of (coefficient vector, relation, rhs) triples."""
        objective = np.asarray(objective, dtype=float)
        n = objective.shape[0]
        coeffs, rels, rhs = [], [], []
        for vec, rel, b in rows:
            coeffs.append(np.asarray(vec, dtype=float))
            rels.append(rel)
            rhs.append(float(b))
        a = np.vstack(coeffs) if coeffs else np.zeros((0, n))
        if bounds is None:
            lo = np.full(n, -np.inf)
            hi = np.full(n, np.inf)
        else:
            lo = np.array([b[0] if b[0] is not None else -np.inf for b in bounds], dtype=float)
            hi = np.array([b[1] if b[1] is not None else np.inf for b in bounds], dtype=float)
        return cls(objective, a, tuple(rels), np.asarray(rhs), lo, hi)


@dataclass
class BinaryMip:
    """A LinearProgram plus indices restricted to {0, 1}.

    ``groups`` optionally partitions (a subset of) the binary indices into
    groups whose members must sum to 1; the solver enforces the sum-to-one
    rows itself, so they must not also appear in ``base``.
    """

    base: LinearProgram
    binary: tuple = ()
    groups: tuple = field(default=None)

    def __post_init__(self):
        n = self.base.n_vars
        self.binary = tuple(int(i) for i in self.binary)
        for i in self.binary:
            if not 0 <= i < n:
                raise LpInputError(f"binary index {i} out of range")
        if self.groups is not None:
            seen = set()
            bset = set(self.binary)
            for g in self.groups:
                for i in g:
                    if i in seen:
                        raise LpInputError("branching groups must be disjoint")
                    if i not in bset:
                        raise LpInputError("group members must be binary indices")
                    seen.add(i)
            self.groups = tuple(tuple(int(i) for i in g) for g in self.groups)


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded" | "timeout" (MIP only)
    value: float = np.nan
    x: np.ndarray = None
    duals: np.ndarray = None  # one per constraint row, maximization convention
    reduced_costs: np.ndarray = None
    bound: float = None  # MIP dual bound (proved upper bound on the value)

    @property
    def optimal(self):
        return self.status == "optimal"


def _split(lp):
    """Split rows into scipy's A_ub x <= b_ub / A_eq x = b_eq blocks."""
    rels = np.array(lp.relations)
    le = np.where(rels == "<=")[0]
    ge = np.where(rels == ">=")[0]
    eq = np.where(rels == "=")[0]
    if sp.issparse(lp.a):
        a = lp.a.tocsr()
        a_ub = sp.vstack([a[le], -a[ge]], format="csr") if (len(le) + len(ge)) else None
        a_eq = a[eq] if len(eq) else None
    else:
        a_ub = np.vstack([lp.a[le], -lp.a[ge]]) if (len(le) + len(ge)) else None
        a_eq = lp.a[eq] if len(eq) else None
    b_ub = np.concatenate([lp.rhs[le], -lp.rhs[ge]]) if (len(le) + len(ge)) else None
    b_eq = lp.rhs[eq] if len(eq) else None
    return le, ge, eq, a_ub, b_ub, a_eq, b_eq


def _row_violation(lp, x):
    """Largest relative constraint violation (scaled by the row magnitude)."""
    if lp.rhs.size == 0:
        return 0.0
    ax = lp.a @ x
    rels = np.array(lp.relations)
    viol = np.zeros_like(ax)
    le = rels == "<="
    ge = rels == ">="
    eq = rels == "="
    viol[le] = ax[le] - lp.rhs[le]
    viol[ge] = lp.rhs[ge] - ax[ge]
    viol[eq] = np.abs(ax[eq] - lp.rhs[eq])
    scale = np.maximum(1.0, np.maximum(np.abs(ax), np.abs(lp.rhs)))
    return float(np.max(viol / scale, initial=0.0))


def solve_lp(lp: LinearProgram) -> LpSolution:
    """Solve max objective . x; detects infeasible/unbounded programs.

    Raises LpNumericalError if the solver stalls or the reported optimum
    fails validation -- a wrong answer is never returned silently.
    """
    le, ge, eq, a_ub, b_ub, a_eq, b_eq = _split(lp)
    res = linprog(
        -lp.objective,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=np.column_stack([lp.lo, lp.hi]),
        method="highs",
        options={
            "primal_feasibility_tolerance": SOLVER_TOL,
            "dual_feasibility_tolerance": SOLVER_TOL,
        },
    )
    if res.status == 2:
        return LpSolution(status="infeasible")
    if res.status == 3:
        return LpSolution(status="unbounded")
    if res.status != 0:
        raise LpNumericalError(f"HiGHS stalled: {res.message}")

    x = np.asarray(res.x)
    value = float(lp.objective @ x)
    viol = _row_violation(lp, x)
    bviol = float(max(np.max(lp.lo - x, initial=0.0), np.max(x - lp.hi, initial=0.0)))
    if viol > CHECK_TOL or bviol > CHECK_TOL:
        raise LpNumericalError(f"optimal point violates constraints by {max(viol, bviol):.2e}")

    # Map HiGHS marginals (minimization, d obj / d rhs) back onto the original
    # rows in maximization convention.
    duals = np.zeros(lp.rhs.shape[0])
    if a_ub is not None:
        ub_marg = np.asarray(res.ineqlin.marginals)
        duals[le] = -ub_marg[: len(le)]
        duals[ge] = ub_marg[len(le):]
    if a_eq is not None:
        duals[eq] = -np.asarray(res.eqlin.marginals)
    reduced = -(np.asarray(res.lower.marginals) + np.asarray(res.upper.marginals))
    return LpSolution(status="optimal", value=value, x=x, duals=duals, reduced_costs=reduced)


def dual_objective(lp: LinearProgram, sol: LpSolution) -> float:
    """Dual objective value implied by a solution's duals and reduced costs.

    Equals the primal optimum at optimality (strong duality).  Bound
    multipliers enter through the reduced costs: a variable at a finite bound
    contributes that bound times its reduced cost.
    """
    val = float(sol.duals @ lp.rhs) if lp.rhs.size else 0.0
    for j in range(lp.n_vars):
        z = sol.reduced_costs[j]
        if abs(z) < 1e-12:
            continue
        # The marginal belongs to whichever bound the primal point sits on.
        lo, hi = lp.lo[j], lp.hi[j]
        if np.isfinite(lo) and np.isfinite(hi):
            b = lo if (sol.x[j] - lo) <= (hi - sol.x[j]) else hi
        elif np.isfinite(lo):
            b = lo
        elif np.isfinite(hi):
            b = hi
        else:
            continue
        val += z * b
    return val


def _milp_constraints(lp):
    cons = []
    if lp.rhs.size:
        rels = np.array(lp.relations)
        lb = np.where(rels == "<=", -np.inf, lp.rhs)
        ub = np.where(rels == ">=", np.inf, lp.rhs)
        cons.append(LinearConstraint(sp.csr_matrix(lp.a), lb, ub))
    return cons


def solve_binary_mip(mip: BinaryMip, time_limit=None) -> LpSolution:
    """Globally optimal solution of the MIP via branch and bound (HiGHS).

    With ``time_limit`` set, a limit hit returns status "timeout" carrying the
    incumbent (if any) and the proven dual bound.
    """
    lp = mip.base
    lo = lp.lo.copy()
    hi = lp.hi.copy()
    integrality = np.zeros(lp.n_vars)
    for i in mip.binary:
        integrality[i] = 1
        lo[i] = max(lo[i], 0.0)
        hi[i] = min(hi[i], 1.0)

    cons = _milp_constraints(lp)
    if mip.groups:
        rows = sp.lil_matrix((len(mip.groups), lp.n_vars))
        for gi, g in enumerate(mip.groups):
            for i in g:
                rows[gi, i] = 1.0
        ones = np.ones(len(mip.groups))
        cons.append(LinearConstraint(rows.tocsr(), ones, ones))

    # MIP feasibility stays at HiGHS's default: tightening it makes HiGHS
    # falsely report infeasibility on degenerate (zero-width) instances, so
    # incumbents are validated at MIP_CHECK_TOL instead.
    options = {"mip_rel_gap": 0.0, "mip_abs_gap": MIP_GAP}
    if time_limit is not None:
        options["time_limit"] = float(time_limit)
    with warnings.catch_warnings():
        # mip_abs_gap is not in scipy's allowlist; it is passed to HiGHS verbatim.
        warnings.simplefilter("ignore")
        res = milp(
            c=-lp.objective,
            constraints=cons,
            integrality=integrality,
            bounds=Bounds(lo, hi),
        options=options,
        )
    if res.status == 2:
        return LpSolution(status="infeasible")
    if res.status == 3:
        return LpSolution(status="unbounded")
    if res.status == 1 and time_limit is not None:
        x = np.asarray(res.x) if res.x is not None else None
        value = float(lp.objective @ x) if x is not None else -np.inf
        bound = -float(res.mip_dual_bound) if res.mip_dual_bound is not None else np.inf
        return LpSolution(status="timeout", value=value, x=x, bound=bound)
    if res.status != 0 or res.x is None:
        raise LpNumericalError(f"HiGHS MIP failed: {res.message}")

    x = np.asarray(res.x)
    # Snap binaries: HiGHS guarantees integrality within its own tolerance.
    for i in mip.binary:
        x[i] = round(x[i])
    value = float(lp.objective @ x)
    viol = _row_violation(lp, x)
    if viol > MIP_CHECK_TOL:
        raise LpNumericalError(f"MIP incumbent violates base constraints by {viol:.2e}")
    bound = -float(res.mip_dual_bound) if res.mip_dual_bound is not None else value
    return LpSolution(status="optimal", value=value, x=x, bound=bound)
