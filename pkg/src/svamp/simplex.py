"""Dense two-phase tableau simplex.

Solves ``max c.x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  x >= 0`` and returns
the optimal point together with dual multipliers.

Pivoting rules:

``"bland"``
    lowest-index entering column, lowest-index leaving row among ratio ties.
``"hybrid"`` (default)
    largest reduced cost, but any degenerate pivot switches to Bland's rule
    until the objective strictly improves again.  Bland's rule cannot cycle
    and a strict improvement rules out revisiting a basis, so this
    terminates; it needs far fewer pivots on the highly degenerate
    no-signaling polytope.

Ties are always broken by lowest index, so the pivot sequence is
deterministic.  A :class:`Tableau` keeps its basis between objectives, so a
sequence of LPs over the same feasible region can be warm-started.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-9


class LPError(RuntimeError):
    pass


class Infeasible(LPError):
    pass


class Unbounded(LPError):
    pass


@dataclass
class SimplexResult:
    x: np.ndarray
    objective: float
    y_eq: np.ndarray  # multipliers of the equality rows (free sign)
    y_ub: np.ndarray  # multipliers of the <= rows (non-negative)
    iterations: int


def independent_rows(A: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Indices of a maximal linearly independent subset of rows (Gaussian elimination)."""
    M = np.array(A, dtype=np.float64)
    keep = []
    basis = []  # (pivot column, reduced row)
    for i in range(M.shape[0]):
        row = M[i].copy()
        for col, brow in basis:
            if row[col] != 0.0:
                row -= row[col] * brow
        j = int(np.argmax(np.abs(row)))
        if abs(row[j]) > tol:
            basis.append((j, row / row[j]))
            keep.append(i)
    return np.array(keep, dtype=np.int64)


class Tableau:
    """Feasible simplex tableau over a fixed constraint system.

    Construction runs phase I.  :meth:`maximize` may then be called for any
    number of objectives; each call starts from the basis the previous one
    ended in.
    """

    def __init__(self, A_eq=None, b_eq=None, A_ub=None, b_ub=None, nvar=None,
                 rule: str = "hybrid", max_iter: int = 50_000):
        if rule not in ("bland", "hybrid"):
            raise ValueError(f"unknown pivot rule {rule!r}")
        self.rule = rule
        self.max_iter = max_iter
        if nvar is None:
            nvar = (A_eq if A_eq is not None else A_ub).shape[1]
        self.nvar = nvar
        A_eq = np.zeros((0, nvar)) if A_eq is None else np.asarray(A_eq, dtype=np.float64)
        b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=np.float64)
        A_ub = np.zeros((0, nvar)) if A_ub is None else np.asarray(A_ub, dtype=np.float64)
        b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=np.float64)
        self.n_eq_total = A_eq.shape[0]

        keep = independent_rows(A_eq) if A_eq.shape[0] else np.zeros(0, dtype=np.int64)
        Ae, be = A_eq[keep], b_eq[keep]
        if keep.size < A_eq.shape[0]:
            # dropped rows must be implied by the kept ones
            coef, *_ = np.linalg.lstsq(Ae.T, A_eq.T, rcond=None)
            if not np.allclose(coef.T @ be, b_eq, atol=1e-9):
                raise Infeasible("inconsistent equality constraints")
        self.keep = keep

        m_eq, m_ub = Ae.shape[0], A_ub.shape[0]
        m = m_eq + m_ub
        ncore = nvar + m_ub
        A = np.zeros((m, ncore))
        A[:m_eq, :nvar] = Ae
        A[m_eq:, :nvar] = A_ub
        A[m_eq:, nvar:] = np.eye(m_ub)
        b = np.concatenate([be, b_ub])
        sign = np.where(b < 0, -1.0, 1.0)
        A *= sign[:, None]
        b = b * sign
        self.A, self.b, self.sign = A, b, sign
        self.m_eq, self.m_ub, self.ncore = m_eq, m_ub, ncore

        # Artificial columns are never re-entered and duals are recomputed
        # from the basis, so they are not stored: artificials are labelled
        # ncore + r in the basis and only their row exists.
        T = np.zeros((m + 1, ncore + 1))
        T[:m, :ncore] = A
        T[:m, -1] = b
        basis = np.arange(ncore, ncore + m)
        # a slack on a row with non-negative rhs is a valid starting basic variable
        for r in range(m_eq, m):
            if sign[r] > 0:
                basis[r] = nvar + (r - m_eq)
        art = basis >= ncore
        T[-1, :ncore] = A[art].sum(axis=0)
        T[-1, -1] = b[art].sum()
        self.T, self.basis = T, basis
        self.iterations = self._run()
        if T[-1, -1] > FEAS_TOL * max(1.0, float(b.sum())):
            raise Infeasible(f"phase I residual {T[-1, -1]:.3g}")
        for r in range(m):
            if basis[r] >= ncore:
                nz = np.flatnonzero(np.abs(T[r, :ncore]) > PIVOT_TOL)
                if nz.size == 0:
                    raise LPError("redundant row survived reduction")
                kernels.pivot_inplace(T, r, int(nz[0]))
                basis[r] = int(nz[0])

    def _run(self) -> int:
        """Pivot until no reduced cost (last row, c_j - z_j) is positive."""
        T, basis, ncore = self.T, self.basis, self.ncore
        bland = self.rule == "bland"
        it = 0
        while True:
            cost = T[-1, :ncore]
            if bland:
                cand = np.flatnonzero(cost > PIVOT_TOL)
                if cand.size == 0:
                    return it
                c = int(cand[0])
            else:
                c = int(np.argmax(cost))
                if cost[c] <= PIVOT_TOL:
                    return it
            colv = T[:-1, c]
            rows = np.flatnonzero(colv > PIVOT_TOL)
            if rows.size == 0:
                raise Unbounded("objective unbounded")
            ratios = T[rows, -1] / colv[rows]
            best = ratios.min()
            tied = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
            r = int(tied[np.argmin(basis[tied])])
            kernels.pivot_inplace(T, r, c)
            basis[r] = c
            it += 1
            if self.rule == "hybrid":
                bland = best <= PIVOT_TOL
            if it > self.max_iter:
                raise LPError("iteration limit reached")

    def maximize(self, c) -> SimplexResult:
        c = np.asarray(c, dtype=np.float64)
        T, basis = self.T, self.basis
        cfull = np.concatenate([c, np.zeros(self.m_ub)])
        T[-1, :-1] = cfull
        T[-1, -1] = 0.0
        for r in range(T.shape[0] - 1):
            cb = cfull[basis[r]]
            if cb != 0.0:
                T[-1] -= cb * T[r]
        it = self._run()
        self.iterations += it

        Bm = self.A[:, basis]
        xb = np.linalg.solve(Bm, self.b)
        y = np.linalg.solve(Bm.T, cfull[basis]) * self.sign
        xfull = np.zeros(self.ncore)
        xfull[basis] = xb
        x = np.clip(xfull[: self.nvar], 0.0, None)
        y_eq = np.zeros(self.n_eq_total)
        y_eq[self.keep] = y[: self.m_eq]
        y_ub = np.clip(y[self.m_eq:], 0.0, None)
        return SimplexResult(x=x, objective=float(c @ x), y_eq=y_eq, y_ub=y_ub, iterations=it)


def solve(c, A_eq=None, b_eq=None, A_ub=None, b_ub=None, rule: str = "hybrid",
          max_iter: int = 50_000) -> SimplexResult:
    c = np.asarray(c, dtype=np.float64)
    tab = Tableau(A_eq, b_eq, A_ub, b_ub, nvar=c.size, rule=rule, max_iter=max_iter)
    return tab.maximize(c)
