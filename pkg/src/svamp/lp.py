"""LP certificates for output probabilities of no-signaling boxes.

The primal maximizes ``P(x*|u*)`` over the no-signaling polytope with a cap
``B.P <= delta`` on the Bell value.  Every constraint is written as a row of
``A p <= c`` (equalities appear twice, with both signs; positivity rows are
``-p <= 0``), so a dual certificate is a vector ``lam >= 0`` with
``A^T lam = M`` whose value ``c.lam`` bounds the primal from above.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import simplex
from .bell import BELL_TABLE
from .boxes import ConditionalBox, as_index, validate_box

NVAR = 256


@lru_cache(maxsize=1)
def equality_system() -> tuple[np.ndarray, np.ndarray]:
    """16 normalization rows then 256 single-party no-signaling rows."""
    rows, rhs = [], []
    for u in range(16):
        r = np.zeros((16, 16))
        r[u, :] = 1.0
        rows.append(r.ravel())
        rhs.append(1.0)
    for i in range(4):
        bit = 3 - i
        for u in range(16):
            if (u >> bit) & 1:
                continue
            u1 = u | (1 << bit)
            for x in range(16):
                if (x >> bit) & 1:
                    continue
                x1 = x | (1 << bit)
                r = np.zeros((16, 16))
                r[u, x] += 1.0
                r[u, x1] += 1.0
                r[u1, x] -= 1.0
                r[u1, x1] -= 1.0
                rows.append(r.ravel())
                rhs.append(0.0)
    A, b = np.array(rows), np.array(rhs)
    A.setflags(write=False)
    b.setflags(write=False)
    return A, b


def inequality_form(delta: float) -> tuple[np.ndarray, np.ndarray]:
    """Full ``A p <= c`` system: [eq; -eq; -I; B] with right-hand sides [b; -b; 0; delta]."""
    Aeq, beq = equality_system()
    A = np.vstack([Aeq, -Aeq, -np.eye(NVAR), BELL_TABLE.astype(np.float64).ravel()[None, :]])
    c = np.concatenate([beq, -beq, np.zeros(NVAR), [delta]])
    return A, c


def target_vector(x_star, u_star) -> np.ndarray:
    M = np.zeros((16, 16))
    M[as_index(u_star), as_index(x_star)] = 1.0
    return M.ravel()


@dataclass
class LpCertificate:
    target: tuple[int, int]  # (x*, u*) indices
    delta: float
    primal: float
    primal_solution: np.ndarray
    dual: float
    lam: np.ndarray
    gap: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema": "svamp.lp-certificate/1",
                "target": {"x": self.target[0], "u": self.target[1]},
                "delta": self.delta,
                "primal": self.primal,
                "dual": self.dual,
                "gap": self.gap,
                "lambda": self.lam.tolist(),
            }
        )


@dataclass(frozen=True)
class CertificateCheck:
    dual_feasible: bool
    primal_feasible: bool
    gap_ok: bool
    max_stationarity_residual: float
    min_lambda: float
    dual_value: float

    @property
    def ok(self) -> bool:
        return self.dual_feasible and self.primal_feasible and self.gap_ok


def feasible_tableau(delta: float, rule: str = "hybrid") -> simplex.Tableau:
    """Phase-I tableau of the capped no-signaling polytope, reusable across targets."""
    if delta < 0:
        raise ValueError("delta must be >= 0")
    Aeq, beq = equality_system()
    bell_row = BELL_TABLE.astype(np.float64).ravel()[None, :]
    return simplex.Tableau(Aeq, beq, bell_row, np.array([float(delta)]), rule=rule)


def max_output_probability(x_star, u_star, delta: float, tableau: simplex.Tableau | None = None,
                           rule: str = "hybrid") -> LpCertificate:
    """Maximize P(x*|u*) subject to Bell value <= delta.

    Passing the ``tableau`` of a previous call with the same ``delta``
    warm-starts the solve from that call's optimal basis.
    """
    x_i, u_i = as_index(x_star), as_index(u_star)
    if tableau is None:
        tableau = feasible_tableau(delta, rule)
    elif tableau.b[-1] * tableau.sign[-1] != float(delta):
        raise ValueError("tableau was built for a different delta")
    Aeq, beq = equality_system()
    bell_row = BELL_TABLE.astype(np.float64).ravel()[None, :]
    M = target_vector(x_i, u_i)
    res = tableau.maximize(M)
    y, z = res.y_eq, float(res.y_ub[0])
    reduced = Aeq.T @ y + z * bell_row[0] - M
    lam = np.concatenate([np.clip(y, 0, None), np.clip(-y, 0, None), np.clip(reduced, 0, None), [z]])
    dual = float(beq @ y + delta * z)
    return LpCertificate(
        target=(x_i, u_i),
        delta=float(delta),
        primal=res.objective,
        primal_solution=res.x,
        dual=dual,
        lam=lam,
        gap=abs(dual - res.objective),
    )


@lru_cache(maxsize=8)
def _inequality_form_cached(delta: float):
    return inequality_form(delta)


def verify_certificate(cert: LpCertificate, tol: float = 1e-9, gap_tol: float = 1e-7) -> CertificateCheck:
    """Check a certificate from the constraint data alone, not the solver state."""
    A, c = _inequality_form_cached(cert.delta)
    M = target_vector(*cert.target)
    lam = cert.lam
    stationarity = float(np.abs(A.T @ lam - M).max())
    dual_value = float(c @ lam)
    p = cert.primal_solution
    box_ok = validate_box(ConditionalBox(p.reshape(16, 16)), tol_ns=tol, tol_norm=tol).passed
    primal_ok = box_ok and float(BELL_TABLE.ravel() @ p) <= cert.delta + tol and p.min() >= -tol
    return CertificateCheck(
        dual_feasible=bool(lam.min() >= -tol and stationarity <= tol),
        primal_feasible=bool(primal_ok),
        gap_ok=bool(abs(dual_value - cert.primal) <= gap_tol and dual_value >= cert.primal - gap_tol),
        max_stationarity_residual=stationarity,
        min_lambda=float(lam.min()),
        dual_value=dual_value,
    )


def max_over_all_targets(delta: float) -> tuple[tuple[int, int], float, list[LpCertificate]]:
    """Worst (x*, u*) over all 256 targets; ties within 1e-9 go to the lowest (u*, x*)."""
    tab = feasible_tableau(delta)
    certs = [max_output_probability(x, u, delta, tableau=tab) for u in range(16) for x in range(16)]
    top = max(ct.primal for ct in certs)
    # optima equal up to rounding count as ties
    best = min((ct for ct in certs if ct.primal >= top - 1e-9), key=lambda ct: (ct.target[1], ct.target[0]))
    return best.target, best.primal, certs


def sv_output_bound(delta: float, epsilon: float) -> float:
    """(1/3)(1 + 2 delta / (1/2 - eps)^4), clamped to 1."""
    _check_eps(epsilon)
    if delta < 0:
        raise ValueError("delta must be >= 0")
    return min(1.0, (1 + 2 * delta / (0.5 - epsilon) ** 4) / 3)


def gamma_of(delta_total: float, epsilon: float) -> float:
    """Per-round output-probability bound; not clamped, values >= 1 mean no guarantee."""
    _check_eps(epsilon)
    if delta_total < 0:
        raise ValueError("delta_total must be >= 0")
    return (1 + 2 * math.sqrt(delta_total) / (0.5 - epsilon) ** 4) / 3


def tradeoff_boundary(epsilon: float) -> float:
    """Largest tolerated noise: sup{delta : gamma_of(2 delta, eps) < 1} = (1/2 - eps)^8 / 2."""
    _check_eps(epsilon)
    return (0.5 - epsilon) ** 8 / 2


def _check_eps(epsilon: float) -> None:
    if not 0.0 <= epsilon < 0.5:
        raise ValueError(f"epsilon must lie in [0, 1/2), got {epsilon}")
