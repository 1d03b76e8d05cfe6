"""Dense strictly convex QP by the Goldfarb-Idnani dual active-set method.

Solves ``min 1/2 x'Gx + a'x  s.t.  C x >= b`` for symmetric positive
definite ``G``. The active set is tracked through a factorisation
``J = L^{-T} Q`` and upper-triangular ``R`` updated with Givens rotations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._accel import jit

QP_OPTIMAL = 0
QP_INFEASIBLE = 1
QP_MAX_ITER = 2
QP_NOT_CONVEX = 3
QP_DEGENERATE = 4


@jit
def _givens(a, b):
    r = np.hypot(a, b)
    if r == 0.0:
        return 1.0, 0.0, 0.0
    return a / r, b / r, r


@jit
def gi_solve(G, a, C, b, max_iter, tol):
    """Goldfarb-Idnani core. Returns ``(x, lam, status, iterations)``.

    ``C`` rows are expected to be normalised; ``tol`` is the absolute
    feasibility tolerance on ``C x - b``.
    """
    n = G.shape[0]
    m = C.shape[0]
    x = np.zeros(n)
    lam = np.zeros(m)
    # Cholesky G = L L^T; J = L^{-T}
    L = np.zeros((n, n))
    for i in range(n):
        s = G[i, i]
        for k in range(i):
            s -= L[i, k] * L[i, k]
        if s <= 0.0:
            return x, lam, QP_NOT_CONVEX, 0
        L[i, i] = np.sqrt(s)
        for r in range(i + 1, n):
            t = G[r, i]
            for k in range(i):
                t -= L[r, k] * L[i, k]
            L[r, i] = t / L[i, i]
    # invert lower-triangular L, J = inv(L)^T
    Linv = np.zeros((n, n))
    for i in range(n):
        Linv[i, i] = 1.0 / L[i, i]
        for r in range(i + 1, n):
            t = 0.0
            for k in range(i, r):
                t -= L[r, k] * Linv[k, i]
            Linv[r, i] = t / L[r, r]
    J = Linv.T.copy()
    # unconstrained minimiser x = -J J^T a
    x = -(J @ (J.T @ a))

    R = np.zeros((n, n))
    active = np.empty(n, dtype=np.int64)
    u = np.zeros(n + 1)
    q = 0
    in_active = np.zeros(m, dtype=np.bool_)
    it = 0
    while True:
        it += 1
        if it > max_iter:
            for i in range(q):
                lam[active[i]] = u[i]
            return x, lam, QP_MAX_ITER, it
        # step 1: most violated inactive constraint
        slack = C @ x - b
        p = -1
        worst = -tol
        for i in range(m):
            if not in_active[i] and slack[i] < worst:
                worst = slack[i]
                p = i
        if p < 0:
            for i in range(q):
                lam[active[i]] = u[i]
            return x, lam, QP_OPTIMAL, it
        npl = C[p]
        u[q] = 0.0
        # step 2: determine step direction, possibly dropping constraints
        while True:
            d = J.T @ npl
            z = np.zeros(n)
            for k in range(q, n):
                dk = d[k]
                for i in range(n):
                    z[i] += J[i, k] * dk
            r = np.zeros(q)
            for i in range(q - 1, -1, -1):
                if R[i, i] == 0.0:
                    for k in range(q):
                        lam[active[k]] = u[k]
                    return x, lam, QP_DEGENERATE, it
                t = d[i]
                for k in range(i + 1, q):
                    t -= R[i, k] * r[k]
                r[i] = t / R[i, i]
            # partial step length (dual)
            t1 = np.inf
            l_drop = -1
            for i in range(q):
                if r[i] > 0.0:
                    ratio = u[i] / r[i]
                    if ratio < t1:
                        t1 = ratio
                        l_drop = i
            zn = z @ npl
            # zn = |d[q:]|^2; tiny means npl is dependent on the active rows
            if zn <= 1e-24 * (1.0 + d @ d):
                t2 = np.inf
            else:
                t2 = -(npl @ x - b[p]) / zn
            if t1 == np.inf and t2 == np.inf:
                for i in range(q):
                    lam[active[i]] = u[i]
                return x, lam, QP_INFEASIBLE, it
            if t2 == np.inf:
                # dual step only
                for i in range(q):
                    u[i] -= t1 * r[i]
                u[q] += t1
                _drop(J, R, active, u, in_active, l_drop, q, n)
                q -= 1
                it += 1
                if it > max_iter:
                    for i in range(q):
                        lam[active[i]] = u[i]
                    return x, lam, QP_MAX_ITER, it
                continue
            t = min(t1, t2)
            x = x + t * z
            for i in range(q):
                u[i] -= t * r[i]
            u[q] += t
            if t == t2:
                # full step: add constraint p
                for i in range(n - 1, q, -1):
                    c, s, rr = _givens(d[i - 1], d[i])
                    d[i - 1] = rr
                    d[i] = 0.0
                    for k in range(n):
                        ji = J[k, i - 1]
                        jj = J[k, i]
                        J[k, i - 1] = c * ji + s * jj
                        J[k, i] = -s * ji + c * jj
                for i in range(q + 1):
                    R[i, q] = d[i]
                active[q] = p
                in_active[p] = True
                q += 1
                break
            _drop(J, R, active, u, in_active, l_drop, q, n)
            q -= 1
            it += 1
            if it > max_iter:
                for i in range(q):
                    lam[active[i]] = u[i]
                return x, lam, QP_MAX_ITER, it


@jit
def _drop(J, R, active, u, in_active, l, q, n):
    """Remove active constraint at position ``l`` (``u[q]`` is the pending multiplier)."""
    in_active[active[l]] = False
    for i in range(l, q - 1):
        active[i] = active[i + 1]
        u[i] = u[i + 1]
        for k in range(q):
            R[k, i] = R[k, i + 1]
    u[q - 1] = u[q]
    u[q] = 0.0
    for k in range(q):
        R[k, q - 1] = 0.0
    # restore upper-triangular form
    for i in range(l, q - 1):
        c, s, rr = _givens(R[i, i], R[i + 1, i])
        for k in range(i, q - 1):
            ri = R[i, k]
            rj = R[i + 1, k]
            R[i, k] = c * ri + s * rj
            R[i + 1, k] = -s * ri + c * rj
        for k in range(n):
            ji = J[k, i]
            jj = J[k, i + 1]
            J[k, i] = c * ji + s * jj
            J[k, i + 1] = -s * ji + c * jj


@dataclass
class QPResult:
    x: np.ndarray
    multipliers: np.ndarray
    status: int
    iterations: int

    @property
    def success(self) -> bool:
        return self.status == QP_OPTIMAL


def solve_qp(G, a, C=None, b=None, lb=None, ub=None, max_iter: int | None = None,
             tol: float = 1e-11) -> QPResult:
    """Minimise ``1/2 x'Gx + a'x`` subject to ``C x >= b`` and ``lb <= x <= ub``.

    Multipliers are returned for the general rows first, then lower and
    upper bounds (in that order, one per variable).
    """
    G = np.ascontiguousarray(G, dtype=float)
    a = np.ascontiguousarray(a, dtype=float)
    n = a.shape[0]
    rows = []
    rhs = []
    if C is not None and len(C):
        rows.append(np.asarray(C, dtype=float).reshape(-1, n))
        rhs.append(np.asarray(b, dtype=float).ravel())
    m_gen = sum(r.shape[0] for r in rows)
    eye = np.eye(n)
    lb_arr = np.full(n, -np.inf) if lb is None else np.broadcast_to(np.asarray(lb, float), (n,))
    ub_arr = np.full(n, np.inf) if ub is None else np.broadcast_to(np.asarray(ub, float), (n,))
    rows.append(eye)
    rhs.append(np.where(np.isfinite(lb_arr), lb_arr, -1e300))
    rows.append(-eye)
    rhs.append(np.where(np.isfinite(ub_arr), -ub_arr, -1e300))
    Cm = np.ascontiguousarray(np.vstack(rows))
    bm = np.concatenate(rhs)
    norms = np.sqrt(np.einsum("ij,ij->i", Cm, Cm))
    norms[norms == 0.0] = 1.0
    Cn = np.ascontiguousarray(Cm / norms[:, None])
    bn = bm / norms
    if max_iter is None:
        max_iter = 20 * (n + Cm.shape[0]) + 100
    x, lam, status, it = gi_solve(G, a, Cn, bn, max_iter, tol)
    lam = lam / norms
    return QPResult(x=x, multipliers=lam[: m_gen + 2 * n], status=int(status), iterations=int(it))
