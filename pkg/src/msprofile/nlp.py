"""Sequential quadratic programming for small dense bound/inequality-constrained problems.

BFGS (Powell-damped) approximation of the Lagrangian Hessian, Goldfarb-Idnani
QP subproblems, an l1 merit-function backtracking line search with a
second-order correction, an elastic QP when the linearised constraints are
inconsistent and a projected-gradient step when even that fails.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NLPEvaluationError
from .qp import QP_OPTIMAL, solve_qp

log = logging.getLogger(__name__)

CONVERGED = "converged"
MAX_ITER = "max_iter"
INFEASIBLE = "infeasible"

# (f, c, df, dc); c >= 0 is feasible. df/dc are None when grad is not requested.
Evaluator = Callable[[np.ndarray, bool], tuple]


@dataclass
class NLPResult:
    x: np.ndarray
    f: float
    status: str
    iterations: int
    constraint_violation: float
    kkt_residual: float
    multipliers: np.ndarray
    hessian: np.ndarray
    evaluations: int = 0
    history: list = field(default_factory=list)

    @property
    def success(self) -> bool:
        return self.status == CONVERGED


def _violation(c: np.ndarray) -> tuple[float, float]:
    if c.size == 0:
        return 0.0, 0.0
    neg = np.minimum(c, 0.0)
    return float(-neg.sum()), float(-neg.min())


def _check(x, f, c):
    if np.isnan(f) or (c.size and np.any(np.isnan(c))):
        raise NLPEvaluationError(f"evaluator returned NaN at x={np.array2string(x, precision=6)}", x.copy())


def solve_nlp(
    evaluate: Evaluator,
    x0,
    lb,
    ub,
    *,
    tol: float = 1e-6,
    ctol: float = 1e-9,
    xtol: float = 1e-10,
    max_iter: int = 200,
    hessian0: np.ndarray | None = None,
) -> NLPResult:
    """Minimise ``f(x)`` subject to ``c(x) >= 0`` and ``lb <= x <= ub``.

    Every iterate respects the bounds. Convergence: constraint violation
    below ``ctol`` and a KKT residual below ``tol`` relative to the problem
    scale ``max(|f(x0)|, |grad f(x0)|_inf)`` (or a step below ``xtol``). The
    scale makes the test invariant to multiplying the objective by a
    constant. A non-finite objective marks a point outside the evaluator's
    domain and is rejected by the line search; NaN raises
    :class:`NLPEvaluationError`.
    """
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    x = np.clip(np.asarray(x0, dtype=float).copy(), lb, ub)
    n = x.size
    f, c, df, dc = evaluate(x, True)
    n_eval = 1
    c = np.asarray(c, dtype=float)
    _check(x, f, c)
    if not np.isfinite(f):
        raise NLPEvaluationError("objective not finite at the initial iterate", x.copy())
    m = c.size
    if dc is None or m == 0:
        dc = np.zeros((0, n))

    if hessian0 is not None:
        B = np.array(hessian0, dtype=float)
        fresh = False
    else:
        B = np.eye(n) * max(np.linalg.norm(df), 1e-12)
        fresh = True
    scale = max(abs(float(f)), float(np.max(np.abs(df))) if n else 0.0, 1e-300)
    nu = 0.0
    lam = np.zeros(m)
    best = None
    status = MAX_ITER
    kkt = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        l1, maxviol = _violation(c)
        if maxviol <= ctol and (best is None or f < best[1]):
            best = (x.copy(), f, c.copy(), lam.copy())

        d, lam_new, elastic = _qp_step(B, df, c, dc, x, lb, ub, nu)
        if d is None:
            # projected gradient on the l1 merit
            g = df.copy()
            if m:
                g -= max(nu, float(np.max(np.abs(df)))) * dc[c < 0].sum(axis=0)
            d = np.clip(x - g / max(np.linalg.norm(g), 1e-300), lb, ub) - x
            lam_new = lam.copy()
            elastic = True
        lam = lam_new

        stat = float(np.max(np.abs(B @ d))) / scale if n else 0.0
        compl = float(np.max(np.abs(lam * c))) / scale if m else 0.0
        kkt = max(stat, compl)
        step = float(np.max(np.abs(d))) if n else 0.0
        if maxviol <= ctol and not elastic and (kkt <= tol or step <= xtol):
            status = CONVERGED
            break

        if m:
            nu = max(nu, 1.5 * float(np.max(np.abs(lam))))
        phi0 = f + nu * l1
        # directional derivative of the merit along d (linearisation-consistent step)
        lin_viol = _violation(c + dc @ d)[0] if m else 0.0
        D = float(df @ d) - nu * (l1 - lin_viol)
        if D >= 0.0:
            D = -abs(float(d @ B @ d))

        accepted = False
        alpha = 1.0
        soc_tried = False
        while alpha > 1e-12:
            xt = np.clip(x + alpha * d, lb, ub)
            if np.array_equal(xt, x):
                break
            ft, ct, _, _ = evaluate(xt, False)
            n_eval += 1
            ct = np.asarray(ct, dtype=float)
            _check(xt, ft, ct)
            phit = ft + nu * _violation(ct)[0] if np.isfinite(ft) else np.inf
            if phit <= phi0 + 1e-4 * alpha * D:
                accepted = True
                break
            if alpha == 1.0 and not soc_tried and m and np.isfinite(ft):
                soc_tried = True
                xs = _second_order_correction(x, d, ct, dc, lam, lb, ub)
                if xs is not None:
                    fs, cs, _, _ = evaluate(xs, False)
                    n_eval += 1
                    cs = np.asarray(cs, dtype=float)
                    _check(xs, fs, cs)
                    if np.isfinite(fs) and fs + nu * _violation(cs)[0] <= phi0 + 1e-4 * D:
                        xt, ft, ct = xs, fs, cs
                        accepted = True
                        break
            if np.isfinite(phit) and phit > phi0:
                # safeguarded quadratic interpolation of the merit
                denom = 2.0 * (phit - phi0 - alpha * D)
                a_new = -D * alpha * alpha / denom if denom > 0 else 0.5 * alpha
                alpha = min(max(a_new, 0.1 * alpha), 0.5 * alpha)
            else:
                alpha *= 0.5
        if not accepted:
            if not fresh:
                B = np.eye(n) * max(np.linalg.norm(df), 1e-12)
                fresh = True
                continue
            # no decrease possible: accept if within the objective's rounding floor
            status = CONVERGED if maxviol <= ctol and kkt <= 100 * tol else MAX_ITER
            break

        ft, ct, dft, dct = evaluate(xt, True)
        n_eval += 1
        ct = np.asarray(ct, dtype=float)
        if dct is None or m == 0:
            dct = np.zeros((0, n))
        s = xt - x
        y = (dft - dct.T @ lam) - (df - dc.T @ lam)
        if fresh and s @ y > 0:
            B = np.eye(n) * (y @ y) / (s @ y)
        B = _damped_bfgs(B, s, y)
        fresh = False
        x, f, c, df, dc = xt, ft, ct, dft, dct
    else:
        status = MAX_ITER

    l1, maxviol = _violation(c)
    if status != CONVERGED:
        if maxviol <= ctol and (best is None or f <= best[1]):
            best = (x.copy(), f, c.copy(), lam.copy())
        if best is not None:
            x, f, c, lam = best
            maxviol = _violation(c)[1]
            status = MAX_ITER
        else:
            status = INFEASIBLE
    return NLPResult(
        x=x, f=float(f), status=status, iterations=it, constraint_violation=maxviol,
        kkt_residual=float(kkt), multipliers=lam, hessian=B, evaluations=n_eval,
    )


def _qp_step(B, df, c, dc, x, lb, ub, nu):
    """QP subproblem; falls back to an elastic formulation. Returns (d, lam, elastic)."""
    n = x.size
    m = c.size
    res = solve_qp(B, df, dc if m else None, -c if m else None, lb - x, ub - x)
    if res.status == QP_OPTIMAL:
        return res.x, res.multipliers[:m], False
    if m == 0:
        return None, None, True
    # elastic mode: one slack shared by all general rows
    gscale = max(float(np.max(np.abs(df))), 1e-300)
    penalty = 10.0 * max(nu, gscale)
    Ge = np.zeros((n + 1, n + 1))
    Ge[:n, :n] = B
    Ge[n, n] = 1e-6 * max(float(np.max(np.diag(B))), 1e-300)
    ae = np.concatenate([df, [penalty]])
    Ce = np.hstack([dc, np.ones((m, 1))])
    lbe = np.concatenate([lb - x, [0.0]])
    ube = np.concatenate([ub - x, [np.inf]])
    res = solve_qp(Ge, ae, Ce, -c, lbe, ube)
    if res.status != QP_OPTIMAL:
        log.debug("elastic QP failed with status %d", res.status)
        return None, None, True
    return res.x[:n], res.multipliers[:m], True


def _second_order_correction(x, d, c_trial, dc, lam, lb, ub):
    """Minimum-norm correction of the active constraints evaluated at ``x + d``."""
    act = lam > 0
    if not np.any(act):
        return None
    Ja = dc[act]
    ra = c_trial[act]
    try:
        corr = -Ja.T @ np.linalg.solve(Ja @ Ja.T + 1e-12 * np.eye(Ja.shape[0]), ra)
    except np.linalg.LinAlgError:
        return None
    return np.clip(x + d + corr, lb, ub)


def _damped_bfgs(B, s, y):
    Bs = B @ s
    sBs = float(s @ Bs)
    if sBs <= 0.0 or not np.isfinite(sBs):
        return B
    sy = float(s @ y)
    if sy < 0.2 * sBs:
        theta = 0.8 * sBs / (sBs - sy)
        y = theta * y + (1.0 - theta) * Bs
        sy = float(s @ y)
    if sy <= 1e-16 * sBs:
        return B
    return B + np.outer(y, y) / sy - np.outer(Bs, Bs) / sBs


def minimize(fun, grad, x0, lb=None, ub=None, constraints=None, constraints_jac=None, **kwargs) -> NLPResult:
    """Convenience front end taking separate callables; constraints are ``c(x) >= 0``."""
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    lb = np.full(n, -np.inf) if lb is None else np.broadcast_to(np.asarray(lb, float), (n,))
    ub = np.full(n, np.inf) if ub is None else np.broadcast_to(np.asarray(ub, float), (n,))

    def evaluate(x, want_grad):
        f = float(fun(x))
        c = np.atleast_1d(np.asarray(constraints(x), dtype=float)) if constraints else np.zeros(0)
        if not want_grad:
            return f, c, None, None
        g = np.asarray(grad(x), dtype=float)
        J = np.atleast_2d(np.asarray(constraints_jac(x), dtype=float)) if constraints else np.zeros((0, n))
        return f, c, g, J

    return solve_nlp(evaluate, x0, lb, ub, **kwargs)
