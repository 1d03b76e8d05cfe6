"""Independent reference implementations used only by the tests.

None of these import the package's numeric kernels.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

G = 9.80665


def time_domain_rollout(v0, a0, jerk, ds, dt=1e-3):
    """Integrate ds/dt = v, dv/dt = a, da/dt = j with fixed-step RK4 in time.

    The jerk changes when s crosses a node station ``k * ds``; the crossing
    instant inside the step is located by Newton on the cubic position
    polynomial, which is exact for constant jerk.
    """
    s, v, a, t = 0.0, float(v0), float(a0), 0.0

    def rk4(s, v, a, j, h):
        # scalar form of classical RK4 on x' = (v, a, j)
        k1s, k1v = v, a
        k2s, k2v = v + 0.5 * h * k1v, a + 0.5 * h * j
        k3s, k3v = v + 0.5 * h * k2v, a + 0.5 * h * j
        k4s, k4v = v + h * k3v, a + h * j
        return (s + h / 6.0 * (k1s + 2 * k2s + 2 * k3s + k4s),
                v + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v),
                a + h * j)

    for k, j in enumerate(jerk):
        target = (k + 1) * ds
        while True:
            s1, v1, a1 = rk4(s, v, a, j, dt)
            if s1 < target:
                s, v, a, t = s1, v1, a1, t + dt
                continue
            # locate the crossing inside this step
            tau = (target - s) / max(v, 1e-9)
            for _ in range(50):
                pos = s + v * tau + 0.5 * a * tau**2 + j * tau**3 / 6.0 - target
                vel = v + a * tau + 0.5 * j * tau**2
                step = pos / vel
                tau -= step
                if abs(step) < 1e-15:
                    break
            s2, v2, a2 = rk4(s, v, a, j, tau)
            s, v, a, t = target, v2, a2, t + tau
            break
    return v, a, t


def brute_force_qp(G_, a, C, b):
    """Minimise 1/2 x'Gx + a'x s.t. Cx >= b by enumerating every active set.

    For strictly convex problems the optimum is the unique candidate that is
    primal feasible with non-negative multipliers.
    """
    n = a.size
    m = b.size
    best = None
    for r in range(0, min(n, m) + 1):
        for act in itertools.combinations(range(m), r):
            act = list(act)
            K = np.zeros((n + r, n + r))
            K[:n, :n] = G_
            rhs = np.zeros(n + r)
            rhs[:n] = -a
            if r:
                Ca = C[act]
                K[:n, n:] = -Ca.T
                K[n:, :n] = Ca
                rhs[n:] = b[act]
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                continue
            if np.linalg.cond(K) > 1e12:
                continue
            x, lam = sol[:n], sol[n:]
            if np.any(C @ x < b - 1e-9) or np.any(lam < -1e-9):
                continue
            f = 0.5 * x @ G_ @ x + a @ x
            if best is None or f < best[1]:
                best = (x, f)
    return best


def central_difference(fun, x, rel_step=1e-6):
    x = np.asarray(x, dtype=float)
    out = []
    for i in range(x.size):
        h = rel_step * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        out.append((np.asarray(fun(xp)) - np.asarray(fun(xm))) / (2 * h))
    return np.array(out).T


def iso_wf_magnitude(f_hz):
    """ISO 2631-1 motion-sickness weighting Wf, evaluated from its definition."""
    f1, f2, f4, f5, f6 = 0.08, 0.63, 0.25, 0.0625, 0.1
    q1, q2, q4, q5, q6 = 1 / math.sqrt(2), 1 / math.sqrt(2), 0.86, 0.80, 0.80
    w1, w2, w4, w5, w6 = (2 * math.pi * f for f in (f1, f2, f4, f5, f6))
    s = 2j * np.pi * np.asarray(f_hz, dtype=float)
    hh = s**2 / (s**2 + w1 / q1 * s + w1**2)
    hl = w2**2 / (s**2 + w2 / q2 * s + w2**2)
    # f3 is infinite for Wf, so the transition stage is a plain second-order lag
    ht = w4**2 / (s**2 + w4 / q4 * s + w4**2)
    hs = (s**2 + w5 / q5 * s + w5**2) / (s**2 + w6 / q6 * s + w6**2)
    return np.abs(hh * hl * ht * hs)


def first_order_conflict_gain(f_hz, tau_v, tau_sv):
    """|sensed - vertical| gain for a horizontal sinusoid through two first-order lags."""
    w = 2 * math.pi * np.asarray(f_hz, dtype=float)
    s = 1j * w
    return np.abs(1 / (1 + s * tau_v) - 1 / ((1 + s * tau_v) * (1 + s * tau_sv)))
