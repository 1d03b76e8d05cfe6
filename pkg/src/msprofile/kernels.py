"""Hot numeric loops.

Every function here is compiled with numba when available (see ``_accel``)
and otherwise runs unchanged on numpy. Sensitivity propagation is written as
row operations over the jerk columns so the uncompiled path stays usable.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import jit

GRAVITY = 9.80665

# cost kinds, mirrored by costs.CostKind
MINIMUM_TIME = 0
JERK_COST = 1
ACCELERATION_COST = 2
MS_COST = 3
ADAPTIVE_MS_COST = 4

# below this speed the spatial ODE is treated as singular
V_SINGULAR = 0.5

# RK4 substeps per node interval; the node spacing follows the anchor speed,
# so a horizon that brakes hard sees long time steps without them
RK4_SUBSTEPS = 4


# ---------------------------------------------------------------------------
# vehicle: spatial RK4 with forward-mode derivatives


@jit
def rk4_spatial(v, a, j, h):
    """One RK4 step of dv/ds = a/v, da/ds = j/v, dt/ds = 1/v.

    Returns ``(v1, a1, dt, vmin_stage)``; ``vmin_stage`` is the smallest
    velocity seen by any stage, used to detect the singular region.
    """
    k1v = a / v
    k1a = j / v
    k1t = 1.0 / v
    v2 = v + 0.5 * h * k1v
    a2 = a + 0.5 * h * k1a
    k2v = a2 / v2
    k2a = j / v2
    k2t = 1.0 / v2
    v3 = v + 0.5 * h * k2v
    a3 = a + 0.5 * h * k2a
    k3v = a3 / v3
    k3a = j / v3
    k3t = 1.0 / v3
    v4 = v + h * k3v
    a4 = a + h * k3a
    k4v = a4 / v4
    k4a = j / v4
    k4t = 1.0 / v4
    w = h / 6.0
    vmin = min(min(v, v2), min(v3, v4))
    return (
        v + w * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        a + w * (k1a + 2.0 * k2a + 2.0 * k3a + k4a),
        w * (k1t + 2.0 * k2t + 2.0 * k3t + k4t),
        vmin,
    )


@jit
def _rk4_tangent(v, a, j, h, dv, da, dj):
    k1v = a / v
    dk1v = da / v - a * dv / (v * v)
    dk1a = dj / v - j * dv / (v * v)
    dk1t = -dv / (v * v)
    k1a = j / v

    v2 = v + 0.5 * h * k1v
    a2 = a + 0.5 * h * k1a
    dv2 = dv + 0.5 * h * dk1v
    da2 = da + 0.5 * h * dk1a
    k2v = a2 / v2
    k2a = j / v2
    dk2v = da2 / v2 - a2 * dv2 / (v2 * v2)
    dk2a = dj / v2 - j * dv2 / (v2 * v2)
    dk2t = -dv2 / (v2 * v2)

    v3 = v + 0.5 * h * k2v
    a3 = a + 0.5 * h * k2a
    dv3 = dv + 0.5 * h * dk2v
    da3 = da + 0.5 * h * dk2a
    k3v = a3 / v3
    k3a = j / v3
    dk3v = da3 / v3 - a3 * dv3 / (v3 * v3)
    dk3a = dj / v3 - j * dv3 / (v3 * v3)
    dk3t = -dv3 / (v3 * v3)

    v4 = v + h * k3v
    dv4 = dv + h * dk3v
    da4 = da + h * dk3a
    a4 = a + h * k3a
    dk4v = da4 / v4 - a4 * dv4 / (v4 * v4)
    dk4a = dj / v4 - j * dv4 / (v4 * v4)
    dk4t = -dv4 / (v4 * v4)

    w = h / 6.0
    return (
        dv + w * (dk1v + 2.0 * dk2v + 2.0 * dk3v + dk4v),
        da + w * (dk1a + 2.0 * dk2a + 2.0 * dk3a + dk4a),
        w * (dk1t + 2.0 * dk2t + 2.0 * dk3t + dk4t),
    )


@jit
def rk4_spatial_jac(v, a, j, h):
    """Primal step plus partials of ``(v1, a1, dt)`` w.r.t. ``(v, a, j)``.

    Returns ``(v1, a1, dt, vmin_stage, jac)`` with ``jac`` of shape (3, 3),
    rows (v1, a1, dt), columns (v, a, j).
    """
    v1, a1, tinc, vmin = rk4_spatial(v, a, j, h)
    jac = np.empty((3, 3))
    for c in range(3):
        sv = 1.0 if c == 0 else 0.0
        sa = 1.0 if c == 1 else 0.0
        sj = 1.0 if c == 2 else 0.0
        dv1, da1, dt1 = _rk4_tangent(v, a, j, h, sv, sa, sj)
        jac[0, c] = dv1
        jac[1, c] = da1
        jac[2, c] = dt1
    return v1, a1, tinc, vmin, jac


@jit
def spatial_node_step(v, a, j, ds):
    """Advance one node interval ``ds`` with ``RK4_SUBSTEPS`` spatial RK4 steps.

    Returns ``(v1, a1, dt, vmin_stage)`` like :func:`rk4_spatial`.
    """
    h = ds / RK4_SUBSTEPS
    tinc = 0.0
    vmin = v
    for _ in range(RK4_SUBSTEPS):
        v, a, dt, vm = rk4_spatial(v, a, j, h)
        tinc += dt
        vmin = min(vmin, vm)
        if not vm > V_SINGULAR:
            break
    return v, a, tinc, vmin


@jit
def spatial_node_step_jac(v, a, j, ds):
    """:func:`spatial_node_step` plus partials of ``(v1, a1, dt)`` w.r.t. ``(v, a, j)``."""
    h = ds / RK4_SUBSTEPS
    # D holds d(v, a, t) / d(v0, a0, j) of the running state
    D = np.zeros((3, 3))
    D[0, 0] = 1.0
    D[1, 1] = 1.0
    tinc = 0.0
    vmin = v
    for _ in range(RK4_SUBSTEPS):
        v1, a1, dt, vm, J = rk4_spatial_jac(v, a, j, h)
        for c in range(3):
            dv = D[0, c]
            da = D[1, c]
            dj = 1.0 if c == 2 else 0.0
            D[0, c] = J[0, 0] * dv + J[0, 1] * da + J[0, 2] * dj
            D[1, c] = J[1, 0] * dv + J[1, 1] * da + J[1, 2] * dj
            D[2, c] += J[2, 0] * dv + J[2, 1] * da + J[2, 2] * dj
        v, a = v1, a1
        tinc += dt
        vmin = min(vmin, vm)
        if not vm > V_SINGULAR:
            break
    return v, a, tinc, vmin, D


@jit
def vehicle_rollout(v0, a0, t0, jerk, ds, want_sens):
    """Roll the spatial plant through ``jerk`` with constant step ``ds``.

    Returns ``(ok, V, A, T, dV, dA, dT)``; state arrays have ``n+1`` nodes
    and sensitivity arrays are ``(n+1, n)`` (``(1, 1)`` placeholders when
    ``want_sens`` is false). ``ok`` is false when the velocity approaches the
    singular region.
    """
    n = jerk.shape[0]
    V = np.empty(n + 1)
    A = np.empty(n + 1)
    T = np.empty(n + 1)
    V[0] = v0
    A[0] = a0
    T[0] = t0
    if want_sens:
        dV = np.zeros((n + 1, n))
        dA = np.zeros((n + 1, n))
        dT = np.zeros((n + 1, n))
    else:
        dV = np.zeros((1, 1))
        dA = np.zeros((1, 1))
        dT = np.zeros((1, 1))
    ok = True
    stop = n
    for k in range(n):
        if V[k] <= V_SINGULAR:
            ok = False
            stop = k
            break
        if want_sens:
            v1, a1, tinc, vmin, jac = spatial_node_step_jac(V[k], A[k], jerk[k], ds)
            if k > 0:
                dVk = dV[k, :k]
                dAk = dA[k, :k]
                dV[k + 1, :k] = jac[0, 0] * dVk + jac[0, 1] * dAk
                dA[k + 1, :k] = jac[1, 0] * dVk + jac[1, 1] * dAk
                dT[k + 1, :k] = dT[k, :k] + jac[2, 0] * dVk + jac[2, 1] * dAk
            dV[k + 1, k] = jac[0, 2]
            dA[k + 1, k] = jac[1, 2]
            dT[k + 1, k] = jac[2, 2]
        else:
            v1, a1, tinc, vmin = spatial_node_step(V[k], A[k], jerk[k], ds)
        if vmin <= V_SINGULAR or not (v1 == v1) or tinc <= 0.0:
            ok = False
            stop = k
            break
        V[k + 1] = v1
        A[k + 1] = a1
        T[k + 1] = T[k] + tinc
    if not ok:
        for i in range(stop + 1, n + 1):
            V[i] = np.nan
            A[i] = np.nan
            T[i] = np.nan
    return ok, V, A, T, dV, dA, dT


# ---------------------------------------------------------------------------
# first-order hold discretisation of a unit-gain first-order lag


@jit
def foh_coeffs(dt, tau):
    """Exact step of ``tau x' = u - x`` for ``u`` linear between samples.

    ``x1 = e*x0 + w0*u0 + w1*u1``. Returns ``(e, w0, w1, de, dw0, dw1)``
    with the last three the derivatives with respect to ``dt``.
    """
    r = dt / tau
    e = math.exp(-r)
    if r < 1e-2:
        r2 = r * r
        phi = r * 0.5 - r2 / 6.0 + r2 * r / 24.0 - r2 * r2 / 120.0 + r2 * r2 * r / 720.0
        dphi_dr = 0.5 - r / 3.0 + r2 / 8.0 - r2 * r / 30.0 + r2 * r2 / 144.0
        one_m_e = r - r2 * 0.5 + r2 * r / 6.0 - r2 * r2 / 24.0 + r2 * r2 * r / 120.0
    else:
        one_m_e = -math.expm1(-r)
        phi = 1.0 - one_m_e / r
        dphi_dr = (one_m_e - e * r) / (r * r)
    de = -e / tau
    dphi = dphi_dr / tau
    return e, one_m_e - phi, phi, de, -de - dphi, dphi


# sickness state vector layout (kernel side)
S_SENSED = 0  # 0..2 sensed specific force (x, y, z)
S_SV = 3  # 3..5 subjective vertical estimate
S_X1 = 6
S_X2 = 7
S_H = 8
S_U = 9  # 9..11 last input sample
S_SIZE = 12


@jit
def conflict_advance(state, ux, uy, uz, dt, tau_v, tau_sv, b, p_gain, mu):
    """Advance the conflict model one step with first-order-hold input.

    ``state`` is the 12-vector described by the ``S_*`` offsets; a new array
    is returned. MSI is ``(x1 + x2) / 2``.
    """
    out = state.copy()
    e1, w01, w11, _, _, _ = foh_coeffs(dt, tau_v)
    e2, w02, w12, _, _, _ = foh_coeffs(dt, tau_sv)
    e3, w03, w13, _, _, _ = foh_coeffs(dt, mu)
    u1 = (ux, uy, uz)
    c2 = 0.0
    for ax in range(3):
        s0 = state[S_SENSED + ax]
        s1 = e1 * s0 + w01 * state[S_U + ax] + w11 * u1[ax]
        sv1 = e2 * state[S_SV + ax] + w02 * s0 + w12 * s1
        out[S_SENSED + ax] = s1
        out[S_SV + ax] = sv1
        out[S_U + ax] = u1[ax]
        d = s1 - sv1
        c2 += d * d
    h1 = c2 / (c2 + b * b)
    x1 = e3 * state[S_X1] + p_gain * (w03 * state[S_H] + w13 * h1)
    x2 = e3 * state[S_X2] + w03 * state[S_X1] + w13 * x1
    out[S_X1] = x1
    out[S_X2] = x2
    out[S_H] = h1
    return out


@jit
def conflict_run(state, acc, dts, tau_v, tau_sv, b, p_gain, mu):
    """Run the conflict model over a sample sequence.

    ``acc`` is ``(n, 3)``, ``dts`` is ``(n,)`` with the time from the previous
    sample. Returns arrays ``h`` and ``msi`` (length n) and the final state.
    """
    n = acc.shape[0]
    h = np.empty(n)
    msi = np.empty(n)
    s = state.copy()
    for i in range(n):
        s = conflict_advance(s, acc[i, 0], acc[i, 1], acc[i, 2], dts[i], tau_v, tau_sv, b, p_gain, mu)
        h[i] = s[S_H]
        msi[i] = 0.5 * (s[S_X1] + s[S_X2])
    return h, msi, s


@jit
def sine_sweep_msi(freqs, amplitude, duration, dt, tau_v, tau_sv, b, p_gain, mu, gravity):
    """MSI reached after ``duration`` seconds of lateral sinusoidal excitation, per frequency."""
    out = np.empty(freqs.shape[0])
    n = int(round(duration / dt))
    for fi in range(freqs.shape[0]):
        w = 2.0 * math.pi * freqs[fi]
        s = np.zeros(S_SIZE)
        s[S_SENSED + 2] = gravity
        s[S_SV + 2] = gravity
        s[S_U + 2] = gravity
        for i in range(1, n + 1):
            s = conflict_advance(s, 0.0, amplitude * math.sin(w * i * dt), gravity, dt,
                                 tau_v, tau_sv, b, p_gain, mu)
        out[fi] = 0.5 * (s[S_X1] + s[S_X2])
    return out


@jit
def sickness_rollout(V, A, T, rho, dV, dA, dT, state0, tau_v, tau_sv, b, p_gain, mu, want_sens):
    """Conflict model along horizon nodes with derivatives w.r.t. the jerks.

    Node inputs are longitudinal ``A`` and lateral ``V**2 * rho``; the
    vertical axis is held at the value stored in ``state0``. Returns
    ``(H, M, dH, dM, final_states)`` where ``final_states[k]`` is the full
    state vector at node ``k``.
    """
    n1 = V.shape[0]
    n = n1 - 1
    H = np.empty(n1)
    M = np.empty(n1)
    states = np.empty((n1, S_SIZE))
    states[0] = state0
    H[0] = state0[S_H]
    M[0] = 0.5 * (state0[S_X1] + state0[S_X2])
    if want_sens:
        dH = np.zeros((n1, n))
        dM = np.zeros((n1, n))
        ds_x = np.zeros(n)
        ds_y = np.zeros(n)
        dsv_x = np.zeros(n)
        dsv_y = np.zeros(n)
        ds_z = np.zeros(n)
        dsv_z = np.zeros(n)
        dx1 = np.zeros(n)
        dx2 = np.zeros(n)
    else:
        dH = np.zeros((1, 1))
        dM = np.zeros((1, 1))
    uz = state0[S_U + 2]
    b2 = b * b
    for k in range(n):
        st = states[k]
        dt = T[k + 1] - T[k]
        ux0 = A[k]
        uy0 = V[k] * V[k] * rho[k]
        ux1 = A[k + 1]
        uy1 = V[k + 1] * V[k + 1] * rho[k + 1]
        e1, w01, w11, de1, dw01, dw11 = foh_coeffs(dt, tau_v)
        e2, w02, w12, de2, dw02, dw12 = foh_coeffs(dt, tau_sv)
        e3, w03, w13, de3, dw03, dw13 = foh_coeffs(dt, mu)
        sx0 = st[S_SENSED]
        sy0 = st[S_SENSED + 1]
        sz0 = st[S_SENSED + 2]
        sx1 = e1 * sx0 + w01 * ux0 + w11 * ux1
        sy1 = e1 * sy0 + w01 * uy0 + w11 * uy1
        sz1 = e1 * sz0 + w01 * st[S_U + 2] + w11 * uz
        svx1 = e2 * st[S_SV] + w02 * sx0 + w12 * sx1
        svy1 = e2 * st[S_SV + 1] + w02 * sy0 + w12 * sy1
        svz1 = e2 * st[S_SV + 2] + w02 * sz0 + w12 * sz1
        cx = sx1 - svx1
        cy = sy1 - svy1
        cz = sz1 - svz1
        c2 = cx * cx + cy * cy + cz * cz
        h1 = c2 / (c2 + b2)
        h0 = st[S_H]
        x10 = st[S_X1]
        x20 = st[S_X2]
        x11 = e3 * x10 + p_gain * (w03 * h0 + w13 * h1)
        x21 = e3 * x20 + w03 * x10 + w13 * x11
        nxt = states[k + 1]
        nxt[S_SENSED] = sx1
        nxt[S_SENSED + 1] = sy1
        nxt[S_SENSED + 2] = sz1
        nxt[S_SV] = svx1
        nxt[S_SV + 1] = svy1
        nxt[S_SV + 2] = svz1
        nxt[S_X1] = x11
        nxt[S_X2] = x21
        nxt[S_H] = h1
        nxt[S_U] = ux1
        nxt[S_U + 1] = uy1
        nxt[S_U + 2] = uz
        H[k + 1] = h1
        M[k + 1] = 0.5 * (x11 + x21)
        if want_sens:
            m = k + 1  # node k+1 depends on jerks 0..k
            ddt = dT[k + 1, :m] - dT[k, :m]
            dux0 = dA[k, :m]
            duy0 = 2.0 * V[k] * rho[k] * dV[k, :m]
            dux1 = dA[k + 1, :m]
            duy1 = 2.0 * V[k + 1] * rho[k + 1] * dV[k + 1, :m]
            dsx0 = ds_x[:m].copy()
            dsy0 = ds_y[:m].copy()
            dsx1 = e1 * dsx0 + w01 * dux0 + w11 * dux1 + (de1 * sx0 + dw01 * ux0 + dw11 * ux1) * ddt
            dsy1 = e1 * dsy0 + w01 * duy0 + w11 * duy1 + (de1 * sy0 + dw01 * uy0 + dw11 * uy1) * ddt
            dsz0 = ds_z[:m].copy()
            dsz1 = e1 * dsz0 + (de1 * sz0 + dw01 * st[S_U + 2] + dw11 * uz) * ddt
            dsvx1 = e2 * dsv_x[:m] + w02 * dsx0 + w12 * dsx1 + (de2 * st[S_SV] + dw02 * sx0 + dw12 * sx1) * ddt
            dsvy1 = e2 * dsv_y[:m] + w02 * dsy0 + w12 * dsy1 + (de2 * st[S_SV + 1] + dw02 * sy0 + dw12 * sy1) * ddt
            dsvz1 = e2 * dsv_z[:m] + w02 * dsz0 + w12 * dsz1 + (de2 * st[S_SV + 2] + dw02 * sz0 + dw12 * sz1) * ddt
            dc2 = 2.0 * (cx * (dsx1 - dsvx1) + cy * (dsy1 - dsvy1) + cz * (dsz1 - dsvz1))
            dh1 = (b2 / ((c2 + b2) * (c2 + b2))) * dc2
            dh0 = dH[k, :m]
            dx10 = dx1[:m].copy()
            dx11 = e3 * dx10 + p_gain * (w03 * dh0 + w13 * dh1) + (de3 * x10 + p_gain * (dw03 * h0 + dw13 * h1)) * ddt
            dx21 = e3 * dx2[:m] + w03 * dx10 + w13 * dx11 + (de3 * x20 + dw03 * x10 + dw13 * x11) * ddt
            ds_x[:m] = dsx1
            ds_y[:m] = dsy1
            dsv_x[:m] = dsvx1
            dsv_y[:m] = dsvy1
            ds_z[:m] = dsz1
            dsv_z[:m] = dsvz1
            dx1[:m] = dx11
            dx2[:m] = dx21
            dH[k + 1, :m] = dh1
            dM[k + 1, :m] = 0.5 * (dx11 + dx21)
    return H, M, dH, dM, states


# ---------------------------------------------------------------------------
# horizon objective and constraints


@jit
def horizon_terms(kind, jerk, V, A, rho, rho_con, H, M, dV, dA, dH, dM, ds,
                  c_t, c_jerk, c_a, c_ms, linear_jerk, squared_lateral, gate_anchor,
                  a_max, v_min, v_max, per_axis, want_grad):
    """Objective ``ds * sum_k L(node k+1, j_k)`` and constraints ``g >= 0``.

    Constraint rows, node-major blocks of ``n``: acceleration (modulus, or
    longitudinal then lateral when ``per_axis``), ``v <= v_max``,
    ``v >= v_min``. The cost uses ``rho``; the acceleration rows use
    ``rho_con``. Returns ``(f, grad, g, G)``.
    """
    n = jerk.shape[0]
    n_acc = 2 if per_axis else 1
    m = n * (n_acc + 2)
    f = 0.0
    g = np.empty(m)
    if want_grad:
        grad = np.zeros(n)
        G = np.zeros((m, n))
    else:
        grad = np.zeros(1)
        G = np.zeros((1, 1))
    amax2 = a_max * a_max
    gate0 = M[0]
    for k in range(n):
        i = k + 1
        v = V[i]
        a = A[i]
        lat = v * v * rho[i]
        latc = v * v * rho_con[i]
        jk = jerk[k]
        # stage cost
        if linear_jerk:
            lk = c_t / v + c_jerk * jk
        else:
            lk = c_t / v + c_jerk * jk * jk
        if kind == ACCELERATION_COST:
            if squared_lateral:
                lk += c_a * (a * a + lat * lat)
            else:
                lk += c_a * (a * a + lat)
        elif kind == MS_COST:
            lk += c_ms * H[i]
        elif kind == ADAPTIVE_MS_COST:
            gate = gate0 if gate_anchor else M[i]
            lk += c_ms * H[i] * gate
        f += ds * lk
        # constraints
        if per_axis:
            g[k] = 1.0 - a * a / amax2
            g[n + k] = 1.0 - latc * latc / amax2
        else:
            g[k] = 1.0 - (a * a + latc * latc) / amax2
        g[n_acc * n + k] = (v_max - v) / v_max
        g[(n_acc + 1) * n + k] = (v - v_min) / v_max
        if want_grad:
            cols = i  # node i depends on jerks 0..i-1
            dv = dV[i, :cols]
            da = dA[i, :cols]
            dlat = 2.0 * v * rho[i] * dv
            dlatc = 2.0 * v * rho_con[i] * dv
            dl = (-c_t / (v * v)) * dv
            if kind == ACCELERATION_COST:
                if squared_lateral:
                    dl = dl + c_a * (2.0 * a * da + 2.0 * lat * dlat)
                else:
                    dl = dl + c_a * (2.0 * a * da + dlat)
            elif kind == MS_COST:
                dl = dl + c_ms * dH[i, :cols]
            elif kind == ADAPTIVE_MS_COST:
                if gate_anchor:
                    dl = dl + c_ms * gate0 * dH[i, :cols]
                else:
                    dl = dl + c_ms * (M[i] * dH[i, :cols] + H[i] * dM[i, :cols])
            grad[:cols] += ds * dl
            if linear_jerk:
                grad[k] += ds * c_jerk
            else:
                grad[k] += ds * 2.0 * c_jerk * jk
            if per_axis:
                G[k, :cols] = (-2.0 * a / amax2) * da
                G[n + k, :cols] = (-2.0 * latc / amax2) * dlatc
            else:
                G[k, :cols] = (-2.0 / amax2) * (a * da + latc * dlatc)
            G[n_acc * n + k, :cols] = (-1.0 / v_max) * dv
            G[(n_acc + 1) * n + k, :cols] = (1.0 / v_max) * dv
    return f, grad, g, G


# ---------------------------------------------------------------------------
# ISO weighting filter in modal (diagonal) form


@jit
def _modal_foh(p, dt):
    x = p * dt
    if abs(x) < 1e-4:
        x2 = x * x
        g1 = dt * (1.0 + x / 2.0 + x2 / 6.0 + x2 * x / 24.0)
        g2 = dt * (0.5 + x / 6.0 + x2 / 24.0 + x2 * x / 120.0)
        e = np.exp(x)
    else:
        e = np.exp(x)
        g1 = (e - 1.0) / p
        g2 = (g1 - dt) / x
    return e, g1 - g2, g2


# the dose quadrature treats the output as linear over at most this long
ISO_QUAD_STEP = 0.05


@jit
def iso_run(modes, poles, residues, u_prev, y_prev, accum, inputs, dts):
    """Run the modal ISO filter over ``inputs``.

    ``modes`` are the complex modal states (``z' = p z + u``, output
    ``y = Re(sum(r z))``). Each step is split into substeps no longer than
    ``ISO_QUAD_STEP`` (exact, since the held input is linear) and every
    substep adds the integral of ``y**2`` with ``y`` linear across it, so
    the accumulator never decreases.
    Returns ``(modes, u_last, y_last, accum, y, acc_trace)``.
    """
    n = inputs.shape[0]
    z = modes.copy()
    y_out = np.empty(n)
    acc_out = np.empty(n)
    u0 = u_prev
    y0 = y_prev
    for i in range(n):
        dt = dts[i]
        u1 = inputs[i]
        m = max(1, int(math.ceil(dt / ISO_QUAD_STEP - 1e-9)))
        h = dt / m
        ua = u0
        y = y0
        for k in range(m):
            ub = u0 + (u1 - u0) * (k + 1) / m
            yb = 0.0
            for q in range(z.shape[0]):
                e, w0, w1 = _modal_foh(poles[q], h)
                z[q] = e * z[q] + w0 * ua + w1 * ub
                yb += (residues[q] * z[q]).real
            accum += h * (y * y + y * yb + yb * yb) / 3.0
            ua = ub
            y = yb
        y_out[i] = y
        acc_out[i] = accum
        u0 = u1
        y0 = y
    return z, u0, y0, accum, y_out, acc_out
