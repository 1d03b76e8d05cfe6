"""Receding-horizon speed-profile optimisation along a fixed path.

Each horizon optimises ``N`` jerk values over nodes spaced by the distance
covered in 0.5 s at the anchor speed. Curvature is frozen at the node
stations, the sickness model is rolled forward inside the horizon, and only
the first step is committed before the next horizon is anchored at the
second node of the previous solution.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .costs import CostKind, CostSpec
from .dynamics import AuditReport, Limits, TrajectoryTrace, adaptive_step_size
from .errors import InvalidInputError, MissionInfeasibleError, NLPEvaluationError, SolverFailureError
from .geometry import PathSpline
from .kernels import horizon_terms, sickness_rollout, spatial_node_step, vehicle_rollout
from .nlp import CONVERGED, INFEASIBLE, MAX_ITER, solve_nlp
from .sickness import ConflictModelParams, SicknessState, SicknessTrace, evaluate_trace

log = logging.getLogger(__name__)

GATE_ROLLED = "rolled"
GATE_ANCHOR = "anchor"

# feasibility slack on the normalised constraint rows of the anchor node
_ANCHOR_TOL = 1e-7
# acceleration rows beyond the first node keep this much slack, which the
# next horizon (with a slightly shifted node grid) can spend
ACCEL_MARGIN = 5e-3
# sample spacing (s) of the trajectory used for the reported sickness traces
REPORT_STEP = 0.1


@dataclass(frozen=True)
class MpcConfig:
    horizon: int = 40
    step_time: float = 0.5
    gate: str = GATE_ROLLED
    fix_first_input: bool = False
    accel_margin: float = ACCEL_MARGIN
    tol: float = 1e-6
    max_iter: int = 200
    initial_speed: float = 25.0
    initial_accel: float = 0.0

    def __post_init__(self):
        if self.horizon < 2:
            raise InvalidInputError("horizon must have at least 2 nodes")
        if self.gate not in (GATE_ROLLED, GATE_ANCHOR):
            raise InvalidInputError(f"gate must be '{GATE_ROLLED}' or '{GATE_ANCHOR}'")
        if not self.step_time > 0:
            raise InvalidInputError("step_time must be positive")

    @classmethod
    def from_mapping(cls, data: dict | None) -> "MpcConfig":
        data = dict(data or {})
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidInputError(f"unknown optimiser settings: {sorted(unknown)}")
        return cls(**data)


@dataclass
class HorizonProblem:
    v0: float
    a0: float
    t0: float
    sickness0: np.ndarray
    ds: float
    rho: np.ndarray  # n + 1 node curvatures, anchor first
    cost: CostSpec
    rho_con: np.ndarray | None = None  # curvature for the acceleration rows; defaults to rho
    limits: Limits = field(default_factory=Limits)
    params: ConflictModelParams = field(default_factory=ConflictModelParams)
    gate: str = GATE_ROLLED
    j_guess: np.ndarray | None = None
    fixed_first: float | None = None
    accel_margin: float = 0.0

    @property
    def n(self) -> int:
        return self.rho.size - 1

    def __post_init__(self):
        self.rho = np.ascontiguousarray(self.rho, dtype=float)
        if self.rho_con is None:
            self.rho_con = self.rho
        self.rho_con = np.ascontiguousarray(self.rho_con, dtype=float)
        if self.rho_con.shape != self.rho.shape or np.any(self.rho_con < self.rho):
            raise InvalidInputError("constraint curvature must cover the node curvature")
        self.sickness0 = np.ascontiguousarray(self.sickness0, dtype=float)
        if self.n < 1:
            raise InvalidInputError("a horizon needs at least one step")
        if not self.ds > 0:
            raise InvalidInputError("node spacing must be positive")
        if np.any(self.rho < 0) or not np.all(np.isfinite(self.rho)):
            raise InvalidInputError("curvature samples must be finite and non-negative")


@dataclass
class HorizonSolution:
    jerk: np.ndarray
    v: np.ndarray
    a: np.ndarray
    t: np.ndarray
    h: np.ndarray
    msi: np.ndarray
    sickness_states: np.ndarray
    objective: float
    status: str
    iterations: int
    hessian: np.ndarray | None = None
    message: str = ""


def _needs_sickness(kind: CostKind) -> bool:
    return kind in (CostKind.MS_COST, CostKind.ADAPTIVE_MS_COST)


class _HorizonModel:
    """Objective/constraint evaluator for one horizon over the free jerks."""

    def __init__(self, p: HorizonProblem):
        self.p = p
        self.n = p.n
        lim = p.limits
        self.args_sick = p.params.kernel_args()
        self.use_sick = _needs_sickness(p.cost.kind)
        self.m = self.n * ((2 if lim.per_axis else 1) + 2)
        n1 = self.n + 1
        n_acc = 2 if lim.per_axis else 1
        self.margin = np.zeros(self.m)
        for blk in range(n_acc):
            self.margin[blk * self.n + 1:(blk + 1) * self.n] = p.accel_margin
        self._zeros_h = np.zeros(n1)
        self._zeros_dh = np.zeros((n1, self.n))

    def full(self, x):
        if self.p.fixed_first is None:
            return np.ascontiguousarray(x, dtype=float)
        return np.concatenate([[self.p.fixed_first], x])

    def rollout(self, jerk, want):
        p = self.p
        ok, V, A, T, dV, dA, dT = vehicle_rollout(p.v0, p.a0, p.t0, jerk, p.ds, want)
        return ok, V, A, T, dV, dA, dT

    def evaluate(self, x, want):
        p = self.p
        c = p.cost
        lim = p.limits
        jerk = self.full(x)
        ok, V, A, T, dV, dA, dT = self.rollout(jerk, want)
        if not ok:
            return np.inf, -np.ones(self.m), None, None
        if self.use_sick:
            H, M, dH, dM, _ = sickness_rollout(V, A, T, p.rho, dV, dA, dT, p.sickness0,
                                               *self.args_sick, want)
        else:
            H = M = self._zeros_h
            dH = dM = self._zeros_dh
        f, g, cons, G = horizon_terms(
            int(c.kind), jerk, V, A, p.rho, p.rho_con, H, M, dV, dA, dH, dM, p.ds,
            c.c_t, c.jerk_weight, c.c_a, c.c_ms, c.linear_jerk, c.squared_lateral,
            p.gate == GATE_ANCHOR, lim.a_max_total, lim.v_min, lim.v_max, lim.per_axis, want)
        cons = cons - self.margin
        if not want:
            return f, cons, None, None
        if p.fixed_first is not None:
            g = g[1:]
            G = G[:, 1:]
        return f, cons, g, G


def _safe_guess(p: HorizonProblem) -> np.ndarray:
    """Jerk sequence that steers the acceleration to zero, keeping the rollout valid."""
    jm = p.limits.j_max
    out = np.empty(p.n)
    v, a = p.v0, p.a0
    for k in range(p.n):
        dt = p.ds / max(v, 1e-3)
        j = float(np.clip(-a / dt, -jm, jm))
        if v + 2 * a * dt < p.limits.v_min:
            j = jm
        out[k] = j
        v, a, _, _ = spatial_node_step(v, a, j, p.ds)
        if not math.isfinite(v) or v <= 0.5:
            out[k:] = jm
            break
    return out


def _anchor_violation(p: HorizonProblem) -> str:
    lim = p.limits
    lat = p.v0 * p.v0 * p.rho[0]  # committed node: audited at its station
    if lim.per_axis:
        bad = max(abs(p.a0), lat) > lim.a_max_total * (1 + _ANCHOR_TOL)
    else:
        bad = math.hypot(p.a0, lat) > lim.a_max_total * (1 + _ANCHOR_TOL)
    if bad:
        return f"anchor acceleration {math.hypot(p.a0, lat):.6f} exceeds {lim.a_max_total:.6f}"
    if p.v0 > lim.v_max * (1 + _ANCHOR_TOL) or p.v0 < lim.v_min * (1 - _ANCHOR_TOL):
        return f"anchor speed {p.v0:.6f} outside [{lim.v_min}, {lim.v_max}]"
    return ""


def solve_horizon(p: HorizonProblem, hessian0: np.ndarray | None = None, *,
                  tol: float = 1e-6, max_iter: int = 200) -> HorizonSolution:
    """Optimise one horizon. States in the solution are the rollout of its jerks."""
    model = _HorizonModel(p)
    lim = p.limits
    msg = _anchor_violation(p)
    if msg:
        jerk = np.zeros(p.n) if p.fixed_first is None else np.r_[p.fixed_first, np.zeros(p.n - 1)]
        return _package(model, jerk, np.inf, INFEASIBLE, 0, None, msg)

    free = p.n - (0 if p.fixed_first is None else 1)
    if free == 0:
        jerk = model.full(np.zeros(0))
        f, cons, _, _ = model.evaluate(np.zeros(0), False)
        status = CONVERGED if np.all(cons >= -1e-9) else INFEASIBLE
        return _package(model, jerk, f, status, 0, None, "")

    lb = np.full(free, -lim.j_max)
    ub = np.full(free, lim.j_max)
    guesses = []
    if p.j_guess is not None:
        g0 = np.asarray(p.j_guess, dtype=float)[-free:] if len(p.j_guess) >= free else None
        if g0 is not None:
            guesses.append(np.clip(g0, lb, ub))
    guesses.append(np.zeros(free))
    guesses.append(_safe_guess(p)[p.n - free:])

    best = None
    for attempt, x0 in enumerate(guesses):
        f0 = model.evaluate(x0, False)[0]
        if not np.isfinite(f0):
            continue
        try:
            res = solve_nlp(model.evaluate, x0, lb, ub, tol=tol, max_iter=max_iter,
                            hessian0=hessian0 if attempt == 0 else None)
        except NLPEvaluationError as exc:
            raise SolverFailureError(str(exc)) from exc
        if best is None or _rank(res) < _rank(best):
            best = res
        if res.status != INFEASIBLE:
            break
    if best is None:
        raise SolverFailureError("no initial guess gives a valid rollout")
    return _package(model, model.full(best.x), best.f, best.status, best.iterations, best.hessian,
                    "" if best.status != INFEASIBLE else
                    f"constraint violation {best.constraint_violation:.3e}")


def _rank(res):
    return (res.status == INFEASIBLE, res.constraint_violation, res.f)


def _package(model, jerk, f, status, iters, hessian, message):
    p = model.p
    ok, V, A, T, dV, dA, dT = vehicle_rollout(p.v0, p.a0, p.t0, jerk, p.ds, False)
    H, M, _, _, states = sickness_rollout(V, A, T, p.rho, dV, dA, dT, p.sickness0,
                                          *p.params.kernel_args(), False)
    return HorizonSolution(jerk=jerk, v=V, a=A, t=T, h=H, msi=M, sickness_states=states,
                           objective=float(f), status=status, iterations=int(iters),
                           hessian=hessian, message=message)


@dataclass
class SolverStats:
    horizons: int = 0
    iterations: int = 0
    max_iter_horizons: int = 0
    recovered_horizons: int = 0
    wall_time: float = 0.0


@dataclass
class MissionResult:
    label: str
    cost: CostSpec
    trajectory: TrajectoryTrace
    sickness: SicknessTrace
    stats: SolverStats
    audit: AuditReport | None = None
    status: str = "ok"
    message: str = ""

    @property
    def travel_time(self) -> float:
        return self.trajectory.travel_time

    @property
    def msi_max_unipg(self) -> float:
        return self.sickness.max_unipg

    @property
    def msi_max_iso(self) -> float:
        return self.sickness.max_iso


def _shift(prev: np.ndarray | None, n: int) -> np.ndarray | None:
    if prev is None:
        return None
    out = np.concatenate([prev[1:], prev[-1:]])
    if out.size >= n:
        return out[:n]
    return np.concatenate([out, np.full(n - out.size, out[-1])])


def _shift_hessian(B: np.ndarray | None, n: int) -> np.ndarray | None:
    if B is None or B.shape[0] < 2:
        return None
    inner = B[1:, 1:]
    k = inner.shape[0]
    out = np.eye(n) * float(np.mean(np.diag(inner)))
    m = min(k, n)
    out[:m, :m] = inner[:m, :m]
    return out


def receding_loop(spline: PathSpline, spec: CostSpec, limits: Limits | None = None,
                  config: MpcConfig | None = None, params: ConflictModelParams | None = None,
                  label: str | None = None) -> MissionResult:
    """Drive the whole path, committing one step per horizon.

    Raises :class:`MissionInfeasibleError` with the failing station when a
    horizon admits no feasible plan.
    """
    limits = limits or Limits()
    config = config or MpcConfig()
    params = params or ConflictModelParams()
    L = spline.total_length
    v, a, t = float(config.initial_speed), float(config.initial_accel), 0.0
    if not limits.v_min <= v <= limits.v_max:
        raise InvalidInputError("initial speed outside the speed limits")
    sick = SicknessState.at_rest(params.gravity).vector
    stats = SolverStats()
    t_start = time.perf_counter()

    S, Tn, Vn, An, R, J = [0.0], [t], [v], [a], [spline.curvature(0.0)], []
    x_prev = None
    B_prev = None
    s = 0.0
    while L - s > 1e-9:
        remaining = L - s
        ds = adaptive_step_size(v, limits) * (config.step_time / 0.5)
        n = config.horizon
        final = False
        if n * ds >= remaining:
            n = max(2, math.ceil(remaining / ds - 1e-9))
            ds = remaining / n
            final = n == 2
        stations = np.minimum(s + ds * np.arange(n + 1), L)
        rho = spline.curvature(stations)
        # nodes of later horizons fall between these stations; guard the
        # acceleration rows with the worst curvature within half a step
        rho_con = spline.max_curvature(stations - 0.5 * ds, stations + 0.5 * ds)
        guess = _shift(x_prev, n)
        fixed = None
        if config.fix_first_input and x_prev is not None and x_prev.size > 1:
            fixed = float(x_prev[1])
        prob = HorizonProblem(v0=v, a0=a, t0=t, sickness0=sick, ds=ds, rho=rho, rho_con=rho_con, cost=spec,
                              limits=limits, params=params, gate=config.gate,
                              j_guess=guess, fixed_first=fixed, accel_margin=config.accel_margin)
        free = n - (0 if fixed is None else 1)
        H0 = _shift_hessian(B_prev, free)
        sol = solve_horizon(prob, H0, tol=config.tol, max_iter=config.max_iter)
        if sol.status == INFEASIBLE:
            # recovery: cold start with a free first input, then without the margin
            stats.recovered_horizons += 1
            for retry in (replace(prob, fixed_first=None, j_guess=None),
                          replace(prob, fixed_first=None, accel_margin=0.0)):
                sol = solve_horizon(retry, None, tol=config.tol, max_iter=config.max_iter)
                if sol.status != INFEASIBLE:
                    break
        stats.horizons += 1
        stats.iterations += sol.iterations
        if sol.status == INFEASIBLE:
            raise MissionInfeasibleError(f"no feasible plan at s={s:.1f} m ({sol.message})", station=s)
        if sol.status == MAX_ITER:
            stats.max_iter_horizons += 1
        commit = n if final else 1
        for k in range(1, commit + 1):
            S.append(float(stations[k]))
            Tn.append(float(sol.t[k]))
            Vn.append(float(sol.v[k]))
            An.append(float(sol.a[k]))
            R.append(float(rho[k]))
            J.append(float(sol.jerk[k - 1]))
        v, a, t = float(sol.v[commit]), float(sol.a[commit]), float(sol.t[commit])
        sick = sol.sickness_states[commit].copy()
        s = float(stations[commit])
        x_prev = sol.jerk
        B_prev = sol.hessian
        if final:
            break
    stats.wall_time = time.perf_counter() - t_start

    traj = TrajectoryTrace(s=np.array(S), t=np.array(Tn), v=np.array(Vn), a=np.array(An),
                           rho=np.array(R), j=np.array(J))
    # sickness is reported for the continuous trajectory, not just its nodes
    sick_trace = evaluate_trace(*traj.dense_samples(spline.curvature_unchecked, REPORT_STEP), params)
    return MissionResult(label=label or spec.kind.label, cost=spec, trajectory=traj,
                         sickness=sick_trace, stats=stats, audit=traj.audit(limits))
