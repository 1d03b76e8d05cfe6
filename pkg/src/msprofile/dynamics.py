"""Point-mass longitudinal dynamics with arc length as the independent variable."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .kernels import GRAVITY, rk4_spatial, spatial_node_step

# substeps used when a braking step has to be clamped at v_min
_CLAMP_SUBSTEPS = 64


@dataclass(frozen=True)
class Limits:
    a_max_total: float = 0.3 * GRAVITY
    j_max: float = 3.0
    v_min: float = 5.0
    v_max: float = 36.11
    per_axis: bool = False

    def __post_init__(self):
        for name in ("a_max_total", "j_max", "v_min", "v_max"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise InvalidInputError(f"{name} must be positive and finite, got {val}")
        if self.v_min >= self.v_max:
            raise InvalidInputError("v_min must be below v_max")

    @classmethod
    def from_mapping(cls, data: dict | None) -> "Limits":
        return cls(**(data or {}))


@dataclass(frozen=True)
class VehicleState:
    s: float
    v: float
    a: float
    t: float
    clamped: bool = False


@dataclass(frozen=True)
class ControlInput:
    j: float

    def __post_init__(self):
        if not math.isfinite(self.j):
            raise InvalidInputError("jerk must be finite")


def lateral_accel(v, rho):
    return v * v * rho


def accel_modulus(a_t, v, rho):
    return np.hypot(a_t, lateral_accel(v, rho))


def adaptive_step_size(v0: float, limits: Limits | None = None) -> float:
    """Distance covered in 0.5 s at ``v0`` (floored at ``v_min``)."""
    v_min = (limits or Limits()).v_min
    return 0.5 * max(float(v0), v_min)


def step_spatial(state: VehicleState, u: ControlInput, ds: float, rho: float = 0.0,
                 limits: Limits | None = None) -> VehicleState:
    """Advance ``state`` by ``ds`` metres under constant jerk ``u``.

    ``rho`` is accepted for interface symmetry; the longitudinal ODE does not
    depend on it. If the step would take the speed below ``v_min`` the
    result is clamped there (acceleration floored at zero) and flagged.
    """
    if not ds > 0:
        raise InvalidInputError(f"step length must be positive, got {ds}")
    limits = limits or Limits()
    v1, a1, dt, vmin = spatial_node_step(state.v, state.a, u.j, ds)
    if vmin >= limits.v_min and v1 >= limits.v_min and math.isfinite(v1):
        return VehicleState(state.s + ds, v1, a1, state.t + dt)
    v, a, t = state.v, state.a, state.t
    h = ds / _CLAMP_SUBSTEPS
    for _ in range(_CLAMP_SUBSTEPS):
        v_n, a_n, dt_n, vm = rk4_spatial(v, a, u.j, h)
        if vm < limits.v_min or v_n < limits.v_min or not math.isfinite(v_n):
            v_n, a_n, dt_n = limits.v_min, max(a, 0.0), h / limits.v_min
        v, a, t = v_n, a_n, t + dt_n
    return VehicleState(state.s + ds, v, a, t, clamped=True)


@dataclass
class AuditReport:
    max_accel: float
    max_abs_jerk: float
    accel_violations: int
    jerk_violations: int
    speed_violations: int
    time_monotone: bool

    @property
    def passed(self) -> bool:
        return (self.accel_violations == 0 and self.jerk_violations == 0
                and self.speed_violations == 0 and self.time_monotone)


@dataclass
class TrajectoryTrace:
    """Committed mission trajectory; ``j[k]`` is the jerk applied from node k to k+1."""

    s: np.ndarray
    t: np.ndarray
    v: np.ndarray
    a: np.ndarray
    rho: np.ndarray
    j: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def a_lat(self) -> np.ndarray:
        return self.v**2 * self.rho

    @property
    def a_mod(self) -> np.ndarray:
        return np.hypot(self.a, self.a_lat)

    @property
    def travel_time(self) -> float:
        return float(self.t[-1])

    def node_jerk(self) -> np.ndarray:
        out = np.zeros_like(self.s)
        out[: self.j.size] = self.j
        return out

    def audit(self, limits: Limits, accel_tol: float = 1e-6, jerk_tol: float = 1e-9,
              speed_tol: float = 1e-6) -> AuditReport:
        if limits.per_axis:
            excess = np.maximum(np.abs(self.a), self.a_lat)
        else:
            excess = self.a_mod
        return AuditReport(
            max_accel=float(excess.max()),
            max_abs_jerk=float(np.abs(self.j).max()) if self.j.size else 0.0,
            accel_violations=int(np.sum(excess > limits.a_max_total + accel_tol)),
            jerk_violations=int(np.sum(np.abs(self.j) > limits.j_max + jerk_tol)),
            speed_violations=int(np.sum((self.v > limits.v_max + speed_tol) | (self.v < limits.v_min - speed_tol))),
            time_monotone=bool(np.all(np.diff(self.t) > 0)),
        )

    def dense_samples(self, curvature, max_dt: float = 0.1) -> tuple:
        """``(t, a_t, a_lat)`` sampled at most ``max_dt`` apart along the exact trajectory.

        Inside a segment the jerk is constant, so acceleration, speed and
        position are polynomials in time; ``curvature(s)`` supplies the path.
        Node samples are included unchanged.
        """
        if not max_dt > 0:
            raise InvalidInputError("max_dt must be positive")
        dt = np.diff(self.t)
        m = np.maximum(1, np.ceil(dt / max_dt - 1e-9).astype(int))
        seg = np.repeat(np.arange(dt.size), m)
        frac = np.concatenate([np.arange(k) / k for k in m])
        tau = frac * dt[seg]
        j = self.j[seg]
        v0, a0, s0 = self.v[seg], self.a[seg], self.s[seg]
        v = v0 + a0 * tau + 0.5 * j * tau**2
        s = np.minimum(s0 + v0 * tau + 0.5 * a0 * tau**2 + j * tau**3 / 6.0, self.s[-1])
        a = a0 + j * tau
        lat = v * v * np.asarray(curvature(s), dtype=float)
        lat[frac == 0] = self.a_lat[:-1]
        t = self.t[seg] + tau
        return (np.append(t, self.t[-1]), np.append(a, self.a[-1]), np.append(lat, self.a_lat[-1]))

    def to_csv(self, path) -> None:
        cols = np.column_stack([self.s, self.t, self.v, self.a, self.a_lat, self.a_mod, self.node_jerk()])
        Path(path).write_text(_format_csv("s,t,v,a_t,a_lat,a_mod,j", cols))

    @classmethod
    def from_csv(cls, path) -> "TrajectoryTrace":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        s, t, v, a, a_lat, _, j = data.T
        rho = np.divide(a_lat, v**2, out=np.zeros_like(v), where=v > 0)
        return cls(s=s, t=t, v=v, a=a, rho=rho, j=j[:-1])


def _format_csv(header: str, cols: np.ndarray) -> str:
    # repr-precision text keeps reruns byte-identical and round-trips exactly
    lines = [header]
    lines.extend(",".join(repr(float(x)) for x in row) for row in cols)
    return "\n".join(lines) + "\n"


def replay(v0: float, a0: float, t0: float, jerk: np.ndarray, ds: np.ndarray) -> tuple:
    """Re-integrate a committed jerk sequence with per-step lengths ``ds``."""
    n = len(jerk)
    v = np.empty(n + 1)
    a = np.empty(n + 1)
    t = np.empty(n + 1)
    v[0], a[0], t[0] = v0, a0, t0
    for k in range(n):
        v[k + 1], a[k + 1], dt, _ = spatial_node_step(v[k], a[k], float(jerk[k]), float(ds[k]))
        t[k + 1] = t[k] + dt
    return v, a, t
