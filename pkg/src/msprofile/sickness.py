"""Motion-sickness evaluators.

Two metrics are driven by the same horizontal acceleration history:

* a subjective-vertical conflict model: sensed specific force (first-order
  low-pass per axis) is compared with a slower estimate of the vertical; the
  squared conflict saturates into the instantaneous disturbance ``h``, which
  feeds two cascaded leaky integrators whose mean is the incidence ``MSI``.
  Once the drive falls below the integrator level the incidence decays.
* a frequency-weighted dose: each horizontal axis goes through a fifth-order
  approximation of the motion-sickness weighting, the squared output is
  integrated, and ``MSI = K_m * sqrt(dose)``. It can only grow.

All filters use exact first-order-hold discretisation, so nonuniform steps
are handled without resampling.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import _iso_coeffs
from .errors import InvalidInputError, NonFiniteInputError
from .kernels import (GRAVITY, S_H, S_SENSED, S_SIZE, S_SV, S_U, S_X1, S_X2,
                      conflict_advance, conflict_run, iso_run)

MAX_STEP = 0.5
PEAK_BAND_HZ = (0.1, 0.3)
# 1 / (2 pi 0.17 Hz): places the conflict band-pass peak at 0.17 Hz
_TAU_PEAK = 1.0 / (2.0 * math.pi * 0.17)


@dataclass(frozen=True)
class ConflictModelParams:
    tau_v: float = _TAU_PEAK
    tau_sv: float = _TAU_PEAK
    b: float = 0.5
    p_gain: float = 85.0
    mu: float = 72.0
    gravity: float = GRAVITY
    iso_km: float = 1.0 / 3.0

    def __post_init__(self):
        for name in ("tau_v", "tau_sv", "b", "mu", "gravity", "iso_km"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise InvalidInputError(f"{name} must be positive, got {val}")
        if not 0 < self.p_gain <= 100:
            raise InvalidInputError(f"p_gain must be in (0, 100], got {self.p_gain}")
        lo, hi = PEAK_BAND_HZ
        if not lo <= self.peak_frequency <= hi:
            raise InvalidInputError(
                f"conflict chain peaks at {self.peak_frequency:.3f} Hz, outside [{lo}, {hi}] Hz")

    @property
    def peak_frequency(self) -> float:
        """Peak of the sensed-minus-vertical transfer ``s tau_sv / ((1 + s tau_v)(1 + s tau_sv))``."""
        return 1.0 / (2.0 * math.pi * math.sqrt(self.tau_v * self.tau_sv))

    def kernel_args(self) -> tuple:
        return self.tau_v, self.tau_sv, self.b, self.p_gain, self.mu

    def to_yaml(self, path) -> None:
        Path(path).write_text(yaml.safe_dump(asdict(self), sort_keys=True))

    @classmethod
    def from_yaml(cls, path) -> "ConflictModelParams":
        return cls.from_mapping(yaml.safe_load(Path(path).read_text()))

    @classmethod
    def from_mapping(cls, data: dict | None) -> "ConflictModelParams":
        data = dict(data or {})
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidInputError(f"unknown sickness parameters: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})


@dataclass(frozen=True)
class SicknessState:
    """Conflict-model state; ``vector`` uses the kernel layout."""

    vector: np.ndarray

    @classmethod
    def at_rest(cls, gravity: float = GRAVITY) -> "SicknessState":
        x = np.zeros(S_SIZE)
        x[S_SENSED + 2] = gravity
        x[S_SV + 2] = gravity
        x[S_U + 2] = gravity
        return cls(x)

    @property
    def h(self) -> float:
        return float(self.vector[S_H])

    @property
    def msi(self) -> float:
        return msi(self)

    @property
    def sensed(self) -> np.ndarray:
        return self.vector[S_SENSED:S_SENSED + 3].copy()

    @property
    def subjective_vertical(self) -> np.ndarray:
        return self.vector[S_SV:S_SV + 3].copy()


def _check_step(dt: float) -> None:
    if not (math.isfinite(dt) and 0 < dt <= MAX_STEP):
        raise InvalidInputError(f"time step must be in (0, {MAX_STEP}] s, got {dt}")


def conflict_step(state: SicknessState, accel, dt: float,
                  params: ConflictModelParams | None = None) -> SicknessState:
    """Advance one step; ``accel`` is (longitudinal, lateral, vertical) specific force."""
    params = params or ConflictModelParams()
    _check_step(dt)
    ax, ay, az = (float(x) for x in accel)
    if not all(math.isfinite(x) for x in (ax, ay, az)):
        raise NonFiniteInputError("acceleration must be finite")
    return SicknessState(conflict_advance(state.vector, ax, ay, az, dt, *params.kernel_args()))


def msi(state: SicknessState) -> float:
    """Incidence in percent, ``(x1 + x2) / 2`` clamped to [0, 100]."""
    val = 0.5 * (state.vector[S_X1] + state.vector[S_X2])
    return float(min(max(val, 0.0), 100.0))


@dataclass(frozen=True)
class IsoFilterState:
    modes: np.ndarray = field(default_factory=lambda: np.zeros(_iso_coeffs.POLES.size, dtype=complex))
    u_prev: float = 0.0
    y_prev: float = 0.0
    accumulator: float = 0.0
    elapsed: float = 0.0

    @property
    def output(self) -> float:
        return self.y_prev


def iso_step(state: IsoFilterState, accel_scalar: float, dt: float) -> IsoFilterState:
    _check_step(dt)
    u = float(accel_scalar)
    if not math.isfinite(u):
        raise NonFiniteInputError("acceleration must be finite")
    z, u_last, y_last, acc, _, _ = iso_run(
        state.modes, _iso_coeffs.POLES, _iso_coeffs.RESIDUES, state.u_prev, state.y_prev,
        state.accumulator, np.array([u]), np.array([dt]))
    return IsoFilterState(z, u_last, y_last, acc, state.elapsed + dt)


def iso_msi(*states: IsoFilterState, km: float = 1.0 / 3.0) -> float:
    """``km * sqrt(sum of accumulators)``: one state per independently filtered axis."""
    dose = sum(s.accumulator for s in states)
    return float(min(km * math.sqrt(dose), 100.0))


def iso_frequency_response(freq_hz) -> np.ndarray:
    """Complex response of the frozen fifth-order weighting."""
    s = 2j * np.pi * np.asarray(freq_hz, dtype=float)
    return np.polyval(_iso_coeffs.NUMERATOR, s) / np.polyval(_iso_coeffs.DENOMINATOR, s)


@dataclass
class SicknessTrace:
    t: np.ndarray
    h: np.ndarray
    msi_unipg: np.ndarray
    msi_iso: np.ndarray

    @property
    def max_unipg(self) -> float:
        return float(self.msi_unipg.max()) if self.msi_unipg.size else 0.0

    @property
    def max_iso(self) -> float:
        return float(self.msi_iso.max()) if self.msi_iso.size else 0.0

    def to_csv(self, path) -> None:
        lines = ["t,h,msi_unipg,msi_iso"]
        for row in zip(self.t, self.h, self.msi_unipg, self.msi_iso):
            lines.append(",".join(repr(float(x)) for x in row))
        Path(path).write_text("\n".join(lines) + "\n")


def _refine(t, ax, ay):
    """Insert linearly interpolated samples so no step exceeds ``MAX_STEP``."""
    dt = np.diff(t)
    if np.any(~(dt > 0)):
        bad = int(np.argmin(dt > 0))
        raise InvalidInputError(f"time must strictly increase (node {bad + 1})")
    pieces = np.maximum(1, np.ceil(dt / MAX_STEP - 1e-12).astype(int))
    if np.all(pieces == 1):
        return t, ax, ay, np.arange(t.size)
    frac = [np.arange(p) / p for p in pieces]
    idx = np.concatenate([np.full(p, k) for k, p in enumerate(pieces)])
    w = np.concatenate(frac)
    tt = np.append(t[idx] + w * dt[idx], t[-1])
    xx = np.append(ax[idx] + w * (ax[idx + 1] - ax[idx]), ax[-1])
    yy = np.append(ay[idx] + w * (ay[idx + 1] - ay[idx]), ay[-1])
    node_pos = np.concatenate([[0], np.cumsum(pieces)])
    return tt, xx, yy, node_pos


def evaluate_trace(t, a_long, a_lat, params: ConflictModelParams | None = None,
                   state: SicknessState | None = None) -> SicknessTrace:
    """Both incidence series at the nodes of an acceleration trace.

    Steps longer than ``MAX_STEP`` are subdivided with linear interpolation,
    which leaves the first-order-hold input unchanged.
    """
    params = params or ConflictModelParams()
    t = np.asarray(t, dtype=float)
    ax = np.asarray(a_long, dtype=float)
    ay = np.asarray(a_lat, dtype=float)
    if not (t.shape == ax.shape == ay.shape) or t.ndim != 1:
        raise InvalidInputError("t, a_long and a_lat must be 1-D arrays of equal length")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(ax)) and np.all(np.isfinite(ay))):
        raise NonFiniteInputError("trace contains non-finite values")
    if t.size == 0:
        empty = np.zeros(0)
        return SicknessTrace(empty, empty, empty, empty)
    tt, xx, yy, node_pos = _refine(t, ax, ay)
    dts = np.diff(tt)

    s0 = (state or SicknessState.at_rest(params.gravity)).vector.copy()
    s0[S_U] = xx[0]
    s0[S_U + 1] = yy[0]
    acc = np.column_stack([xx[1:], yy[1:], np.full(dts.size, s0[S_U + 2])])
    h, m, _ = conflict_run(s0, acc, dts, *params.kernel_args())
    h = np.concatenate([[s0[S_H]], h])
    m = np.clip(np.concatenate([[0.5 * (s0[S_X1] + s0[S_X2])], m]), 0.0, 100.0)

    poles, res = _iso_coeffs.POLES, _iso_coeffs.RESIDUES
    zero = np.zeros(poles.size, dtype=complex)
    _, _, _, _, _, acc_x = iso_run(zero, poles, res, xx[0], 0.0, 0.0, xx[1:], dts)
    _, _, _, _, _, acc_y = iso_run(zero, poles, res, yy[0], 0.0, 0.0, yy[1:], dts)
    dose = np.concatenate([[0.0], acc_x + acc_y])
    iso = np.minimum(params.iso_km * np.sqrt(dose), 100.0)
    return SicknessTrace(t=t, h=h[node_pos], msi_unipg=m[node_pos], msi_iso=iso[node_pos])
