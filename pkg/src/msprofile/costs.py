"""Cost-function registry for the speed-profile optimiser."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from . import kernels
from .errors import InvalidInputError


class CostKind(enum.IntEnum):
    MINIMUM_TIME = kernels.MINIMUM_TIME
    JERK_COST = kernels.JERK_COST
    ACCELERATION_COST = kernels.ACCELERATION_COST
    MS_COST = kernels.MS_COST
    ADAPTIVE_MS_COST = kernels.ADAPTIVE_MS_COST

    @classmethod
    def parse(cls, name) -> "CostKind":
        if isinstance(name, cls):
            return name
        key = str(name).replace("-", "_").upper()
        aliases = {"MINIMUMTIME": "MINIMUM_TIME", "JERKCOST": "JERK_COST",
                   "ACCELERATIONCOST": "ACCELERATION_COST", "MSCOST": "MS_COST",
                   "ADAPTIVEMSCOST": "ADAPTIVE_MS_COST"}
        key = aliases.get(key, key)
        try:
            return cls[key]
        except KeyError:
            raise InvalidInputError(f"unknown cost kind {name!r}") from None

    @property
    def label(self) -> str:
        return "".join(p.capitalize() for p in self.name.split("_"))


# Baseline weights; see README for the calibration of the time weight.
DEFAULT_C_T = 450.0
DEFAULT_C_U = 4.5


@dataclass(frozen=True)
class CostSpec:
    """Weights of one cost function. Only those used by ``kind`` matter.

    ``linear_jerk`` restores a signed linear jerk term; ``squared_lateral``
    squares the lateral term of the acceleration cost.
    """

    kind: CostKind = CostKind.MINIMUM_TIME
    c_t: float = DEFAULT_C_T
    c_u: float = DEFAULT_C_U
    c_j: float = 0.0
    c_a: float = 0.0
    c_ms: float = 0.0
    linear_jerk: bool = False
    squared_lateral: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", CostKind.parse(self.kind))
        for name in ("c_t", "c_u", "c_j", "c_a", "c_ms"):
            val = float(getattr(self, name))
            if not (math.isfinite(val) and val >= 0):
                raise InvalidInputError(f"{name} must be a finite non-negative weight, got {val}")
            object.__setattr__(self, name, val)

    @property
    def jerk_weight(self) -> float:
        return self.c_j if self.kind == CostKind.JERK_COST else self.c_u

    def scaled(self, factor: float) -> "CostSpec":
        return replace(self, c_t=self.c_t * factor, c_u=self.c_u * factor, c_j=self.c_j * factor,
                       c_a=self.c_a * factor, c_ms=self.c_ms * factor)

    @classmethod
    def from_mapping(cls, data: dict) -> "CostSpec":
        data = dict(data)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidInputError(f"unknown cost fields: {sorted(unknown)}")
        return cls(**data)

    def to_mapping(self) -> dict:
        return {"kind": self.kind.name, "c_t": self.c_t, "c_u": self.c_u, "c_j": self.c_j,
                "c_a": self.c_a, "c_ms": self.c_ms, "linear_jerk": self.linear_jerk,
                "squared_lateral": self.squared_lateral}


def stage_cost(spec: CostSpec, v: float, a: float, j: float, rho: float,
               h: float = 0.0, msi: float = 0.0) -> float:
    """Running cost per metre at one node; ``msi`` in percent."""
    if not isinstance(spec, CostSpec):
        raise InvalidInputError("spec must be a CostSpec")
    jerk = spec.jerk_weight * (j if spec.linear_jerk else j * j)
    out = spec.c_t / v + jerk
    kind = spec.kind
    if kind == CostKind.ACCELERATION_COST:
        lat = v * v * rho
        out += spec.c_a * (a * a + (lat * lat if spec.squared_lateral else lat))
    elif kind == CostKind.MS_COST:
        out += spec.c_ms * h
    elif kind == CostKind.ADAPTIVE_MS_COST:
        out += spec.c_ms * h * msi
    return float(out)


def stage_cost_at(spec: CostSpec, state, u, sick, rho: float) -> float:
    """:func:`stage_cost` on domain objects (VehicleState, ControlInput, SicknessState)."""
    return stage_cost(spec, state.v, state.a, u.j, rho, sick.h, sick.msi)
