"""Strategy/weight matrix runs, Pareto tables and plots."""

from __future__ import annotations

import logging
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
from scipy.stats import kendalltau

from .costs import CostKind, CostSpec
from .dynamics import Limits
from .errors import InvalidInputError, MissionInfeasibleError, SolverFailureError
from .geometry import PathSpline, SyntheticRoadSpec, load_road
from .mpc import MissionResult, MpcConfig, receding_loop
from .sickness import ConflictModelParams

log = logging.getLogger(__name__)

STATUS_OK = "ok"
STATUS_INFEASIBLE = "infeasible"
STATUS_SOLVER_FAILURE = "solver_failure"

_LABEL_RE = re.compile(r"^[A-Za-z0-9_.+-]+$")

# (kind, swept weight name, values) for the reference comparison
REFERENCE_SWEEPS = (
    (CostKind.MINIMUM_TIME, None, (None,)),
    (CostKind.JERK_COST, "c_j", (40.0, 200.0, 1500.0)),
    (CostKind.ACCELERATION_COST, "c_a", (10.0, 15.0)),
    (CostKind.MS_COST, "c_ms", (75.0, 140.0, 170.0, 200.0)),
    (CostKind.ADAPTIVE_MS_COST, "c_ms", (24.0, 25.0, 27.0, 30.0, 40.0)),
)


def _weight_tag(value: float) -> str:
    return f"{value:g}".replace(".", "p")


def reference_matrix_rows(c_t: float | None = None, c_u: float | None = None) -> list[tuple[CostSpec, str]]:
    """The reference sweep: one baseline plus the jerk, acceleration, MS and adaptive rows."""
    base = {}
    if c_t is not None:
        base["c_t"] = c_t
    if c_u is not None:
        base["c_u"] = c_u
    rows = []
    for kind, weight, values in REFERENCE_SWEEPS:
        for val in values:
            if weight is None:
                rows.append((CostSpec(kind=kind, **base), kind.label))
            else:
                rows.append((CostSpec(kind=kind, **{weight: val}, **base),
                             f"{kind.label}_{weight}{_weight_tag(val)}"))
    return rows


@dataclass
class RunMatrix:
    rows: list[tuple[CostSpec, str]]
    road: str = "synthetic"
    road_spec: SyntheticRoadSpec = field(default_factory=SyntheticRoadSpec)
    limits: Limits = field(default_factory=Limits)
    config: MpcConfig = field(default_factory=MpcConfig)
    sickness: ConflictModelParams = field(default_factory=ConflictModelParams)

    def __post_init__(self):
        if not self.rows:
            raise InvalidInputError("run matrix is empty")
        labels = [label for _, label in self.rows]
        dup = sorted({lab for lab in labels if labels.count(lab) > 1})
        if dup:
            raise InvalidInputError(f"duplicate run labels: {dup}")
        bad = [lab for lab in labels if not _LABEL_RE.match(lab)]
        if bad:
            raise InvalidInputError(f"labels must be file-name safe: {bad}")
        if not any(spec.kind == CostKind.MINIMUM_TIME for spec, _ in self.rows):
            raise InvalidInputError("run matrix needs a MinimumTime baseline row")

    @property
    def labels(self) -> list[str]:
        return [label for _, label in self.rows]

    @classmethod
    def from_mapping(cls, data: dict | None, road: str | None = None, seed: int | None = None) -> "RunMatrix":
        data = dict(data or {})
        known = {"road", "road_spec", "limits", "mpc", "sickness", "baseline", "runs"}
        unknown = set(data) - known
        if unknown:
            raise InvalidInputError(f"unknown config sections: {sorted(unknown)}")
        road_spec = dict(data.get("road_spec") or {})
        if seed is not None:
            road_spec["seed"] = int(seed)
        baseline = dict(data.get("baseline") or {})
        extra = set(baseline) - {"c_t", "c_u"}
        if extra:
            raise InvalidInputError(f"baseline accepts only c_t and c_u, got {sorted(extra)}")
        runs = data.get("runs")
        if runs is None:
            rows = reference_matrix_rows(baseline.get("c_t"), baseline.get("c_u"))
        else:
            rows = []
            for entry in runs:
                entry = dict(entry)
                label = entry.pop("label", None)
                spec = CostSpec.from_mapping({**baseline, **entry})
                rows.append((spec, label or spec.kind.label))
        return cls(rows=rows, road=str(road or data.get("road", "synthetic")),
                   road_spec=SyntheticRoadSpec.from_mapping(road_spec),
                   limits=Limits.from_mapping(data.get("limits")),
                   config=MpcConfig.from_mapping(data.get("mpc")),
                   sickness=ConflictModelParams.from_mapping(data.get("sickness")))

    @classmethod
    def from_yaml(cls, path, road: str | None = None, seed: int | None = None) -> "RunMatrix":
        return cls.from_mapping(yaml.safe_load(Path(path).read_text()), road=road, seed=seed)

    def to_mapping(self) -> dict:
        spec = self.road_spec
        return {
            "road": self.road,
            "road_spec": {"total_length": spec.total_length, "winding_fraction": spec.winding_fraction,
                          "radius_min": spec.radius_min, "radius_max": spec.radius_max,
                          "seed": spec.seed, "transition_length": spec.transition_length,
                          "turn_angle_deg": list(spec.turn_angle_deg),
                          "straight_length": list(spec.straight_length), "resolution": spec.resolution},
            "limits": {k: getattr(self.limits, k) for k in Limits.__dataclass_fields__},
            "mpc": {k: getattr(self.config, k) for k in MpcConfig.__dataclass_fields__},
            "sickness": {k: getattr(self.sickness, k) for k in ConflictModelParams.__dataclass_fields__},
            "runs": [{"label": label, **spec.to_mapping()} for spec, label in self.rows],
        }

    def load_road(self) -> PathSpline:
        return load_road(self.road, self.road_spec)


@dataclass
class RowOutcome:
    """A finished row: either a mission result or the failure that stopped it."""

    label: str
    status: str
    result: MissionResult | None = None
    message: str = ""
    station: float | None = None

    @property
    def travel_time(self) -> float:
        return self.result.travel_time if self.result else math.nan

    @property
    def msi_max_unipg(self) -> float:
        return self.result.msi_max_unipg if self.result else math.nan

    @property
    def msi_max_iso(self) -> float:
        return self.result.msi_max_iso if self.result else math.nan


def _run_row(args) -> RowOutcome:
    spline, spec, label, limits, config, params = args
    try:
        res = receding_loop(spline, spec, limits, config, params, label=label)
    except MissionInfeasibleError as exc:
        return RowOutcome(label, STATUS_INFEASIBLE, message=str(exc), station=exc.station)
    except SolverFailureError as exc:
        return RowOutcome(label, STATUS_SOLVER_FAILURE, message=str(exc), station=exc.station)
    if not res.audit.passed:
        # never report a result that breaks the vehicle limits
        return RowOutcome(label, STATUS_INFEASIBLE, message=f"constraint audit failed: {res.audit}")
    return RowOutcome(label, STATUS_OK, result=res)


def run_matrix(matrix: RunMatrix, workers: int = 1, spline: PathSpline | None = None) -> list[RowOutcome]:
    """Run every row; the returned list follows the matrix order whatever the completion order."""
    spline = spline if spline is not None else matrix.load_road()
    tasks = [(spline, spec, label, matrix.limits, matrix.config, matrix.sickness)
             for spec, label in matrix.rows]
    if workers <= 1 or len(tasks) == 1:
        outcomes = [_run_row(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            outcomes = list(pool.map(_run_row, tasks))
    for out in outcomes:
        if out.status == STATUS_OK:
            log.info("%s: %.1f s, max MSI %.2f%% / %.2f%%", out.label, out.travel_time,
                     out.msi_max_unipg, out.msi_max_iso)
        else:
            log.warning("%s: %s (%s)", out.label, out.status, out.message)
    return outcomes


@dataclass(frozen=True)
class ParetoRow:
    label: str
    travel_time: float
    msi_max: float
    dominated: bool
    dominated_by: tuple[str, ...]


def pareto_report(points) -> list[ParetoRow]:
    """Sort ``(label, travel_time, max_msi)`` by time and flag dominated rows.

    A row is dominated when another row is strictly better in both travel
    time and max MSI.
    """
    pts = [(str(lab), float(t), float(m)) for lab, t, m in points]
    if len(pts) < 2:
        raise InvalidInputError("a Pareto report needs at least two results")
    out = []
    for lab, t, m in sorted(pts, key=lambda p: (p[1], p[2], p[0])):
        by = tuple(o for o, ot, om in sorted(pts, key=lambda p: (p[1], p[0])) if ot < t and om < m)
        out.append(ParetoRow(lab, t, m, bool(by), by))
    return out


@dataclass(frozen=True)
class CrossMetricReport:
    labels: tuple[str, ...]
    unipg: tuple[float, ...]
    iso: tuple[float, ...]
    kendall_tau: float | None

    @property
    def tau_text(self) -> str:
        return "n/a" if self.kendall_tau is None else f"{self.kendall_tau:.6f}"


def cross_metric_report(results) -> CrossMetricReport:
    """Kendall rank correlation between the two max-MSI metrics over the runs."""
    rows = [(r.label, float(r.msi_max_unipg), float(r.msi_max_iso)) for r in results]
    labels = tuple(r[0] for r in rows)
    u = np.array([r[1] for r in rows])
    v = np.array([r[2] for r in rows])
    tau = None
    if len(rows) >= 2 and np.all(np.isfinite(u)) and np.all(np.isfinite(v)):
        stat = kendalltau(u, v).statistic
        tau = None if not np.isfinite(stat) else float(stat)
    return CrossMetricReport(labels, tuple(u.tolist()), tuple(v.tolist()), tau)


def _fmt(x: float) -> str:
    return "nan" if not math.isfinite(x) else repr(float(x))


def write_outputs(matrix: RunMatrix, outcomes: list[RowOutcome], out_dir, plots: bool = True) -> Path:
    """Write per-run traces, ``summary.csv``, ``pareto.csv`` and the cross-metric table."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(yaml.safe_dump(matrix.to_mapping(), sort_keys=True))
    lines = ["label,travel_time_s,msi_max_unipg_pct,msi_max_iso_pct,status"]
    for o in outcomes:
        lines.append(f"{o.label},{_fmt(o.travel_time)},{_fmt(o.msi_max_unipg)},{_fmt(o.msi_max_iso)},{o.status}")
        if o.result is not None:
            run_dir = out / o.label
            run_dir.mkdir(exist_ok=True)
            o.result.trajectory.to_csv(run_dir / "trajectory.csv")
            o.result.sickness.to_csv(run_dir / "msi.csv")
    (out / "summary.csv").write_text("\n".join(lines) + "\n")
    ok = [o for o in outcomes if o.status == STATUS_OK]
    write_pareto(ok, out)
    report = cross_metric_report(ok)
    rows = ["label,msi_max_unipg_pct,msi_max_iso_pct"]
    rows += [f"{lab},{_fmt(u)},{_fmt(v)}" for lab, u, v in zip(report.labels, report.unipg, report.iso)]
    rows.append(f"# kendall_tau,{report.tau_text}")
    (out / "cross_metric.csv").write_text("\n".join(rows) + "\n")
    if plots and ok:
        from .plots import plot_msi_histories, plot_pareto
        plot_pareto(ok, out / "pareto.png")
        plot_msi_histories(ok, out / "msi_time.png")
    return out


def write_pareto(outcomes, out_dir) -> Path:
    out = Path(out_dir)
    path = out / "pareto.csv"
    header = "label,travel_time_s,msi_max_unipg_pct,msi_max_iso_pct,dominated,dominated_by"
    if len(outcomes) < 2:
        path.write_text(header + "\n" + "".join(
            f"{o.label},{_fmt(o.travel_time)},{_fmt(o.msi_max_unipg)},{_fmt(o.msi_max_iso)},false,\n"
            for o in outcomes))
        return path
    iso = {o.label: o.msi_max_iso for o in outcomes}
    rows = pareto_report([(o.label, o.travel_time, o.msi_max_unipg) for o in outcomes])
    lines = [header]
    for r in rows:
        lines.append(f"{r.label},{_fmt(r.travel_time)},{_fmt(r.msi_max)},{_fmt(iso[r.label])},"
                     f"{str(r.dominated).lower()},{' '.join(r.dominated_by)}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_summary(in_dir) -> list[dict]:
    """Rows of ``summary.csv`` with numeric fields parsed."""
    path = Path(in_dir) / "summary.csv"
    if not path.exists():
        raise FileNotFoundError(path)
    lines = path.read_text().splitlines()
    keys = lines[0].split(",")
    out = []
    for line in lines[1:]:
        if not line.strip():
            continue
        rec = dict(zip(keys, line.split(",")))
        for k in ("travel_time_s", "msi_max_unipg_pct", "msi_max_iso_pct"):
            rec[k] = float(rec[k])
        out.append(rec)
    return out
