"""Planar road geometry: waypoint projection, arc-length splines, synthetic roads."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from .errors import (
    DegenerateGeometryError,
    DomainError,
    InvalidInputError,
    WaypointParseError,
)

#: WGS84 mean radius (m).
EARTH_RADIUS = 6371008.8

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class GeoWaypoint:
    latitude: float
    longitude: float

    def __post_init__(self):
        lat, lon = float(self.latitude), float(self.longitude)
        if not (math.isfinite(lat) and math.isfinite(lon)):
            raise InvalidInputError(f"non-finite waypoint ({lat}, {lon})")
        if not -90.0 <= lat <= 90.0:
            raise InvalidInputError(f"latitude {lat} outside [-90, 90]")
        if not -180.0 <= lon <= 180.0:
            raise InvalidInputError(f"longitude {lon} outside [-180, 180]")


@dataclass(frozen=True)
class PlanarPoint:
    north: float
    east: float

    def __post_init__(self):
        if not (math.isfinite(self.north) and math.isfinite(self.east)):
            raise InvalidInputError(f"non-finite planar point ({self.north}, {self.east})")


def latlon_to_ned(waypoints: Sequence[GeoWaypoint], origin: GeoWaypoint) -> list[PlanarPoint]:
    """Project waypoints onto the local tangent plane at ``origin``.

    Equirectangular projection on the mean Earth radius; the down component
    is dropped since the road is treated as flat.
    """
    if len(waypoints) < 2:
        raise InvalidInputError(f"need at least 2 waypoints, got {len(waypoints)}")
    lat0 = math.radians(origin.latitude)
    lon0 = math.radians(origin.longitude)
    coslat0 = math.cos(lat0)
    out = []
    for wp in waypoints:
        dlat = math.radians(wp.latitude) - lat0
        dlon = math.radians(wp.longitude) - lon0
        # wrap across the antimeridian
        dlon = (dlon + math.pi) % (2.0 * math.pi) - math.pi
        out.append(PlanarPoint(EARTH_RADIUS * dlat, EARTH_RADIUS * coslat0 * dlon))
    return out


def ned_to_latlon(points: Sequence[PlanarPoint], origin: GeoWaypoint) -> list[GeoWaypoint]:
    """Inverse of :func:`latlon_to_ned`."""
    lat0 = math.radians(origin.latitude)
    coslat0 = math.cos(lat0)
    out = []
    for p in points:
        lat = origin.latitude + math.degrees(p.north / EARTH_RADIUS)
        lon = origin.longitude + math.degrees(p.east / (EARTH_RADIUS * coslat0))
        lon = (lon + 180.0) % 360.0 - 180.0
        out.append(GeoWaypoint(lat, lon))
    return out


class PathSpline:
    """Arc-length parameterised planar curve.

    Position is a piecewise cubic (monotone Hermite) in arc length ``s`` over
    a dense uniform table; curvature is tabulated on the same knots and
    interpolated linearly, so it is continuous in ``s``. Curvature is the
    unsigned magnitude. Instances are immutable.
    """

    def __init__(self, s, north, east, curvature, max_fit_deviation: float = 0.0):
        s = np.array(s, dtype=float)
        north = np.array(north, dtype=float)
        east = np.array(east, dtype=float)
        curvature = np.abs(np.array(curvature, dtype=float))
        if s.ndim != 1 or len(s) < 2:
            raise InvalidInputError("arc-length table needs at least two knots")
        if not (len(s) == len(north) == len(east) == len(curvature)):
            raise InvalidInputError("table columns differ in length")
        if np.any(np.diff(s) <= 0.0):
            raise DegenerateGeometryError("knot arc lengths must be strictly increasing")
        if s[0] != 0.0:
            s = s - s[0]
        if not np.all(np.isfinite(np.stack([north, east, curvature]))):
            raise InvalidInputError("non-finite values in arc-length table")
        for arr in (s, north, east, curvature):
            arr.setflags(write=False)
        self._s = s
        self._north = north
        self._east = east
        self._curv = curvature
        self._pn = PchipInterpolator(s, north)
        self._pe = PchipInterpolator(s, east)
        self.max_fit_deviation = float(max_fit_deviation)

    @property
    def total_length(self) -> float:
        return float(self._s[-1])

    @property
    def knots(self) -> np.ndarray:
        return self._s

    @property
    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-interval cubic coefficients ``(c_north, c_east)``, shape (4, n-1).

        Highest power first, local variable ``s - knots[i]`` (scipy PPoly layout).
        """
        return self._pn.c, self._pe.c

    @property
    def curvature_table(self) -> np.ndarray:
        return self._curv

    def _check(self, s):
        arr = np.asarray(s, dtype=float)
        tol = 1e-9 * max(1.0, self.total_length)
        if np.any(~np.isfinite(arr)) or np.any(arr < -tol) or np.any(arr > self.total_length + tol):
            raise DomainError(f"arc length outside [0, {self.total_length}]")
        return np.clip(arr, 0.0, self.total_length)

    def position(self, s):
        s = self._check(s)
        return self._pn(s), self._pe(s)

    def tangent(self, s):
        s = self._check(s)
        return self._pn(s, 1), self._pe(s, 1)

    def curvature(self, s):
        """Curvature magnitude (1/m) at arc length ``s`` (scalar or array)."""
        s = self._check(s)
        out = np.interp(s, self._s, self._curv)
        return float(out) if np.ndim(out) == 0 else out

    def curvature_unchecked(self, s):
        """Curvature lookup without domain validation; ``s`` is clipped."""
        return np.interp(s, self._s, self._curv)

    def max_curvature(self, lo, hi) -> np.ndarray:
        """Exact maximum of the curvature over each window ``[lo[i], hi[i]]`` (clipped to the path)."""
        lo = np.clip(np.atleast_1d(np.asarray(lo, dtype=float)), 0.0, self.total_length)
        hi = np.clip(np.atleast_1d(np.asarray(hi, dtype=float)), 0.0, self.total_length)
        out = np.maximum(np.interp(lo, self._s, self._curv), np.interp(hi, self._s, self._curv))
        # interior knots: piecewise-linear curvature peaks only there
        i0 = np.searchsorted(self._s, lo, side="right")
        i1 = np.searchsorted(self._s, hi, side="left")
        for k in np.nonzero(i1 > i0)[0]:
            out[k] = max(out[k], self._curv[i0[k]:i1[k]].max())
        return out

    def to_table(self, spacing: float = 10.0) -> np.ndarray:
        """Rows ``(s, north, east, curvature)`` every ``spacing`` metres (end included)."""
        if spacing <= 0:
            raise InvalidInputError("spacing must be positive")
        n = int(math.floor(self.total_length / spacing))
        s = np.arange(n + 1) * spacing
        if s[-1] < self.total_length:
            s = np.append(s, self.total_length)
        north, east = self.position(s)
        return np.column_stack([s, north, east, self.curvature(s)])

    def export_csv(self, path, spacing: float = 10.0) -> None:
        table = self.to_table(spacing)
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["s", "north", "east", "curvature"])
            for row in table:
                w.writerow([f"{row[0]:.6f}", f"{row[1]:.6f}", f"{row[2]:.6f}", f"{row[3]:.9e}"])

    def __repr__(self):
        return f"PathSpline(total_length={self.total_length:.1f} m, knots={len(self._s)})"


def _moving_average(values: np.ndarray, window: int) -> np.ndarray:
    if window <= 1:
        return values.copy()
    half = window // 2
    padded_sum = np.concatenate([[0.0], np.cumsum(values)])
    idx = np.arange(len(values))
    lo = np.clip(idx - half, 0, len(values))
    hi = np.clip(idx + half + 1, 0, len(values))
    return (padded_sum[hi] - padded_sum[lo]) / (hi - lo)


def fit_spline(
    points: Sequence[PlanarPoint] | np.ndarray,
    resolution: float = 1.0,
    smoothing_window: float = 50.0,
) -> PathSpline:
    """Interpolate planar points with a parametric cubic and reparameterise by arc length.

    The interpolant is resampled onto a uniform arc-length table (spacing at
    most ``resolution`` metres). Curvature comes from the analytic derivatives
    of the parametric cubic and is then smoothed with a moving average of
    width ``smoothing_window`` metres.
    """
    if isinstance(points, np.ndarray):
        xy = np.asarray(points, dtype=float)
    else:
        xy = np.array([[p.north, p.east] for p in points], dtype=float)
    if xy.ndim != 2 or xy.shape[1] != 2:
        raise InvalidInputError("points must be an (n, 2) array of (north, east)")
    if len(xy) < 4:
        raise InvalidInputError(f"need at least 4 points to fit a spline, got {len(xy)}")
    if not np.all(np.isfinite(xy)):
        raise InvalidInputError("non-finite point coordinates")
    chords = np.hypot(np.diff(xy[:, 0]), np.diff(xy[:, 1]))
    bad = np.flatnonzero(chords <= 1e-9)
    if bad.size:
        raise DegenerateGeometryError(f"consecutive points {bad[0]} and {bad[0] + 1} coincide")

    u = np.concatenate([[0.0], np.cumsum(chords)])
    sx = CubicSpline(u, xy[:, 0])
    sy = CubicSpline(u, xy[:, 1])
    dsx, dsy = sx.derivative(), sy.derivative()
    ddsx, ddsy = dsx.derivative(), dsy.derivative()

    # dense parameter grid, then arc length by Gauss-Legendre on every sub-interval
    sub = np.maximum(4, np.ceil(chords / (0.25 * resolution)).astype(int))
    ug = np.concatenate([np.linspace(u[i], u[i + 1], sub[i], endpoint=False) for i in range(len(chords))] + [[u[-1]]])
    a, b = ug[:-1], ug[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    q = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    speed = np.hypot(dsx(q), dsy(q))
    seg_len = half * (speed @ _GL_WEIGHTS)
    sg = np.concatenate([[0.0], np.cumsum(seg_len)])
    total = sg[-1]

    n = max(int(math.ceil(total / resolution)), 8) + 1
    s_tab = np.linspace(0.0, total, n)
    u_tab = np.interp(s_tab, sg, ug)
    north, east = sx(u_tab), sy(u_tab)
    xp, yp = dsx(u_tab), dsy(u_tab)
    xpp, ypp = ddsx(u_tab), ddsy(u_tab)
    kappa = (xp * ypp - yp * xpp) / np.power(xp * xp + yp * yp, 1.5)
    window = int(round(smoothing_window / (s_tab[1] - s_tab[0])))
    if window % 2 == 0:
        window += 1
    kappa = np.abs(_moving_average(kappa, window))
    return PathSpline(s_tab, north, east, kappa, max_fit_deviation=0.0)


@dataclass(frozen=True)
class SyntheticRoadSpec:
    """Parameters of a generated test road.

    The first ``winding_fraction`` of the length alternates straights and
    circular arcs joined by linear curvature ramps; the rest is straight.
    """

    total_length: float = 12000.0
    winding_fraction: float = 2.0 / 3.0
    radius_min: float = 150.0
    radius_max: float = 600.0
    seed: int = 20210601
    transition_length: float = 50.0
    turn_angle_deg: tuple[float, float] = (25.0, 90.0)
    straight_length: tuple[float, float] = (80.0, 350.0)
    resolution: float = 1.0

    def __post_init__(self):
        if not (self.total_length > 0 and math.isfinite(self.total_length)):
            raise InvalidInputError("total_length must be positive")
        if not 0.0 < self.winding_fraction < 1.0:
            raise InvalidInputError("winding_fraction must lie in (0, 1)")
        if not 0.0 < self.radius_min <= self.radius_max:
            raise InvalidInputError("radius range must be positive and ordered")
        if self.transition_length < 0:
            raise InvalidInputError("transition_length must be >= 0")
        lo, hi = self.turn_angle_deg
        if not 0.0 < lo <= hi:
            raise InvalidInputError("turn angle range must be positive and ordered")
        lo, hi = self.straight_length
        if not 0.0 <= lo <= hi:
            raise InvalidInputError("straight length range must be non-negative and ordered")
        if self.resolution <= 0:
            raise InvalidInputError("resolution must be positive")

    @classmethod
    def from_mapping(cls, data: dict) -> "SyntheticRoadSpec":
        kw = dict(data)
        for key in ("turn_angle_deg", "straight_length"):
            if key in kw:
                kw[key] = tuple(float(v) for v in kw[key])
        if "radius_range" in kw:
            kw["radius_min"], kw["radius_max"] = (float(v) for v in kw.pop("radius_range"))
        return cls(**kw)


def curvature_profile(spec: SyntheticRoadSpec) -> tuple[np.ndarray, np.ndarray]:
    """Signed piecewise-linear curvature knots ``(s, kappa)`` for a synthetic road."""
    rng = np.random.default_rng(spec.seed)
    wind_end = spec.winding_fraction * spec.total_length
    ramp = spec.transition_length
    s_k = [0.0]
    k_k = [0.0]
    s = 0.0
    sign = 1.0 if rng.random() < 0.5 else -1.0
    while True:
        straight = rng.uniform(*spec.straight_length)
        radius = rng.uniform(spec.radius_min, spec.radius_max)
        angle = math.radians(rng.uniform(*spec.turn_angle_deg))
        # a ramp of length L contributes kappa*L/2 of heading on each side
        arc = max(radius * angle - ramp, 0.0)
        if s + straight + 2.0 * ramp + arc > wind_end:
            break
        kappa = sign / radius
        s += straight
        s_k += [s, s + ramp, s + ramp + arc, s + 2.0 * ramp + arc]
        k_k += [0.0, kappa, kappa, 0.0]
        s += 2.0 * ramp + arc
        if rng.random() < 0.7:
            sign = -sign
    s_k.append(spec.total_length)
    k_k.append(0.0)
    s_arr, k_arr = np.array(s_k), np.array(k_k)
    keep = np.concatenate([[True], np.diff(s_arr) > 0])
    return s_arr[keep], k_arr[keep]


def generate_synthetic_road(spec: SyntheticRoadSpec | None = None) -> PathSpline:
    """Build a deterministic winding-then-straight test road."""
    spec = spec or SyntheticRoadSpec()
    s_k, k_k = curvature_profile(spec)
    n = max(int(math.ceil(spec.total_length / spec.resolution)), 8) + 1
    s = np.linspace(0.0, spec.total_length, n)
    kappa = np.interp(s, s_k, k_k)
    # heading is the exact integral of the piecewise-linear curvature
    ds = np.diff(s)
    heading = np.concatenate([[0.0], np.cumsum(0.5 * (kappa[1:] + kappa[:-1]) * ds)])
    # midpoint heading over each sub-interval keeps the position error O(ds^3 kappa^2)
    hm = 0.5 * (heading[1:] + heading[:-1])
    north = np.concatenate([[0.0], np.cumsum(np.cos(hm) * ds)])
    east = np.concatenate([[0.0], np.cumsum(np.sin(hm) * ds)])
    return PathSpline(s, north, east, np.abs(kappa))


def analytic_road_points(spacing: float, length_x: float = 6000.0, amplitude: float = 200.0,
                         wavelength: float = 2000.0) -> np.ndarray:
    """Points along ``east = A sin(2 pi north / lambda)`` sampled every ~``spacing`` m of north."""
    n = max(int(round(length_x / spacing)), 3) + 1
    x = np.linspace(0.0, length_x, n)
    return np.column_stack([x, amplitude * np.sin(2.0 * np.pi * x / wavelength)])


def ingest_waypoint_file(path, format: str | None = None) -> list[GeoWaypoint]:
    """Read an ordered waypoint list from a ``lat,lon`` CSV or a GeoJSON LineString."""
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt in ("json", "geojson"):
        wps = _read_geojson(path)
    elif fmt == "csv":
        wps = _read_csv(path)
    else:
        raise InvalidInputError(f"unsupported waypoint format {fmt!r}")
    if len(wps) < 2:
        raise WaypointParseError(f"{path}: need at least 2 waypoints, found {len(wps)}")
    return wps


def _read_csv(path: Path) -> list[GeoWaypoint]:
    with open(path, newline="", encoding="utf-8-sig") as f:
        lines = f.read().splitlines()
    rows = [(i + 1, line) for i, line in enumerate(lines) if line.strip()]
    if not rows:
        raise WaypointParseError(f"{path}: empty file", 1)
    header = [h.strip().lower() for h in rows[0][1].split(",")]
    if "lat" not in header or "lon" not in header:
        raise WaypointParseError(f"{path}: header must contain 'lat,lon', got {rows[0][1]!r}", rows[0][0])
    i_lat, i_lon = header.index("lat"), header.index("lon")
    out = []
    for lineno, line in rows[1:]:
        cells = next(csv.reader([line]))
        try:
            out.append(GeoWaypoint(float(cells[i_lat]), float(cells[i_lon])))
        except (IndexError, ValueError) as exc:
            raise WaypointParseError(f"{path}: malformed row at line {lineno}: {line!r} ({exc})", lineno) from exc
    return out


def _read_geojson(path: Path) -> list[GeoWaypoint]:
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise WaypointParseError(f"{path}: invalid JSON ({exc})", None) from exc
    geom = doc
    if isinstance(doc, dict) and doc.get("type") == "FeatureCollection":
        feats = doc.get("features") or []
        if len(feats) != 1:
            raise WaypointParseError(f"{path}: expected a single feature, found {len(feats)}")
        geom = feats[0]
    if isinstance(geom, dict) and geom.get("type") == "Feature":
        geom = geom.get("geometry")
    if not isinstance(geom, dict) or geom.get("type") != "LineString":
        raise WaypointParseError(f"{path}: expected a LineString geometry")
    out = []
    for idx, pos in enumerate(geom.get("coordinates") or []):
        try:
            lon, lat = float(pos[0]), float(pos[1])
            out.append(GeoWaypoint(lat, lon))
        except (TypeError, IndexError, ValueError) as exc:
            raise WaypointParseError(f"{path}: bad position at index {idx}: {pos!r} ({exc})", idx) from exc
    return out


def road_from_waypoints(waypoints: Sequence[GeoWaypoint], origin: GeoWaypoint | None = None,
                        **fit_kwargs) -> PathSpline:
    origin = origin or waypoints[0]
    pts = latlon_to_ned(waypoints, origin)
    return fit_spline(pts, **fit_kwargs)


def load_road(source: str, spec: SyntheticRoadSpec | None = None) -> PathSpline:
    """``"synthetic"`` builds a generated road; anything else is a waypoint/spline file."""
    if source == "synthetic":
        return generate_synthetic_road(spec)
    path = Path(source)
    if not path.exists():
        raise FileNotFoundError(source)
    if path.suffix.lower() == ".csv":
        with open(path, encoding="utf-8-sig") as f:
            header = f.readline().strip().lower()
        if header.startswith("s,north,east"):
            data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
            return PathSpline(data[:, 0], data[:, 1], data[:, 2], data[:, 3])
    return road_from_waypoints(ingest_waypoint_file(path))
