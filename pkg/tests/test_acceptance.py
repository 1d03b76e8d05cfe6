"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line that is printed in the pytest terminal
summary (section "acceptance criteria"). Criteria that this implementation
does not meet are marked ``xfail(strict=True)``: they still run in full and
print FAIL, and an unexpected pass would turn the run red.
"""

import filecmp
import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
import yaml

import conftest
from msprofile.costs import CostKind, CostSpec
from msprofile.dynamics import Limits
from msprofile.geometry import SyntheticRoadSpec, generate_synthetic_road
from msprofile.harness import STATUS_OK, RunMatrix, cross_metric_report, run_matrix
from msprofile.kernels import GRAVITY, sine_sweep_msi, vehicle_rollout
from msprofile.mpc import HorizonProblem, _HorizonModel, receding_loop
from msprofile.qp import solve_qp
from msprofile.sickness import ConflictModelParams, SicknessState, evaluate_trace

from oracles import brute_force_qp, central_difference, time_domain_rollout

BAND = 0.01  # solver noise band for the ordering criteria
A_MAX = 0.3 * GRAVITY


def record(key, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {key}: {detail}"
    conftest.ACCEPTANCE_LINES[key] = line
    print(line)
    return passed


# ---------------------------------------------------------------------------
# 1. integrator oracle


def random_schedules(rng, count, limits=Limits()):
    """Jerk schedules whose spatial rollout stays inside the vehicle envelope."""
    out = []
    while len(out) < count:
        v0 = rng.uniform(limits.v_min, limits.v_max)
        a0 = rng.uniform(-0.95 * A_MAX, 0.95 * A_MAX)
        jerk = rng.uniform(-limits.j_max, limits.j_max, int(rng.integers(5, 41)))
        ok, V, A, T, *_ = vehicle_rollout(v0, a0, 0.0, jerk, 0.5 * v0, False)
        if ok and V.min() >= limits.v_min and V.max() <= limits.v_max and np.abs(A).max() <= A_MAX:
            out.append((v0, a0, jerk, V[-1], A[-1], T[-1]))
    return out


def test_criterion_1_integrator_oracle():
    t0 = time.perf_counter()
    worst = 0.0
    for v0, a0, jerk, v, a, t in random_schedules(np.random.default_rng(2021), 100):
        v_ref, a_ref, t_ref = time_domain_rollout(v0, a0, jerk, 0.5 * v0)
        # relative errors; acceleration near zero is compared against 0.1 m/s^2
        err = max(abs(v - v_ref) / abs(v_ref), abs(t - t_ref) / abs(t_ref),
                  abs(a - a_ref) / max(abs(a_ref), 0.1))
        worst = max(worst, err)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-4 and elapsed < 30.0
    record("1", ok, f"worst relative error {worst:.2e} (<= 1e-4) over 100 schedules in {elapsed:.1f} s (< 30 s)")
    assert ok


# ---------------------------------------------------------------------------
# 2. gradient check

WEIGHTS = {
    CostKind.MINIMUM_TIME: {},
    CostKind.JERK_COST: {"c_j": 200.0},
    CostKind.ACCELERATION_COST: {"c_a": 10.0},
    CostKind.MS_COST: {"c_ms": 140.0},
    CostKind.ADAPTIVE_MS_COST: {"c_ms": 27.0},
}


def random_iterate(rng, kind):
    n = int(rng.integers(5, 41))
    sick = SicknessState.at_rest().vector.copy()
    sick[:6] = rng.normal(0.0, 0.5, 6)
    sick[6:8] = rng.uniform(0.0, 10.0, 2)
    sick[8] = rng.uniform(0.0, 0.2)
    v0 = rng.uniform(12.0, 34.0)
    rho = rng.uniform(0.0, 0.002, n + 1)
    p = HorizonProblem(v0=v0, a0=rng.uniform(-1.0, 1.0), t0=rng.uniform(0.0, 100.0), sickness0=sick,
                       ds=0.5 * v0, rho=rho, cost=CostSpec(kind=kind, **WEIGHTS[kind]),
                       gate="rolled" if rng.random() < 0.5 else "anchor")
    return _HorizonModel(p), rng.uniform(-1.5, 1.5, n)


def test_criterion_2_gradient_check():
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    worst = {}
    for kind in CostKind:
        done = 0
        worst[kind] = 0.0
        while done < 100:
            model, x = random_iterate(rng, kind)
            f, _, g, _ = model.evaluate(x, True)
            if not math.isfinite(f):
                continue
            g_fd = central_difference(lambda y: model.evaluate(y, False)[0], x)
            err = np.max(np.abs(g - g_fd)) / max(np.max(np.abs(g_fd)), 1e-12)
            worst[kind] = max(worst[kind], err)
            done += 1
    elapsed = time.perf_counter() - t0
    top = max(worst.values())
    ok = top <= 1e-4 and elapsed < 60.0
    detail = ", ".join(f"{k.label} {v:.1e}" for k, v in worst.items())
    record("2", ok, f"worst relative gradient error {top:.2e} (<= 1e-4; {detail}) in {elapsed:.1f} s (< 60 s)")
    assert ok


# ---------------------------------------------------------------------------
# the reference matrix on the default 12 km synthetic road, shared by 3, 5, 6, 7


@pytest.fixture(scope="module")
def matrix_run():
    matrix = RunMatrix.from_mapping({})
    t0 = time.perf_counter()
    outcomes = run_matrix(matrix)
    return matrix, outcomes, time.perf_counter() - t0


def rows_of(outcomes, kind):
    return [o for o in outcomes if o.result is not None and o.result.cost.kind == kind]


def test_criterion_3_constraint_audit(matrix_run):
    _, outcomes, _ = matrix_run
    worst_acc = worst_jerk = 0.0
    all_ok = all(o.status == STATUS_OK for o in outcomes)
    for o in outcomes:
        if o.result is None:
            continue
        tr = o.result.trajectory
        worst_acc = max(worst_acc, float(np.max(np.hypot(tr.a, tr.v**2 * tr.rho))))
        worst_jerk = max(worst_jerk, float(np.max(np.abs(tr.j))))
    ok = all_ok and worst_acc <= A_MAX + 1e-6 and worst_jerk <= 3.0 + 1e-9
    record("3", ok, f"{len(outcomes)} missions, max |a| {worst_acc:.6f} (<= {A_MAX + 1e-6:.6f}), "
                    f"max |j| {worst_jerk:.6f} (<= 3)")
    assert ok


# ---------------------------------------------------------------------------
# 4. frequency selectivity


def test_criterion_4_frequency_selectivity():
    params = ConflictModelParams()
    grid = np.geomspace(0.01, 1.0, 21)
    t0 = time.perf_counter()
    resp = sine_sweep_msi(grid, 1.0, 1800.0, 0.05, *params.kernel_args(), GRAVITY)
    elapsed = time.perf_counter() - t0
    nearest = grid[np.argmin(np.abs(grid - 0.17))]
    peak = grid[np.argmax(resp)]
    lo, hi = resp.max() / resp[0], resp.max() / resp[-1]
    ok = peak == nearest and lo >= 3.0 and hi >= 3.0 and elapsed < 120.0
    record("4", ok, f"peak at {peak:.4f} Hz (grid point nearest 0.17 Hz is {nearest:.4f}), "
                    f"peak/0.01 Hz = {lo:.1f}, peak/1 Hz = {hi:.1f} (>= 3), {elapsed:.1f} s")
    assert ok


# ---------------------------------------------------------------------------
# 5. decay vs monotonicity


def test_criterion_5_decay_and_monotonicity(matrix_run):
    params = ConflictModelParams()
    rng = np.random.default_rng(5)
    dt = 0.1
    # the conflict filters ring down for a few time constants before the
    # disturbance falls below the integrator state
    settle = int(math.ceil(10 * max(params.tau_v, params.tau_sv) / dt))
    decay_ok = iso_ok = True
    for _ in range(50):
        n_on = int(rng.integers(50, 3000))
        n_off = 3000
        t = np.arange(n_on + n_off) * dt
        freq = rng.uniform(0.02, 1.0)
        amp = rng.uniform(0.2, 3.0)
        ax = np.where(t < n_on * dt, amp * np.sin(2 * np.pi * freq * t) + rng.normal(0, 0.2, t.size), 0.0)
        ay = np.where(t < n_on * dt, amp * np.cos(2 * np.pi * 0.7 * freq * t), 0.0)
        tr = evaluate_trace(t, ax, ay, params)
        tail = tr.msi_unipg[n_on + settle:]
        decay_ok &= bool(np.all(np.diff(tail) < 0))
        iso_ok &= bool(np.all(np.diff(tr.msi_iso) >= 0))
    _, outcomes, _ = matrix_run
    for o in outcomes:
        if o.result is not None:
            iso_ok &= bool(np.all(np.diff(o.result.sickness.msi_iso) >= 0))
    ok = decay_ok and iso_ok
    record("5", ok, f"UniPG strictly decreasing after stimulus (+{settle * dt:.1f} s ring-down) on 50 traces: "
                    f"{decay_ok}; ISO non-decreasing on those and on {len(outcomes)} mission traces: {iso_ok}")
    assert ok


# ---------------------------------------------------------------------------
# 6. ordering reproduction


def test_criterion_6a_minimum_time_fastest_and_sickest(matrix_run):
    _, outcomes, elapsed = matrix_run
    ok_rows = [o for o in outcomes if o.status == STATUS_OK]
    mt = rows_of(outcomes, CostKind.MINIMUM_TIME)[0]
    others = [o for o in ok_rows if o is not mt]
    fastest = all(mt.travel_time < o.travel_time for o in others)
    sickest = mt.msi_max_unipg >= (1 - BAND) * max(o.msi_max_unipg for o in others)
    ok = len(ok_rows) == len(outcomes) and fastest and sickest and elapsed < 1200
    record("6a", ok, f"MinimumTime {mt.travel_time:.1f} s / {mt.msi_max_unipg:.2f}% vs fastest other "
                     f"{min(o.travel_time for o in others):.1f} s, sickest other "
                     f"{max(o.msi_max_unipg for o in others):.2f}%; matrix of {len(outcomes)} rows in {elapsed:.0f} s")
    assert ok


@pytest.mark.xfail(strict=True, reason="jerk rows trade little time for MSI and are not dominated")
def test_criterion_6b_jerk_rows_dominated_by_acceleration_rows(matrix_run):
    _, outcomes, _ = matrix_run
    jerk = rows_of(outcomes, CostKind.JERK_COST)
    acc = rows_of(outcomes, CostKind.ACCELERATION_COST)

    def dominated(j):
        return [a.label for a in acc if a.travel_time <= j.travel_time * (1 + BAND)
                and a.msi_max_unipg <= j.msi_max_unipg * (1 + BAND)]

    verdicts = {j.label: dominated(j) for j in jerk}
    ok = bool(jerk) and all(verdicts.values())
    detail = "; ".join(f"{j.label} {j.travel_time:.1f} s/{j.msi_max_unipg:.2f}% dominated by {verdicts[j.label] or 'none'}"
                       for j in jerk)
    record("6b", ok, f"{detail} (fastest AccelerationCost {min(a.travel_time for a in acc):.1f} s)")
    assert ok


def test_criterion_6c_adaptive_beats_comparators_at_matched_time(matrix_run):
    _, outcomes, _ = matrix_run
    adaptive = rows_of(outcomes, CostKind.ADAPTIVE_MS_COST)
    pairs = []
    for kind in (CostKind.MS_COST, CostKind.ACCELERATION_COST):
        for row in rows_of(outcomes, kind):
            mate = min(adaptive, key=lambda r: abs(r.travel_time - row.travel_time))
            if abs(mate.travel_time / row.travel_time - 1) <= 0.02:
                pairs.append((kind, row, mate))
    kinds_paired = {k for k, _, _ in pairs}
    better = all(m.msi_max_unipg < r.msi_max_unipg for _, r, m in pairs)
    ok = kinds_paired == {CostKind.MS_COST, CostKind.ACCELERATION_COST} and better
    detail = "; ".join(f"{m.label} {m.msi_max_unipg:.2f}% vs {r.label} {r.msi_max_unipg:.2f}% "
                       f"({100 * (m.travel_time / r.travel_time - 1):+.1f}% time)" for _, r, m in pairs)
    record("6c", ok, detail or "no pairs within 2%")
    assert ok


def test_criterion_6d_weight_sweeps_monotone(matrix_run):
    _, outcomes, _ = matrix_run
    notes = []
    ok = True
    for kind, weight in ((CostKind.ACCELERATION_COST, "c_a"), (CostKind.ADAPTIVE_MS_COST, "c_ms")):
        rows = sorted(rows_of(outcomes, kind), key=lambda o: getattr(o.result.cost, weight))
        for lo, hi in zip(rows, rows[1:]):
            t_ok = hi.travel_time >= lo.travel_time * (1 - BAND)
            m_ok = hi.msi_max_unipg <= lo.msi_max_unipg * (1 + BAND)
            ok &= t_ok and m_ok
        notes.append(f"{kind.label} time " + " <= ".join(f"{o.travel_time:.1f}" for o in rows)
                     + ", MSI " + " >= ".join(f"{o.msi_max_unipg:.2f}" for o in rows))
        ok &= len(rows) >= 2
    record("6d", ok, "; ".join(notes))
    assert ok


# ---------------------------------------------------------------------------
# 7. cross-metric consistency


def test_criterion_7_cross_metric_consistency(matrix_run):
    _, outcomes, _ = matrix_run
    rep = cross_metric_report([o for o in outcomes if o.status == STATUS_OK])
    ok = rep.kendall_tau is not None and rep.kendall_tau > 0.6
    record("7", ok, f"Kendall tau between UniPG and ISO max-MSI rankings = {rep.tau_text} (> 0.6) "
                    f"over {len(rep.labels)} runs")
    assert ok


# ---------------------------------------------------------------------------
# 8. adaptive gating on a gentle road


@pytest.mark.xfail(strict=True, reason="the start-up transient of the rolled gate costs 1.7-2.2% on 2 km")
def test_criterion_8_adaptive_close_to_minimum_time_on_gentle_road():
    road = generate_synthetic_road(SyntheticRoadSpec(total_length=2000.0, radius_min=1500.0,
                                                     radius_max=3000.0, turn_angle_deg=(5.0, 15.0)))
    mt = receding_loop(road, CostSpec(kind=CostKind.MINIMUM_TIME))
    gaps = {}
    for c_ms in (24.0, 25.0, 27.0, 30.0, 40.0):
        res = receding_loop(road, CostSpec(kind=CostKind.ADAPTIVE_MS_COST, c_ms=c_ms))
        gaps[c_ms] = res.travel_time / mt.travel_time - 1
    ok = all(abs(g) <= 0.01 for g in gaps.values())
    detail = ", ".join(f"c_ms={c:g} {100 * g:+.2f}%" for c, g in gaps.items())
    record("8", ok, f"MinimumTime {mt.travel_time:.2f} s (max MSI {mt.msi_max_unipg:.2f}%); "
                    f"AdaptiveMsCost {detail} (within 1%)")
    assert ok


# ---------------------------------------------------------------------------
# 9. QP oracle


def test_criterion_9_qp_oracle():
    rng = np.random.default_rng(9)
    worst = 0.0
    solved = 0
    for _ in range(100):
        n = int(rng.integers(1, 21))
        m = int(rng.integers(1, 11))
        A = rng.normal(size=(n, n))
        G = A @ A.T + 0.1 * np.eye(n)
        a = rng.normal(size=n) * 5
        C = rng.normal(size=(m, n))
        b = C @ rng.normal(size=n) - rng.uniform(0.0, 2.0, m)
        res = solve_qp(G, a, C, b)
        ref = brute_force_qp(G, a, C, b)
        solved += bool(res.success)
        worst = max(worst, float(np.max(np.abs(res.x - ref[0]))))
    ok = solved == 100 and worst <= 1e-6
    record("9", ok, f"{solved}/100 random convex QPs (n <= 20) solved, max deviation from enumeration "
                    f"{worst:.1e} (<= 1e-6)")
    assert ok


# ---------------------------------------------------------------------------
# 10. determinism


def test_criterion_10_determinism(tmp_path):
    cfg = tmp_path / "matrix.yaml"
    cfg.write_text(yaml.safe_dump({
        "road_spec": {"total_length": 3000.0},
        "runs": [{"label": "base", "kind": "MinimumTime"},
                 {"label": "jerk", "kind": "JerkCost", "c_j": 200.0},
                 {"label": "adaptive", "kind": "AdaptiveMsCost", "c_ms": 27.0}],
    }))
    env = dict(os.environ)
    dirs = []
    for run in ("first", "second"):
        out = tmp_path / run
        proc = subprocess.run([sys.executable, "-m", "msprofile.cli", "run", "--config", str(cfg),
                               "--seed", "11", "--out", str(out)], env=env, capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        dirs.append(out)
    files = sorted(str(p.relative_to(dirs[0])) for p in dirs[0].rglob("*") if p.is_file())
    files_b = sorted(str(p.relative_to(dirs[1])) for p in dirs[1].rglob("*") if p.is_file())
    _, mismatch, errors = filecmp.cmpfiles(dirs[0], dirs[1], files, shallow=False)
    ok = files == files_b and not mismatch and not errors and len(files) > 5
    record("10", ok, f"{len(files)} output files byte-identical across two runs "
                     f"(mismatched: {mismatch + errors or 'none'})")
    assert ok
