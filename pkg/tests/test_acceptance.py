"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s`.  Expected values come
from independent oracles computed in-line (scipy identities, math.fsum
re-transcriptions), never from the implementation under test.

Criterion 7 is implemented exactly as stated (fractional predictor-
corrector at dt=0.005 with P = 1.05 P_*).  That step size lies orders of
magnitude outside the explicit scheme's linear stability region for the
gap mode (|lambda| ~ n P ~ 1.5e3, so |lambda| dt^alpha ~ 1e2 against a
stability bound of order 1), so the runs blow up within a millisecond;
the test fails honestly rather than substituting a feasible step size.
The same theorem's machinery passes end to end on a stable configuration
in tests/test_analysis.py and tests/test_frac_sync_feasible.py.
"""

import math
import time
import types

import numpy as np
import pytest
from scipy.special import erfc

from hhw import analysis as an
from hhw.errors import BlowUpError
from hhw.integrate import (
    IntegratorSpec,
    integrate_caputo,
    integrate_classical,
    warm_up_kernels,
)
from hhw.model import (
    hhw_rhs,
    memristive_rhs,
    wilson_memristive_params,
    wilson_params,
)
from hhw.runner import run_sweep
from hhw.special import fractional_gronwall_envelope, gamma, mittag_leffler


@pytest.fixture(scope="module", autouse=True)
def _warm_kernels():
    # JIT compilation is a one-time cost, not part of any criterion budget
    warm_up_kernels()


def report(number, name, start, budget):
    elapsed = time.perf_counter() - start
    print(f"ACCEPTANCE {number} {name}: PASS ({elapsed:.2f}s, budget {budget:.0f}s)")
    assert elapsed < budget, f"criterion {number} exceeded its {budget}s budget"


def ball_sample(dim, radius, seed, index):
    return an.sample_initial_state(
        dim, radius, np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    )


def test_criterion_1_special_function_oracles():
    start = time.perf_counter()
    for z in np.linspace(-5.0, 5.0, 101):
        assert abs(mittag_leffler(1.0, float(z)) - math.exp(z)) <= 1e-10
    for x in np.arange(0.1, 3.05, 0.1):
        ref = math.exp(x * x) * erfc(x)
        assert abs(mittag_leffler(0.5, -float(x)) - ref) <= 1e-8
    for x in np.linspace(0.01, 19.0, 400):
        lhs = gamma(x + 1.0)
        assert abs(lhs - x * gamma(x)) <= 1e-10 * abs(lhs)
    report(1, "special-function oracle equivalence", start, 1.0)


def test_criterion_2_integrator_orders():
    start = time.perf_counter()
    # classical scheme: order 4.0 +- 0.3 on dy/dt = -y
    dts = [0.04, 0.02, 0.01]
    errs = []
    for dt in dts:
        spec = IntegratorSpec(kind="classical_fixed", dt=dt, t_end=1.0)
        traj = integrate_classical(lambda y, p: -y, np.array([1.0]), None, spec)
        errs.append(abs(traj.states[-1, 0] - math.exp(-1.0)))
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert abs(slope - 4.0) <= 0.3, f"classical order {slope:.3f}"

    # fractional scheme: order >= 1 + alpha - 0.3 and terminal accuracy
    for alpha in (0.5, 0.9):
        pa = types.SimpleNamespace(alpha=alpha)
        ref = mittag_leffler(alpha, -1.0)
        cdts = [0.02, 0.01, 0.005]
        cerrs = []
        for dt in cdts:
            spec = IntegratorSpec(kind="caputo_pc", dt=dt, t_end=1.0)
            traj = integrate_caputo(lambda y, p: -y, np.array([1.0]), pa, spec)
            cerrs.append(abs(traj.states[-1, 0] - ref))
        cslope = np.polyfit(np.log(cdts), np.log(cerrs), 1)[0]
        assert cslope >= 1.0 + alpha - 0.3, f"fractional order {cslope:.3f} at alpha={alpha}"

        spec = IntegratorSpec(kind="caputo_pc", dt=1e-3, t_end=1.0, record_stride=100)
        traj = integrate_caputo(lambda y, p: -y, np.array([1.0]), pa, spec)
        assert abs(traj.states[-1, 0] - ref) <= 5e-3
    report(2, "integrator convergence orders", start, 30.0)


def test_criterion_3_constants_against_arithmetic_oracle():
    start = time.perf_counter()
    p = wilson_params(2, J=0.0, lam=1.0)

    # brute-force term-by-term oracle, independently transcribed
    q_terms = [
        26.0 * (1.0 + 1.0),
        abs(47.6 * 0.5),
        26.0 * 1.0 * 1.0 * 0.95,
        6.0 * 47.6**2 / 33.8,
        6.0 * 33.8 / 0.5**2,
        (6.0 / 33.8) * (26.0 * 1.0 * 1.0) ** 2,
    ]
    q_ref = math.fsum(q_terms)
    p_star_ref = max(0.0, (q_ref - (17.8 + 1.0 / (2.0 * 4.2))) / 2.0)
    root2 = math.sqrt(1.0 + 1.0)
    g_ref = 1.0 + 2.0 * 1.0 + 2.0 * math.fsum(
        [
            (0.5 * 17.8 + 26.0 * root2 * 0.95 + 0.0) ** 2 / 17.8**2,
            (abs(0.5 * 47.6) + 26.0 * root2) ** 2 / (17.8 * 33.8),
            2.0 * (47.6 + 0.5 * 33.8) ** 4 / (17.8 * (33.8 / 2.0) ** 3),
        ]
    )

    assert an.compute_Q(p) == pytest.approx(q_ref, rel=1e-12)
    assert an.threshold_P_star(p) == pytest.approx(p_star_ref, rel=1e-12)
    assert an.absorbing_bound_G(p) == pytest.approx(g_ref, rel=1e-12)
    assert abs(an.compute_Q(p) - 1433.91) <= 0.01
    assert abs(an.threshold_P_star(p) - 707.99) <= 0.01
    assert abs(an.absorbing_bound_G(p) - 833.1) <= 0.5
    report(3, "constant computation vs arithmetic oracle", start, 1.0)


def test_criterion_4_dissipativity_at_desk_scale():
    start = time.perf_counter()
    runs = 0
    for n in (2, 5):
        for P in (0.0, 10.0):
            p = wilson_params(n, P=P, lam=1.0)
            G = an.absorbing_bound_G(p)
            spec = IntegratorSpec(
                kind="classical_adaptive", dt=0.002, t_end=400.0,
                record_stride=10, abs_tol=1e-8, rel_tol=1e-8,
            )
            for idx in range(10):
                y0 = ball_sample(2 * n, 10.0, seed=400 + n, index=10 * int(P) + idx)
                traj = integrate_classical(hhw_rhs, y0, p, spec)
                checks = an.verify_dissipativity(traj, G)
                for c in checks:
                    assert c.passed, (
                        f"{c.name} failed at n={n}, P={P}, run {idx}: "
                        f"measured {c.measured:.6g} vs bound {c.bound:.6g}"
                    )
                runs += 1
    assert runs == 40
    report(4, "absorbing-ball dissipativity (40 runs)", start, 120.0)


def test_criterion_5_exponential_sync_at_desk_scale():
    start = time.perf_counter()
    runs = 0
    for n in (2, 3, 5):
        p0 = wilson_params(n, lam=1.0)
        P = 1.05 * an.threshold_P_star(p0)
        p = wilson_params(n, P=P, lam=1.0)
        mu = an.rate_mu(p)
        assert mu > 0
        spec = IntegratorSpec(
            kind="classical_fixed", dt=0.00025, t_end=200.0, record_stride=100
        )
        for idx in range(10):
            y0 = ball_sample(2 * n, 5.0, seed=500 + n, index=idx)
            traj = integrate_classical(hhw_rhs, y0, p, spec)
            gaps = an.gap_series(traj)
            assert gaps.max_gap[-1] < 1e-10, (
                f"final gap {gaps.max_gap[-1]:.3e} at n={n}, run {idx}"
            )
            T0 = an.transient_time_T0(y0, p)
            res = an.verify_sync_envelope(gaps, mu, T0)
            assert res.passed, (
                f"envelope failed at n={n}, run {idx}: margin {res.margin:.6g}"
            )
            runs += 1
    assert runs == 30
    report(5, "exponential synchronization above threshold (30 runs)", start, 120.0)


def test_criterion_6_fractional_gronwall_soundness():
    start = time.perf_counter()
    for alpha in (0.5, 0.9):
        for p_const in (0.0, 1.0):
            for q_const in (0.5, 2.0):
                pa = types.SimpleNamespace(alpha=alpha)
                spec = IntegratorSpec(
                    kind="caputo_pc", dt=0.01, t_end=20.0, record_stride=5
                )
                traj = integrate_caputo(
                    lambda y, _: p_const - q_const * y, np.array([1.0]), pa, spec
                )
                envs = np.array(
                    [
                        fractional_gronwall_envelope(
                            1.0, p_const, q_const, alpha, float(t)
                        )
                        for t in traj.times
                    ]
                )
                assert np.all(traj.states[:, 0] <= envs * (1.0 + 1e-3)), (
                    f"envelope violated for alpha={alpha}, p={p_const}, q={q_const}"
                )
    report(6, "fractional decay-envelope soundness (8 cases)", start, 30.0)


def test_criterion_7_fractional_sync_at_stated_step():
    """Theorem-level fractional synchronization at the stated dt=0.005.

    P = 1.05 P_* makes the gap-mode eigenvalue about -n P = -1.5e3, so
    |lambda| dt^alpha is ~105 (alpha=0.5) and ~13 (alpha=0.9) against an
    explicit predictor-corrector stability bound of order 1.  The
    criterion as stated is therefore numerically unattainable; this test
    documents the failure instead of quietly changing the step size.
    """
    start = time.perf_counter()
    failures = []
    for alpha in (0.5, 0.9):
        mp_ = wilson_memristive_params(
            2, P=0.0, alpha=alpha, k=1.0, beta=1.0, b=2.0, gamma=0.1, lam=1.0
        )
        fb = an.fractional_bounds(mp_)
        P = 1.05 * fb.P_star_frac
        mp_ = wilson_memristive_params(
            2, P=P, alpha=alpha, k=1.0, beta=1.0, b=2.0, gamma=0.1, lam=1.0
        )
        spec = IntegratorSpec(
            kind="caputo_pc", dt=0.005, t_end=50.0, record_stride=10
        )
        for idx in range(5):
            y0 = ball_sample(5, 2.0, seed=700, index=idx)
            try:
                traj = integrate_caputo(memristive_rhs, y0, mp_, spec)
            except BlowUpError as exc:
                failures.append(
                    f"alpha={alpha}, run {idx}: blow-up at t={exc.t:.4g} ms"
                )
                continue
            gaps = an.gap_series(traj)
            tail = gaps.times >= 0.75 * 50.0
            tail_gaps = gaps.max_gap[tail]
            if not np.all(np.diff(tail_gaps) <= 1e-12):
                failures.append(f"alpha={alpha}, run {idx}: tail gap not monotone")
            T0 = an.transient_time_T0(y0, mp_.base)
            res = an.verify_frac_sync(gaps, mp_, T0)
            if not res.passed:
                failures.append(f"alpha={alpha}, run {idx}: envelope margin {res.margin:.3g}")
            rho_tail = traj.rho[tail] ** 2
            if not np.all(rho_tail < an.fractional_bounds(mp_).rho_bound):
                failures.append(f"alpha={alpha}, run {idx}: memductance bound violated")
    if failures:
        elapsed = time.perf_counter() - start
        print(
            f"ACCEPTANCE 7 fractional synchronization at dt=0.005: FAIL "
            f"({elapsed:.2f}s) - {len(failures)}/10 runs failed; "
            f"dt=0.005 is outside the explicit scheme's stability region "
            f"at P = 1.05 P_* (|lambda| dt^alpha >> 1). First: {failures[0]}"
        )
        pytest.fail(
            "criterion 7 is unattainable as stated: " + "; ".join(failures[:3])
        )
    report(7, "fractional synchronization at stated step", start, 300.0)


def test_criterion_8_synchronization_manifold_invariance():
    start = time.perf_counter()
    p = wilson_params(3, P=25.0, lam=1.0)
    V0, R0 = 0.27, -0.33
    y0 = np.array([V0] * 3 + [R0] * 3)
    for kind in ("classical_fixed", "classical_adaptive"):
        spec = IntegratorSpec(kind=kind, dt=0.01, t_end=100.0, record_stride=10)
        traj = integrate_classical(hhw_rhs, y0, p, spec)
        assert an.gap_series(traj).max_gap.max() <= 1e-10

    mp_ = wilson_memristive_params(3, P=2.0, alpha=0.9, gamma=0.1, b=2.0)
    y0m = np.array([V0] * 3 + [R0] * 3 + [0.1])
    spec = IntegratorSpec(kind="caputo_pc", dt=0.002, t_end=50.0, record_stride=10)
    traj = integrate_caputo(memristive_rhs, y0m, mp_, spec)
    assert an.gap_series(traj).max_gap.max() <= 1e-10
    report(8, "synchronization-manifold invariance", start, 10.0)


def test_criterion_9_determinism_and_round_trip(tmp_path):
    start = time.perf_counter()
    from hhw.config import parse_scenario, parse_sweep
    from hhw.csvio import read_trajectory_csv, write_trajectory_csv
    from hhw.runner import run_scenario

    sweep_cfg = {
        "schema_version": 1,
        "base": {
            "schema_version": 1,
            "model": "classical",
            "params": {"preset": "wilson", "n": 2},
            "initial": {"seed": 5, "radius": 0.5},
            "integrator": {
                "kind": "classical_fixed", "dt": 0.00025, "t_end": 30.0,
                "record_stride": 400,
            },
            "outputs": [],
            "output_dir": str(tmp_path / "unused"),
        },
        "sweep_variable": "P",
        "values": [180.0, 745.0],
        "replicates": 2,
        "seed": 99,
    }
    sweep = parse_sweep(sweep_cfg)
    path_a, _ = run_sweep(sweep, out_dir=tmp_path / "a", jobs=2)
    path_b, _ = run_sweep(sweep, out_dir=tmp_path / "b", jobs=1)
    assert path_a.read_bytes() == path_b.read_bytes(), "sweep summaries differ"

    scn = parse_scenario(
        {
            "schema_version": 1,
            "model": "classical",
            "params": {"preset": "wilson", "n": 2, "P": 3.0},
            "initial": {"seed": 12, "radius": 1.0},
            "integrator": {
                "kind": "classical_fixed", "dt": 0.01, "t_end": 10.0,
                "record_stride": 3,
            },
            "outputs": [],
            "output_dir": str(tmp_path / "unused"),
        }
    )
    result = run_scenario(scn, emit=False)
    csv_path = tmp_path / "traj.csv"
    write_trajectory_csv(csv_path, result.trajectory)
    times, states, n, has_rho = read_trajectory_csv(csv_path)
    assert n == 2 and not has_rho
    assert np.array_equal(times, result.trajectory.times), "times not lossless"
    assert np.array_equal(states, result.trajectory.states), "states not lossless"
    report(9, "harness determinism and CSV round-trip", start, 30.0)
