"""Scenario execution, theorem verification, and coupling sweeps.

One scenario = one integration plus gap analysis plus (optionally) bounds,
checks, and artifact emission under the configured output directory.  The
sweep driver fans runs out over a process pool; results are reduced and
written by the parent in a fixed order, so fixed-seed sweeps are
byte-identical across reruns.
"""

from __future__ import annotations

import dataclasses
import importlib.metadata
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import analysis
from .analysis import (
    AnalysisReport,
    CheckResult,
    classical_bounds,
    fractional_bounds,
    gap_series,
    rate_mu,
    sample_initial_state,
    transient_time_T0,
    verify_dissipativity,
    verify_frac_sync,
    verify_memristive_dissipativity,
    verify_sync_envelope,
)
from .config import ScenarioConfig, SweepConfig, SCHEMA_VERSION
from .csvio import (
    write_gaps_csv,
    write_json,
    write_sweep_csv,
    write_timing_csv,
    write_trajectory_csv,
)
from .errors import BlowUpError
from .integrate import integrate_caputo, integrate_classical, warm_up_kernels
from .model import (
    MemristiveParams,
    ModelParams,
    Trajectory,
    hhw_rhs,
    memristive_rhs,
)
from .svgplot import LOG_CLAMP, Series, line_plot_svg

__all__ = [
    "RunResult",
    "resolve_initial",
    "run_scenario",
    "verify_scenario",
    "run_sweep",
    "SYNC_GAP_THRESHOLD",
]

SYNC_GAP_THRESHOLD = 1e-10


@dataclass
class RunResult:
    trajectory: Trajectory
    gaps: "analysis.GapSeries"
    report: Optional[AnalysisReport]
    seed_used: Optional[int]
    blow_up: bool = False
    out_files: dict = field(default_factory=dict)


def _package_version() -> str:
    try:
        return importlib.metadata.version("hhw")
    except importlib.metadata.PackageNotFoundError:
        return "unknown"


def resolve_initial(scn: ScenarioConfig, seed_override: Optional[int] = None,
                    sample_index: int = 0) -> tuple[np.ndarray, Optional[int]]:
    """Initial state vector for a scenario; random scenarios derive sample
    sample_index from the (possibly overridden) seed."""
    if scn.initial_state is not None:
        return scn.initial_state.to_vector(), None
    seed = scn.initial_seed if seed_override is None else seed_override
    dim = scn.params.dim
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(sample_index,))
    return sample_initial_state(dim, scn.initial_radius, seq), seed


def _integrate(scn: ScenarioConfig, y0: np.ndarray) -> Trajectory:
    if scn.model == "classical":
        return integrate_classical(hhw_rhs, y0, scn.params, scn.integrator)
    return integrate_caputo(memristive_rhs, y0, scn.params, scn.integrator)


def bounds_payload(scn: ScenarioConfig, y0=None) -> dict:
    """Self-describing constants block for reports (classical fields only
    for classical configs)."""
    if scn.model == "classical":
        b = classical_bounds(scn.params, y0=y0)
        payload = {
            "Q": b.Q,
            "P_star": b.P_star,
            "mu": b.mu,
            "G": b.G,
            "formulas": {
                "Q": "g_K*(1+H) + |a1*E_Na| + g_K*|lambda|*H*|E_K| "
                     "+ 6*a1^2/a2 + 6*a2/E_Na^2 + (6/a2)*(g_K*lambda*H)^2",
                "P_star": "max(0, (Q - (a0 + lambda^2*H^2/(2*tau_K)))/n)",
                "mu": "min(1/(2*tau_K), a0 + lambda^2*H^2/(2*tau_K) + n*P - Q)",
                "G": "1 + n*H^2 + sum_i (|E_Na|*a0 + g_K*sqrt(1+H^2)*|E_K| + |J|)^2/a0^2 "
                     "+ sum_i [(|E_Na*a1| + g_K*sqrt(1+H^2))^2/(a0*a2) "
                     "+ 2*(a1+E_Na*a2)^4/(a0*(a2/2)^3)]",
            },
        }
        if b.M_R0 is not None:
            payload["M_R0"] = b.M_R0
            payload["T_B"] = b.T_B
            payload["T_0"] = b.T_0
        return payload
    fb = fractional_bounds(scn.params, y0=y0)
    base = scn.params.base
    payload = {
        "Q": analysis.compute_Q(base),
        "G_alpha": fb.G_alpha,
        "P_star_frac": fb.P_star_frac,
        "delta": fb.delta,
        "rho_bound": fb.rho_bound,
        "formulas": {
            "G_alpha": "1 + n*H^2 + sum_i Gamma(alpha)/(a0-k/beta)^2 * "
                       "(|E_Na|*(a0-k/beta) + g_K*sqrt(1+H^2)*|E_K| + |J|)^2 "
                       "+ sum_i Gamma(alpha)/(a0-k/beta) * [(|E_Na*a1| + g_K*sqrt(1+H^2))^2/a2 "
                       "+ 2*(a1+E_Na*a2)^4/(a2/2)^3]",
            "P_star_frac": "max(0, (Q + k/(2*beta) - (a0 + lambda^2*H^2/(2*tau_K)))/n)",
            "delta": "min(1/(2*tau_K), a0 + lambda^2*H^2/(2*tau_K) + n*P - Q - k/(2*beta))",
            "mu_alpha": "Gamma(1+alpha)/(Gamma(1+alpha) + 2*delta*t^alpha)",
            "rho_bound": "1 + (G_alpha/b^2)*max_i(gamma_i^2)*Gamma(alpha)",
        },
    }
    if fb.M_star_R0 is not None:
        payload["M_star_R0"] = fb.M_star_R0
    return payload


def params_payload(scn: ScenarioConfig) -> dict:
    p = scn.params
    base = p if isinstance(p, ModelParams) else p.base
    payload = {
        "n": base.n, "a0": base.a0, "a1": base.a1, "a2": base.a2,
        "g_K": base.g_K, "E_Na": base.E_Na, "E_K": base.E_K, "H": base.H,
        "lambda": base.lam, "tau_K": base.tau_K, "J": base.J, "P": base.P,
    }
    if isinstance(p, MemristiveParams):
        payload.update(
            alpha=p.alpha, k=p.k, beta=p.beta, gamma=list(p.gamma), b=p.b
        )
    return payload


def _run_checks(scn: ScenarioConfig, traj: Trajectory,
                gaps: "analysis.GapSeries", mu_scale: float = 1.0) -> list[CheckResult]:
    checks: list[CheckResult] = []
    y0 = traj.states[0]
    T0 = transient_time_T0(y0, scn.params if scn.model == "classical" else scn.params.base)
    if scn.model == "classical":
        G = analysis.absorbing_bound_G(scn.params)
        checks.extend(verify_dissipativity(traj, G))
        mu = rate_mu(scn.params) * mu_scale
        if mu > 0:
            checks.append(verify_sync_envelope(gaps, mu, T0))
    else:
        fb = fractional_bounds(scn.params)
        checks.extend(verify_memristive_dissipativity(traj, fb))
        if fb.delta > 0:
            checks.append(verify_frac_sync(gaps, scn.params, T0, rate_scale=mu_scale))
    return checks


def _emit_outputs(scn: ScenarioConfig, out_dir: Path, tag: str,
                  traj: Trajectory, gaps, report_payload: Optional[dict]) -> dict:
    files: dict = {}
    if "trajectory_csv" in scn.outputs:
        path = out_dir / f"{tag}trajectory.csv"
        write_trajectory_csv(path, traj)
        files["trajectory_csv"] = path
    if "gaps_csv" in scn.outputs:
        path = out_dir / f"{tag}gaps.csv"
        write_gaps_csv(path, gaps)
        files["gaps_csv"] = path
    if "report_json" in scn.outputs and report_payload is not None:
        path = out_dir / f"{tag}report.json"
        write_json(path, report_payload)
        files["report_json"] = path
    if "plot_svg" in scn.outputs:
        files.update(_emit_plots(scn, out_dir, tag, traj, gaps))
    return files


def _emit_plots(scn: ScenarioConfig, out_dir: Path, tag: str, traj: Trajectory, gaps) -> dict:
    files = {}
    n = traj.n
    pot_series = [
        Series(traj.times, traj.V[:, i], f"V_{i + 1}") for i in range(min(n, 6))
    ]
    path_v = out_dir / f"{tag}potentials.svg"
    line_plot_svg(path_v, pot_series, "Membrane potentials", "t [ms]", "V [100 mV]")
    files["potentials_svg"] = path_v

    clamped = np.maximum(gaps.max_gap, LOG_CLAMP)
    series = [Series(gaps.times, np.log10(clamped), "max gap^2")]
    p = scn.params
    if scn.model == "classical":
        mu = rate_mu(p)
        if mu > 0:
            T0 = transient_time_T0(traj.states[0], p)
            i0 = min(int(np.searchsorted(gaps.times, T0, side="left")), gaps.times.size - 1)
            g0 = max(gaps.max_gap[i0], LOG_CLAMP)
            env = g0 * np.exp(-mu * (gaps.times - gaps.times[i0]))
            mask = gaps.times >= gaps.times[i0]
            series.append(
                Series(gaps.times[mask], np.log10(np.maximum(env[mask], LOG_CLAMP)),
                       "envelope", dashed=True)
            )
    else:
        fb = fractional_bounds(p)
        if fb.delta > 0:
            from .special import gamma as _gamma

            T0 = transient_time_T0(traj.states[0], p.base)
            i0 = min(int(np.searchsorted(gaps.times, T0, side="left")), gaps.times.size - 1)
            g0 = max(gaps.max_gap[i0], LOG_CLAMP)
            g1a = _gamma(1.0 + p.alpha)
            ts = gaps.times[i0:]
            env = g0 * g1a / (g1a + 2.0 * fb.delta * (ts - ts[0]) ** p.alpha)
            series.append(Series(ts, np.log10(np.maximum(env, LOG_CLAMP)), "envelope", dashed=True))
    path_g = out_dir / f"{tag}gaps.svg"
    line_plot_svg(path_g, series, "Pairwise gap decay", "t [ms]", "log10 max gap^2")
    files["gaps_svg"] = path_g
    return files


def run_scenario(
    scn: ScenarioConfig,
    out_dir: Optional[Path] = None,
    seed_override: Optional[int] = None,
    sample_index: int = 0,
    emit: bool = True,
    mu_scale: float = 1.0,
) -> RunResult:
    """Run one scenario end to end.

    On integration blow-up the partial trajectory is analyzed and emitted
    with a blow_up flag; the caller decides the exit status.
    """
    y0, seed_used = resolve_initial(scn, seed_override, sample_index)
    blow_up = False
    try:
        traj = _integrate(scn, y0)
    except BlowUpError as exc:
        if exc.partial is None or exc.partial.times.size == 0:
            raise
        traj = exc.partial
        blow_up = True

    gaps = gap_series(traj)
    report = None
    payload = None
    if "report_json" in scn.outputs or not emit:
        checks = [] if blow_up else _run_checks(scn, traj, gaps, mu_scale=mu_scale)
        bounds = bounds_payload(scn, y0=y0)
        report = AnalysisReport(
            bounds=bounds,
            checks=checks,
            provenance={
                "seed": seed_used,
                "sample_index": sample_index,
                "model": scn.model,
                "integrator": dataclasses.asdict(scn.integrator),
                "final_time": float(traj.times[-1]),
                "blow_up": blow_up,
                "package_version": _package_version(),
            },
        )
        payload = {
            "schema_version": SCHEMA_VERSION,
            "model": scn.model,
            "params": params_payload(scn),
            "bounds": bounds,
            "checks": [c.as_dict() for c in report.checks],
            "provenance": report.provenance,
        }

    files = {}
    if emit:
        target = Path(out_dir) if out_dir is not None else scn.output_dir
        files = _emit_outputs(scn, target, "", traj, gaps, payload)

    return RunResult(
        trajectory=traj,
        gaps=gaps,
        report=report,
        seed_used=seed_used,
        blow_up=blow_up,
        out_files=files,
    )


def verify_scenario(
    scn: ScenarioConfig,
    seeds: int = 5,
    seed_override: Optional[int] = None,
    mu_scale: float = 1.0,
) -> tuple[list[AnalysisReport], bool]:
    """Run `seeds` random initial states (one run for an explicit state)
    and collect the theorem checks; passes iff every check passes."""
    runs = 1 if scn.initial_state is not None else max(1, seeds)
    reports: list[AnalysisReport] = []
    all_ok = True
    for idx in range(runs):
        y0, seed_used = resolve_initial(scn, seed_override, idx)
        try:
            traj = _integrate(scn, y0)
        except BlowUpError as exc:
            reports.append(
                AnalysisReport(
                    bounds={},
                    checks=[CheckResult("integration", False, 0.0, 0.0, 0.0)],
                    provenance={"seed": seed_used, "sample_index": idx,
                                "blow_up": True, "blow_up_time": exc.t},
                )
            )
            all_ok = False
            continue
        gaps = gap_series(traj)
        checks = _run_checks(scn, traj, gaps, mu_scale=mu_scale)
        report = AnalysisReport(
            bounds=bounds_payload(scn, y0=y0),
            checks=checks,
            provenance={"seed": seed_used, "sample_index": idx, "blow_up": False},
        )
        reports.append(report)
        all_ok = all_ok and report.all_passed
    return reports, all_ok


# ---------------------------------------------------------------------------
# sweep driver


def _sweep_scenario(sweep: SweepConfig, value) -> ScenarioConfig:
    scn = sweep.base
    if sweep.sweep_variable == "P":
        if scn.model == "classical":
            params = replace(scn.params, P=float(value))
        else:
            params = replace(scn.params, base=replace(scn.params.base, P=float(value)))
    elif sweep.sweep_variable == "alpha":
        params = replace(scn.params, alpha=float(value))
    else:  # n
        n = int(value)
        if scn.model == "classical":
            params = replace(scn.params, n=n)
        else:
            p = scn.params
            gamma = p.gamma if len(p.gamma) == n else (p.gamma[0],) * n
            params = replace(p, base=replace(p.base, n=n), gamma=gamma)
    return dataclasses.replace(scn, params=params)


def _sweep_worker(args) -> dict:
    sweep, value_idx, rep = args
    value = sweep.values[value_idx]
    scn = _sweep_scenario(sweep, value)
    seq_key = (value_idx, rep)
    y0 = sample_initial_state(
        scn.params.dim, scn.initial_radius,
        np.random.SeedSequence(entropy=sweep.seed, spawn_key=seq_key),
    )
    start = time.perf_counter()
    try:
        traj = _integrate(scn, y0)
        gaps = gap_series(traj)
        final_gap = float(gaps.max_gap[-1])
        ok = True
    except BlowUpError:
        final_gap = float("inf")
        ok = False
    wall_ms = (time.perf_counter() - start) * 1e3
    return {
        "value": float(value),
        "value_idx": value_idx,
        "replicate": rep,
        "final_max_gap_sq": final_gap,
        "sync_bool": ok and final_gap < SYNC_GAP_THRESHOLD,
        "wall_time_ms": wall_ms,
        "completed": ok,
    }


def run_sweep(
    sweep: SweepConfig,
    out_dir: Optional[Path] = None,
    jobs: int = 1,
    seed_override: Optional[int] = None,
) -> tuple[Path, list[dict]]:
    """Run value x replicate simulations and write the summary CSV (plus a
    timing sidecar and an optional sync-fraction SVG)."""
    if seed_override is not None:
        sweep = dataclasses.replace(sweep, seed=seed_override)
    target = Path(out_dir) if out_dir is not None else sweep.base.output_dir
    tasks = [
        (sweep, vi, rep)
        for vi in range(len(sweep.values))
        for rep in range(sweep.replicates)
    ]
    if jobs > 1:
        warm_up_kernels()
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_worker, tasks))
    else:
        rows = [_sweep_worker(t) for t in tasks]
    rows.sort(key=lambda r: (r["value_idx"], r["replicate"]))

    summary_path = target / "sweep_summary.csv"
    write_sweep_csv(summary_path, rows)
    write_timing_csv(target / "sweep_timing.csv", rows)

    if "plot_svg" in sweep.base.outputs:
        values = np.array([float(v) for v in sweep.values])
        frac = np.array(
            [
                np.mean([r["sync_bool"] for r in rows if r["value_idx"] == vi])
                for vi in range(len(sweep.values))
            ]
        )
        vlines = []
        if sweep.sweep_variable == "P":
            p = sweep.base.params
            if sweep.base.model == "classical":
                vlines = [(analysis.threshold_P_star(p), "P*")]
            else:
                vlines = [(fractional_bounds(p).P_star_frac, "P_*")]
        line_plot_svg(
            target / "sweep_sync_fraction.svg",
            [Series(values, frac, "sync fraction")],
            f"Synchronization vs {sweep.sweep_variable}",
            sweep.sweep_variable,
            "fraction of replicates synchronized",
            vlines=vlines,
        )
    return summary_path, rows
