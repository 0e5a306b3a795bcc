"""Closed-form constants, thresholds, rates, and trajectory-level checks.

Classical network:

    Q  = g_K(1+H) + |a1 E_Na| + g_K |lam| H |E_K| + 6 a1^2/a2
         + 6 a2/E_Na^2 + (6/a2)(g_K lam H)^2
    P* = max{0, (Q - (a0 + lam^2 H^2/(2 tau_K))) / n}
    mu(P) = min{1/(2 tau_K), a0 + lam^2 H^2/(2 tau_K) + n P - Q}

(|lam| is used in the mixed Q term so Q stays a sum of positive constants
for every admissible sign of lam.)  G is the squared radius of the
absorbing ball, M(R0) the initial-data constant of the transient bound.

Memristive network (requires a0 > k/beta): the effective decay drops to
a0 - k/beta, the threshold picks up k/(2 beta), and the convergence rate
becomes the algebraic mu_alpha(P, t) = G1a/(G1a + 2 delta(P) t^alpha).

Verification helpers turn recorded trajectories into pass/fail checks with
measured-vs-bound margins; a FAIL is a result, not an error.  limsups are
realized as max over a trailing window (default: trailing quarter, at
least 50 ms).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import DomainError, HypothesisViolationError, TrajectoryTooShortError
from .integrate import IntegratorSpec, integrate_classical
from .model import MemristiveParams, ModelParams, NetworkState, Trajectory, hhw_rhs
from .special import gamma

__all__ = [
    "ClassicalBounds",
    "FractionalBounds",
    "GapSeries",
    "CheckResult",
    "AnalysisReport",
    "compute_Q",
    "threshold_P_star",
    "rate_mu",
    "absorbing_bound_G",
    "transient_constant_M",
    "transient_bound",
    "absorbing_entry_time",
    "transient_time_T0",
    "classical_bounds",
    "fractional_bounds",
    "memristive_transient_bound",
    "rate_mu_alpha",
    "gap_series",
    "verify_sync_envelope",
    "verify_frac_sync",
    "verify_dissipativity",
    "verify_memristive_dissipativity",
    "sync_degree_estimate",
    "sample_initial_state",
    "ENVELOPE_REL_TOL",
    "ENVELOPE_ABS_FLOOR",
]

ENVELOPE_REL_TOL = 1e-6
ENVELOPE_ABS_FLOOR = 1e-12
DEFAULT_TAIL_FRACTION = 0.25
MIN_TAIL_SPAN = 50.0  # ms


@dataclass(frozen=True)
class ClassicalBounds:
    Q: float
    P_star: float
    mu: float
    G: float
    M_R0: Optional[float] = None
    T_B: Optional[float] = None
    T_0: Optional[float] = None


@dataclass(frozen=True)
class FractionalBounds:
    G_alpha: float
    P_star_frac: float
    delta: float
    rho_bound: float
    M_star_R0: Optional[float] = None


@dataclass
class GapSeries:
    """Squared pairwise gaps U_ij^2 + Pi_ij^2 along a trajectory."""

    times: np.ndarray
    pairs: list[tuple[int, int]]
    gap_sq: np.ndarray  # shape (len(times), len(pairs))
    max_gap: np.ndarray  # per-time max over pairs


@dataclass(frozen=True)
class CheckResult:
    """One theorem check: measured quantity vs its bound at the worst
    recorded time.  margin is the minimum bound/measured ratio (inf when
    nothing was measured above zero); passed iff margin >= 1."""

    name: str
    passed: bool
    measured: float
    bound: float
    margin: float

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "measured": self.measured,
            "bound": self.bound,
            "margin": None if math.isinf(self.margin) else self.margin,
        }


@dataclass
class AnalysisReport:
    # bounds is a ClassicalBounds/FractionalBounds or the serialized dict
    # the harness embeds in report JSON
    bounds: object
    checks: list[CheckResult] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)


# ---------------------------------------------------------------------------
# closed-form constants


def _check_q_domain(p: ModelParams) -> None:
    if not p.a2 > 0:
        raise DomainError(f"a2 must be > 0, got {p.a2}")
    if p.E_Na == 0:
        raise DomainError("E_Na must be nonzero")


def compute_Q(p: ModelParams) -> float:
    """Gap-contraction constant Q of the classical network."""
    _check_q_domain(p)
    return (
        p.g_K * (1.0 + p.H)
        + abs(p.a1 * p.E_Na)
        + p.g_K * abs(p.lam) * p.H * abs(p.E_K)
        + 6.0 * p.a1 * p.a1 / p.a2
        + 6.0 * p.a2 / (p.E_Na * p.E_Na)
        + (6.0 / p.a2) * (p.g_K * p.lam * p.H) ** 2
    )


def _rate_offset(p: ModelParams) -> float:
    return p.a0 + (p.lam * p.H) ** 2 / (2.0 * p.tau_K)


def threshold_P_star(p: ModelParams) -> float:
    """Sufficient coupling threshold P* for complete exponential sync."""
    if p.n < 2:
        raise DomainError("threshold needs n >= 2")
    return max(0.0, (compute_Q(p) - _rate_offset(p)) / p.n)


def rate_mu(p: ModelParams) -> float:
    """Exponential convergence rate mu(P); positive only when P > P*."""
    return min(1.0 / (2.0 * p.tau_K), _rate_offset(p) + p.n * p.P - compute_Q(p))


def _sqrt1h2(p: ModelParams) -> float:
    return math.sqrt(1.0 + p.H * p.H)


def absorbing_bound_G(p: ModelParams) -> float:
    """Squared radius G of the absorbing ball (initial-state independent)."""
    _check_q_domain(p)
    root = _sqrt1h2(p)
    t1 = (abs(p.E_Na) * p.a0 + p.g_K * root * abs(p.E_K) + abs(p.J)) ** 2 / (p.a0 * p.a0)
    t2 = (abs(p.E_Na * p.a1) + p.g_K * root) ** 2 / (p.a0 * p.a2)
    t3 = 2.0 * (p.a1 + p.E_Na * p.a2) ** 4 / (p.a0 * (p.a2 / 2.0) ** 3)
    return 1.0 + p.n * p.H * p.H + p.n * (t1 + t2 + t3)


def transient_constant_M(p: ModelParams, R0) -> float:
    """Initial-data constant M(R0) of the transient bound."""
    R0 = np.asarray(R0, dtype=float)
    if R0.size != p.n:
        raise ValueError(f"R0 must have {p.n} entries, got {R0.size}")
    root = np.sqrt(R0 * R0 + p.H * p.H)
    t1 = (abs(p.E_Na) * p.a0 + p.g_K * root * abs(p.E_K) + abs(p.J)) ** 2 / p.a0
    t2 = (abs(p.E_Na * p.a1) + p.g_K * root) ** 2 / p.a2
    t3 = 2.0 * (p.a1 + p.E_Na * p.a2) ** 4 / (p.a2 / 2.0) ** 3
    return float(np.sum(t1 + t2 + t3))


def _split_y0(p, y0) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(y0, NetworkState):
        return y0.V, y0.R
    y0 = np.asarray(y0, dtype=float)
    n = p.n if isinstance(p, ModelParams) else p.base.n
    return y0[:n], y0[n : 2 * n]


def transient_bound(p: ModelParams, y0, t):
    """Pointwise-in-time bound on sum(V_i^2 + R_i^2) from initial data.

    Vectorized over t.
    """
    V0, R0 = _split_y0(p, y0)
    t = np.asarray(t, dtype=float)
    M = transient_constant_M(p, R0)
    out = (
        np.sum(V0 * V0) * np.exp(-p.a0 * t)
        + np.sum(R0 * R0) * np.exp(-t / p.tau_K)
        + M / p.a0
        + p.n * p.H * p.H
    )
    return out if out.ndim else float(out)


def absorbing_entry_time(p: ModelParams, L: float) -> float:
    """Entry time into the absorbing ball for trajectories started with
    squared norm <= L."""
    if not L > 0:
        raise DomainError(f"L must be > 0, got {L}")
    G = absorbing_bound_G(p)
    log_plus = max(0.0, math.log(L / G))
    return max(1.0 / p.a0, p.tau_K) * log_plus


def transient_time_T0(y0, p: ModelParams) -> float:
    """Time after which |R_i(0)| e^{-t/(2 tau_K)} <= 1 for all i."""
    _, R0 = _split_y0(p, y0)
    peak = float(np.max(np.abs(R0))) if R0.size else 0.0
    if peak <= 1.0:
        return 0.0
    return 2.0 * p.tau_K * math.log(peak)


def classical_bounds(p: ModelParams, y0=None, L: float | None = None) -> ClassicalBounds:
    """All classical constants; the initial-data fields need y0 (and L for
    the entry time; defaults to max(|y0|^2, G))."""
    Q = compute_Q(p)
    bounds = ClassicalBounds(
        Q=Q,
        P_star=threshold_P_star(p),
        mu=rate_mu(p),
        G=absorbing_bound_G(p),
    )
    if y0 is None:
        return bounds
    V0, R0 = _split_y0(p, y0)
    norm_sq = float(np.sum(V0 * V0) + np.sum(R0 * R0))
    if L is None:
        L = max(norm_sq, bounds.G)
    return ClassicalBounds(
        Q=bounds.Q,
        P_star=bounds.P_star,
        mu=bounds.mu,
        G=bounds.G,
        M_R0=transient_constant_M(p, R0),
        T_B=absorbing_entry_time(p, L),
        T_0=transient_time_T0(y0, p),
    )


def _effective_a0(p: MemristiveParams) -> float:
    eff = p.base.a0 - p.k / p.beta
    if not eff > 0:
        raise HypothesisViolationError(
            f"fractional bounds require a0 > k/beta; got a0={p.base.a0}, "
            f"k/beta={p.k / p.beta}"
        )
    return eff


def _m_star(p: MemristiveParams, R0) -> float:
    eff = _effective_a0(p)
    b = p.base
    R0 = np.asarray(R0, dtype=float)
    root = np.sqrt(R0 * R0 + b.H * b.H)
    t1 = (abs(b.E_Na) * eff + b.g_K * root * abs(b.E_K) + abs(b.J)) ** 2 / eff
    t2 = (abs(b.E_Na * b.a1) + b.g_K * root) ** 2 / b.a2
    t3 = 2.0 * (b.a1 + b.E_Na * b.a2) ** 4 / (b.a2 / 2.0) ** 3
    return float(np.sum(t1 + t2 + t3))


def fractional_bounds(p: MemristiveParams, y0=None) -> FractionalBounds:
    """Constants of the memristive theory (requires a0 > k/beta).

    M_star_R0 depends on initial data and is filled only when y0 is given.
    """
    eff = _effective_a0(p)
    b = p.base
    ga = gamma(p.alpha)
    root = _sqrt1h2(b)
    t1 = ga / (eff * eff) * (abs(b.E_Na) * eff + b.g_K * root * abs(b.E_K) + abs(b.J)) ** 2
    t2 = (ga / eff) * (
        (abs(b.E_Na * b.a1) + b.g_K * root) ** 2 / b.a2
        + 2.0 * (b.a1 + b.E_Na * b.a2) ** 4 / (b.a2 / 2.0) ** 3
    )
    G_alpha = 1.0 + b.n * b.H * b.H + b.n * (t1 + t2)
    shift = p.k / (2.0 * p.beta)
    P_star_frac = max(0.0, (compute_Q(b) + shift - _rate_offset(b)) / b.n)
    delta = min(1.0 / (2.0 * b.tau_K), _rate_offset(b) + b.n * b.P - compute_Q(b) - shift)
    rho_bound = 1.0 + (G_alpha / (p.b * p.b)) * max(g * g for g in p.gamma) * ga
    m_star = None
    if y0 is not None:
        _, R0 = _split_y0(p, y0)
        m_star = _m_star(p, R0)
    return FractionalBounds(
        G_alpha=G_alpha,
        P_star_frac=P_star_frac,
        delta=delta,
        rho_bound=rho_bound,
        M_star_R0=m_star,
    )


def memristive_transient_bound(p: MemristiveParams, y0, t):
    """Pointwise bound on sum(V_i^2) for the fractional model, from the
    decay envelope with effective rate a0 - k/beta.  Vectorized over t."""
    eff = _effective_a0(p)
    V0, R0 = _split_y0(p, y0)
    t = np.asarray(t, dtype=float)
    g1a = gamma(1.0 + p.alpha)
    m_star = _m_star(p, R0)
    out = np.sum(V0 * V0) * g1a / (g1a + eff * t**p.alpha) + m_star * gamma(p.alpha) / eff
    return out if out.ndim else float(out)


def rate_mu_alpha(p: MemristiveParams, t):
    """Algebraic convergence rate mu_alpha(P, t); in (0, 1], equals 1 at
    t=0, decays like t^-alpha.  Requires delta(P) > 0.  Vectorized over t."""
    fb = fractional_bounds(p)
    if not fb.delta > 0:
        raise DomainError(
            f"mu_alpha needs delta(P) > 0; got delta={fb.delta} "
            f"(coupling below the fractional threshold)"
        )
    t = np.asarray(t, dtype=float)
    g1a = gamma(1.0 + p.alpha)
    out = g1a / (g1a + 2.0 * fb.delta * t**p.alpha)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# trajectory-level diagnostics


def gap_series(traj: Trajectory) -> GapSeries:
    """Squared pairwise gaps (V_i-V_j)^2 + (R_i-R_j)^2 over a trajectory."""
    n = traj.n
    if n < 2:
        raise ValueError("gap analysis needs at least two neurons")
    V = traj.V
    R = traj.R
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    cols = []
    for i, j in pairs:
        cols.append((V[:, i] - V[:, j]) ** 2 + (R[:, i] - R[:, j]) ** 2)
    gap_sq = np.column_stack(cols)
    return GapSeries(
        times=traj.times.copy(),
        pairs=pairs,
        gap_sq=gap_sq,
        max_gap=gap_sq.max(axis=1),
    )


def _envelope_check(
    name: str,
    times: np.ndarray,
    measured: np.ndarray,
    allowed: np.ndarray,
) -> CheckResult:
    mask = measured > 0
    if not np.any(mask):
        return CheckResult(name, True, 0.0, float(allowed.min(initial=math.inf)), math.inf)
    ratios = np.full(times.shape, math.inf)
    ratios[mask] = allowed[mask] / measured[mask]
    worst = int(np.argmin(ratios))
    margin = float(ratios[worst])
    return CheckResult(
        name,
        margin >= 1.0,
        float(measured[worst]),
        float(allowed[worst]),
        margin,
    )


def _anchor_index(times: np.ndarray, T0: float) -> int:
    # first recorded time >= T0: the decay guarantee starts at T0, so an
    # earlier anchor could understate the anchor gap
    idx = int(np.searchsorted(times, T0, side="left"))
    return min(idx, times.size - 1)


def verify_sync_envelope(
    gaps: GapSeries,
    mu: float,
    T0: float,
    rel_tol: float = ENVELOPE_REL_TOL,
    abs_floor: float = ENVELOPE_ABS_FLOOR,
) -> CheckResult:
    """Check max_gap(t) <= max_gap(T0) exp(-mu (t - T0)) for recorded t > T0.

    The envelope is anchored at the last recorded time <= T0 and widened
    by the relative tolerance plus an absolute floor that absorbs
    floating-point noise near zero gaps.
    """
    if not mu > 0:
        raise DomainError(f"envelope check needs mu > 0, got {mu}")
    i0 = _anchor_index(gaps.times, T0)
    t0 = gaps.times[i0]
    g0 = gaps.max_gap[i0]
    sel = gaps.times > T0
    sel[: i0 + 1] = False
    times = gaps.times[sel]
    measured = gaps.max_gap[sel]
    allowed = g0 * np.exp(-mu * (times - t0)) * (1.0 + rel_tol) + abs_floor
    return _envelope_check("sync_envelope", times, measured, allowed)


def verify_frac_sync(
    gaps: GapSeries,
    p: MemristiveParams,
    T0: float,
    rel_tol: float = ENVELOPE_REL_TOL,
    abs_floor: float = ENVELOPE_ABS_FLOOR,
    rate_scale: float = 1.0,
) -> CheckResult:
    """Check max_gap(t) <= max_gap(T0) mu_alpha(P, t - T0) for t > T0."""
    fb = fractional_bounds(p)
    delta = fb.delta * rate_scale
    if not delta > 0:
        raise DomainError(f"fractional envelope check needs delta(P) > 0, got {fb.delta}")
    i0 = _anchor_index(gaps.times, T0)
    t0 = gaps.times[i0]
    g0 = gaps.max_gap[i0]
    sel = gaps.times > T0
    sel[: i0 + 1] = False
    times = gaps.times[sel]
    measured = gaps.max_gap[sel]
    g1a = gamma(1.0 + p.alpha)
    mu_a = g1a / (g1a + 2.0 * delta * (times - t0) ** p.alpha)
    allowed = g0 * mu_a * (1.0 + rel_tol) + abs_floor
    return _envelope_check("frac_sync_envelope", times, measured, allowed)


def _tail_mask(times: np.ndarray, tail_fraction: float) -> np.ndarray:
    if not (0.0 < tail_fraction < 1.0):
        raise DomainError(f"tail_fraction must be in (0, 1), got {tail_fraction}")
    t_end = times[-1]
    span = max(tail_fraction * t_end, MIN_TAIL_SPAN)
    start = max(t_end - span, 0.0)
    mask = times >= start
    if not np.any(mask):
        mask = times == t_end
    return mask


def verify_dissipativity(
    traj: Trajectory,
    G: float,
    tail_fraction: float = DEFAULT_TAIL_FRACTION,
) -> list[CheckResult]:
    """Absorbing-ball and transient-bound checks for a classical trajectory.

    Returns two CheckResults: the trailing-window max of sum(V^2 + R^2)
    against G, and the pointwise transient bound over the whole record.
    """
    p = traj.meta.params
    if not isinstance(p, ModelParams):
        raise TypeError("verify_dissipativity expects a classical trajectory")
    times = traj.times
    y0 = traj.states[0]
    norm_sq = np.sum(traj.V**2, axis=1) + np.sum(traj.R**2, axis=1)
    t_b = absorbing_entry_time(p, max(float(norm_sq[0]), G))
    if tail_fraction * times[-1] <= t_b:
        raise TrajectoryTooShortError(
            f"trajectory of {times[-1]:.6g} ms is too short for the limsup check "
            f"(entry-time estimate {t_b:.6g} ms)"
        )
    mask = _tail_mask(times, tail_fraction)
    tail_max = float(norm_sq[mask].max())
    tail_check = CheckResult(
        "dissipativity_tail",
        tail_max < G,
        tail_max,
        G,
        math.inf if tail_max == 0.0 else G / tail_max,
    )
    bound = transient_bound(p, y0, times) * (1.0 + ENVELOPE_REL_TOL)
    transient_check = _envelope_check("transient_bound", times, norm_sq, bound)
    return [tail_check, transient_check]


def verify_memristive_dissipativity(
    traj: Trajectory,
    fb: FractionalBounds,
    tail_fraction: float = DEFAULT_TAIL_FRACTION,
) -> list[CheckResult]:
    """Fractional counterparts: (V, R)-tail vs G_alpha, the V-sum transient
    envelope, and the memductance tail vs its ultimate bound."""
    p = traj.meta.params
    if not isinstance(p, MemristiveParams):
        raise TypeError("verify_memristive_dissipativity expects a memristive trajectory")
    times = traj.times
    norm_sq = np.sum(traj.V**2, axis=1) + np.sum(traj.R**2, axis=1)
    mask = _tail_mask(times, tail_fraction)
    tail_max = float(norm_sq[mask].max())
    tail_check = CheckResult(
        "dissipativity_tail",
        tail_max < fb.G_alpha,
        tail_max,
        fb.G_alpha,
        math.inf if tail_max == 0.0 else fb.G_alpha / tail_max,
    )
    v_sq = np.sum(traj.V**2, axis=1)
    bound = memristive_transient_bound(p, traj.states[0], times) * (1.0 + ENVELOPE_REL_TOL)
    transient_check = _envelope_check("frac_transient_bound", times, v_sq, bound)
    rho_sq = traj.rho[mask] ** 2
    rho_max = float(rho_sq.max())
    rho_check = CheckResult(
        "rho_tail",
        rho_max < fb.rho_bound,
        rho_max,
        fb.rho_bound,
        math.inf if rho_max == 0.0 else fb.rho_bound / rho_max,
    )
    return [tail_check, transient_check, rho_check]


# ---------------------------------------------------------------------------
# synchronizing-degree estimate


def sample_initial_state(
    dim: int, radius: float, seed_seq: np.random.SeedSequence
) -> np.ndarray:
    """Uniform sample from the centered ball of the given radius in R^dim
    (direction times radius * u^(1/dim); rejection-free)."""
    rng = np.random.default_rng(seed_seq)
    direction = rng.standard_normal(dim)
    norm = np.linalg.norm(direction)
    while norm == 0.0:
        direction = rng.standard_normal(dim)
        norm = np.linalg.norm(direction)
    r = radius * rng.random() ** (1.0 / dim)
    return (r / norm) * direction


def sync_degree_estimate(
    p: ModelParams,
    sample_count: int,
    init_radius: float,
    t_end: float,
    spec: IntegratorSpec,
    seed: int = 0,
    tail_fraction: float = DEFAULT_TAIL_FRACTION,
) -> float:
    """Monte-Carlo lower estimate of the network synchronizing degree.

    Runs sample_count trajectories from initial states drawn uniformly in
    the radius-init_radius ball and returns the sup over samples of the
    trailing-window max of |V_i - V_j| + |R_i - R_j| over pairs.  The true
    sup over all initial states is not computable; extending sample_count
    with the same seed keeps earlier samples fixed, so the estimate is
    monotone in sample_count.
    """
    if sample_count < 1:
        raise DomainError("sample_count must be >= 1")
    if spec.t_end != t_end:
        spec = replace(spec, t_end=t_end)
    worst = 0.0
    for k in range(sample_count):
        y0 = sample_initial_state(2 * p.n, init_radius, np.random.SeedSequence(entropy=seed, spawn_key=(k,)))
        traj = integrate_classical(hhw_rhs, y0, p, spec)
        mask = _tail_mask(traj.times, tail_fraction)
        V = traj.V[mask]
        R = traj.R[mask]
        for i in range(p.n):
            for j in range(i + 1, p.n):
                val = float(np.max(np.abs(V[:, i] - V[:, j]) + np.abs(R[:, i] - R[:, j])))
                worst = max(worst, val)
    return worst
