"""Time-stepping engines for the classical and fractional networks.

Two classical schemes (fixed-step 4th order, embedded 4(5) adaptive) and a
Caputo predictor-corrector of Adams type.  The built-in network right-hand
sides run through compiled kernels; any other callable rhs(y, p) -> dy
falls back to an equivalent numpy path, which is what the scalar test
problems use.

A single run is strictly sequential (the fractional scheme is
history-dependent); independent runs are embarrassingly parallel as long
as each owns its buffers.  Identical (y0, params, spec) inputs produce
bit-identical trajectories on the same platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .errors import (
    BlowUpError,
    DomainError,
    MemoryBudgetError,
    StepSizeUnderflowError,
)
from .model import (
    MemristiveParams,
    ModelParams,
    NetworkState,
    Trajectory,
    TrajectoryMeta,
    _params_arrays,
    hhw_rhs,
    memristive_rhs,
)
from .special import gamma

__all__ = ["IntegratorSpec", "CaputoHistory", "integrate_classical", "integrate_caputo"]

KINDS = ("classical_fixed", "classical_adaptive", "caputo_pc")


@dataclass(frozen=True)
class IntegratorSpec:
    """What to run: scheme, step (or tolerances), horizon, and thinning.

    dt is the fixed step for classical_fixed/caputo_pc and the initial
    step for classical_adaptive, whose accuracy is governed by the
    (abs_tol, rel_tol) pair instead.  record_stride keeps every k-th
    accepted step (t=0 and the final time are always kept).

    memory_window truncates the fractional-history convolution to the
    trailing window (ms).  That caps cost and memory bandwidth at the
    price of discarding real kernel mass near t=0, so results drift from
    the full-history scheme; it is off by default and no verification
    run uses it.
    """

    kind: str
    dt: float
    t_end: float
    record_stride: int = 1
    abs_tol: float = 1e-8
    rel_tol: float = 1e-8
    corrector_sweeps: int = 1
    memory_window: Optional[float] = None  # ms; None = full history
    history_limit: int = 2_000_000

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown integrator kind {self.kind!r}; expected one of {KINDS}")
        if not self.dt > 0:
            raise DomainError(f"dt must be > 0, got {self.dt}")
        if not self.t_end > 0:
            raise DomainError(f"t_end must be > 0, got {self.t_end}")
        if self.record_stride < 1:
            raise DomainError(f"record_stride must be >= 1, got {self.record_stride}")
        if not (1 <= self.corrector_sweeps <= 3):
            raise DomainError(f"corrector_sweeps must be in 1..3, got {self.corrector_sweeps}")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("abs_tol and rel_tol must be > 0")
        if self.memory_window is not None and not self.memory_window > 0:
            raise DomainError("memory_window must be > 0 when given")


def _as_vector(y0) -> np.ndarray:
    if isinstance(y0, NetworkState):
        return y0.to_vector()
    arr = np.asarray(y0, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    return arr.copy()


def _n_fixed_steps(spec: IntegratorSpec) -> int:
    n_steps = int(round(spec.t_end / spec.dt))
    if n_steps < 1:
        n_steps = 1
    return n_steps


def _fixed_record_count(n_steps: int, stride: int) -> int:
    count = 1 + n_steps // stride
    if n_steps % stride != 0:
        count += 1
    return count


def _model_kind(p) -> str:
    if isinstance(p, MemristiveParams):
        return "memristive"
    if isinstance(p, ModelParams):
        return "classical"
    return "generic"


def _make_meta(p, spec: IntegratorSpec, **extra) -> TrajectoryMeta:
    return TrajectoryMeta(
        model=_model_kind(p),
        params=p,
        integrator=spec.kind,
        dt=spec.dt,
        record_stride=spec.record_stride,
        extra=extra,
    )


def _finish(times, states, count, p, spec, status, t_bad, y_prev, extra=None):
    traj = Trajectory(times[:count].copy(), states[:count].copy(), _make_meta(p, spec, **(extra or {})))
    if status == 1:
        raise BlowUpError(t_bad, y_prev, partial=traj)
    if status == 3:
        raise StepSizeUnderflowError(
            f"adaptive step size underflowed near t={t_bad:.6g}"
        )
    return traj


# ---------------------------------------------------------------------------
# classical schemes


def _classical_fast(y0, p, spec: IntegratorSpec) -> Trajectory:
    n, pbase, mem, pmem, gam = _params_arrays(p)
    n_steps = _n_fixed_steps(spec)
    cap = _fixed_record_count(n_steps, spec.record_stride)
    rec_t = np.empty(cap)
    rec_y = np.empty((cap, y0.size))
    y = y0.copy()
    status, steps_done, rec_i = _kernels.rk4_fixed(
        y, spec.dt, n_steps, spec.record_stride, rec_t, rec_y, n, pbase, mem, pmem, gam
    )
    return _finish(rec_t, rec_y, rec_i, p, spec, status, steps_done * spec.dt, y)


def _classical_generic_fixed(rhs, y0, p, spec: IntegratorSpec) -> Trajectory:
    n_steps = _n_fixed_steps(spec)
    dt = spec.dt
    stride = spec.record_stride
    times = [0.0]
    states = [y0.copy()]
    y = y0.copy()
    for step in range(n_steps):
        k1 = rhs(y, p)
        k2 = rhs(y + 0.5 * dt * k1, p)
        k3 = rhs(y + 0.5 * dt * k2, p)
        k4 = rhs(y + dt * k3, p)
        ynew = y + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if not np.all(np.isfinite(ynew)):
            traj = Trajectory(np.array(times), np.array(states), _make_meta(p, spec))
            raise BlowUpError(step * dt, y, partial=traj)
        y = ynew
        k = step + 1
        if k % stride == 0 or k == n_steps:
            times.append(k * dt)
            states.append(y.copy())
    return Trajectory(np.array(times), np.array(states), _make_meta(p, spec))


def _classical_fast_adaptive(y0, p, spec: IntegratorSpec) -> Trajectory:
    n, pbase, mem, pmem, gam = _params_arrays(p)
    chunks_t = [np.array([0.0])]
    chunks_y = [y0[None, :].copy()]
    cap = 4096
    y = y0.copy()
    t = 0.0
    h = min(spec.dt, spec.t_end)
    accepted = 0
    while True:
        rec_t = np.empty(cap)
        rec_y = np.empty((cap, y0.size))
        status, t, h, rec_i, accepted = _kernels.rkf45_adaptive(
            y, t, spec.t_end, h, spec.abs_tol, spec.rel_tol, spec.record_stride,
            accepted, rec_t, rec_y, n, pbase, mem, pmem, gam,
        )
        chunks_t.append(rec_t[:rec_i].copy())
        chunks_y.append(rec_y[:rec_i].copy())
        if status == 2:
            cap *= 2
            continue
        times = np.concatenate(chunks_t)
        states = np.concatenate(chunks_y)
        return _finish(
            times, states, times.size, p, spec, status, t, y,
            extra={"accepted_steps": accepted},
        )


def _classical_generic_adaptive(rhs, y0, p, spec: IntegratorSpec) -> Trajectory:
    A = _kernels._RKF_A
    B4 = _kernels._RKF_B4
    E = _kernels._RKF_E
    times = [0.0]
    states = [y0.copy()]
    y = y0.copy()
    t = 0.0
    h = min(spec.dt, spec.t_end)
    h_min = 1e-14 * max(1.0, spec.t_end)
    accepted = 0
    ks = np.empty((6, y0.size))
    while t < spec.t_end:
        if h < h_min:
            raise StepSizeUnderflowError(f"adaptive step size underflowed near t={t:.6g}")
        h = min(h, spec.t_end - t)
        ks[0] = rhs(y, p)
        for s in range(1, 6):
            ks[s] = rhs(y + h * (A[s, :s] @ ks[:s]), p)
        ynew = y + h * (B4 @ ks)
        scale = spec.abs_tol + spec.rel_tol * np.maximum(np.abs(y), np.abs(ynew))
        enorm = math.sqrt(float(np.mean((h * (E @ ks) / scale) ** 2)))
        bad = not (math.isfinite(enorm) and np.all(np.isfinite(ynew)))
        if not bad and enorm <= 1.0:
            t += h
            y = ynew
            accepted += 1
            if accepted % spec.record_stride == 0 or t >= spec.t_end:
                times.append(t)
                states.append(y.copy())
        if bad:
            factor = 0.2
        else:
            factor = 5.0 if enorm == 0.0 else min(5.0, max(0.2, 0.9 * enorm ** (-0.2)))
        h *= factor
    return Trajectory(
        np.array(times), np.array(states),
        _make_meta(p, spec, accepted_steps=accepted),
    )


def integrate_classical(rhs: Callable, y0, p, spec: IntegratorSpec) -> Trajectory:
    """Integrate dy/dt = rhs(y, p) and record a Trajectory.

    kind=classical_fixed runs the 4th-order fixed-step scheme (global error
    O(dt^4) on smooth problems); kind=classical_adaptive runs the embedded
    4(5) pair under the (abs_tol, rel_tol) pair.  The built-in network
    fields dispatch to compiled kernels.
    """
    if spec.kind not in ("classical_fixed", "classical_adaptive"):
        raise DomainError(f"integrate_classical cannot run kind={spec.kind!r}")
    y0v = _as_vector(y0)
    fast = (rhs is hhw_rhs and isinstance(p, ModelParams)) or (
        rhs is memristive_rhs and isinstance(p, MemristiveParams)
    )
    if fast and y0v.size != p.dim:
        raise ValueError(f"initial state has length {y0v.size}, expected {p.dim}")
    if spec.kind == "classical_fixed":
        if fast:
            return _classical_fast(y0v, p, spec)
        return _classical_generic_fixed(rhs, y0v, p, spec)
    if fast:
        return _classical_fast_adaptive(y0v, p, spec)
    return _classical_generic_adaptive(rhs, y0v, p, spec)


# ---------------------------------------------------------------------------
# Caputo fractional predictor-corrector


@dataclass
class CaputoHistory:
    """Memory of the fractional scheme on a uniform grid.

    f_history rows hold the right-hand-side evaluations at past grid
    points (row count = completed steps + 1); the weight arrays are
    precomputed once for the full grid and indexed by age k - j, so the
    convolution stays consistent as the grid grows.  The compiled kernel
    keeps the same layout in its own buffers.
    """

    f_history: np.ndarray       # (n_steps + 1, dim)
    predictor: np.ndarray       # c[m] = (m+1)^a - m^a
    corrector: np.ndarray       # e[m] = (m+2)^(a+1) - 2(m+1)^(a+1) + m^(a+1)
    corrector_oldest: np.ndarray  # weight of the t=0 node per step
    filled: int = 1


def _caputo_weights(alpha: float, n_steps: int):
    m = np.arange(n_steps + 2, dtype=float)
    pa = m**alpha
    pa1 = m ** (alpha + 1.0)
    c = pa[1 : n_steps + 1] - pa[:n_steps]  # c[m] = (m+1)^a - m^a
    e = pa1[2 : n_steps + 2] - 2.0 * pa1[1 : n_steps + 1] + pa1[:n_steps]
    k = np.arange(n_steps, dtype=float)
    a0w = k ** (alpha + 1.0) - (k - alpha) * (k + 1.0) ** alpha
    return c, e, a0w


def _caputo_scales(alpha: float, dt: float):
    ha = dt**alpha
    return ha / gamma(alpha + 1.0), ha / gamma(alpha + 2.0)


def _check_caputo_budget(spec: IntegratorSpec, n_steps: int, dim: int):
    if (n_steps + 1) * dim > spec.history_limit:
        raise MemoryBudgetError(
            f"fractional history needs {(n_steps + 1) * dim} floats, over the "
            f"limit of {spec.history_limit}; raise history_limit or coarsen dt"
        )


def _win_steps(spec: IntegratorSpec) -> int:
    if spec.memory_window is None:
        return -1
    return max(1, int(round(spec.memory_window / spec.dt)))


def _caputo_fast(y0, p: MemristiveParams, spec: IntegratorSpec) -> Trajectory:
    n, pbase, mem, pmem, gam = _params_arrays(p)
    n_steps = _n_fixed_steps(spec)
    _check_caputo_budget(spec, n_steps, y0.size)
    c, e, a0w = _caputo_weights(p.alpha, n_steps)
    g1, g2 = _caputo_scales(p.alpha, spec.dt)
    cap = _fixed_record_count(n_steps, spec.record_stride)
    rec_t = np.empty(cap)
    rec_y = np.empty((cap, y0.size))
    status, steps_done, rec_i = _kernels.caputo_pece(
        y0, spec.dt, n_steps, spec.record_stride, spec.corrector_sweeps,
        _win_steps(spec), c, e, a0w, g1, g2, rec_t, rec_y,
        n, pbase, mem, pmem, gam,
    )
    y_last = rec_y[rec_i - 1].copy()
    return _finish(rec_t, rec_y, rec_i, p, spec, status, steps_done * spec.dt, y_last)


def _caputo_generic(rhs, y0, p, spec: IntegratorSpec, alpha: float) -> Trajectory:
    n_steps = _n_fixed_steps(spec)
    _check_caputo_budget(spec, n_steps, y0.size)
    c, e, a0w = _caputo_weights(alpha, n_steps)
    g1, g2 = _caputo_scales(alpha, spec.dt)
    dt = spec.dt
    stride = spec.record_stride
    win = _win_steps(spec)

    dim = y0.size
    hist = CaputoHistory(
        f_history=np.empty((n_steps + 1, dim)),
        predictor=c,
        corrector=e,
        corrector_oldest=a0w,
    )
    F = hist.f_history
    F[0] = rhs(y0, p)
    times = [0.0]
    states = [y0.copy()]
    y = y0.copy()
    for k in range(n_steps):
        j0 = 0 if win < 0 else max(0, k + 1 - win)
        acc_p = c[: k + 1 - j0] @ F[j0 : k + 1][::-1]
        if j0 == 0:
            start = 1
            acc_c = a0w[k] * F[0]
        else:
            start = j0
            acc_c = np.zeros(dim)
        if k + 1 - start > 0:
            acc_c = acc_c + e[: k + 1 - start] @ F[start : k + 1][::-1]
        yp = y0 + g1 * acc_p
        fnew = rhs(yp, p)
        for _ in range(spec.corrector_sweeps):
            y = y0 + g2 * (acc_c + fnew)
            fnew = rhs(y, p)
        F[k + 1] = fnew
        hist.filled = k + 2
        if not np.all(np.isfinite(y)):
            traj = Trajectory(np.array(times), np.array(states), _make_meta(p, spec))
            raise BlowUpError(k * dt, states[-1].copy(), partial=traj)
        kk = k + 1
        if kk % stride == 0 or kk == n_steps:
            times.append(kk * dt)
            states.append(y.copy())
    return Trajectory(np.array(times), np.array(states), _make_meta(p, spec))


def integrate_caputo(rhs: Callable, y0, p, spec: IntegratorSpec) -> Trajectory:
    """Integrate the Caputo-fractional system D_c^alpha y = rhs(y, p).

    The order alpha comes from p.alpha (0 < alpha < 1).  Full-history
    convolution by default (O(N^2) work); spec.memory_window enables the
    short-memory truncation.  With alpha -> 1 the scheme degenerates to a
    classical one-step Adams pair.
    """
    if spec.kind != "caputo_pc":
        raise DomainError(f"integrate_caputo requires kind='caputo_pc', got {spec.kind!r}")
    alpha = getattr(p, "alpha", None)
    if alpha is None:
        raise DomainError("caputo_pc needs params with a fractional order attribute 'alpha'")
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"fractional order alpha must be in (0, 1), got {alpha}")
    y0v = _as_vector(y0)
    if rhs is memristive_rhs and isinstance(p, MemristiveParams):
        if y0v.size != p.dim:
            raise ValueError(f"initial state has length {y0v.size}, expected {p.dim}")
        return _caputo_fast(y0v, p, spec)
    return _caputo_generic(rhs, y0v, p, spec, float(alpha))


def warm_up_kernels() -> None:
    """Trigger compilation of all kernels on tiny problems.

    Useful before forking sweep workers so children inherit compiled code.
    """
    p = ModelParams(n=2, a0=1.0, a1=0.0, a2=1.0, g_K=1.0, E_Na=1.0, E_K=-1.0,
                    H=1.0, lam=1.0, tau_K=1.0)
    spec = IntegratorSpec(kind="classical_fixed", dt=0.5, t_end=1.0)
    integrate_classical(hhw_rhs, np.zeros(4), p, spec)
    spec_a = replace(spec, kind="classical_adaptive")
    integrate_classical(hhw_rhs, np.zeros(4), p, spec_a)
    mp_ = MemristiveParams(base=p, alpha=0.5, k=1.0, beta=1.0, gamma=(0.0, 0.0), b=1.0)
    spec_c = replace(spec, kind="caputo_pc")
    integrate_caputo(memristive_rhs, np.zeros(5), mp_, spec_c)
