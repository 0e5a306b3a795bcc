"""Parameter sets, state layout, and right-hand sides of the neuron networks.

Classical network (n neurons, all-to-all electrical coupling of gain P):

    dV_i/dt = -m_inf(V_i)(V_i - E_Na) - g_K R_i (V_i - E_K) + J
              + sum_j P (V_j - V_i)
    dR_i/dt = (-R_i + r_inf(V_i)) / tau_K

with the quadratic sodium conductance m_inf(s) = a0 + a1 s + a2 s^2 and
the sigmoidal potassium rest current r_inf(s) = H / (1 + exp(-lam (s - E_K))).
Membrane capacitance is fixed to 1 and not a parameter.

The memristive extension adds a memductance state rho with window function
psi(s) = s (1 - beta s):

    dV_i gains  + k psi(rho) V_i
    drho = sum_i gamma_i V_i - b rho

(its time derivatives are Caputo-fractional of order alpha; the order lives
in the integrator, the vector field here is the same).

State layout is one flat vector (V_1..V_n, R_1..R_n[, rho]) everywhere;
integrators and file I/O share this contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._kernels import rhs_core
from .errors import DomainError

__all__ = [
    "ModelParams",
    "MemristiveParams",
    "NetworkState",
    "Trajectory",
    "TrajectoryMeta",
    "wilson_params",
    "wilson_memristive_params",
    "m_inf",
    "r_inf",
    "psi",
    "hhw_rhs",
    "memristive_rhs",
    "WILSON_VALUES",
]

# Wilson's fit of the neocortical neuron conductances, in scaled units of
# mV/100.  The sigmoid slope is a toolkit default (overridable), as is J=0.
WILSON_VALUES = {
    "a0": 17.8,
    "a1": 47.6,
    "a2": 33.8,
    "g_K": 26.0,
    "E_Na": 0.5,
    "E_K": -0.95,
    "H": 1.0,
    "tau_K": 4.2,
    "lam": 1.0,
    "J": 0.0,
}


@dataclass(frozen=True)
class ModelParams:
    """Scalar constants of the classical network.

    Sign constraints: E_Na, g_K, a0, a2, H, tau_K > 0; E_K < 0; P >= 0;
    J, a1, lam unrestricted.
    """

    n: int
    a0: float
    a1: float
    a2: float
    g_K: float
    E_Na: float
    E_K: float
    H: float
    lam: float
    tau_K: float
    J: float = 0.0
    P: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"neuron count n must be an integer >= 2, got {self.n}")
        for name in ("a0", "a2", "g_K", "E_Na", "H", "tau_K"):
            if not getattr(self, name) > 0:
                raise DomainError(f"parameter {name} must be > 0, got {getattr(self, name)}")
        if not self.E_K < 0:
            raise DomainError(f"parameter E_K must be < 0, got {self.E_K}")
        if self.P < 0:
            raise DomainError(f"coupling strength P must be >= 0, got {self.P}")

    @property
    def dim(self) -> int:
        return 2 * self.n


@dataclass(frozen=True)
class MemristiveParams:
    """ModelParams plus memristor constants and the fractional order.

    Requires k, beta, b > 0 and alpha in (0, 1).  The extra hypothesis
    a0 > k/beta is checked where the fractional bounds are computed, not
    here: the vector field itself is well defined without it.
    """

    base: ModelParams
    alpha: float
    k: float
    beta: float
    gamma: tuple[float, ...]
    b: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise DomainError(f"fractional order alpha must be in (0, 1), got {self.alpha}")
        for name in ("k", "beta", "b"):
            if not getattr(self, name) > 0:
                raise DomainError(f"parameter {name} must be > 0, got {getattr(self, name)}")
        if len(self.gamma) != self.base.n:
            raise DomainError(
                f"gamma must have one entry per neuron ({self.base.n}), got {len(self.gamma)}"
            )
        object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def dim(self) -> int:
        return 2 * self.base.n + 1


def wilson_params(n: int, P: float = 0.0, **overrides) -> ModelParams:
    """Classical network with the Wilson constants (lam=1, J=0 defaults)."""
    values = dict(WILSON_VALUES)
    values.update(overrides)
    return ModelParams(n=n, P=P, **values)


def wilson_memristive_params(
    n: int,
    P: float = 0.0,
    alpha: float = 0.9,
    k: float = 1.0,
    beta: float = 1.0,
    b: float = 2.0,
    gamma: float | tuple[float, ...] = 0.1,
    **overrides,
) -> MemristiveParams:
    """Memristive network on top of the Wilson constants."""
    if np.isscalar(gamma):
        gamma = (float(gamma),) * n
    return MemristiveParams(
        base=wilson_params(n, P, **overrides),
        alpha=alpha,
        k=k,
        beta=beta,
        gamma=tuple(gamma),
        b=b,
    )


@dataclass
class NetworkState:
    """One time slice of the network: potentials V, recovery currents R,
    and the memductance rho for the memristive model."""

    V: np.ndarray
    R: np.ndarray
    rho: Optional[float] = None

    def __post_init__(self):
        self.V = np.asarray(self.V, dtype=float)
        self.R = np.asarray(self.R, dtype=float)
        if self.V.ndim != 1 or self.R.ndim != 1 or self.V.size != self.R.size:
            raise ValueError("V and R must be 1-d arrays of equal length")

    @property
    def n(self) -> int:
        return self.V.size

    def to_vector(self) -> np.ndarray:
        if self.rho is None:
            return np.concatenate([self.V, self.R])
        return np.concatenate([self.V, self.R, [float(self.rho)]])

    @classmethod
    def from_vector(cls, vec: np.ndarray, n: int) -> "NetworkState":
        vec = np.asarray(vec, dtype=float)
        if vec.size == 2 * n:
            return cls(V=vec[:n].copy(), R=vec[n:].copy())
        if vec.size == 2 * n + 1:
            return cls(V=vec[:n].copy(), R=vec[n : 2 * n].copy(), rho=float(vec[2 * n]))
        raise ValueError(f"state vector of length {vec.size} does not match n={n}")


@dataclass
class TrajectoryMeta:
    model: str  # "classical" | "memristive" | "generic"
    params: object
    integrator: str
    dt: float
    record_stride: int = 1
    extra: dict = field(default_factory=dict)


@dataclass
class Trajectory:
    """Uniformly recorded time series in the flat state layout."""

    times: np.ndarray
    states: np.ndarray  # shape (len(times), dim)
    meta: TrajectoryMeta

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim != 2 or self.states.shape[0] != self.times.size:
            raise ValueError("states must be (len(times), dim)")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")
        n = getattr(self.meta.params, "n", None)
        if n is not None and self.states.shape[1] not in (2 * n, 2 * n + 1):
            raise ValueError(
                f"state dimension {self.states.shape[1]} inconsistent with n={n}"
            )

    @property
    def n(self) -> int:
        return getattr(self.meta.params, "n", self.states.shape[1] // 2)

    @property
    def has_rho(self) -> bool:
        return self.states.shape[1] == 2 * self.n + 1

    @property
    def V(self) -> np.ndarray:
        return self.states[:, : self.n]

    @property
    def R(self) -> np.ndarray:
        return self.states[:, self.n : 2 * self.n]

    @property
    def rho(self) -> Optional[np.ndarray]:
        return self.states[:, 2 * self.n] if self.has_rho else None

    def state_at(self, i: int) -> NetworkState:
        return NetworkState.from_vector(self.states[i], self.n)


def m_inf(s, p: ModelParams):
    """Quadratic sodium conductance a0 + a1 s + a2 s^2."""
    s = np.asarray(s, dtype=float)
    out = p.a0 + s * (p.a1 + p.a2 * s)
    return out if out.ndim else float(out)


def r_inf(s, p: ModelParams):
    """Sigmoidal potassium rest current, strictly inside (0, H) for finite s.

    Uses the overflow-safe form exp(-|x|)/(1+exp(-|x|)).
    """
    s = np.asarray(s, dtype=float)
    x = p.lam * (s - p.E_K)
    e = np.exp(-np.abs(x))
    out = p.H * np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return out if out.ndim else float(out)


def psi(s, beta: float):
    """Memristor window s (1 - beta s); capped at 1/(4 beta) at s = 1/(2 beta)."""
    if not beta > 0:
        raise DomainError(f"window coefficient beta must be > 0, got {beta}")
    s = np.asarray(s, dtype=float)
    out = s * (1.0 - beta * s)
    return out if out.ndim else float(out)


def _params_arrays(p: ModelParams | MemristiveParams):
    if isinstance(p, MemristiveParams):
        base = p.base
        pmem = np.array([p.k, p.beta, p.b], dtype=float)
        gam = np.asarray(p.gamma, dtype=float)
        mem = True
    else:
        base = p
        pmem = np.zeros(3)
        gam = np.zeros(0)
        mem = False
    pbase = np.array(
        [base.a0, base.a1, base.a2, base.g_K, base.E_Na, base.E_K,
         base.H, base.lam, base.tau_K, base.J, base.P],
        dtype=float,
    )
    return base.n, pbase, mem, pmem, gam


def _eval_rhs(state, p, mem: bool):
    if isinstance(state, NetworkState):
        y = state.to_vector()
        wrap = True
    else:
        y = np.asarray(state, dtype=float)
        wrap = False
    n, pbase, is_mem, pmem, gam = _params_arrays(p)
    if is_mem != mem:
        raise TypeError(
            "parameter type does not match the right-hand side "
            "(use hhw_rhs with ModelParams, memristive_rhs with MemristiveParams)"
        )
    expected = 2 * n + (1 if mem else 0)
    if y.size != expected:
        kind = "memristive (rho present)" if mem else "classical (no rho)"
        raise ValueError(
            f"{kind} state must have length {expected} for n={n}, got {y.size}"
        )
    out = np.empty_like(y)
    rhs_core(y, out, n, pbase, mem, pmem, gam)
    if wrap:
        return NetworkState.from_vector(out, n)
    return out


def hhw_rhs(state, p: ModelParams):
    """Vector field of the classical network on the flat (V, R) layout.

    Accepts a flat vector or a NetworkState and returns the derivative in
    the same form.  Pure; safe for concurrent callers.
    """
    return _eval_rhs(state, p, mem=False)


def memristive_rhs(state, p: MemristiveParams):
    """Vector field of the memristive network on the flat (V, R, rho) layout.

    Identical to the classical field plus k psi(rho) V_i on dV and the
    memductance equation; the Caputo order alpha applies in the integrator.
    """
    return _eval_rhs(state, p, mem=True)
