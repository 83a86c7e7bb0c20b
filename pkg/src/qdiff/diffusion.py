"""Classical Gaussian diffusion and its quantum depolarizing counterpart.

The classical side keeps the usual beta/alpha/alpha-bar bookkeeping with the
closed-form forward sample; the quantum side replaces Gaussian noising with
per-step depolarizing channels, whose t-fold composition also has a closed
form, and a unitary reverse step scored by infidelity against a target state.
Timesteps are 1-based: t runs over 1..T.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .circuit import ParamCircuit, circuit_unitary, effective_angles, unitary_with_angles
from .measure import _shift_plan
from .qcore import DensityMatrix, StateVector, state_fidelity


@dataclass(frozen=True)
class NoiseSchedule:
    """Variance schedule beta_t with derived alpha_t and alpha_bar_t."""

    betas: np.ndarray
    alphas: np.ndarray = None
    alpha_bars: np.ndarray = None

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=float)
        if betas.ndim != 1 or len(betas) < 1:
            raise ValueError("betas must be a non-empty 1-d vector")
        if np.any(betas <= 0) or np.any(betas >= 1):
            raise ValueError("every beta_t must lie in (0, 1)")
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "alphas", 1.0 - betas)
        object.__setattr__(self, "alpha_bars", np.cumprod(1.0 - betas))

    @property
    def t_max(self) -> int:
        return len(self.betas)

    def beta(self, t: int) -> float:
        self._check_t(t)
        return float(self.betas[t - 1])

    def alpha_bar(self, t: int) -> float:
        self._check_t(t)
        return float(self.alpha_bars[t - 1])

    def _check_t(self, t: int) -> None:
        if not 1 <= t <= self.t_max:
            raise ValueError(f"timestep {t} outside 1..{self.t_max}")


@dataclass(frozen=True)
class DepolSchedule:
    """Per-step depolarizing probabilities p_t with alpha_t = prod(1 - p_s)."""

    probs: np.ndarray
    alpha_prods: np.ndarray = None

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or len(probs) < 1:
            raise ValueError("probs must be a non-empty 1-d vector")
        if np.any(probs < 0) or np.any(probs > 1):
            raise ValueError("every p_t must lie in [0, 1]")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "alpha_prods", np.cumprod(1.0 - probs))

    @property
    def t_max(self) -> int:
        return len(self.probs)

    def alpha(self, t: int) -> float:
        if not 1 <= t <= self.t_max:
            raise ValueError(f"timestep {t} outside 1..{self.t_max}")
        return float(self.alpha_prods[t - 1])


@dataclass(frozen=True)
class DiffusionSample:
    x_t: np.ndarray
    t: int
    eps: np.ndarray


def linear_schedule(t_steps: int, beta_start: float, beta_end: float) -> NoiseSchedule:
    """Linearly spaced betas, endpoints inclusive (the standard default)."""
    if t_steps < 1:
        raise ValueError("need at least one timestep")
    if not 0 < beta_start <= beta_end < 1:
        raise ValueError("need 0 < beta_start <= beta_end < 1")
    return NoiseSchedule(np.linspace(beta_start, beta_end, t_steps))


def depol_from_noise(sched: NoiseSchedule) -> DepolSchedule:
    """Depolarizing schedule whose alpha_t matches the classical alpha_bar_t.

    Both are running products of (1 - rate), so p_t = beta_t does it.
    """
    return DepolSchedule(sched.betas.copy())


def schedule_to_json(sched) -> str:
    if isinstance(sched, NoiseSchedule):
        return json.dumps({"kind": "noise", "betas": sched.betas.tolist()})
    if isinstance(sched, DepolSchedule):
        return json.dumps({"kind": "depol", "probs": sched.probs.tolist()})
    raise TypeError(f"not a schedule: {type(sched).__name__}")


def schedule_from_json(text: str):
    doc = json.loads(text)
    kind = doc.get("kind")
    if kind == "noise":
        return NoiseSchedule(np.array(doc["betas"], dtype=float))
    if kind == "depol":
        return DepolSchedule(np.array(doc["probs"], dtype=float))
    raise ValueError(f"unknown schedule kind {kind!r}")


def forward_sample(x0, t: int, sched: NoiseSchedule, eps) -> DiffusionSample:
    """Closed-form forward jump: x_t = sqrt(ab_t) x0 + sqrt(1 - ab_t) eps."""
    x0 = np.asarray(x0, dtype=float)
    eps = np.asarray(eps, dtype=float)
    if eps.shape != x0.shape:
        raise ValueError(f"eps shape {eps.shape} != x0 shape {x0.shape}")
    ab = sched.alpha_bar(t)
    x_t = np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps
    return DiffusionSample(x_t=x_t, t=t, eps=eps)


def simple_loss(eps_true, eps_pred) -> float:
    eps_true = np.asarray(eps_true, dtype=float)
    eps_pred = np.asarray(eps_pred, dtype=float)
    if eps_true.shape != eps_pred.shape:
        raise ValueError(f"shape mismatch {eps_true.shape} vs {eps_pred.shape}")
    diff = eps_true - eps_pred
    return float(np.mean(diff * diff))


def depolarize_step(rho: DensityMatrix, p: float) -> DensityMatrix:
    """One application of the depolarizing channel: (1-p) rho + p I/d."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing probability {p} outside [0, 1]")
    d = rho.dim
    return DensityMatrix((1.0 - p) * rho.mat + p * np.eye(d) / d)


def depolarize_closed(rho0: DensityMatrix, t: int, sched: DepolSchedule) -> DensityMatrix:
    """t-fold depolarizing in closed form: alpha_t rho0 + (1 - alpha_t) I/d."""
    a = sched.alpha(t)
    d = rho0.dim
    return DensityMatrix(a * rho0.mat + (1.0 - a) * np.eye(d) / d)


def reverse_step(rho: DensityMatrix, c: ParamCircuit, params) -> DensityMatrix:
    """Unitary reverse move: U(theta) rho U(theta)^dag."""
    if rho.dim != 2**c.n_qubits:
        raise ValueError(f"density dim {rho.dim} != circuit dim {2**c.n_qubits}")
    u = circuit_unitary(c, params)
    return DensityMatrix(u @ rho.mat @ u.conj().T)


def infidelity_loss(rho: DensityMatrix, target: StateVector) -> float:
    """1 - <target|rho|target>."""
    return 1.0 - state_fidelity(rho, target)


def infidelity_grad_wrt_circuit(
    rho: DensityMatrix, c: ParamCircuit, params, target: StateVector
) -> np.ndarray:
    """d infidelity_loss(reverse_step(rho, c, theta), target) / d theta.

    The fidelity is a two-sided expectation of |target><target| under
    U(theta), so the standard +-pi/2 shift on gate angles applies.
    """
    if rho.dim != 2**c.n_qubits or target.dim != rho.dim:
        raise ValueError("dimension mismatch between rho, circuit and target")
    base = effective_angles(c, params)
    tvec = target.amps
    grad = np.zeros(c.n_params)
    for i, ref, scale, shift, coeff in _shift_plan(c):
        vals = []
        for sgn in (+1.0, -1.0):
            angles = base.copy()
            angles[i] += sgn * shift
            u = unitary_with_angles(c, angles)
            w = u.conj().T @ tvec
            vals.append(float((w.conj() @ (rho.mat @ w)).real))
        grad[ref] += scale * coeff * (vals[0] - vals[1])
    return -grad
