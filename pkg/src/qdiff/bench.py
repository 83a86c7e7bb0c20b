"""Circuit-quality descriptors and a pixel-space generation metric.

Expressibility compares the sampled state-overlap distribution of a circuit
against the Haar fidelity law P(F) = (N-1)(1-F)^(N-2) through a binned KL
divergence. Entangling capability averages the Meyer-Wallach measure over
uniformly drawn parameters. The Frechet distance between Gaussian fits of
two sample sets stands in for feature-space FID at desk scale.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .circuit import ParamCircuit, effective_angles, run_with_angles
from .qcore import DensityMatrix, PAULI_X, PAULI_Y, PAULI_Z, StateVector, partial_trace, purity, sqrtm_psd

N_BINS = 75
FRECHET_EPS = 1e-6


@dataclass(frozen=True)
class FidelityHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    n_samples: int

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        counts = np.asarray(self.counts, dtype=int)
        if len(edges) != len(counts) + 1:
            raise ValueError("need one more edge than bins")
        if edges[0] != 0.0 or edges[-1] != 1.0 or np.any(np.diff(edges) <= 0):
            raise ValueError("edges must increase strictly from 0 to 1")
        if np.any(counts < 0) or int(counts.sum()) != self.n_samples:
            raise ValueError("counts must be non-negative and sum to n_samples")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_samples(cls, fids) -> "FidelityHistogram":
        fids = np.asarray(fids, dtype=float)
        counts, edges = np.histogram(fids, bins=N_BINS, range=(0.0, 1.0))
        return cls(edges, counts, len(fids))


@dataclass(frozen=True)
class BenchReport:
    expressibility: float
    entangling_capability: float
    n_samples: int
    seed: int

    def __post_init__(self):
        if not (np.isfinite(self.expressibility) and np.isfinite(self.entangling_capability)):
            raise ValueError("report fields must be finite")
        if not 0.0 <= self.entangling_capability <= 1.0:
            raise ValueError("entangling capability must lie in [0, 1]")

    def to_json(self) -> str:
        return json.dumps(
            {
                "expressibility": self.expressibility,
                "entangling_capability": self.entangling_capability,
                "n_samples": self.n_samples,
                "seed": self.seed,
            },
            indent=2,
        )


def haar_pdf(f: float, n_dim: int) -> float:
    """Haar fidelity density (N-1)(1-F)^(N-2) on [0, 1]."""
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"fidelity {f} outside [0, 1]")
    if n_dim < 2:
        raise ValueError("need Hilbert dimension >= 2")
    return float((n_dim - 1) * (1.0 - f) ** (n_dim - 2))


def haar_bin_masses(n_dim: int, n_bins: int = N_BINS) -> np.ndarray:
    """Exact Haar probability mass per uniform bin on [0, 1].

    The integral of the density over [lo, hi] is (1-lo)^(N-1) - (1-hi)^(N-1);
    integrating beats evaluating the pdf at bin centers, which is biased
    where the density decays fast.
    """
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    upper = (1.0 - edges) ** (n_dim - 1)
    return upper[:-1] - upper[1:]


def haar_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Exact Haar-random pure state: normalized complex Gaussian vector."""
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def haar_fidelities(dim: int, n_pairs: int, seed: int) -> np.ndarray:
    """Calibration samples |<a|b>|^2 for exact-Haar pairs."""
    rng = np.random.default_rng(seed)
    out = np.empty(n_pairs)
    for i in range(n_pairs):
        a = haar_state(dim, rng)
        b = haar_state(dim, rng)
        out[i] = min(abs(np.vdot(a, b)) ** 2, 1.0)
    return out


def _thread_map(fn, n_tasks: int, threads: int):
    if threads <= 1:
        return [fn(i) for i in range(n_tasks)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n_tasks)))


def sample_fidelities(
    c: ParamCircuit, psi0: StateVector, n_pairs: int, seed: int, threads: int = 1
) -> np.ndarray:
    """|<psi_theta|psi_phi>|^2 for i.i.d. uniform parameter pairs in [0, 2pi).

    All random draws happen up front in one stream, so the result is bitwise
    identical for any thread count.
    """
    if n_pairs < 1:
        raise ValueError("need at least one pair")
    rng = np.random.default_rng(seed)
    params = rng.uniform(0.0, 2.0 * np.pi, size=(n_pairs, 2, c.n_params))

    def one(i: int) -> float:
        a = run_with_angles(c, psi0.amps.copy(), effective_angles(c, params[i, 0]))
        b = run_with_angles(c, psi0.amps.copy(), effective_angles(c, params[i, 1]))
        return min(abs(np.vdot(a, b)) ** 2, 1.0)

    return np.array(_thread_map(one, n_pairs, threads))


def expressibility(fids, n_dim: int) -> float:
    """KL divergence of the binned fidelity sample against the Haar masses."""
    fids = np.asarray(fids, dtype=float)
    if len(fids) == 0:
        raise ValueError("expressibility needs at least one fidelity sample")
    hist = FidelityHistogram.from_samples(fids)
    p = hist.counts / hist.n_samples
    q = haar_bin_masses(n_dim)
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def meyer_wallach(psi: StateVector) -> float:
    """Q = (4/n) sum_k (1 - Tr rho_k^2)/2 over single-qubit reductions."""
    n = psi.n_qubits
    if n < 2:
        raise ValueError("entanglement measure needs at least 2 qubits")
    rho = DensityMatrix(np.outer(psi.amps, psi.amps.conj()))
    total = sum(1.0 - purity(partial_trace(rho, k)) for k in range(n))
    return float(min(max(2.0 * total / n, 0.0), 1.0))


def entangling_capability(
    c: ParamCircuit, psi0: StateVector, n_samples: int, seed: int, threads: int = 1
) -> float:
    """Mean Meyer-Wallach Q over uniform [0, 2pi) parameter draws."""
    if n_samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    params = rng.uniform(0.0, 2.0 * np.pi, size=(n_samples, c.n_params))

    def one(i: int) -> float:
        amps = run_with_angles(c, psi0.amps.copy(), effective_angles(c, params[i]))
        return meyer_wallach(StateVector(amps))

    vals = _thread_map(one, n_samples, threads)
    return float(np.mean(vals))


def bloch_points_of_state(amps, qubit: int) -> list:
    """(x, y, z) Bloch coordinates of one qubit's reduced state."""
    amps = np.asarray(amps, dtype=complex)
    rho = partial_trace(DensityMatrix(np.outer(amps, amps.conj())), qubit)
    return [
        float(np.trace(rho.mat @ PAULI_X).real),
        float(np.trace(rho.mat @ PAULI_Y).real),
        float(np.trace(rho.mat @ PAULI_Z).real),
    ]


def bloch_points(
    c: ParamCircuit, psi0: StateVector, qubit: int, n_samples: int, seed: int, threads: int = 1
) -> np.ndarray:
    """Bloch coordinates of one qubit, one row per parameter draw."""
    if not 0 <= qubit < c.n_qubits:
        raise ValueError(f"qubit {qubit} out of range")
    if n_samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    params = rng.uniform(0.0, 2.0 * np.pi, size=(n_samples, c.n_params))

    def one(i: int):
        amps = run_with_angles(c, psi0.amps.copy(), effective_angles(c, params[i]))
        return bloch_points_of_state(amps, qubit)

    return np.array(_thread_map(one, n_samples, threads))


def frechet_gaussian(set_a, set_b) -> float:
    """Frechet distance between Gaussian fits of two sample sets.

    ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2), with
    a small diagonal ridge on both covariances so degenerate sample sets
    stay well-posed.
    """
    a = np.asarray(set_a, dtype=float)
    b = np.asarray(set_b, dtype=float)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError("need two 2-d sample sets with equal feature dims")
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise ValueError("need at least two samples per set")
    mu_a, mu_b = a.mean(axis=0), b.mean(axis=0)
    dim = a.shape[1]
    ridge = FRECHET_EPS * np.eye(dim)
    cov_a = np.atleast_2d(np.cov(a, rowvar=False)) + ridge
    cov_b = np.atleast_2d(np.cov(b, rowvar=False)) + ridge
    root_a = sqrtm_psd(cov_a)
    cross = sqrtm_psd(root_a @ cov_b @ root_a)
    diff = mu_a - mu_b
    val = float(diff @ diff + np.trace(cov_a + cov_b - 2.0 * cross).real)
    return max(val, 0.0)


def fidelities_csv(fids) -> str:
    lines = ["fidelity"] + [repr(float(f)) for f in np.asarray(fids, dtype=float)]
    return "\n".join(lines) + "\n"


def bloch_csv(points) -> str:
    lines = ["x,y,z"]
    for x, y, z in np.asarray(points, dtype=float):
        lines.append(f"{float(x)!r},{float(y)!r},{float(z)!r}")
    return "\n".join(lines) + "\n"
