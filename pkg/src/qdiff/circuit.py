"""Parameterized quantum circuits and their statevector simulation.

Gate angles may be bound to a trainable parameter through an affine map
angle = offset + scale * params[param_ref], which lets structural blocks bake
fixed angle offsets into the gate while keeping the underlying parameter
trainable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .qcore import StateVector

ROTATION_KINDS = ("RX", "RY", "RZ", "PHASE")
FIXED_KINDS = ("H", "X", "CNOT", "CZ", "CU")

_H_MAT = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_X_MAT = np.array([[0, 1], [1, 0]], dtype=complex)
_CNOT_MAT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
_CZ_MAT = np.diag([1, 1, 1, -1]).astype(complex)


@dataclass(frozen=True)
class Gate:
    """One circuit operation.

    Rotation/phase kinds carry exactly one of (param_ref, fixed_angle); the
    remaining kinds carry neither. `CU` is a controlled unitary: targets[0]
    is the control and `matrix` acts on the remaining targets.
    """

    kind: str
    targets: tuple
    param_ref: int | None = None
    fixed_angle: float | None = None
    scale: float = 1.0
    offset: float = 0.0
    matrix: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ROTATION_KINDS + FIXED_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"duplicate target in {self.targets}")
        if self.kind in ROTATION_KINDS:
            if (self.param_ref is None) == (self.fixed_angle is None):
                raise ValueError(f"{self.kind} needs exactly one of param_ref/fixed_angle")
        elif self.param_ref is not None or self.fixed_angle is not None:
            raise ValueError(f"{self.kind} takes no angle")
        if self.kind == "CU":
            if self.matrix is None:
                raise ValueError("CU needs a unitary payload")
            k = len(self.targets) - 1
            if k < 1 or self.matrix.shape != (2**k, 2**k):
                raise ValueError("CU payload shape does not match its targets")

    def angle(self, params: np.ndarray) -> float:
        if self.param_ref is None:
            return float(self.fixed_angle)
        if not 0 <= self.param_ref < len(params):
            raise IndexError(f"parameter index {self.param_ref} out of range")
        return self.offset + self.scale * float(params[self.param_ref])


def h(q: int) -> Gate:
    return Gate("H", (q,))


def x(q: int) -> Gate:
    return Gate("X", (q,))


def cnot(control: int, target: int) -> Gate:
    return Gate("CNOT", (control, target))


def cz(a: int, b: int) -> Gate:
    return Gate("CZ", (a, b))


def rx(q, ref=None, angle=None, scale=1.0, offset=0.0) -> Gate:
    return Gate("RX", (q,), param_ref=ref, fixed_angle=angle, scale=scale, offset=offset)


def ry(q, ref=None, angle=None, scale=1.0, offset=0.0) -> Gate:
    return Gate("RY", (q,), param_ref=ref, fixed_angle=angle, scale=scale, offset=offset)


def rz(q, ref=None, angle=None, scale=1.0, offset=0.0) -> Gate:
    return Gate("RZ", (q,), param_ref=ref, fixed_angle=angle, scale=scale, offset=offset)


def phase(q, ref=None, angle=None, scale=1.0, offset=0.0) -> Gate:
    return Gate("PHASE", (q,), param_ref=ref, fixed_angle=angle, scale=scale, offset=offset)


def controlled(control: int, targets, matrix: np.ndarray) -> Gate:
    return Gate("CU", (control, *targets), matrix=np.asarray(matrix, dtype=complex))


@dataclass(frozen=True)
class ParamCircuit:
    """Ordered gate list over n_qubits with n_params trainable angles."""

    n_qubits: int
    gates: tuple
    n_params: int

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            for t in g.targets:
                if not 0 <= t < self.n_qubits:
                    raise ValueError(f"gate target {t} out of range for {self.n_qubits} qubits")
            if g.param_ref is not None and not 0 <= g.param_ref < self.n_params:
                raise ValueError(f"param_ref {g.param_ref} out of range for {self.n_params} params")


def rotation_matrix(kind: str, angle: float) -> np.ndarray:
    half = angle / 2.0
    c, s = math.cos(half), math.sin(half)
    if kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if kind == "RY":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "RZ":
        return np.array([[np.exp(-1j * half), 0], [0, np.exp(1j * half)]])
    if kind == "PHASE":
        return np.array([[1, 0], [0, np.exp(1j * angle)]])
    raise ValueError(f"{kind} is not a rotation kind")


def gate_matrix(g: Gate, angle: float | None = None) -> np.ndarray:
    """Dense matrix of the gate on its own targets (controls excluded for CU)."""
    if g.kind in ROTATION_KINDS:
        return rotation_matrix(g.kind, angle)
    if g.kind == "H":
        return _H_MAT
    if g.kind == "X":
        return _X_MAT
    if g.kind == "CNOT":
        return _CNOT_MAT
    if g.kind == "CZ":
        return _CZ_MAT
    return g.matrix


def _apply_1q(amps: np.ndarray, mat: np.ndarray, q: int, n: int) -> np.ndarray:
    t = np.moveaxis(amps.reshape([2] * n), q, 0).reshape(2, -1)
    t = mat @ t
    return np.moveaxis(t.reshape([2] * n), 0, q).reshape(-1)


def _apply_cnot(amps: np.ndarray, control: int, target: int, n: int) -> np.ndarray:
    t = amps.reshape([2] * n).copy()
    sl = [slice(None)] * n
    sl[control] = 1
    sub = t[tuple(sl)]
    ax = target - 1 if target > control else target
    sub[...] = np.flip(sub, axis=ax)
    return t.reshape(-1)


def _apply_cz(amps: np.ndarray, a: int, b: int, n: int) -> np.ndarray:
    t = amps.reshape([2] * n).copy()
    sl = [slice(None)] * n
    sl[a] = 1
    sl[b] = 1
    t[tuple(sl)] *= -1
    return t.reshape(-1)


def _apply_kq(amps: np.ndarray, mat: np.ndarray, qubits, n: int) -> np.ndarray:
    k = len(qubits)
    t = np.moveaxis(amps.reshape([2] * n), qubits, range(k)).reshape(2**k, -1)
    t = mat @ t
    return np.moveaxis(t.reshape([2] * n), range(k), qubits).reshape(-1)


def _apply_cu(amps: np.ndarray, mat: np.ndarray, control: int, wires, n: int) -> np.ndarray:
    t = amps.reshape([2] * n).copy()
    sl = [slice(None)] * n
    sl[control] = 1
    sub = t[tuple(sl)]
    adj = [w - 1 if w > control else w for w in wires]
    k = len(adj)
    block = np.moveaxis(sub, adj, range(k)).reshape(2**k, -1)
    block = mat @ block
    sub[...] = np.moveaxis(block.reshape([2] * (n - 1)), range(k), adj)
    return t.reshape(-1)


def _apply_gate_raw(amps: np.ndarray, g: Gate, angle: float | None, n: int) -> np.ndarray:
    if g.kind in ROTATION_KINDS:
        return _apply_1q(amps, rotation_matrix(g.kind, angle), g.targets[0], n)
    if g.kind == "H":
        return _apply_1q(amps, _H_MAT, g.targets[0], n)
    if g.kind == "X":
        return _apply_1q(amps, _X_MAT, g.targets[0], n)
    if g.kind == "CNOT":
        return _apply_cnot(amps, g.targets[0], g.targets[1], n)
    if g.kind == "CZ":
        return _apply_cz(amps, g.targets[0], g.targets[1], n)
    return _apply_cu(amps, g.matrix, g.targets[0], g.targets[1:], n)


def apply_gate(psi: StateVector, g: Gate, params=()) -> StateVector:
    """Apply one gate to a state; norm is preserved by unitarity."""
    angle = g.angle(np.asarray(params, dtype=float)) if g.kind in ROTATION_KINDS else None
    return StateVector(_apply_gate_raw(psi.amps.copy(), g, angle, psi.n_qubits))


def effective_angles(c: ParamCircuit, params) -> np.ndarray:
    """Per-gate resolved angles (nan for gates without one)."""
    params = np.asarray(params, dtype=float)
    if params.shape != (c.n_params,):
        raise ValueError(f"expected {c.n_params} parameters, got {params.shape}")
    out = np.full(len(c.gates), np.nan)
    for i, g in enumerate(c.gates):
        if g.kind in ROTATION_KINDS:
            out[i] = g.angle(params)
    return out


def run_with_angles(c: ParamCircuit, amps: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Simulation kernel on a raw amplitude array with pre-resolved angles."""
    n = c.n_qubits
    for i, g in enumerate(c.gates):
        amps = _apply_gate_raw(amps, g, angles[i], n)
    return amps


def run_circuit(c: ParamCircuit, psi0: StateVector, params=()) -> StateVector:
    """Apply the circuit's gates in order to psi0."""
    if psi0.n_qubits != c.n_qubits:
        raise ValueError(f"state has {psi0.n_qubits} qubits, circuit {c.n_qubits}")
    angles = effective_angles(c, params)
    return StateVector(run_with_angles(c, psi0.amps.copy(), angles))


def unitary_with_angles(c: ParamCircuit, angles: np.ndarray) -> np.ndarray:
    """Dense unitary built column by column from pre-resolved angles."""
    if c.n_qubits > 10:
        raise ValueError("circuit_unitary limited to 10 qubits")
    dim = 2**c.n_qubits
    u = np.zeros((dim, dim), dtype=complex)
    for j in range(dim):
        col = np.zeros(dim, dtype=complex)
        col[j] = 1.0
        u[:, j] = run_with_angles(c, col, angles)
    return u


def circuit_unitary(c: ParamCircuit, params=()) -> np.ndarray:
    """Dense 2^n x 2^n unitary of the circuit (n_qubits <= 10)."""
    return unitary_with_angles(c, effective_angles(c, params))


def vw_block(q0: int, q1: int, param_refs) -> list:
    """Vatan-Williams two-qubit interaction block.

    Three CNOTs with alternating direction, interleaved with single-qubit
    rotations; with the referenced parameters (a, b, g) the block matches
    exp(-1j*(a XX + b YY + g ZZ)) up to a global phase. The canonical
    construction realizes the +i exponent, so the trainable terms enter the
    angle maps negated; the pi/2 offsets are compiled constants.
    """
    if q0 == q1:
        raise ValueError("vw_block needs two distinct qubits")
    a_ref, b_ref, g_ref = param_refs
    return [
        rz(q1, angle=-math.pi / 2),
        cnot(q1, q0),
        rz(q0, ref=g_ref, scale=2.0, offset=math.pi / 2),
        ry(q1, ref=a_ref, scale=-2.0, offset=-math.pi / 2),
        cnot(q0, q1),
        ry(q1, ref=b_ref, scale=2.0, offset=math.pi / 2),
        cnot(q1, q0),
        rz(q0, angle=math.pi / 2),
    ]


def mixing_layer(n_qubits: int, param_refs) -> list:
    """Cluster-state phase-mixing layer: H on all, CZ chain, per-qubit RX."""
    if n_qubits < 2:
        raise ValueError("mixing_layer needs at least 2 qubits")
    if len(param_refs) != n_qubits:
        raise ValueError("mixing_layer needs one parameter per qubit")
    gates = [h(q) for q in range(n_qubits)]
    gates += [cz(j, j + 1) for j in range(n_qubits - 1)]
    gates += [rx(q, ref=param_refs[q]) for q in range(n_qubits)]
    return gates


def brick_pairs(n_qubits: int) -> list:
    """Two-qubit pairs in brick order: even offset (0,1),(2,3),.. then odd."""
    pairs = [(q, q + 1) for q in range(0, n_qubits - 1, 2)]
    pairs += [(q, q + 1) for q in range(1, n_qubits - 1, 2)]
    return pairs


def build_ansatz(n_qubits: int, n_layers: int) -> ParamCircuit:
    """Layered ansatz: brick-tiled vw_blocks followed by a mixing layer.

    Parameter count is n_layers * (3 * n_pairs + n_qubits).
    """
    if n_qubits < 2 or n_layers < 1:
        raise ValueError("build_ansatz needs n_qubits >= 2 and n_layers >= 1")
    gates = []
    next_ref = 0
    for _ in range(n_layers):
        for q0, q1 in brick_pairs(n_qubits):
            gates += vw_block(q0, q1, (next_ref, next_ref + 1, next_ref + 2))
            next_ref += 3
        gates += mixing_layer(n_qubits, list(range(next_ref, next_ref + n_qubits)))
        next_ref += n_qubits
    return ParamCircuit(n_qubits, tuple(gates), next_ref)


def dump_circuit(c: ParamCircuit) -> str:
    """One gate per line: KIND targets... [pREF[*scale+offset] | angle]."""
    lines = []
    for g in c.gates:
        parts = [g.kind] + [str(t) for t in g.targets]
        if g.kind in ROTATION_KINDS:
            if g.param_ref is not None:
                spec = f"p{g.param_ref}"
                if g.scale != 1.0 or g.offset != 0.0:
                    spec += f"*{g.scale!r}+{g.offset!r}"
                parts.append(spec)
            else:
                parts.append(repr(float(g.fixed_angle)))
        lines.append(" ".join(parts))
    return "\n".join(lines) + ("\n" if lines else "")
