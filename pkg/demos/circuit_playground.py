"""Poke at the trainable circuit: the two-qubit interaction block, the full
brick-layer ansatz, and how much each one entangles and explores state space.
"""

import numpy as np

from qdiff.bench import (
    entangling_capability,
    expressibility,
    haar_fidelities,
    meyer_wallach,
    sample_fidelities,
)
from qdiff.circuit import (
    ParamCircuit,
    build_ansatz,
    circuit_unitary,
    dump_circuit,
    run_circuit,
    ry,
    rz,
    vw_block,
)
from qdiff.qcore import basis_state, expm_hermitian

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


def main():
    print("=== the 3-CNOT block reproduces exp(-i(a XX + b YY + c ZZ)) ===")
    block = ParamCircuit(2, tuple(vw_block(0, 1, (0, 1, 2))), 3)
    rng = np.random.default_rng(42)
    worst = 1.0
    for _ in range(10):
        a, b, c = rng.uniform(-np.pi, np.pi, 3)
        u = circuit_unitary(block, [a, b, c])
        h = a * np.kron(X, X) + b * np.kron(Y, Y) + c * np.kron(Z, Z)
        fid = abs(np.trace(u.conj().T @ expm_hermitian(h, -1.0))) / 4
        worst = min(worst, fid)
    print(f"worst overlap across 10 random triples: {worst:.15f}")

    print("\n=== one ansatz layer on 4 qubits ===")
    ansatz = build_ansatz(4, 1)
    print(dump_circuit(ansatz))
    print(f"parameters: {ansatz.n_params}")

    print("\n=== entanglement from |0000> at random parameters ===")
    for trial in range(3):
        params = rng.uniform(-np.pi, np.pi, ansatz.n_params)
        psi = run_circuit(ansatz, basis_state(4), params)
        print(f"  trial {trial}: Meyer-Wallach Q = {meyer_wallach(psi):.4f}")

    print("\n=== rotation-only circuits never entangle ===")
    gates = []
    for q in range(4):
        gates += [ry(q, ref=2 * q), rz(q, ref=2 * q + 1)]
    rotations = ParamCircuit(4, tuple(gates), 8)
    q_rot = entangling_capability(rotations, basis_state(4), 200, seed=0)
    q_ans = entangling_capability(ansatz, basis_state(4), 200, seed=0)
    print(f"Qbar rotations-only: {q_rot:.2e}")
    print(f"Qbar 1-layer ansatz: {q_ans:.4f}")

    print("\n=== expressibility: KL divergence from the Haar fidelity law ===")
    print("(lower is better; an idle circuit is maximally peaked)")
    psi0 = basis_state(4)
    for label, circ in (("idle", ParamCircuit(4, (), 0)),
                        ("1 layer", build_ansatz(4, 1)),
                        ("3 layers", build_ansatz(4, 3))):
        fids = sample_fidelities(circ, psi0, 1500, seed=1)
        print(f"  {label:<9s} E = {expressibility(fids, 16):8.4f}")
    e_haar = expressibility(haar_fidelities(16, 1500, seed=2), 16)
    print(f"  {'haar':<9s} E = {e_haar:8.4f}  (sampling-noise floor)")


if __name__ == "__main__":
    main()
