"""Tour of the five ways to load a classical vector into a statevector.

Run with: python3 demos/encodings_tour.py
"""

import numpy as np

from qdiff.encode import (
    encode_amplitude,
    encode_angle,
    encode_basis,
    encode_dense_angle,
    encode_phase,
)


def show(label, psi):
    amps = np.round(psi.amps, 6)
    print(f"{label:<28s} n={psi.n_qubits}  {amps}")


def main():
    print("=== basis encoding: bits become a computational basis state ===")
    show("basis [1,0,1]", encode_basis([1, 0, 1]))

    print("\n=== amplitude encoding: the vector IS the state (normalized) ===")
    show("amplitude [3,4]", encode_amplitude([3.0, 4.0], 1))
    show("amplitude [3,4] scaled x10", encode_amplitude([30.0, 40.0], 1))
    show("amplitude [1,2,0,2]", encode_amplitude([1.0, 2.0, 0.0, 2.0], 2))

    print("\n=== angle encoding: one RY(x) per qubit, product state ===")
    show("angle [pi/2]", encode_angle([np.pi / 2]))
    show("angle [pi/2, pi/2]", encode_angle([np.pi / 2, np.pi / 2]))
    show("angle [0, pi]", encode_angle([0.0, np.pi]))

    print("\n=== phase encoding: uniform magnitudes, data in the phases ===")
    show("phase [pi/2]", encode_phase([np.pi / 2]))
    psi = encode_phase([0.3, -1.2])
    show("phase [0.3, -1.2]", psi)
    print(f"  all magnitudes equal: {np.allclose(np.abs(psi.amps), 0.5)}")

    print("\n=== dense angle: two numbers per qubit (polar + phase) ===")
    show("dense [pi/4, pi/2]", encode_dense_angle([np.pi / 4, np.pi / 2]))
    show("dense [pi/3, 0, pi/5, 1]", encode_dense_angle([np.pi / 3, 0, np.pi / 5, 1.0]))

    print("\n=== every encoder emits a unit-norm state ===")
    rng = np.random.default_rng(0)
    for trial in range(5):
        x = rng.standard_normal(8)
        norm = np.linalg.norm(encode_amplitude(x, 3).amps)
        print(f"  trial {trial}: amplitude norm = {norm:.15f}")


if __name__ == "__main__":
    main()
