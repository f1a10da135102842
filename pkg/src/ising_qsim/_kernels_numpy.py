"""Pure-numpy gate application kernel (fallback backend).

Index convention: basis index bit k encodes qubit k, bit value 0 is the
ground state |−⟩.  Gate targets are given in ket order, i.e. targets[0]
is the most significant bit of the gate's local basis index.
"""

import numpy as np

BACKEND = "numpy"


def apply_gate(amps, num_qubits, matrix, targets):
    """Return matrix applied on the target qubits, identity elsewhere.

    ``amps`` is a complex128 vector of length 2**num_qubits; a new array
    is returned and the input is left untouched.
    """
    k = len(targets)
    axes = [num_qubits - 1 - t for t in targets]
    psi = amps.reshape((2,) * num_qubits)
    psi = np.moveaxis(psi, axes, range(k))
    moved_shape = psi.shape
    psi = psi.reshape(1 << k, -1)
    out = matrix @ psi
    out = out.reshape(moved_shape)
    out = np.moveaxis(out, range(k), axes)
    return np.ascontiguousarray(out).reshape(-1)
