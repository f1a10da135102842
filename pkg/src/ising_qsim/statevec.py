"""Dense complex statevector engine.

Conventions, fixed across the package:

* Basis index bit k encodes qubit k (bit 0 is the least significant bit of
  the amplitude index).  Bit value 0 is the qubit ground state |−⟩ (spin −1),
  bit value 1 is |+⟩ (spin +1).
* Gate targets are listed in ket order: for a gate written on |a, b, c⟩,
  ``targets[0]`` is qubit a and corresponds to the most significant bit of
  the gate's local basis index.
* All randomness flows through an explicit ``numpy.random.Generator``.
  Seeding ``numpy.random.Generator(numpy.random.PCG64(seed))`` gives
  identical runs on every platform.

Returned states are immutable: their amplitude buffers are marked
read-only, so values can be shared freely between threads.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ResourceLimitError

DEFAULT_MAX_QUBITS = 24
NORM_TOL = 1e-10
FORCED_BRANCH_PROB = 1e-15
UNITARITY_TOL = 1e-12


def max_qubits() -> int:
    """Register cap; overridable through ISING_QSIM_MAX_QUBITS."""
    raw = os.environ.get("ISING_QSIM_MAX_QUBITS")
    if raw is None:
        return DEFAULT_MAX_QUBITS
    return int(raw)


@dataclass(frozen=True)
class GateMatrix:
    """Small unitary (arity 1, 2 or 3) with a human-readable label."""

    arity: int
    matrix: np.ndarray
    label: str

    def __post_init__(self):
        if self.arity not in (1, 2, 3):
            raise ValueError(f"gate arity must be 1, 2 or 3, got {self.arity}")
        dim = 1 << self.arity
        mat = np.asarray(self.matrix, dtype=np.complex128)
        if mat.shape != (dim, dim):
            raise ValueError(f"gate '{self.label}': expected {dim}x{dim} matrix")
        defect = np.abs(mat.conj().T @ mat - np.eye(dim)).max()
        if defect > UNITARITY_TOL:
            raise ValueError(f"gate '{self.label}' is not unitary (defect {defect:.3e})")
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return 1 << self.arity


@dataclass(frozen=True)
class StateVector:
    """Complex amplitudes over all basis states of a qubit register."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != (1 << self.num_qubits,):
            raise ValueError("amplitude length does not match qubit count")

    @property
    def dim(self) -> int:
        return 1 << self.num_qubits

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _freeze(amps: np.ndarray) -> np.ndarray:
    amps.flags.writeable = False
    return amps


def new_ground(num_qubits: int) -> StateVector:
    """All qubits in |−⟩: amplitude 1 on basis index 0."""
    cap = max_qubits()
    if num_qubits < 1:
        raise ValueError("need at least one qubit")
    if num_qubits > cap:
        raise ResourceLimitError(
            f"requested {num_qubits} qubits, cap is {cap} "
            "(set ISING_QSIM_MAX_QUBITS to raise it)"
        )
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(num_qubits, _freeze(amps))


def from_amplitudes(amps) -> StateVector:
    """Wrap an amplitude vector (copied, normalisation checked)."""
    amps = np.array(amps, dtype=np.complex128)
    n = int(amps.size).bit_length() - 1
    if 1 << n != amps.size:
        raise ValueError("amplitude length must be a power of two")
    if abs(np.linalg.norm(amps) - 1.0) > NORM_TOL:
        raise ValueError("amplitudes are not normalised")
    return StateVector(n, _freeze(amps))


def _check_targets(state: StateVector, targets, arity: int):
    if len(targets) != arity:
        raise ValueError(f"gate arity {arity} but {len(targets)} targets")
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate targets {tuple(targets)}")
    for t in targets:
        if not 0 <= t < state.num_qubits:
            raise ValueError(f"target {t} out of range for {state.num_qubits} qubits")


def apply_gate(state: StateVector, gate: GateMatrix, targets) -> StateVector:
    """Apply ``gate`` on ``targets`` (ket order), identity elsewhere."""
    targets = tuple(int(t) for t in targets)
    _check_targets(state, targets, gate.arity)
    out = kernels.apply_gate(state.amplitudes, state.num_qubits, gate.matrix, targets)
    return StateVector(state.num_qubits, _freeze(out))


def apply_matrix(state: StateVector, matrix: np.ndarray, targets) -> StateVector:
    """Apply an arbitrary-size unitary on ``targets`` (ket order).

    Used for subspace transformations larger than the 3-qubit gate cap;
    unitarity is the caller's responsibility.
    """
    targets = tuple(int(t) for t in targets)
    k = len(targets)
    if matrix.shape != (1 << k, 1 << k):
        raise ValueError("matrix size does not match target count")
    _check_targets(state, targets, k)
    mat = np.ascontiguousarray(matrix, dtype=np.complex128)
    out = kernels.apply_gate(state.amplitudes, state.num_qubits, mat, targets)
    return StateVector(state.num_qubits, _freeze(out))


def born_probabilities(state: StateVector) -> np.ndarray:
    return np.abs(state.amplitudes) ** 2


def probability_of(state: StateVector, basis_index: int) -> float:
    """|amplitude|² of a single basis state."""
    if not 0 <= basis_index < state.dim:
        raise ValueError(f"basis index {basis_index} out of range")
    return float(abs(state.amplitudes[basis_index]) ** 2)


def measure_qubit(state: StateVector, qubit: int, rng: np.random.Generator):
    """Projective measurement of one qubit.

    Returns ``(outcome, collapsed)`` with outcome ±1.  The outcome is +1
    when the uniform draw falls below the Born probability of |+⟩.  If one
    branch has probability below 1e-15 the other branch is forced (the
    draw is still consumed, keeping the stream aligned).
    """
    if not 0 <= qubit < state.num_qubits:
        raise ValueError(f"qubit {qubit} out of range")
    plus_mask = (np.arange(state.dim) >> qubit) & 1
    probs = born_probabilities(state)
    p_plus = float(probs[plus_mask == 1].sum())
    r = rng.random()
    if p_plus < FORCED_BRANCH_PROB:
        outcome = -1
    elif 1.0 - p_plus < FORCED_BRANCH_PROB:
        outcome = 1
    else:
        outcome = 1 if r < p_plus else -1
    return outcome, collapse_qubit(state, qubit, outcome)


def collapse_qubit(state: StateVector, qubit: int, outcome: int) -> StateVector:
    """Project a qubit onto ``outcome`` (±1) and renormalise."""
    if outcome not in (-1, 1):
        raise ValueError("outcome must be ±1")
    keep_bit = 1 if outcome == 1 else 0
    mask = ((np.arange(state.dim) >> qubit) & 1) == keep_bit
    amps = np.where(mask, state.amplitudes, 0.0)
    norm = np.linalg.norm(amps)
    if norm == 0.0:
        raise ValueError(f"collapse onto zero-probability branch (qubit {qubit})")
    return StateVector(state.num_qubits, _freeze(amps / norm))


def sample(state: StateVector, rng: np.random.Generator) -> int:
    """Draw one basis index from the Born distribution."""
    return int(sample_many(state, 1, rng)[0])


def sample_many(state: StateVector, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` i.i.d. basis indices (inverse-CDF on the Born weights)."""
    cdf = np.cumsum(born_probabilities(state))
    cdf[-1] = 1.0
    draws = rng.random(count)
    return np.searchsorted(cdf, draws, side="right").astype(np.int64)
