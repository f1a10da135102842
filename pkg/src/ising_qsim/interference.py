"""Subspace selection by generalized Euler-angle rotations.

After a loop is closed onto a workbit, the register holds both bond-sign
subspaces.  The transformation built here rotates the full state onto one
subspace, erasing the other.  It is constructed classically from the exact
isolated-plaquette state (which must be small enough to precompute) as a
product of plane rotations, then applied as an explicit matrix on the
(workbit, plaquette-spins) subspace.

Solve-basis convention: the state is read out as a real vector whose
coordinate m (0-based) is the amplitude of the register state given by the
reflected-code decode of m, with the workbit as the leading bit.  The first
half of the vector is then the workbit-down subspace.  Reference angle
tables for the 3- and 4-spin plaquettes additionally flip the sign of every
odd-parity coordinate; ``table_source_vector`` reproduces that convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gates, statevec
from .errors import CapabilityError, DegenerateSubspaceError

INTERFERENCE_SPIN_CAP = 6
DEGENERATE_NORM = 1e-12

# subspace labels: the sign of the realised closing bond (the loop the
# selection keeps is frustrated when this sign flips the loop's parity)
CLOSE_ANTIFERROMAGNETIC = -1
CLOSE_FERROMAGNETIC = +1


# ---------------------------------------------------------------------------
# reflected (Gray) code plumbing

def gray_encode_int(k: int) -> int:
    return k ^ (k >> 1)


def gray_decode_int(m: int) -> int:
    k = m
    shift = 1
    while (m >> shift) > 0:
        k ^= m >> shift
        shift += 1
    return k


def gray_transform(num_qubits: int):
    """Ordered XOR pair list converting code order to binary order.

    The register is written |q_0, q_1, ..., q_{num_qubits-1}⟩ with q_0 the
    constant leading workbit.  Each (a, b) entry sets s_b ← −s_a·s_b; the
    pairs are applied starting from the last qubit.  Running the same pairs
    in reversed order inverts the transformation.
    """
    if num_qubits < 2:
        raise ValueError("need at least two qubits")
    return [(i, i + 1) for i in range(num_qubits - 2, -1, -1)]


def apply_xor_pairs(spins, pairs):
    """Apply ``pairs`` to a ±1 spin tuple, in order."""
    out = list(spins)
    for a, b in pairs:
        out[b] = -out[a] * out[b]
    return tuple(out)


def solve_order(num_spins: int) -> np.ndarray:
    """Map solve coordinate m → local register index.

    Local register: spin ℓ of the loop is qubit ℓ-1, the workbit is qubit
    ``num_spins``.  Coordinate m decodes to the ket |w, s_1, …, s_K⟩ with
    the workbit leading, so the low decode bits are reversed into qubit
    order.
    """
    k = num_spins
    out = np.empty(1 << (k + 1), dtype=np.int64)
    for m in range(out.size):
        d = gray_decode_int(m)
        w = d >> k
        low = d & ((1 << k) - 1)
        rev = 0
        for b in range(k):
            rev |= ((low >> b) & 1) << (k - 1 - b)
        out[m] = (w << k) | rev
    return out


def _parity_signs(dim: int) -> np.ndarray:
    m = np.arange(dim)
    pc = np.zeros(dim, dtype=np.int64)
    while m.any():
        pc += m & 1
        m = m >> 1
    return 1.0 - 2.0 * (pc % 2)


# ---------------------------------------------------------------------------
# generalized Euler angles

@dataclass(frozen=True)
class PlaneRotation:
    """Rotation by ``theta`` in the (e_i, e_{i+1}) plane, i 1-based."""

    index: int
    theta: float


@dataclass(frozen=True)
class EulerAngleSet:
    """Angles θ_1 … θ_{2n−1} describing a subspace-selection rotation.

    ``thetas[k-1]`` holds θ_k; θ_n is the variant for the stored subspace.
    """

    n: int
    thetas: np.ndarray
    subspace: int
    alpha_minus: float
    alpha_plus: float


def compute_angles(v, subspace: int) -> EulerAngleSet:
    """Triangular-solve the plane-rotation angles for a real unit vector.

    The first n coordinates of ``v`` are the workbit-down half.  With
    ``subspace`` = −1 the construction keeps that half, with +1 the other.
    """
    v = np.asarray(v, dtype=np.float64)
    n2 = v.size
    n = n2 // 2
    if 2 * n != n2 or n < 1:
        raise ValueError("vector length must be even")
    if subspace not in (-1, 1):
        raise ValueError("subspace must be ±1")
    if abs(np.linalg.norm(v) - 1.0) > 1e-10:
        raise ValueError("source vector is not normalised")

    thetas = np.zeros(n2 - 1)
    # prefix chain over the upper half; r_1 keeps the sign of v_1
    r = v[0]
    for k in range(1, n):
        thetas[k - 1] = math.atan2(r, v[k])
        r = math.hypot(r, v[k])
    alpha_minus = abs(r)

    # suffix chain over the lower half; the last angle keeps the sign of v_2n
    suffix = np.zeros(n2 + 1)
    acc = 0.0
    for j in range(n2 - 1, n - 1, -1):
        acc = math.hypot(acc, v[j])
        suffix[j] = acc
    alpha_plus = suffix[n]

    target = alpha_minus if subspace == -1 else alpha_plus
    if target < DEGENERATE_NORM:
        raise DegenerateSubspaceError(
            f"selected subspace has norm {target:.3e}; nothing to renormalise"
        )

    if subspace == -1:
        thetas[n - 1] = math.atan2(alpha_plus, alpha_minus)
    else:
        thetas[n - 1] = math.atan2(alpha_minus, alpha_plus)
    for k in range(n + 1, n2 - 1):
        thetas[k - 1] = math.atan2(suffix[k], v[k - 1])
    thetas[n2 - 2] = math.atan2(v[n2 - 1], v[n2 - 2])

    thetas.flags.writeable = False
    return EulerAngleSet(n, thetas, subspace, float(alpha_minus), float(alpha_plus))


def rotation_sequence(angles: EulerAngleSet):
    """The plane rotations realising the selection, in application order."""
    n, th = angles.n, angles.thetas

    def rot(i, sign=1.0):
        return PlaneRotation(i, sign * th[i - 1])

    if angles.subspace == -1:
        # U_- = G1 · G2 · G1ᵀ
        seq = [rot(i, -1.0) for i in range(1, n)]              # G1ᵀ
        seq += [rot(i) for i in range(2 * n - 1, n - 1, -1)]   # G2
        seq += [rot(i) for i in range(n - 1, 0, -1)]           # G1
    else:
        # U_+ = Hᵀ · Wᵀ · H with H over the lower planes, W over the upper
        seq = [rot(i) for i in range(2 * n - 1, n, -1)]        # H
        seq += [rot(i, -1.0) for i in range(1, n + 1)]         # Wᵀ
        seq += [rot(i, -1.0) for i in range(n + 1, 2 * n)]     # Hᵀ
    return seq


def plane_rotation_count(angles: EulerAngleSet) -> int:
    return len(rotation_sequence(angles))


def _apply_plane_rotation_rows(mat, i, theta):
    """Left-multiply ``mat`` by the (i, i+1) plane rotation, in place."""
    c, s = math.cos(theta), math.sin(theta)
    a = mat[i - 1].copy()
    b = mat[i]
    mat[i - 1] = c * a + s * b
    mat[i] = -s * a + c * b


def build_projection_unitary(angles: EulerAngleSet) -> np.ndarray:
    """Compose the rotation sequence into an explicit orthogonal matrix."""
    n2 = 2 * angles.n
    mat = np.eye(n2)
    for rot in rotation_sequence(angles):
        _apply_plane_rotation_rows(mat, rot.index, rot.theta)
    return mat


def reconstruct_half(angles: EulerAngleSet) -> np.ndarray:
    """Apply the half-solve product to the unit axis vector.

    Returns the unit vector the stored angles encode for the selected half;
    a correct angle set reproduces the normalised source half.
    """
    n, n2, th = angles.n, 2 * angles.n, angles.thetas
    out = np.zeros(n2)
    if angles.subspace == -1:
        out[n - 1] = 1.0
        for i in range(n - 1, 0, -1):
            _apply_plane_rotation_rows(out.reshape(n2, 1), i, th[i - 1])
    else:
        out[n] = 1.0
        for i in range(n + 1, n2):
            _apply_plane_rotation_rows(out.reshape(n2, 1), i, -th[i - 1])
    return out


# ---------------------------------------------------------------------------
# plaquette precomputation and application

def plaquette_statevector(couplings, last_magnitude, beta, deltas=None,
                          last_delta_magnitude=0.0) -> statevec.StateVector:
    """Exact isolated-plaquette state after the loop is closed onto a workbit.

    Spins are local qubits 0..K−1, the workbit is qubit K.  ``couplings``
    are the K−1 in-chain bonds; ``deltas``, when given, are the per-site
    field parameters (the first one enters only through the loop closing).
    """
    k = len(couplings) + 1
    if k < 3:
        raise ValueError("a plaquette needs at least 3 spins")
    if k > INTERFERENCE_SPIN_CAP:
        raise CapabilityError(
            f"plaquette of {k} spins exceeds the precomputation cap "
            f"{INTERFERENCE_SPIN_CAP}"
        )
    state = statevec.new_ground(k + 1)
    if deltas is None:
        state = statevec.apply_gate(state, gates.rotation_r(), (0,))
        for i, g in enumerate(couplings):
            state = statevec.apply_gate(state, gates.ising_entangle(g, beta), (i, i + 1))
        state = statevec.apply_gate(state, gates.omega(last_magnitude, beta), (k - 1, 0, k))
    else:
        if len(deltas) != k:
            raise ValueError("need one delta per plaquette spin")
        state = statevec.apply_gate(state, gates.rotation_r(), (0,))
        for i, g in enumerate(couplings):
            state = statevec.apply_gate(
                state, gates.ising_entangle_field(g, deltas[i + 1], beta), (i, i + 1))
        state = statevec.apply_gate(
            state, gates.omega_field(last_magnitude, last_delta_magnitude, beta),
            (k - 1, 0, k))
    return state


def projection_unitary_for_plaquette(couplings, last_magnitude, beta, subspace,
                                     deltas=None, last_delta_magnitude=0.0) -> np.ndarray:
    """Subspace-selection matrix in the local register basis of the plaquette.

    The signs of the precomputed amplitudes are absorbed by a diagonal ±1
    conjugation (coordinate parity times the state's own signs), so the
    rotation solve runs on the reference-convention real vector.
    """
    theory = plaquette_statevector(couplings, last_magnitude, beta, deltas,
                                   last_delta_magnitude)
    k = theory.num_qubits - 1
    order = solve_order(k)
    v = theory.amplitudes.real[order]
    signs = np.where(v >= 0.0, 1.0, -1.0)
    angles = compute_angles(signs * v, subspace)
    u = build_projection_unitary(angles)
    u = (signs[:, None] * u) * signs[None, :]
    # permute from solve coordinates to local register indices
    inv = np.empty_like(order)
    inv[order] = np.arange(order.size)
    return u[np.ix_(inv, inv)]


def apply_interference(state: statevec.StateVector, sites, workbit, couplings,
                       last_magnitude, beta, subspace, deltas=None,
                       last_delta_magnitude=0.0) -> statevec.StateVector:
    """Erase one bond-sign subspace of a plaquette inside a larger register.

    ``sites`` are the register qubits of the plaquette spins in loop order.
    The plaquette (spins plus workbit) must currently be in a product state
    with the rest of the register and must equal the isolated-plaquette
    state up to a global sign.
    """
    u = projection_unitary_for_plaquette(couplings, last_magnitude, beta,
                                         subspace, deltas, last_delta_magnitude)
    # local index: bit K = workbit, bit ℓ-1 = sites[ℓ-1]; ket order is MSB first
    targets = (workbit,) + tuple(reversed(sites))
    out = statevec.apply_matrix(state, u, targets)
    # the rotation is orthogonal, so a wrong input shows up as leftover mass
    # on the half that should have been erased, not as a norm defect
    probs = statevec.born_probabilities(out)
    keep_bit = 1 if subspace == 1 else 0
    discarded = float(probs[((np.arange(out.dim) >> workbit) & 1) != keep_bit].sum())
    if discarded > 1e-9:
        raise DegenerateSubspaceError(
            f"subspace selection left mass {discarded:.3e} on the erased half; "
            "the register did not hold the expected plaquette superposition"
        )
    return out


# ---------------------------------------------------------------------------
# reference angle tables for the two smallest plaquettes

def _f(x, coupling, k, l, m):
    return x ** (4.0 * coupling * k) / math.sqrt(l + m * x ** (8.0 * coupling))


def _h(x, coupling, k, l, m, n):
    return x ** (4.0 * coupling * k) / math.sqrt(
        l + m * x ** (8.0 * coupling) + n * x ** (16.0 * coupling))


def table_cosines_3(coupling, beta):
    """Reference cos θ_k for the 3-spin plaquette, k = 1..15 except 8.

    The k = 13 entry uses exponents (1, 3, 1); the commonly printed
    (1, 1, 3) is inconsistent with the k = 14, 15 entries of the same
    chain.  Returns (cosines, cos θ_8 for the keep-down variant).
    """
    x = math.exp(0.5 * beta)
    f = lambda k, l, m: _f(x, coupling, k, l, m)
    cos = {
        1: 1 / math.sqrt(2), 2: -1 / math.sqrt(3), 3: -f(0, 1, 3), 4: f(1, 1, 4),
        5: f(1, 1, 5), 6: -f(1, 1, 6), 7: -f(0, 2, 6),
        9: f(1, 6, 2), 10: f(0, 6, 1), 11: -f(0, 5, 1), 12: -f(0, 4, 1),
        13: f(1, 3, 1), 14: 1 / math.sqrt(3), 15: -1 / math.sqrt(2),
    }
    cos8_minus = 1.0 / (f(0, 1, 3) * (1.0 + x ** (4.0 * coupling)) ** 1.5)
    return cos, cos8_minus


def table_cosines_4(coupling, beta):
    """Reference cos θ_k for the 4-spin plaquette, k = 1..31 except 16.

    Returns (cosines, sin θ_16 for the keep-down variant, which equals
    cos θ_16 for the keep-up variant).
    """
    x = math.exp(0.5 * beta)
    h = lambda k, l, m, n: _h(x, coupling, k, l, m, n)
    cos = {
        1: 1 / math.sqrt(2), 2: -1 / math.sqrt(3),
        3: -h(0, 1, 3, 0), 4: h(1, 1, 4, 0), 5: h(0, 2, 4, 0), 6: -h(0, 3, 4, 0),
        7: -h(0, 4, 4, 0), 8: -h(1, 4, 5, 0), 9: -h(1, 4, 6, 0), 10: h(1, 4, 7, 0),
        11: h(0, 5, 7, 0), 12: -h(1, 5, 8, 0), 13: -h(0, 6, 8, 0), 14: h(0, 7, 8, 0),
        15: h(0, 8, 8, 0),
        17: -h(2, 2, 12, 2), 18: -h(1, 2, 12, 1), 19: h(1, 2, 11, 1), 20: h(1, 2, 10, 1),
        21: -h(1, 2, 9, 1), 22: -h(1, 2, 8, 1), 23: h(1, 2, 7, 1), 24: h(0, 2, 6, 1),
        25: h(2, 1, 6, 1), 26: h(1, 1, 6, 0), 27: -h(1, 1, 5, 0), 28: -h(1, 1, 4, 0),
        29: h(1, 1, 3, 0), 30: h(1, 1, 2, 0), 31: -h(1, 1, 1, 0),
    }
    sin16_minus = 1.0 / (h(0, 1, 6, 1) * (1.0 + x ** (4.0 * coupling)) ** 2)
    return cos, sin16_minus


def table_source_vector(num_spins, coupling, beta) -> np.ndarray:
    """The real vector the reference tables were solved from.

    All-ferromagnetic loop of ``num_spins`` spins with closing magnitude
    ``coupling``; amplitudes read in solve order with odd-parity
    coordinates sign-flipped.
    """
    theory = plaquette_statevector([coupling] * (num_spins - 1), coupling, beta)
    v = theory.amplitudes.real[solve_order(num_spins)]
    return _parity_signs(v.size) * v
