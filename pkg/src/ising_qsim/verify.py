"""Built-in verification suites: algebraic identities against exact oracles.

Each check compares a quantity computed through the gate/circuit path with
an independent evaluation (explicit matrix algebra, closed-form
transcriptions, or brute-force enumeration) and reports the residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gates, interference, ising, statevec

SUITES = ("commutators", "table1", "angles", "recursion", "all")


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance)


def _full_matrix(gate: statevec.GateMatrix, targets, num_qubits: int) -> np.ndarray:
    dim = 1 << num_qubits
    out = np.zeros((dim, dim), dtype=np.complex128)
    for col in range(dim):
        amps = np.zeros(dim, dtype=np.complex128)
        amps[col] = 1.0
        st = statevec.StateVector(num_qubits, amps)
        out[:, col] = statevec.apply_gate(st, gate, targets).amplitudes
    return out


def _comm(a, b):
    return a @ b - b @ a


def s_omega_residual_closed_form(coupling, beta, num_qubits=4) -> np.ndarray:
    """Closed form of the one non-vanishing entangle/close commutator.

    For the entangling gate on (i, j) against the loop closing on (k, j, w),
    on the register (i, j, k, w) = qubits (0, 1, 2, 3):

        [S, Ω]|s_i, s_j, s_k, w⟩ = x^{J s_i}(w·x^{−J s_k} − x^{J s_k})/√(c²)
                                   · |s_i, −s_j, s_k⟩ ⊗ (|−⟩ + |+⟩)_w

    The form is fixed against direct matrix evaluation.
    """
    x = math.exp(0.5 * beta)
    c = 2.0 * math.cosh(beta * coupling)
    dim = 1 << num_qubits
    out = np.zeros((dim, dim), dtype=np.complex128)

    def idx(si, sj, sk, w):
        return ((si + 1) // 2) | ((sj + 1) // 2) << 1 | ((sk + 1) // 2) << 2 | ((w + 1) // 2) << 3

    for si in (-1, 1):
        for sj in (-1, 1):
            for sk in (-1, 1):
                for w in (-1, 1):
                    col = idx(si, sj, sk, w)
                    coef = x ** (coupling * si) * (w * x ** (-coupling * sk)
                                                   - x ** (coupling * sk)) / c
                    out[idx(si, -sj, sk, -1), col] += coef
                    out[idx(si, -sj, sk, +1), col] += coef
    return out


def commutator_checks(beta: float = 0.7, coupling: float = 1.0):
    """Commutation relations of the entangling and loop-closing operators."""
    results = []
    tol = 1e-12

    # branching: entangling gates sharing their control commute (3 qubits)
    s_ij = _full_matrix(gates.ising_entangle(coupling, beta), (0, 1), 3)
    s_ik = _full_matrix(gates.ising_entangle(-0.6 * coupling, beta), (0, 2), 3)
    results.append(CheckResult("commutators", "[S_ij, S_ik]",
                               float(np.abs(_comm(s_ij, s_ik)).max()), tol))

    # loop closings in all four shared-spin geometries
    om = lambda tg, n: _full_matrix(gates.omega(coupling, beta), tg, n)
    pairs = [
        ("[O_ijw1, O_jkw2]", om((0, 1, 3), 5), om((1, 2, 4), 5)),
        ("[O_ijw1, O_ikw2]", om((0, 1, 3), 5), om((0, 2, 4), 5)),
        ("[O_ijw1, O_kjw2]", om((0, 1, 3), 5), om((2, 1, 4), 5)),
        ("[O_ijw1, O_klw2]", om((0, 1, 4), 6), om((2, 3, 5), 6)),
    ]
    for name, a, b in pairs:
        results.append(CheckResult("commutators", name,
                                   float(np.abs(_comm(a, b)).max()), tol))

    # entangle vs closing: three commuting geometries
    s4 = _full_matrix(gates.ising_entangle(coupling, beta), (0, 1), 4)
    s5 = _full_matrix(gates.ising_entangle(coupling, beta), (0, 1), 5)
    commuting = [
        ("[S_ij, O_ikw]", s4, _full_matrix(gates.omega(coupling, beta), (0, 2, 3), 4)),
        ("[S_ij, O_kiw]", s4, _full_matrix(gates.omega(coupling, beta), (2, 0, 3), 4)),
        ("[S_ij, O_klw]", s5, _full_matrix(gates.omega(coupling, beta), (2, 3, 4), 5)),
    ]
    for name, a, b in commuting:
        results.append(CheckResult("commutators", name,
                                   float(np.abs(_comm(a, b)).max()), tol))

    # the non-commuting geometry: residual against its closed form
    om_kj = _full_matrix(gates.omega(coupling, beta), (2, 1, 3), 4)
    residual = _comm(s4, om_kj)
    closed = s_omega_residual_closed_form(coupling, beta)
    results.append(CheckResult("commutators", "[S_ij, O_kjw] vs closed form",
                               float(np.abs(residual - closed).max()), 1e-10))
    results.append(CheckResult("commutators", "[S_ij, O_kjw] is nonzero",
                               0.0 if np.abs(residual).max() > 1e-6 else 1.0, 0.5))
    return results


def table1_amplitudes(coupling: float, beta: float):
    """Reference amplitudes of the four-spin ferromagnetic chain preparation.

    Keys are (stage, config) with stage 0..3 = after the rotation and after
    each entangling gate; configs are (s_1, s_2, s_3, s_4).
    """
    x = math.exp(0.5 * beta)
    c = 2.0 * math.cosh(beta * coupling)
    j = coupling
    r2 = math.sqrt(2.0)
    table = {}
    table[(0, (-1, -1, -1, -1))] = 1 / r2
    table[(0, (+1, -1, -1, -1))] = 1 / r2
    stage1 = {(-1, -1): x ** j, (-1, +1): -x ** -j, (+1, -1): x ** -j, (+1, +1): -x ** j}
    for (s1, s2), val in stage1.items():
        table[(1, (s1, s2, -1, -1))] = val / math.sqrt(2 * c)
    stage2 = {(-1, -1, -1): x ** (2 * j), (-1, -1, +1): -1.0,
              (-1, +1, -1): -x ** (-2 * j), (-1, +1, +1): 1.0,
              (+1, -1, -1): 1.0, (+1, -1, +1): -x ** (-2 * j),
              (+1, +1, -1): -1.0, (+1, +1, +1): x ** (2 * j)}
    for (s1, s2, s3), val in stage2.items():
        table[(2, (s1, s2, s3, -1))] = val / (r2 * c)
    stage3 = {(-1, -1, -1, -1): x ** (3 * j), (-1, -1, -1, +1): -x ** j,
              (-1, -1, +1, -1): -x ** -j, (-1, -1, +1, +1): x ** j,
              (-1, +1, -1, -1): -x ** -j, (-1, +1, -1, +1): x ** (-3 * j),
              (-1, +1, +1, -1): x ** -j, (-1, +1, +1, +1): -x ** j,
              (+1, -1, -1, -1): x ** j, (+1, -1, -1, +1): -x ** -j,
              (+1, -1, +1, -1): -x ** (-3 * j), (+1, -1, +1, +1): x ** -j,
              (+1, +1, -1, -1): -x ** j, (+1, +1, -1, +1): x ** -j,
              (+1, +1, +1, -1): x ** j, (+1, +1, +1, +1): -x ** (3 * j)}
    for cfg, val in stage3.items():
        table[(3, cfg)] = val / (r2 * c ** 1.5)
    return table


def table1_checks(coupling: float = 1.0, beta: float = 0.7):
    """Stage-by-stage amplitudes of the 4-spin ferro chain, signs included."""
    state = statevec.new_ground(4)
    stages = []
    state = statevec.apply_gate(state, gates.rotation_r(), (0,))
    stages.append(state)
    for i in range(3):
        state = statevec.apply_gate(state, gates.ising_entangle(coupling, beta), (i, i + 1))
        stages.append(state)
    table = table1_amplitudes(coupling, beta)
    worst = 0.0
    for (stage, cfg), expected in table.items():
        idx = ising.index_from_config(cfg)
        got = stages[stage].amplitudes[idx].real
        worst = max(worst, abs(got - expected))
    # entries absent from the table are exactly zero at that stage
    zero_worst = 0.0
    for stage, st in enumerate(stages):
        for idx in range(16):
            cfg = ising.config_from_index(idx, 4)
            if (stage, cfg) not in table:
                zero_worst = max(zero_worst, abs(st.amplitudes[idx]))
    return [
        CheckResult("table1", "listed amplitudes (signs included)", worst, 1e-12),
        CheckResult("table1", "unlisted amplitudes vanish", zero_worst, 1e-12),
    ]


def angle_table_checks(coupling: float = 1.0, betas=(0.3, 1.0, 2.5)):
    """Euler angles of the 3- and 4-spin plaquettes against the references."""
    results = []
    for num_spins, table_fn in ((3, interference.table_cosines_3),
                                (4, interference.table_cosines_4)):
        worst = 0.0
        worst_special = 0.0
        for beta in betas:
            v = interference.table_source_vector(num_spins, coupling, beta)
            minus = interference.compute_angles(v, -1)
            plus = interference.compute_angles(v, +1)
            cos_table, special = table_fn(coupling, beta)
            for k, expected in cos_table.items():
                worst = max(worst, abs(math.cos(minus.thetas[k - 1]) - expected))
            n = minus.n
            if num_spins == 3:
                worst_special = max(worst_special,
                                    abs(math.cos(minus.thetas[n - 1]) - special),
                                    abs(math.sin(plus.thetas[n - 1]) - special))
            else:
                worst_special = max(worst_special,
                                    abs(math.sin(minus.thetas[n - 1]) - special),
                                    abs(math.cos(plus.thetas[n - 1]) - special))
        results.append(CheckResult("angles", f"{num_spins}-spin table", worst, 1e-9))
        results.append(CheckResult("angles", f"{num_spins}-spin subspace angle",
                                   worst_special, 1e-9))
    return results


def recursion_checks(num_draws: int = 20, seed: int = 20240101):
    """Partial partition pair against brute force, bounds, and the cold limit."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    bounds_ok = True
    for _ in range(num_draws):
        n = int(rng.integers(3, 11))
        beta = float(rng.uniform(0.2, 2.0))
        signs = rng.choice([-1.0, 1.0], size=n - 1)
        pair = ising.partial_partition_functions(signs, 1.0, beta)
        zp = ising.gibbs_distribution(
            ising.closed_chain_model(list(signs) + [1.0], beta)).partition_function
        zm = ising.gibbs_distribution(
            ising.closed_chain_model(list(signs) + [-1.0], beta)).partition_function
        worst = max(worst, abs(pair.z_plus - zp) / zp, abs(pair.z_minus - zm) / zm)
        bounds_ok &= ising.ratio_bounds_check(pair, 1.0, beta).within
    results = [
        CheckResult("recursion", f"pair vs enumeration ({num_draws} draws)", worst, 1e-9),
        CheckResult("recursion", "ratio bounds hold", 0.0 if bounds_ok else 1.0, 0.5),
    ]
    # cold limit: a weakest closing bond drives the ratio onto the upper bound
    beta_cold = 10.0
    pair = ising.partial_partition_functions([2.0] * 4, 1.0, beta_cold)
    target = math.exp(2.0 * beta_cold)
    results.append(CheckResult("recursion", "cold-limit ratio vs upper bound",
                               abs(pair.ratio / target - 1.0), 0.01))
    return results


def run_suite(name: str):
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {SUITES}")
    if name == "commutators":
        return commutator_checks()
    if name == "table1":
        return table1_checks()
    if name == "angles":
        return angle_table_checks()
    if name == "recursion":
        return recursion_checks()
    out = []
    for suite in ("commutators", "table1", "angles", "recursion"):
        out.extend(run_suite(suite))
    return out
