import math

import numpy as np
import pytest

from ising_qsim import builder, ising, statevec
from ising_qsim.errors import CapabilityError

from conftest import fresh_rng


def spin_marginal(result, plan):
    probs = statevec.born_probabilities(result.final_state)
    nspin = plan.num_spin_qubits
    out = np.zeros(1 << nspin)
    mask = (1 << nspin) - 1
    for idx, p in enumerate(probs):
        out[idx & mask] += p
    return out


def oracle_weights(model):
    return ising.gibbs_distribution(model).weights


# ---------------------------------------------------------------------------
# open chains

def test_open_chain_has_exactly_n_steps_and_no_workbits():
    plan = builder.open_chain_circuit([1.0] * 5, 1.0)
    assert len(plan.steps) == 6
    assert plan.num_workbits == 0
    assert isinstance(plan.steps[0], builder.GateStep)
    assert plan.steps[0].gate.label == "R"
    assert plan.steps[0].targets == (0,)


def test_open_chain_two_sites_weights(rng):
    beta, j = 0.8, 1.0
    plan = builder.open_chain_circuit([j], beta)
    result = builder.execute(plan, rng)
    z2 = 2 * math.exp(beta * j) + 2 * math.exp(-beta * j)
    probs = statevec.born_probabilities(result.final_state)
    assert abs(probs[0] - math.exp(beta * j) / z2) < 1e-14  # aligned (-,-)
    assert abs(probs[1] - math.exp(-beta * j) / z2) < 1e-14  # anti-aligned


def test_open_chain_rejects_single_site():
    with pytest.raises(ValueError):
        builder.open_chain_circuit([], 1.0)


def test_open_chain_ferro_four_matches_table_probabilities(rng):
    beta, j = 0.7, 1.0
    plan = builder.open_chain_circuit([j] * 3, beta)
    result = builder.execute(plan, rng)
    weights = oracle_weights(builder.result_model(plan))
    assert np.abs(spin_marginal(result, plan) - weights).max() < 1e-14


def test_open_chain_gaussian_glass_matches_oracle(rng):
    r = fresh_rng(77)
    couplings = r.normal(size=8)
    plan = builder.open_chain_circuit(couplings, 0.8)
    result = builder.execute(plan, rng)
    weights = oracle_weights(builder.result_model(plan))
    assert weights.size == 512
    assert np.abs(spin_marginal(result, plan) - weights).max() < 1e-10


def test_execute_is_deterministic():
    plan = builder.open_chain_circuit([1.0, -1.0, 0.5], 1.1)
    a = builder.execute(plan, fresh_rng(5)).final_state.amplitudes
    b = builder.execute(plan, fresh_rng(5)).final_state.amplitudes
    assert np.array_equal(a, b)


def test_no_measurements_means_empty_realized_bonds(rng):
    plan = builder.open_chain_circuit([1.0, 1.0], 1.0)
    assert builder.execute(plan, rng).realized_bonds == {}


# ---------------------------------------------------------------------------
# closed chains

def test_closed_chain_requires_three_sites():
    with pytest.raises(ValueError):
        builder.closed_chain_circuit([1.0], 1.0, 1.0)


def test_closed_chain_measure_conditions_on_outcome(rng):
    beta, j = 1.0, 1.0
    plan = builder.closed_chain_circuit([j, j], j, beta, policy="measure")
    for forced in (+1, -1):
        result = builder.execute(plan, rng, forced_outcomes={3: forced})
        model = builder.result_model(plan, result)
        assert np.abs(spin_marginal(result, plan) - oracle_weights(model)).max() < 1e-12


def test_closed_chain_measurement_balanced_at_infinite_temperature():
    plan = builder.closed_chain_circuit([1.0, 1.0, 1.0], 1.0, beta=0.0,
                                        policy="measure")
    r = fresh_rng(808)
    trials = 4000
    plus = sum(builder.execute(plan, r).outcomes[4] == 1 for _ in range(trials))
    sigma = math.sqrt(0.25 / trials)
    assert abs(plus / trials - 0.5) <= 3.5 * sigma


def test_closed_chain_measurement_frequency_matches_partition_split():
    beta, j = 1.0, 1.0
    plan = builder.closed_chain_circuit([j, j], j, beta, policy="measure")
    r = fresh_rng(909)
    trials = 10000
    plus = sum(builder.execute(plan, r).outcomes[3] == 1 for _ in range(trials))
    pair = ising.partial_partition_functions([j, j], j, beta)
    p = pair.z_plus / (pair.z_plus + pair.z_minus)
    sigma = math.sqrt(p * (1 - p) / trials)
    assert abs(plus / trials - p) <= 3 * sigma


def test_closed_chain_interference_minus_support_and_weights(rng):
    beta, j = 0.9, 1.0
    plan = builder.closed_chain_circuit([j, j, j], j, beta, policy="interfere-minus")
    result = builder.execute(plan, rng)
    probs = statevec.born_probabilities(result.final_state)
    # workbit (qubit 4) must be definitely down
    assert probs[np.arange(32) >= 16].sum() < 1e-20
    model = builder.result_model(plan)
    assert np.abs(spin_marginal(result, plan) - oracle_weights(model)).max() < 1e-10


def test_closed_chain_superposition_halves_match_both_closures(rng):
    """Before any measurement the two workbit halves carry the two closed
    Hamiltonians' weights, normalised by the partition-function split."""
    beta, j = 0.9, 1.0
    plan = builder.closed_chain_circuit([j, j, j], j, beta, policy="measure")
    state = statevec.new_ground(plan.num_qubits)
    for step in plan.steps[:-1]:
        state = statevec.apply_gate(state, step.gate, step.targets)
    probs = statevec.born_probabilities(state)
    pair = ising.partial_partition_functions([j, j, j], j, beta)
    split = pair.z_plus / (pair.z_plus + pair.z_minus)
    for sign, wbit in ((+1, 1), (-1, 0)):
        model = ising.closed_chain_model([j, j, j, sign * j], beta)
        sel = np.array([probs[y | (wbit << 4)] for y in range(16)])
        share = split if sign == 1 else 1 - split
        assert abs(sel.sum() - share) < 1e-12
        assert np.abs(sel / sel.sum() - oracle_weights(model)).max() < 1e-12


def test_closed_chain_interference_cap():
    with pytest.raises(CapabilityError):
        builder.closed_chain_circuit([1.0] * 6, 1.0, 1.0, policy="interfere-plus")


def test_closed_chain_measure_policy_not_capped():
    plan = builder.closed_chain_circuit([1.0] * 7, 1.0, 1.0, policy="measure")
    assert plan.num_spin_qubits == 8


# ---------------------------------------------------------------------------
# trees

def test_bethe_depth_two_binary_matches_oracle(rng):
    r = fresh_rng(13)
    edges = [(0, 1, r.normal()), (0, 2, r.normal()), (1, 3, r.normal()),
             (1, 4, r.normal()), (2, 5, r.normal()), (2, 6, r.normal())]
    plan = builder.bethe_circuit(edges, 1.1)
    result = builder.execute(plan, rng)
    weights = oracle_weights(builder.result_model(plan))
    assert np.abs(spin_marginal(result, plan) - weights).max() < 1e-10


def test_bethe_edge_orders_agree(rng):
    edges = [(0, 1, 0.7), (0, 2, -1.1), (1, 3, 0.4), (1, 4, 1.3)]
    a = builder.execute(builder.bethe_circuit(edges, 0.9), rng).final_state
    b = builder.execute(builder.bethe_circuit(edges, 0.9, edge_order=[1, 0, 3, 2]),
                        rng).final_state
    assert np.abs(a.amplitudes - b.amplitudes).max() < 1e-12


def test_bethe_ternary_branching_matches_oracle(rng):
    edges = [(0, 1, 0.8), (0, 2, -0.5), (0, 3, 1.2), (1, 4, 0.3), (1, 5, -0.9)]
    plan = builder.bethe_circuit(edges, 0.8)
    result = builder.execute(plan, rng)
    weights = oracle_weights(builder.result_model(plan))
    assert np.abs(spin_marginal(result, plan) - weights).max() < 1e-10


def test_chain_split_into_two_children_matches_oracle(rng):
    # a path that branches at its end into two leaves
    edges = [(0, 1, 1.0), (1, 2, -1.0), (2, 3, 0.6), (2, 4, -0.8)]
    plan = builder.bethe_circuit(edges, 1.0)
    result = builder.execute(plan, rng)
    weights = oracle_weights(builder.result_model(plan))
    assert np.abs(spin_marginal(result, plan) - weights).max() < 1e-10


def test_bethe_rejects_cycles_pointing_to_assembly():
    edges = [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]
    with pytest.raises(ValueError, match="assembly"):
        builder.bethe_circuit(edges, 1.0)


def test_bethe_rejects_invalid_edge_order():
    edges = [(0, 1, 1.0), (1, 2, 1.0)]
    with pytest.raises(ValueError, match="parent"):
        builder.bethe_circuit(edges, 1.0, edge_order=[1, 0])


# ---------------------------------------------------------------------------
# lattice assembly

def test_single_plaquette_assembly_equals_closed_chain(rng):
    beta, j = 0.8, 1.0
    plaq = builder.PrefabPlaquette((0, 1, 2, 3), (j, j, j, j))
    a = builder.execute(builder.lattice_assembly_circuit([plaq], [], beta), rng)
    b = builder.execute(builder.closed_chain_circuit([j, j, j], j, beta,
                                                     policy="interfere-plus"), rng)
    assert np.abs(a.final_state.amplitudes - b.final_state.amplitudes).max() < 1e-12


def test_two_by_four_assembly_matches_realized_oracle():
    plan = builder.two_by_m_assembly(2, 1.0, 0.7)
    result = builder.execute(plan, fresh_rng(424242))
    model = builder.result_model(plan, result)
    weights = oracle_weights(model)
    assert np.abs(spin_marginal(result, plan) - weights).max() < 1e-10


def test_connector_order_invariance_with_forced_outcomes():
    # force by bond: bond identity is stable under connector reordering
    for seed in (3, 9001, 555):
        base = builder.two_by_m_assembly(2, 1.0, 0.7)
        result = builder.execute(base, fresh_rng(seed))
        swapped = builder.two_by_m_assembly(2, 1.0, 0.7, connector_order=[1, 0])
        replay = builder.execute(swapped, fresh_rng(999),
                                 forced_outcomes=result.realized_bonds)
        assert np.abs(result.final_state.amplitudes
                      - replay.final_state.amplitudes).max() < 1e-10


def test_assembly_rejects_overlapping_plaquettes():
    p1 = builder.PrefabPlaquette((0, 1, 2, 3), (1.0,) * 4)
    p2 = builder.PrefabPlaquette((3, 4, 5, 6), (1.0,) * 4)
    with pytest.raises(ValueError, match="overlap"):
        builder.lattice_assembly_circuit([p1, p2], [], 1.0)


def test_assembly_rejects_dangling_connector():
    p1 = builder.PrefabPlaquette((0, 1, 2, 3), (1.0,) * 4)
    with pytest.raises(ValueError, match="empty site"):
        builder.lattice_assembly_circuit([p1], [(3, 4, 1.0)], 1.0)


def test_cube_assembly_matches_realized_oracle():
    # 2x2x2 cube: two square faces joined by four vertical measured bonds
    j, beta = 1.0, 0.8
    bottom = builder.PrefabPlaquette((0, 1, 2, 3), (j, j, j, j))
    top = builder.PrefabPlaquette((4, 5, 6, 7), (j, j, -j, j))
    verticals = [(0, 4, j), (1, 5, j), (2, 6, j), (3, 7, j)]
    plan = builder.lattice_assembly_circuit([bottom, top], verticals, beta)
    assert plan.num_qubits == 8 + 2 + 4
    result = builder.execute(plan, fresh_rng(2025))
    model = builder.result_model(plan, result)
    weights = oracle_weights(model)
    assert np.abs(spin_marginal(result, plan) - weights).max() < 1e-10


def test_assembly_frustrated_prefab(rng):
    beta = 0.9
    plaq = builder.PrefabPlaquette((0, 1, 2), (1.0, 1.0, -1.0))
    plan = builder.lattice_assembly_circuit([plaq], [], beta)
    result = builder.execute(plan, rng)
    model = builder.result_model(plan, result)
    assert np.abs(spin_marginal(result, plan) - oracle_weights(model)).max() < 1e-10


# ---------------------------------------------------------------------------
# field-carrying chains

def test_open_field_chain_matches_effective_model(rng):
    r = fresh_rng(21)
    couplings = r.normal(size=6)
    deltas = r.normal(scale=0.5, size=7)
    plan = builder.open_chain_circuit(couplings, 0.9, fields=deltas)
    result = builder.execute(plan, rng)
    weights = oracle_weights(builder.result_model(plan))
    assert np.abs(spin_marginal(result, plan) - weights).max() < 1e-10


def test_closed_field_chain_conditioned_matches_effective_model(rng):
    r = fresh_rng(22)
    couplings = r.normal(size=4)
    deltas = r.normal(scale=0.5, size=5)
    plan = builder.closed_chain_circuit(couplings, 0.8, 1.0,
                                        fields=deltas, policy="measure")
    for forced in (+1, -1):
        result = builder.execute(plan, rng, forced_outcomes={5: forced})
        model = builder.result_model(plan, result)
        assert np.abs(spin_marginal(result, plan) - oracle_weights(model)).max() < 1e-10


# ---------------------------------------------------------------------------
# plan plumbing

def test_describe_lists_every_step():
    plan = builder.two_by_m_assembly(2, 1.0, 0.7)
    text = plan.describe()
    assert text.count("apply") == 12
    assert text.count("measure workbit") == 2
    assert text.count("interfere") == 2


def test_trace_norms_stay_one(rng):
    plan = builder.closed_chain_circuit([1.0, -1.0, 1.0], 1.0, 1.0, policy="measure")
    result = builder.execute(plan, rng)
    assert max(abs(t - 1.0) for t in result.trace) < 1e-10


def test_workbits_measured_at_most_once():
    plan = builder.two_by_m_assembly(2, 1.0, 0.7)
    measured = [s.workbit for s in plan.steps if isinstance(s, builder.MeasureStep)]
    assert len(measured) == len(set(measured))


def test_every_component_starts_with_a_rotation():
    plans = [
        builder.open_chain_circuit([1.0, -1.0], 1.0),
        builder.closed_chain_circuit([1.0, 1.0], 1.0, 1.0),
        builder.bethe_circuit([(0, 1, 1.0), (0, 2, -1.0)], 1.0),
        builder.two_by_m_assembly(2, 1.0, 0.7),
    ]
    for plan in plans:
        touched = set()
        for step in plan.steps:
            if not isinstance(step, builder.GateStep):
                continue
            new_spins = [t for t in step.targets
                         if t < plan.num_spin_qubits and t not in touched]
            if new_spins and not touched & set(step.targets):
                # first gate on a fresh component must be the 1-qubit rotation
                assert step.gate.label == "R" and len(step.targets) == 1
            touched.update(t for t in step.targets if t < plan.num_spin_qubits)


def test_realized_bonds_cover_exactly_the_measured_workbits(rng):
    plan = builder.two_by_m_assembly(2, 1.0, 0.7)
    result = builder.execute(plan, rng)
    measured = {s.bond for s in plan.steps if isinstance(s, builder.MeasureStep)}
    assert set(result.realized_bonds) == measured
