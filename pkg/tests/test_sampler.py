import math

import numpy as np
import pytest

from ising_qsim import builder, ising, sampler

from conftest import fresh_rng


def test_single_sample_report():
    plan = builder.open_chain_circuit([1.0, 1.0], 1.0)
    rep = sampler.sample_configurations(plan, 1, fresh_rng(1))
    assert rep.total == 1
    assert sum(rep.counts.values()) == 1


def test_low_temperature_ferro_dominated_by_ground_pair():
    beta = 2.0
    plan = builder.open_chain_circuit([1.0] * 5, beta)
    model = builder.result_model(plan)
    rep = sampler.sample_configurations(plan, 100000, fresh_rng(2), oracle=model)
    weights = ising.gibbs_distribution(model).weights
    target = weights[0] + weights[63]
    got = (rep.counts.get(0, 0) + rep.counts.get(63, 0)) / rep.total
    sigma = math.sqrt(target * (1 - target) / rep.total)
    assert abs(got - target) <= 3 * sigma


def test_near_infinite_temperature_chi_square_uniform():
    plan = builder.open_chain_circuit([1.0] * 4, beta=0.0)
    rep = sampler.sample_configurations(plan, 50000, fresh_rng(3))
    p = sampler.chi_square_uniform_pvalue(rep.counts, rep.total, 32)
    assert p > 0.001


def test_tv_distance_shrinks_with_more_samples():
    plan = builder.open_chain_circuit([1.0, -1.0, 0.7, -0.2], 1.0)
    model = builder.result_model(plan)
    small = sampler.sample_configurations(plan, 500, fresh_rng(4), oracle=model)
    large = sampler.sample_configurations(plan, 100000, fresh_rng(4), oracle=model)
    assert large.tv_distance_to_oracle < small.tv_distance_to_oracle
    assert large.tv_distance_to_oracle < 0.02


def test_report_observables_match_oracle_at_large_samples():
    beta = 1.0
    plan = builder.open_chain_circuit([1.0, 1.0, -1.0], beta)
    model = builder.result_model(plan)
    rep = sampler.sample_configurations(plan, 200000, fresh_rng(5), oracle=model)
    weights = ising.gibbs_distribution(model).weights
    energies = ising.all_energies(model)
    assert abs(rep.energy_mean - weights @ energies) < 0.02
    assert abs(rep.magnetization_mean) < 0.02  # spin-flip symmetric model


# ---------------------------------------------------------------------------
# independence

def test_autocorrelation_within_iid_bound():
    plan = builder.open_chain_circuit([1.0, -1.0, 1.0, 1.0, -1.0], 1.0)
    model = builder.result_model(plan)
    rho = sampler.autocorrelation_check(plan, model, 10000, fresh_rng(6))
    assert abs(rho) < 0.04


def test_autocorrelation_with_measurements_within_iid_bound():
    plan = builder.closed_chain_circuit([1.0, 1.0], 1.0, 1.0, policy="measure")
    model = ising.closed_chain_model([1.0, 1.0, 1.0], 1.0)
    rho = sampler.autocorrelation_check(plan, model, 2000, fresh_rng(7))
    assert abs(rho) < 0.09  # 4/sqrt(2000)


def test_autocorrelation_degenerate_series_reported_as_none():
    # a single-bond chain at very low temperature with a constant energy map
    plan = builder.open_chain_circuit([1.0], 1.0)
    model = ising.make_model(2, [], 1.0)  # no bonds: all energies equal
    rho = sampler.autocorrelation_check(plan, model, 1000, fresh_rng(8))
    assert rho is None


def test_autocorrelation_deterministic_rerun():
    plan = builder.open_chain_circuit([1.0, -1.0, 1.0], 1.0)
    model = builder.result_model(plan)
    a = sampler.autocorrelation_check(plan, model, 5000, fresh_rng(9))
    b = sampler.autocorrelation_check(plan, model, 5000, fresh_rng(9))
    assert a == b


# ---------------------------------------------------------------------------
# ground-state search

def test_search_nearly_always_one_attempt_at_large_beta():
    plan = builder.open_chain_circuit([1.0] * 4, 6.0)
    model = builder.result_model(plan)
    attempts = [sampler.ground_state_search(plan, fresh_rng(k), oracle_model=model).attempts
                for k in range(50)]
    assert np.mean(attempts) < 1.1


def test_search_mean_attempts_matches_inverse_p_star():
    beta = 1.0
    plan = builder.open_chain_circuit([1.0] * 5, beta)
    model = builder.result_model(plan)
    p_star = ising.ground_state_probability(model)
    runs = 300
    r = fresh_rng(10)
    attempts = [sampler.ground_state_search(plan, r, oracle_model=model).attempts
                for _ in range(runs)]
    mean = np.mean(attempts)
    sigma = math.sqrt((1 - p_star) / p_star ** 2 / runs)
    assert abs(mean - 1 / p_star) <= 3 * sigma


def test_search_frustrated_triangle_through_interference():
    plan = builder.closed_chain_circuit([1.0, 1.0], 1.0, 2.0,
                                        policy="interfere-minus")
    model = builder.result_model(plan)
    report = sampler.ground_state_search(plan, fresh_rng(11), oracle_model=model)
    assert report.verified
    assert abs(report.energy - (-1.0)) < 1e-12


def test_search_without_oracle_flags_unverified():
    plan = builder.open_chain_circuit([1.0] * 3, 2.0)
    report = sampler.ground_state_search(plan, fresh_rng(12), max_attempts=5)
    assert not report.verified
    assert report.attempts == 5


def test_attempt_counts_fit_geometric_law():
    beta = 0.7
    plan = builder.open_chain_circuit([1.0] * 4, beta)
    model = builder.result_model(plan)
    p_star = ising.ground_state_probability(model)
    r = fresh_rng(13)
    attempts = [sampler.ground_state_search(plan, r, oracle_model=model).attempts
                for _ in range(500)]
    assert sampler.geometric_fit_pvalue(attempts, p_star) > 0.001


# ---------------------------------------------------------------------------
# bond-sign statistics

def test_bond_sign_balanced_at_tiny_beta():
    plan = builder.closed_chain_circuit([1.0, 1.0], 1.0, 1e-6, policy="measure")
    rep = sampler.bond_sign_frequency(plan, 4000, fresh_rng(14))
    sigma = math.sqrt(0.25 / rep.total)
    assert abs(rep.p_hat - 0.5) <= 3.5 * sigma
    assert rep.within_bounds


def test_bond_sign_closed_five_chain_matches_oracle():
    beta = 2.0
    plan = builder.closed_chain_circuit([1.0] * 4, 1.0, beta, policy="measure")
    rep = sampler.bond_sign_frequency(plan, 6000, fresh_rng(15))
    pair = ising.partial_partition_functions([1.0] * 4, 1.0, beta)
    p_exact = pair.z_plus / (pair.z_plus + pair.z_minus)
    assert abs(rep.oracle_ratio - pair.ratio) < 1e-9
    assert abs(rep.p_hat - p_exact) <= 3 * rep.sigma_ratio / 1 + 3 * rep.sigma_ratio
    assert rep.within_bounds


def test_bond_sign_two_plaquette_connector_within_bounds():
    beta = 1.0
    p1 = builder.PrefabPlaquette((0, 1, 2, 3), (1.0,) * 4)
    p2 = builder.PrefabPlaquette((4, 5, 6, 7), (1.0,) * 4)
    plan = builder.lattice_assembly_circuit([p1, p2], [(1, 4, 1.0)], beta)
    rep = sampler.bond_sign_frequency(plan, 3000, fresh_rng(16))
    assert rep.within_bounds
    assert rep.lower_bound <= rep.oracle_ratio <= rep.upper_bound
    sigma = math.sqrt(0.25 / rep.total)
    p_exact = rep.oracle_ratio / (1 + rep.oracle_ratio)
    assert abs(rep.p_hat - p_exact) <= 4 * sigma


def test_bond_sign_requires_a_measurement():
    plan = builder.open_chain_circuit([1.0, 1.0], 1.0)
    with pytest.raises(ValueError):
        sampler.bond_sign_frequency(plan, 10, fresh_rng(17))


# ---------------------------------------------------------------------------
# defect density

def test_defect_fraction_near_half_at_tiny_beta():
    rows = sampler.defect_density_scan([1e-6], 400, fresh_rng(18))
    assert abs(rows[0].exact_fraction - 0.5) < 1e-6
    assert abs(rows[0].measured_fraction - 0.5) < 0.1


def test_defect_fraction_decreases_and_log_slope():
    betas = [1.0, 1.5, 2.0, 2.5, 3.0]
    rows = sampler.defect_density_scan(betas, 200, fresh_rng(19))
    exact = [r.exact_fraction for r in rows]
    assert all(b < a for a, b in zip(exact, exact[1:]))
    slope = sampler.log_slope(rows, beta_min=2.0)
    assert abs(slope - (-2.0)) / 2.0 < 0.2


def test_defect_fraction_small_at_beta_three():
    rows = sampler.defect_density_scan([3.0], 300, fresh_rng(20))
    assert rows[0].exact_fraction < 0.01
    assert rows[0].measured_fraction < 0.03


def test_doubling_beta_roughly_squares_suppression():
    rows = sampler.defect_density_scan([1.5, 3.0], 10, fresh_rng(21))
    f1, f2 = rows[0].exact_fraction, rows[1].exact_fraction
    assert abs(math.log(f2) / math.log(f1) - 2.0) < 0.35
