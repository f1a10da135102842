"""Repeated preparation-and-measurement experiments.

Each sample is an independent preparation: plans containing measurements
are re-executed from scratch for every draw; measurement-free plans
prepare the same state every time, so the final state is computed once and
sampled repeatedly, which is statistically identical and much faster.

Samples may also be drawn concurrently: split per-worker generators off
the master seed with ``Generator.spawn`` and merge the count dictionaries;
all reports here aggregate associatively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import builder, ising, statevec


@dataclass(frozen=True)
class SampleReport:
    counts: dict            # spin configuration index -> count
    total: int
    energy_mean: float | None
    magnetization_mean: float
    site_magnetization: np.ndarray
    tv_distance_to_oracle: float | None


@dataclass(frozen=True)
class GroundSearchReport:
    config: int
    energy: float
    attempts: int
    verified: bool
    p_star: float | None
    expected_attempts: float | None


@dataclass(frozen=True)
class BondSignReport:
    ferro_count: int
    total: int
    p_hat: float
    q_hat: float
    ratio: float
    lower_bound: float
    upper_bound: float
    within_bounds: bool
    oracle_ratio: float | None
    sigma_ratio: float | None


@dataclass(frozen=True)
class DefectScanRow:
    beta: float
    measured_fraction: float
    exact_fraction: float
    samples: int


def tv_distance(counts: dict, total: int, weights: np.ndarray) -> float:
    """Total-variation distance between a histogram and exact weights."""
    emp = np.zeros_like(weights)
    for cfg, c in counts.items():
        emp[cfg] += c / total
    return 0.5 * float(np.abs(emp - weights).sum())


def _spin_matrix(configs: np.ndarray, num_sites: int) -> np.ndarray:
    bits = (configs[:, None] >> np.arange(num_sites)[None, :]) & 1
    return 2.0 * bits - 1.0


def draw_configurations(plan: builder.CircuitPlan, count: int,
                        rng: np.random.Generator) -> np.ndarray:
    """``count`` independent spin-configuration indices from the plan."""
    mask = (1 << plan.num_spin_qubits) - 1
    if not plan.has_measurements:
        result = builder.execute(plan, rng)
        full = statevec.sample_many(result.final_state, count, rng)
        return full & mask
    out = np.empty(count, dtype=np.int64)
    for k in range(count):
        result = builder.execute(plan, rng)
        out[k] = statevec.sample(result.final_state, rng) & mask
    return out


def sample_configurations(plan: builder.CircuitPlan, count: int,
                          rng: np.random.Generator,
                          oracle: ising.IsingModel | None = None) -> SampleReport:
    """Histogram and running observables over independent preparations.

    With an oracle model the report carries the energy mean (with respect
    to that model) and the total-variation distance to its exact Gibbs
    weights.
    """
    if count < 1:
        raise ValueError("need at least one sample")
    configs = draw_configurations(plan, count, rng)
    uniq, cnts = np.unique(configs, return_counts=True)
    counts = {int(u): int(c) for u, c in zip(uniq, cnts)}
    spins = _spin_matrix(uniq, plan.num_spin_qubits)
    weights = cnts / count
    site_mag = weights @ spins
    mag_mean = float(site_mag.mean())
    energy_mean = None
    tv = None
    if oracle is not None:
        e = np.array([ising.energy(oracle, spins[k]) for k in range(len(uniq))])
        energy_mean = float(weights @ e)
        tv = tv_distance(counts, count, ising.gibbs_distribution(oracle).weights)
    return SampleReport(counts, count, energy_mean, mag_mean, site_mag, tv)


def autocorrelation_check(plan: builder.CircuitPlan, model: ising.IsingModel,
                          count: int, rng: np.random.Generator) -> float | None:
    """Lag-1 autocorrelation of the sampled energy series.

    Independent preparations have no dynamics, so |ρ₁| should stay within
    the i.i.d. bound ≈ 4/√count.  Returns None when the series has zero
    variance (a fully deterministic plan).
    """
    if count < 1000:
        raise ValueError("need at least 10^3 samples for a stable estimate")
    configs = draw_configurations(plan, count, rng)
    energies = all_config_energies(model)[configs]
    var = energies.var()
    if var == 0.0:
        return None
    dev = energies - energies.mean()
    return float((dev[:-1] * dev[1:]).mean() / var)


def all_config_energies(model: ising.IsingModel) -> np.ndarray:
    return ising.all_energies(model)


def ground_state_search(plan: builder.CircuitPlan, rng: np.random.Generator,
                        max_attempts: int = 10000,
                        oracle_model: ising.IsingModel | None = None) -> GroundSearchReport:
    """Prepare-and-measure until a ground state appears.

    In verification mode (oracle given) the loop stops exactly when the
    sampled configuration is in the oracle's ground set, and the report
    carries p* and its implied mean attempt count 1/p*.  Without an oracle
    the best configuration seen within ``max_attempts`` is reported and
    flagged unverified.
    """
    ground_set = None
    p_star = None
    oracle_energy = None
    if oracle_model is not None:
        _, ground_idx, _ = ising.ground_states(oracle_model)
        ground_set = set(ground_idx)
        p_star = ising.ground_state_probability(oracle_model)
        oracle_energy = all_config_energies(oracle_model)

    mask = (1 << plan.num_spin_qubits) - 1
    fixed_state = None
    if not plan.has_measurements:
        fixed_state = builder.execute(plan, rng).final_state

    best_cfg, best_energy = None, math.inf
    for attempt in range(1, max_attempts + 1):
        if fixed_state is not None:
            cfg = statevec.sample(fixed_state, rng) & mask
        else:
            result = builder.execute(plan, rng)
            cfg = statevec.sample(result.final_state, rng) & mask
        if oracle_model is not None:
            e = float(oracle_energy[cfg])
            if e < best_energy:
                best_cfg, best_energy = cfg, e
            if cfg in ground_set:
                return GroundSearchReport(cfg, e, attempt, True, p_star,
                                          1.0 / p_star)
        else:
            if best_cfg is None:
                best_cfg, best_energy = cfg, math.nan
    return GroundSearchReport(best_cfg, best_energy, max_attempts, False,
                              p_star, None if p_star is None else 1.0 / p_star)


# ---------------------------------------------------------------------------
# bond-sign statistics

def _first_measure_step(plan, workbit=None):
    measures = [s for s in plan.steps if isinstance(s, builder.MeasureStep)]
    if workbit is not None:
        for s in measures:
            if s.workbit == workbit:
                return s
        raise ValueError(f"workbit {workbit} is not measured by this plan")
    if len(measures) != 1:
        raise ValueError("plan must have exactly one measurement "
                         "(or pass the workbit of interest)")
    return measures[0]


def connector_ratio_oracle(plan: builder.CircuitPlan, workbit=None) -> float:
    """Exact ferro/antiferro probability ratio of the first-measured bond.

    Enumerates the lattice present before that bond is closed (prefab
    plaquettes for assemblies, the open chain for closed chains) and
    reweights by e^{±β|J|·s_a·s_b}.
    """
    step = _first_measure_step(plan, workbit)
    meta = plan.meta
    beta = plan.beta
    if meta.get("kind") == "closed-chain":
        base = ising.open_chain_model(meta["couplings"], beta)
    elif meta.get("kind") == "assembly":
        bonds = []
        for p in meta["plaquettes"]:
            bonds.extend(p.bonds)
        base = ising.make_model(plan.num_spin_qubits, bonds, beta)
    else:
        raise ValueError("no pre-closing model for this plan kind")
    a, b = step.bond
    e = ising.all_energies(base)
    idx = np.arange(e.size)
    same = 1.0 - 2.0 * (((idx >> a) ^ (idx >> b)) & 1)
    w0 = np.exp(-beta * (e - e.min()))
    num = float((w0 * np.exp(beta * step.magnitude * same)).sum())
    den = float((w0 * np.exp(-beta * step.magnitude * same)).sum())
    return num / den


def bond_sign_frequency(plan: builder.CircuitPlan, count: int,
                        rng: np.random.Generator, workbit=None,
                        with_oracle: bool = True) -> BondSignReport:
    """Empirical ferro/antiferro frequencies of one measured bond.

    Checks the realised ratio against the x^{±4|J|} window and, when the
    oracle is available, reports the normal-approximation deviation scale
    of p̂ against the exact ratio.
    """
    step = _first_measure_step(plan, workbit)
    ferro = 0
    for _ in range(count):
        result = builder.execute(plan, rng)
        if result.outcomes[step.workbit] == 1:
            ferro += 1
    p_hat = ferro / count
    q_hat = 1.0 - p_hat
    ratio = p_hat / q_hat if q_hat > 0 else math.inf
    upper = math.exp(2.0 * plan.beta * step.magnitude)
    lower = 1.0 / upper
    # the window check allows 3σ of sampling noise on the empirical ratio
    sigma_p = math.sqrt(max(p_hat * q_hat, 1.0 / count) / count)
    sigma_r = sigma_p / max(q_hat, 1.0 / count) ** 2
    within = (q_hat == 0.0) or (lower - 3 * sigma_r <= ratio <= upper + 3 * sigma_r)
    oracle_ratio = None
    sigma = None
    if with_oracle:
        oracle_ratio = connector_ratio_oracle(plan, step.workbit)
        p_exact = oracle_ratio / (1.0 + oracle_ratio)
        sigma = math.sqrt(p_exact * (1.0 - p_exact) / count)
    return BondSignReport(ferro, count, p_hat, q_hat, ratio, lower, upper,
                          within, oracle_ratio, sigma)


# ---------------------------------------------------------------------------
# defect density of assembled lattices

def _assembly_defect_probability(plan: builder.CircuitPlan) -> float:
    """Exact probability that the in-between plaquette closes frustrated.

    Valid for the two-plaquette assembly with two connecting bonds: the
    joint law of the measured signs weights each realised lattice by its
    partition function, and the new plaquette is frustrated when the two
    connector signs disagree (the prefab edges are ferromagnetic).
    """
    meta = plan.meta
    if meta.get("kind") != "assembly" or len(meta["connectors"]) != 2:
        raise ValueError("exact defect probability needs a two-connector assembly")
    bonds_fixed = []
    for p in meta["plaquettes"]:
        bonds_fixed.extend(p.bonds)
    z = {}
    for s1 in (1, -1):
        for s2 in (1, -1):
            bonds = list(bonds_fixed)
            for sgn, (a, b, j) in zip((s1, s2), meta["connectors"]):
                bonds.append((a, b, sgn * j))
            model = ising.make_model(plan.num_spin_qubits, bonds, plan.beta)
            z[(s1, s2)] = ising.gibbs_distribution(model).partition_function
    total = sum(z.values())
    return (z[(1, -1)] + z[(-1, 1)]) / total


def defect_density_scan(betas, samples_per_beta: int, rng: np.random.Generator,
                        coupling: float = 1.0, num_plaquettes: int = 2):
    """Frustrated-connector-plaquette fraction of a 2×2m assembly per β.

    Returns one row per β with the sampled fraction and, for the
    two-plaquette assembly, the exact fraction from enumeration.
    """
    rows = []
    for beta in betas:
        plan = builder.two_by_m_assembly(num_plaquettes, coupling, beta)
        connector_bits = sorted(plan.meta["connector_workbits"].values())
        defects = 0
        for _ in range(samples_per_beta):
            result = builder.execute(plan, rng)
            signs = [result.outcomes[w] for w in connector_bits]
            pairs = zip(signs[0::2], signs[1::2])
            defects += sum(1 for s1, s2 in pairs if s1 * s2 == -1)
        pairs_per_run = len(connector_bits) // 2
        measured = defects / (samples_per_beta * pairs_per_run)
        exact = (_assembly_defect_probability(plan)
                 if num_plaquettes == 2 else math.nan)
        rows.append(DefectScanRow(float(beta), measured, exact, samples_per_beta))
    return rows


def log_slope(rows, beta_min: float = 2.0, use_exact: bool = True) -> float:
    """Least-squares slope of log(fraction) against β for β ≥ beta_min."""
    xs = [r.beta for r in rows if r.beta >= beta_min]
    ys = [math.log(r.exact_fraction if use_exact else r.measured_fraction)
          for r in rows if r.beta >= beta_min]
    if len(xs) < 2:
        raise ValueError("need at least two points past beta_min")
    slope, _ = np.polyfit(xs, ys, 1)
    return float(slope)


# ---------------------------------------------------------------------------
# statistical acceptance helpers

def chi_square_uniform_pvalue(counts: dict, total: int, num_cells: int) -> float:
    observed = np.zeros(num_cells)
    for cfg, c in counts.items():
        observed[cfg] += c
    expected = total / num_cells
    chi2 = float(((observed - expected) ** 2 / expected).sum())
    return float(stats.chi2.sf(chi2, num_cells - 1))


def geometric_fit_pvalue(attempts, p_star: float) -> float:
    """χ² goodness-of-fit of attempt counts to a geometric law.

    Cells with expected count below 5 are merged into the tail to keep the
    statistic valid at success probabilities near 1.
    """
    attempts = np.asarray(attempts)
    n = attempts.size
    max_k = int(attempts.max())
    cells = []
    k = 1
    while k <= max_k + 1:
        p_cell = (1 - p_star) ** (k - 1) * p_star
        tail = (1 - p_star) ** (k - 1)
        if n * tail < 5 or k > max_k:
            cells.append((k, None, n * tail))          # k and beyond
            break
        if n * p_cell >= 5:
            cells.append((k, k, n * p_cell))
            k += 1
        else:
            cells.append((k, None, n * tail))
            break
    if len(cells) < 2:
        return 1.0
    chi2 = 0.0
    for lo, hi, expected in cells:
        if hi is None:
            observed = int((attempts >= lo).sum())
        else:
            observed = int(((attempts >= lo) & (attempts <= hi)).sum())
        chi2 += (observed - expected) ** 2 / expected
    return float(stats.chi2.sf(chi2, len(cells) - 1))
