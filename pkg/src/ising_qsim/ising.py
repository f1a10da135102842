"""Classical Ising models and the exact enumeration oracle.

Configurations are encoded as basis indices with the same convention as the
statevector engine: bit i of the index is site i, bit value 1 means spin +1.
All exact quantities (energies, Gibbs weights, partition functions, ground
states) are computed by direct enumeration, independent of the circuit path
they are used to check.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import ModelFormatError, ResourceLimitError

ENUMERATION_CAP = 24
_CHUNK = 1 << 20

TOPOLOGY_TAGS = ("open-chain", "closed-chain", "bethe", "square-2d", "cubic-3d", "general")


@dataclass(frozen=True)
class IsingModel:
    """Sites, signed bonds, optional per-site fields, inverse temperature."""

    num_sites: int
    bonds: tuple  # ((i, j, coupling), ...)
    fields: tuple  # per-site h_i
    beta: float
    topology: str = "general"

    def __post_init__(self):
        if self.num_sites < 1:
            raise ValueError("need at least one site")
        if not (self.beta > 0.0 and math.isfinite(self.beta)):
            raise ValueError("beta must be positive and finite")
        if self.topology not in TOPOLOGY_TAGS:
            raise ValueError(f"unknown topology tag {self.topology!r}")
        if len(self.fields) != self.num_sites:
            raise ValueError("fields length must equal num_sites")
        seen = set()
        for i, j, _ in self.bonds:
            if i == j:
                raise ValueError(f"bond ({i},{j}) joins a site to itself")
            if not (0 <= i < self.num_sites and 0 <= j < self.num_sites):
                raise ValueError(f"bond ({i},{j}) out of range")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate bond {key}")
            seen.add(key)

    @property
    def x(self) -> float:
        """x = e^{β/2}, the amplitude base."""
        return math.exp(0.5 * self.beta)

    @property
    def num_bonds(self) -> int:
        return len(self.bonds)


def make_model(num_sites, bonds, beta, fields=None, topology="general") -> IsingModel:
    bonds = tuple((int(i), int(j), float(g)) for i, j, g in bonds)
    if fields is None:
        fields = (0.0,) * num_sites
    return IsingModel(num_sites, bonds, tuple(float(h) for h in fields), float(beta), topology)


def open_chain_model(couplings, beta, fields=None) -> IsingModel:
    n = len(couplings) + 1
    bonds = [(i, i + 1, g) for i, g in enumerate(couplings)]
    return make_model(n, bonds, beta, fields, "open-chain")


def closed_chain_model(couplings, beta, fields=None) -> IsingModel:
    """couplings has length N: the last entry is the bond (N-1, 0)."""
    n = len(couplings)
    if n < 3:
        raise ValueError("closed chain needs at least 3 sites")
    bonds = [(i, i + 1, couplings[i]) for i in range(n - 1)] + [(n - 1, 0, couplings[-1])]
    return make_model(n, bonds, beta, fields, "closed-chain")


def tree_model(num_sites, edges, beta) -> IsingModel:
    return make_model(num_sites, edges, beta, None, "bethe")


# ---------------------------------------------------------------------------
# configurations and energies

def config_from_index(idx: int, num_sites: int) -> tuple:
    return tuple(1 if (idx >> i) & 1 else -1 for i in range(num_sites))


def index_from_config(config) -> int:
    idx = 0
    for i, s in enumerate(config):
        if s == 1:
            idx |= 1 << i
        elif s != -1:
            raise ValueError("spins must be ±1")
    return idx


def energy(model: IsingModel, config) -> float:
    """−Σ G_ij s_i s_j − Σ h_i s_i for one configuration."""
    if len(config) != model.num_sites:
        raise ValueError(f"config length {len(config)} != {model.num_sites} sites")
    e = 0.0
    for i, j, g in model.bonds:
        e -= g * config[i] * config[j]
    for i, h in enumerate(model.fields):
        e -= h * config[i]
    return e


def all_energies(model: IsingModel) -> np.ndarray:
    """Energies of all 2^N configurations, indexed by configuration index."""
    if model.num_sites > ENUMERATION_CAP:
        raise ResourceLimitError(
            f"enumeration over {model.num_sites} sites exceeds cap {ENUMERATION_CAP}"
        )
    dim = 1 << model.num_sites
    out = np.empty(dim, dtype=np.float64)
    for start in range(0, dim, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, dim), dtype=np.int64)
        e = np.zeros(idx.size, dtype=np.float64)
        for i, j, g in model.bonds:
            same = 1.0 - 2.0 * (((idx >> i) ^ (idx >> j)) & 1)
            e -= g * same
        for i, h in enumerate(model.fields):
            if h != 0.0:
                e -= h * (2.0 * ((idx >> i) & 1) - 1.0)
        out[start:start + idx.size] = e
    return out


@dataclass(frozen=True)
class GibbsDistribution:
    """Exact per-configuration weights e^{−βH}/Z and the partition function."""

    weights: np.ndarray
    partition_function: float
    beta: float

    @property
    def num_sites(self) -> int:
        return int(self.weights.size).bit_length() - 1


def gibbs_distribution(model: IsingModel) -> GibbsDistribution:
    e = all_energies(model)
    # factor out the minimum to avoid overflow at large beta
    e_min = e.min()
    raw = np.exp(-model.beta * (e - e_min))
    z_shifted = raw.sum()
    weights = raw / z_shifted
    z = z_shifted * math.exp(-model.beta * e_min)
    weights.flags.writeable = False
    return GibbsDistribution(weights, float(z), model.beta)


def ground_states(model: IsingModel, atol: float = 1e-10):
    """Exhaustive (min energy, configuration indices, degeneracy)."""
    e = all_energies(model)
    e_min = float(e.min())
    idx = np.nonzero(e <= e_min + atol)[0]
    return e_min, tuple(int(i) for i in idx), len(idx)


def ground_state_probability(model: IsingModel) -> float:
    """p* = g·e^{−βE_min}/Z, the Gibbs mass of the ground-state set."""
    e = all_energies(model)
    e_min = e.min()
    raw = np.exp(-model.beta * (e - e_min))
    mass = raw[np.nonzero(e <= e_min + 1e-10)].sum()
    return float(mass / raw.sum())


# ---------------------------------------------------------------------------
# amplitude sign conventions

def phi_sign(config) -> int:
    """Open-chain sign word φ_N = −Π_{i≥2}(−s_i).

    The gate sequence produces amplitudes with the opposite global sign,
    −φ_N = Π_{i≥2}(−s_i); the difference is an unobservable global phase.
    """
    p = 1
    for s in config[1:]:
        p *= -s
    return -p


def big_phi_sign(config) -> int:
    """Closed-chain sign word Φ_N = (−1)^N Π s_i (matches the gate sequence)."""
    p = 1
    for s in config:
        p *= s
    return p if len(config) % 2 == 0 else -p


# ---------------------------------------------------------------------------
# partial partition functions of closed chains

@dataclass(frozen=True)
class PartialPartitionPair:
    """Closed-chain partition functions with the last bond fixed to ±|J|.

    ``levels`` holds the (Z_k^0, Z_k^1) intermediates of the constrained
    recursion, k = 2..N, where Z_k^0 (Z_k^1) sums configurations with the
    chain's first and k-th spins aligned (anti-aligned).
    """

    z_plus: float
    z_minus: float
    last_magnitude: float
    beta: float
    levels: tuple = field(repr=False, default=())

    @property
    def ratio(self) -> float:
        return self.z_plus / self.z_minus


def partial_partition_functions(couplings, last_magnitude, beta) -> PartialPartitionPair:
    """Solve the aligned/anti-aligned recursion for a closed chain.

    ``couplings`` are the N−1 open-chain bonds; ``last_magnitude`` is |J_N|
    of the closing bond.  Base case Z_2^0 = 2x^{2J_1}, Z_2^1 = 2x^{−2J_1};
    each extension multiplies by the new bond's aligned/anti-aligned weight.
    (A constant factor that some displayed forms of the recursion carry
    cancels from every ratio and is fixed here by matching enumeration.)
    """
    couplings = [float(g) for g in couplings]
    n = len(couplings) + 1
    if n < 3:
        raise ValueError("closed chain needs at least 3 sites")
    if last_magnitude < 0:
        raise ValueError("last bond magnitude must be non-negative")

    def x2(a):  # x^{2a} = e^{βa}
        return math.exp(beta * a)

    z0, z1 = 2.0 * x2(couplings[0]), 2.0 * x2(-couplings[0])
    levels = [(z0, z1)]
    for g in couplings[1:]:
        z0, z1 = x2(g) * z0 + x2(-g) * z1, x2(-g) * z0 + x2(g) * z1
        levels.append((z0, z1))
    j = float(last_magnitude)
    z_plus = x2(j) * z0 + x2(-j) * z1
    z_minus = x2(-j) * z0 + x2(j) * z1
    return PartialPartitionPair(z_plus, z_minus, j, float(beta), tuple(levels))


def partial_pair_by_expansion(num_bonds_equal_j, signs, coupling_magnitude, beta):
    """Cross-check of the pair for |J_i| = J chains via the subset-sum expansion.

    Sums x^{4J·Σ_subset} over all subsets of the first N−1 signed bonds,
    with the alternating x^{±2J} weights attached by subset size parity.
    Slow (2^{N−1} subsets); intended for verification only.
    """
    j = float(coupling_magnitude)
    n = num_bonds_equal_j + 1

    def x(a):
        return math.exp(0.5 * beta * a)

    js = [s * j for s in signs]
    if len(js) != n - 1:
        raise ValueError("need N-1 bond signs")
    z = {+1: 0.0, -1: 0.0}
    for k in range(n):
        f_k = 0.0
        for subset in combinations(range(n - 1), k):
            f_k += x(4.0 * sum(js[i] for i in subset))
        for last_sign in (+1, -1):
            z[last_sign] += x(2.0 * (j + (-1) ** (k + n - 1) * last_sign * j)) * f_k
    # prefactor fixed against enumeration: 2, not the displayed 2^{N-2}
    # (any constant cancels from every ratio anyway)
    scale = 2.0 / x(2.0 * (j + sum(js)))
    return scale * z[+1], scale * z[-1]


@dataclass(frozen=True)
class BoundsReport:
    ratio: float
    lower: float
    upper: float
    within: bool
    gap_to_upper: float
    gap_to_lower: float


def ratio_bounds_check(pair: PartialPartitionPair, coupling_magnitude, beta) -> BoundsReport:
    """Check x^{−4|J|} ≤ Z⁺/Z⁻ ≤ x^{4|J|} and report the margins."""
    upper = math.exp(2.0 * beta * abs(coupling_magnitude))
    lower = 1.0 / upper
    r = pair.ratio
    return BoundsReport(
        ratio=r,
        lower=lower,
        upper=upper,
        within=lower - 1e-12 <= r <= upper + 1e-12,
        gap_to_upper=upper - r,
        gap_to_lower=r - lower,
    )


# ---------------------------------------------------------------------------
# frustration

def frustration_parity(loop) -> bool:
    """True iff a closed loop has an odd number of antiferromagnetic bonds.

    ``loop`` is either a sequence of couplings in loop order (length ≥ 3) or
    a sequence of (i, j, coupling) bonds that must form a single cycle.
    """
    loop = list(loop)
    if loop and isinstance(loop[0], (tuple, list)):
        _check_single_cycle(loop)
        couplings = [g for _, _, g in loop]
    else:
        if len(loop) < 3:
            raise ValueError("a closed loop needs at least 3 bonds")
        couplings = loop
    return sum(1 for g in couplings if g < 0) % 2 == 1


def _check_single_cycle(bonds):
    degree = {}
    for i, j, _ in bonds:
        degree[i] = degree.get(i, 0) + 1
        degree[j] = degree.get(j, 0) + 1
    if any(d != 2 for d in degree.values()) or len(degree) != len(bonds):
        raise ValueError("bonds do not form a single closed loop")
    # connectivity: walk the cycle
    adj = {}
    for i, j, _ in bonds:
        adj.setdefault(i, []).append(j)
        adj.setdefault(j, []).append(i)
    start = bonds[0][0]
    seen = {start}
    prev, cur = None, start
    for _ in range(len(bonds)):
        nxt = [v for v in adj[cur] if v != prev]
        if not nxt:
            break
        prev, cur = cur, nxt[0]
        seen.add(cur)
    if len(seen) != len(degree):
        raise ValueError("bonds do not form a single closed loop")


def loop_spectrum_equivalence(num_sites: int, beta: float = 1.0, coupling: float = 1.0) -> bool:
    """All equal-parity ±J closed chains of a given length share one spectrum.

    Exhaustively enumerates every sign realization of the closed chain
    (2^N of them) and compares sorted energy spectra within each
    frustration-parity class.
    """
    if num_sites > 12:
        raise ResourceLimitError("spectrum equivalence capped at 12 sites")
    spectra = {0: None, 1: None}
    for signs_idx in range(1 << num_sites):
        signs = [1 if (signs_idx >> b) & 1 else -1 for b in range(num_sites)]
        couplings = [coupling * s for s in signs]
        model = closed_chain_model(couplings, beta)
        spec = np.sort(all_energies(model))
        parity = sum(1 for s in signs if s < 0) % 2
        if spectra[parity] is None:
            spectra[parity] = spec
        elif not np.allclose(spec, spectra[parity], atol=1e-10):
            return False
    return True


# ---------------------------------------------------------------------------
# effective models for the field-carrying chains

def _field_correction(coupling, delta, beta):
    cp = 2.0 * math.cosh(beta * (coupling + delta))
    cm = 2.0 * math.cosh(beta * (coupling - delta))
    return math.log(cp / cm) / (2.0 * beta)


def open_field_model(couplings, deltas, beta) -> IsingModel:
    """The open chain the field-biased gate sequence actually simulates.

    Site i < N−1 carries h_i = Δ_i − (1/2β)·log of the row-normaliser ratio
    of its outgoing gate; the last site carries h = Δ_N unchanged.
    """
    n = len(couplings) + 1
    if len(deltas) != n:
        raise ValueError("need one delta per site")
    h = [0.0] * n
    for i in range(n - 1):
        h[i] = deltas[i] - _field_correction(couplings[i], deltas[i + 1], beta)
    h[n - 1] = deltas[n - 1]
    return open_chain_model(couplings, beta, fields=h)


def deltas_for_fields(couplings, target_fields, beta):
    """Gate field parameters that make an open chain simulate given h_i.

    Back-substitution: Δ_N = h_N, then Δ_i = h_i + correction(J_i, Δ_{i+1})
    walking down the chain; exact, no iteration needed.
    """
    n = len(couplings) + 1
    if len(target_fields) != n:
        raise ValueError("need one target field per site")
    deltas = [0.0] * n
    deltas[n - 1] = float(target_fields[n - 1])
    for i in range(n - 2, -1, -1):
        deltas[i] = target_fields[i] + _field_correction(couplings[i], deltas[i + 1], beta)
    return deltas


def closed_field_model(couplings, last_magnitude, first_delta_magnitude,
                       realized_sign, deltas, beta) -> IsingModel:
    """Closed chain simulated after the loop-closing step realises a sign.

    ``realized_sign`` (±1) applies to both the closing bond and the first
    site's field; ``deltas`` are (Δ_1 … Δ_N) with Δ_1 ignored in favour of
    the realised ±|Δ_1|.
    """
    n = len(couplings) + 1
    if realized_sign not in (-1, 1):
        raise ValueError("realized_sign must be ±1")
    if len(deltas) != n:
        raise ValueError("need one delta per site")
    j_last = realized_sign * abs(last_magnitude)
    d1 = realized_sign * abs(first_delta_magnitude)
    h = [0.0] * n
    h[0] = d1 - _field_correction(couplings[0], deltas[1], beta)
    for i in range(1, n - 1):
        h[i] = deltas[i] - _field_correction(couplings[i], deltas[i + 1], beta)
    h[n - 1] = deltas[n - 1] - _field_correction(j_last, d1, beta)
    all_couplings = list(couplings) + [j_last]
    return closed_chain_model(all_couplings, beta, fields=h)


# ---------------------------------------------------------------------------
# model document I/O

_SCHEMA_FIELDS = {"sites", "beta", "bonds", "fields", "topology"}


def parse_model(text: str) -> IsingModel:
    """Parse the JSON model document (schema in the README); rejects unknown keys."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    unknown = set(doc) - _SCHEMA_FIELDS
    if unknown:
        raise ModelFormatError(f"unknown fields: {sorted(unknown)}")
    for required in ("sites", "beta", "bonds"):
        if required not in doc:
            raise ModelFormatError(f"missing required field '{required}'")
    sites = doc["sites"]
    if not isinstance(sites, int) or sites < 1:
        raise ModelFormatError("'sites' must be a positive integer")
    bonds = doc["bonds"]
    if not isinstance(bonds, list) or any(len(b) != 3 for b in bonds):
        raise ModelFormatError("'bonds' must be a list of [i, j, coupling] triples")
    fields = doc.get("fields")
    if fields is not None and (not isinstance(fields, list) or len(fields) != sites):
        raise ModelFormatError("'fields' must list one value per site")
    topology = doc.get("topology", "general")
    try:
        return make_model(sites, bonds, doc["beta"], fields, topology)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(str(exc)) from exc


def load_model(path) -> IsingModel:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_model(fh.read())


def dump_model(model: IsingModel) -> str:
    doc = {
        "sites": model.num_sites,
        "beta": model.beta,
        "bonds": [[i, j, g] for i, j, g in model.bonds],
        "fields": list(model.fields),
        "topology": model.topology,
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def save_model(model: IsingModel, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_model(model) + "\n")
