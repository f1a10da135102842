"""Compile Ising models into executable gate programs.

A plan is an ordered list of gate applications, workbit measurements and
subspace-selection steps acting on a register of spin qubits (site i is
qubit i) followed by workbits.  Executing a plan with a seeded generator is
deterministic; measured workbit outcomes map +1 → ferromagnetic bond,
−1 → antiferromagnetic bond.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gates, interference, ising, statevec
from .errors import CapabilityError

POLICY_MEASURE = "measure"
POLICY_INTERFERE_PLUS = "interfere-plus"
POLICY_INTERFERE_MINUS = "interfere-minus"
POLICIES = (POLICY_MEASURE, POLICY_INTERFERE_PLUS, POLICY_INTERFERE_MINUS)


@dataclass(frozen=True)
class GateStep:
    gate: statevec.GateMatrix
    targets: tuple


@dataclass(frozen=True)
class MeasureStep:
    workbit: int
    bond: tuple  # (site_i, site_j)
    magnitude: float
    delta_magnitude: float = 0.0


@dataclass(frozen=True)
class InterferenceStep:
    sites: tuple
    workbit: int
    couplings: tuple
    last_magnitude: float
    subspace: int
    deltas: tuple | None = None
    last_delta_magnitude: float = 0.0


@dataclass(frozen=True)
class CircuitPlan:
    """Ordered program realising one preparation of the register."""

    num_spin_qubits: int
    num_workbits: int
    beta: float
    steps: tuple
    bond_ledger: dict = field(default_factory=dict)  # workbit -> (i, j)
    meta: dict = field(default_factory=dict)

    @property
    def num_qubits(self) -> int:
        return self.num_spin_qubits + self.num_workbits

    @property
    def has_measurements(self) -> bool:
        return any(isinstance(s, MeasureStep) for s in self.steps)

    def describe(self) -> str:
        """Human-readable ordered step dump."""
        lines = [f"register: {self.num_spin_qubits} spin qubits + "
                 f"{self.num_workbits} workbits, beta={self.beta:g}"]
        for k, step in enumerate(self.steps):
            if isinstance(step, GateStep):
                lines.append(f"{k:3d}: apply {step.gate.label} on {step.targets}")
            elif isinstance(step, MeasureStep):
                lines.append(f"{k:3d}: measure workbit {step.workbit} "
                             f"(decides bond {step.bond}, |J|={step.magnitude:g})")
            else:
                word = "ferro" if step.subspace == 1 else "antiferro"
                negatives = sum(1 for g in step.couplings if g < 0)
                frustrated = (negatives + (step.subspace < 0)) % 2 == 1
                kind = "frustrated" if frustrated else "unfrustrated"
                lines.append(f"{k:3d}: interfere plaquette {step.sites} "
                             f"(workbit {step.workbit}, keep {word} closing: "
                             f"{kind} loop)")
        return "\n".join(lines)


@dataclass(frozen=True)
class ExecutionResult:
    final_state: statevec.StateVector
    realized_bonds: dict  # (i, j) -> ±1
    outcomes: dict        # workbit -> ±1
    trace: tuple          # per-step norms


# ---------------------------------------------------------------------------
# chain builders

def open_chain_circuit(couplings, beta, fields=None) -> CircuitPlan:
    """Rotation on the first site, then one entangling gate per bond."""
    n = len(couplings) + 1
    if n < 2:
        raise ValueError("an open chain needs at least 2 sites")
    steps = []
    if fields is None:
        steps.append(GateStep(gates.rotation_r(), (0,)))
        for i, g in enumerate(couplings):
            steps.append(GateStep(gates.ising_entangle(g, beta), (i, i + 1)))
    else:
        if len(fields) != n:
            raise ValueError("need one field parameter per site")
        steps.append(GateStep(gates.rotation_r_field(fields[0], beta), (0,)))
        for i, g in enumerate(couplings):
            steps.append(GateStep(gates.ising_entangle_field(g, fields[i + 1], beta),
                                  (i, i + 1)))
    meta = {"kind": "open-chain", "couplings": tuple(float(g) for g in couplings),
            "deltas": None if fields is None else tuple(float(d) for d in fields)}
    return CircuitPlan(n, 0, float(beta), tuple(steps), {}, meta)


def closed_chain_circuit(couplings, last_magnitude, beta, fields=None,
                         policy=POLICY_MEASURE) -> CircuitPlan:
    """Open chain, then close the loop onto a workbit.

    ``fields`` are the per-site Δ parameters; with fields present the first
    rotation is the plain one and |Δ_1| enters through the loop closing.
    The policy decides the closing bond: measure it, or erase one subspace.
    """
    n = len(couplings) + 1
    if n < 3:
        raise ValueError("a closed chain needs at least 3 sites")
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    workbit = n
    steps = []
    delta_mag = 0.0
    if fields is None:
        steps.append(GateStep(gates.rotation_r(), (0,)))
        for i, g in enumerate(couplings):
            steps.append(GateStep(gates.ising_entangle(g, beta), (i, i + 1)))
        steps.append(GateStep(gates.omega(last_magnitude, beta), (n - 1, 0, workbit)))
    else:
        if len(fields) != n:
            raise ValueError("need one field parameter per site")
        delta_mag = abs(float(fields[0]))
        steps.append(GateStep(gates.rotation_r(), (0,)))
        for i, g in enumerate(couplings):
            steps.append(GateStep(gates.ising_entangle_field(g, fields[i + 1], beta),
                                  (i, i + 1)))
        steps.append(GateStep(gates.omega_field(last_magnitude, delta_mag, beta),
                              (n - 1, 0, workbit)))
    if policy == POLICY_MEASURE:
        steps.append(MeasureStep(workbit, (n - 1, 0), float(last_magnitude), delta_mag))
    else:
        if n > interference.INTERFERENCE_SPIN_CAP:
            _cap_error(n)
        subspace = +1 if policy == POLICY_INTERFERE_PLUS else -1
        steps.append(InterferenceStep(tuple(range(n)), workbit,
                                      tuple(float(g) for g in couplings),
                                      float(last_magnitude), subspace,
                                      None if fields is None else tuple(float(d) for d in fields),
                                      delta_mag))
    meta = {"kind": "closed-chain", "couplings": tuple(float(g) for g in couplings),
            "last_magnitude": float(last_magnitude), "policy": policy,
            "deltas": None if fields is None else tuple(float(d) for d in fields)}
    return CircuitPlan(n, 1, float(beta), tuple(steps), {workbit: (n - 1, 0)}, meta)


def _cap_error(n):
    raise CapabilityError(
        f"interference policy supports at most "
        f"{interference.INTERFERENCE_SPIN_CAP} spins, got {n}"
    )


def bethe_circuit(edges, beta, edge_order=None) -> CircuitPlan:
    """Rotation on the root, then one entangling gate per tree edge.

    ``edges`` are (parent, child, coupling) triples forming a single tree;
    gates from a common parent commute, so any order in which every edge
    follows the edge that attached its parent is valid.  ``edge_order``
    overrides the default breadth-first order.
    """
    edges = [(int(p), int(c), float(g)) for p, c, g in edges]
    if not edges:
        raise ValueError("need at least one edge")
    children = {c for _, c, _ in edges}
    parents = {p for p, _, _ in edges}
    nodes = children | parents
    roots = parents - children
    if len(children) != len(edges):
        raise ValueError("a node has two parents; this is not a tree "
                         "(closed loops need the lattice assembly builder)")
    if len(roots) != 1:
        raise ValueError("tree must have exactly one root, found "
                         f"{sorted(roots)} (cycles or forests are not trees; "
                         "closed loops need the lattice assembly builder)")
    root = roots.pop()
    n = len(nodes)
    if nodes != set(range(n)):
        raise ValueError("tree nodes must be numbered 0..N-1")
    if len(edges) != n - 1:
        raise ValueError("edge count does not match a spanning tree")

    if edge_order is None:
        order, attached, remaining = [], {root}, list(range(len(edges)))
        while remaining:
            progress = [k for k in remaining if edges[k][0] in attached]
            if not progress:
                raise ValueError("edges are not connected to the root")
            for k in progress:
                attached.add(edges[k][1])
                order.append(k)
                remaining.remove(k)
    else:
        order = list(edge_order)
        if sorted(order) != list(range(len(edges))):
            raise ValueError("edge_order must permute the edge indices")
        attached = {root}
        for k in order:
            p, c, _ = edges[k]
            if p not in attached:
                raise ValueError(f"edge {k} applied before its parent {p} is attached")
            attached.add(c)

    steps = [GateStep(gates.rotation_r(), (root,))]
    for k in order:
        p, c, g = edges[k]
        steps.append(GateStep(gates.ising_entangle(g, beta), (p, c)))
    meta = {"kind": "bethe", "edges": tuple(edges), "root": root}
    return CircuitPlan(n, 0, float(beta), tuple(steps), {}, meta)


# ---------------------------------------------------------------------------
# lattice assembly from prefabricated plaquettes

@dataclass(frozen=True)
class PrefabPlaquette:
    """A loop with fully determined bonds, built by subspace selection.

    ``sites`` in loop order; ``couplings`` has one entry per loop bond with
    the last entry the signed closing bond.
    """

    sites: tuple
    couplings: tuple

    def __post_init__(self):
        if len(self.sites) != len(self.couplings):
            raise ValueError("need one coupling per loop bond")
        if len(self.sites) < 3:
            raise ValueError("a plaquette needs at least 3 sites")
        if len(set(self.sites)) != len(self.sites):
            raise ValueError("plaquette sites must be distinct")

    @property
    def bonds(self):
        s = self.sites
        return tuple((s[i], s[(i + 1) % len(s)], self.couplings[i])
                     for i in range(len(s)))


def lattice_assembly_circuit(plaquettes, connectors, beta,
                             connector_order=None) -> CircuitPlan:
    """Prefabricated plaquettes joined by measured connecting bonds.

    Each plaquette is prepared in its requested bond configuration by
    subspace selection; each connector (site_a, site_b, |J|) closes a new
    bond onto a fresh workbit which is measured immediately.  Connector
    order is free (the closing operators commute); entangling gates always
    precede the closings that read their targets.
    """
    plaquettes = tuple(plaquettes)
    connectors = [(int(a), int(b), float(j)) for a, b, j in connectors]
    occupied = []
    for p in plaquettes:
        occupied.extend(p.sites)
    if len(set(occupied)) != len(occupied):
        raise ValueError("plaquettes overlap")
    occ = set(occupied)
    for a, b, _ in connectors:
        if a not in occ or b not in occ:
            raise ValueError(f"connecting bond ({a},{b}) touches an empty site")
    n = max(occ) + 1
    if occ != set(range(n)):
        raise ValueError("plaquette sites must cover 0..N-1 without gaps")
    for p in plaquettes:
        if len(p.sites) > interference.INTERFERENCE_SPIN_CAP:
            _cap_error(len(p.sites))

    if connector_order is None:
        connector_order = list(range(len(connectors)))
    if sorted(connector_order) != list(range(len(connectors))):
        raise ValueError("connector_order must permute the connector indices")

    steps = []
    ledger = {}
    workbit = n
    for p in plaquettes:
        k = len(p.sites)
        steps.append(GateStep(gates.rotation_r(), (p.sites[0],)))
        for i in range(k - 1):
            steps.append(GateStep(gates.ising_entangle(p.couplings[i], beta),
                                  (p.sites[i], p.sites[i + 1])))
        mag = abs(p.couplings[-1])
        steps.append(GateStep(gates.omega(mag, beta),
                              (p.sites[-1], p.sites[0], workbit)))
        subspace = 1 if p.couplings[-1] >= 0 else -1
        steps.append(InterferenceStep(p.sites, workbit, p.couplings[:-1], mag, subspace))
        workbit += 1
    # connector workbits are tied to the connector index, not the program
    # order, so reordering the closings leaves every qubit's role fixed
    connector_workbits = {k: workbit + k for k in range(len(connectors))}
    for k in connector_order:
        a, b, j = connectors[k]
        wb = connector_workbits[k]
        steps.append(GateStep(gates.omega(j, beta), (a, b, wb)))
        steps.append(MeasureStep(wb, (a, b), j))
        ledger[wb] = (a, b)
    workbit += len(connectors)

    meta = {"kind": "assembly", "plaquettes": plaquettes,
            "connectors": tuple(connectors),
            "connector_workbits": connector_workbits}
    return CircuitPlan(n, workbit - n, float(beta), tuple(steps), ledger, meta)


def two_by_m_assembly(num_plaquettes, coupling, beta, connector_order=None) -> CircuitPlan:
    """A 2 × 2·num_plaquettes lattice of unfrustrated square plaquettes.

    Site (row r, column c) is qubit 2c + r.  Neighbouring plaquettes are
    joined by a bottom and a top connecting bond of magnitude |coupling|.
    """
    if num_plaquettes < 1:
        raise ValueError("need at least one plaquette")
    j = float(coupling)
    plaqs = []
    for p in range(num_plaquettes):
        bl, br = 2 * (2 * p), 2 * (2 * p + 1)
        tl, tr = bl + 1, br + 1
        plaqs.append(PrefabPlaquette((bl, br, tr, tl), (j, j, j, j)))
    connectors = []
    for p in range(num_plaquettes - 1):
        right = 2 * (2 * p + 1)
        left_next = 2 * (2 * p + 2)
        connectors.append((right, left_next, abs(j)))          # bottom row
        connectors.append((right + 1, left_next + 1, abs(j)))  # top row
    return lattice_assembly_circuit(plaqs, connectors, beta, connector_order)


# ---------------------------------------------------------------------------
# execution

def _forced_lookup(forced, step):
    if forced is None:
        return None
    for key in (step.workbit, step.bond, (step.bond[1], step.bond[0])):
        if key in forced:
            return int(forced[key])
    return None


def execute(plan: CircuitPlan, rng: np.random.Generator,
            forced_outcomes=None) -> ExecutionResult:
    """Run the plan; deterministic for a fixed seed.

    ``forced_outcomes`` optionally maps a workbit index or a bond (i, j)
    to ±1, replaying a specific set of measurement results (the state is
    projected accordingly); used for order-invariance checks and for
    reproducing a realised lattice.  Bond keys are stable under connector
    reordering; workbit numbering is not.
    """
    state = statevec.new_ground(plan.num_qubits)
    realized = {}
    outcomes = {}
    trace = []
    for step in plan.steps:
        if isinstance(step, GateStep):
            state = statevec.apply_gate(state, step.gate, step.targets)
        elif isinstance(step, MeasureStep):
            forced = _forced_lookup(forced_outcomes, step)
            if forced is not None:
                outcome = forced
                state = statevec.collapse_qubit(state, step.workbit, outcome)
            else:
                outcome, state = statevec.measure_qubit(state, step.workbit, rng)
            realized[step.bond] = outcome
            outcomes[step.workbit] = outcome
        else:
            state = interference.apply_interference(
                state, step.sites, step.workbit, step.couplings,
                step.last_magnitude, plan.beta, step.subspace,
                step.deltas, step.last_delta_magnitude)
            outcomes[step.workbit] = step.subspace
        trace.append(state.norm())
    return ExecutionResult(state, realized, outcomes, tuple(trace))


def spin_configuration(plan: CircuitPlan, basis_index: int) -> int:
    """Project a full-register basis index onto the spin qubits."""
    return basis_index & ((1 << plan.num_spin_qubits) - 1)


def result_model(plan: CircuitPlan, result: ExecutionResult | None = None) -> ising.IsingModel:
    """The exact Ising model whose Gibbs distribution the run prepared.

    For plans with measured bonds the realised signs are read from
    ``result``; effective per-site fields are included for field-carrying
    chains.
    """
    meta = plan.meta
    kind = meta.get("kind")
    beta = plan.beta
    if kind == "open-chain":
        if meta["deltas"] is None:
            return ising.open_chain_model(meta["couplings"], beta)
        return ising.open_field_model(meta["couplings"], meta["deltas"], beta)
    if kind == "closed-chain":
        policy = meta["policy"]
        if policy == POLICY_MEASURE:
            if result is None:
                raise ValueError("measure-policy plans need an execution result")
            sign = result.realized_bonds[(plan.num_spin_qubits - 1, 0)]
        else:
            sign = 1 if policy == POLICY_INTERFERE_PLUS else -1
        if meta["deltas"] is None:
            couplings = list(meta["couplings"]) + [sign * meta["last_magnitude"]]
            return ising.closed_chain_model(couplings, beta)
        return ising.closed_field_model(meta["couplings"], meta["last_magnitude"],
                                        abs(meta["deltas"][0]), sign,
                                        meta["deltas"], beta)
    if kind == "bethe":
        return ising.tree_model(plan.num_spin_qubits, meta["edges"], beta)
    if kind == "assembly":
        bonds = []
        for p in meta["plaquettes"]:
            bonds.extend(p.bonds)
        for a, b, j in meta["connectors"]:
            if result is None:
                raise ValueError("assemblies need an execution result")
            bonds.append((a, b, result.realized_bonds[(a, b)] * j))
        return ising.make_model(plan.num_spin_qubits, bonds, beta, None, "square-2d")
    raise ValueError(f"plan of kind {kind!r} has no model reconstruction")
