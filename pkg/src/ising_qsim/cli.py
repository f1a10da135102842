"""Command-line front end.

Subcommands: ``prepare`` (amplitude dump against the exact oracle),
``sample`` (histogram experiments), ``groundstate`` (repeated search) and
``verify`` (built-in identity suites).  Every report embeds the model
hash, the seed and the tool version, so fixed-seed reruns are reproducible
byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys

import numpy as np

from . import __version__, builder, ising, kernels, sampler, statevec, verify
from .errors import ModelFormatError


def _fmt(x) -> str:
    return f"{x:.17g}"


def _model_hash(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()[:16]


def _config_string(cfg: int, num_sites: int) -> str:
    return "".join("+" if (cfg >> i) & 1 else "-" for i in range(num_sites))


def _load(args) -> ising.IsingModel:
    model = ising.load_model(args.model)
    if args.beta is not None:
        model = ising.make_model(model.num_sites, model.bonds, args.beta,
                                 model.fields, model.topology)
    return model


def plan_for_model(model: ising.IsingModel, policy: str) -> builder.CircuitPlan:
    """Compile a model document into a circuit plan.

    Open chains with fields are matched exactly by solving for the gate
    field parameters.  Closed chains must be field-free here (the closing
    step superposes the first site's field sign); use the library API for
    field-carrying plaquettes.
    """
    has_fields = any(h != 0.0 for h in model.fields)
    if model.topology == "open-chain":
        couplings = _chain_couplings(model, closed=False)
        if not has_fields:
            return builder.open_chain_circuit(couplings, model.beta)
        deltas = ising.deltas_for_fields(couplings, model.fields, model.beta)
        return builder.open_chain_circuit(couplings, model.beta, fields=deltas)
    if model.topology == "closed-chain":
        if has_fields:
            raise ModelFormatError(
                "closed-chain models with fields are not supported by the CLI; "
                "the closing step randomises the first site's field sign")
        couplings = _chain_couplings(model, closed=True)
        if policy == "auto":
            policy = (builder.POLICY_INTERFERE_PLUS if couplings[-1] >= 0
                      else builder.POLICY_INTERFERE_MINUS)
        return builder.closed_chain_circuit(couplings[:-1], abs(couplings[-1]),
                                            model.beta, policy=policy)
    if model.topology == "bethe":
        if has_fields:
            raise ModelFormatError("fields on trees are not supported by the CLI")
        return builder.bethe_circuit(model.bonds, model.beta)
    raise ModelFormatError(
        f"cannot compile topology {model.topology!r}; "
        "supported: open-chain, closed-chain, bethe")


def _chain_couplings(model: ising.IsingModel, closed: bool):
    n = model.num_sites
    expected = {(i, i + 1) for i in range(n - 1)}
    if closed:
        expected.add((0, n - 1))
    got = {}
    for i, j, g in model.bonds:
        got[(min(i, j), max(i, j))] = g
    if set(got) != expected:
        raise ModelFormatError(
            f"bonds do not match the {'closed' if closed else 'open'}-chain "
            "topology (expected consecutive pairs)")
    out = [got[(i, i + 1)] for i in range(n - 1)]
    if closed:
        out.append(got[(0, n - 1)])
    return out


def _header_lines(args, extra=()):
    lines = [f"# ising-qsim v{__version__} backend={kernels.active_backend()}",
             f"# model: {args.model} sha256={_model_hash(args.model)}",
             f"# seed: {args.seed}"]
    lines.extend(extra)
    return lines


def _emit(args, text: str):
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_prepare(args) -> int:
    model = _load(args)
    plan = plan_for_model(model, args.policy)
    rng = np.random.default_rng(np.random.PCG64(args.seed))
    result = builder.execute(plan, rng)
    realized = builder.result_model(plan, result if plan.has_measurements else None)
    weights = ising.gibbs_distribution(realized).weights

    probs = statevec.born_probabilities(result.final_state)
    nspin = plan.num_spin_qubits
    spin_probs = np.zeros(1 << nspin)
    mask = (1 << nspin) - 1
    for idx, p in enumerate(probs):
        spin_probs[idx & mask] += p
    dev = np.abs(spin_probs - weights)

    extra = []
    if result.realized_bonds:
        shown = " ".join(f"({i},{j}):{s:+d}" for (i, j), s in
                         sorted(result.realized_bonds.items()))
        extra.append(f"# realized bonds: {shown}")
    if args.json:
        doc = {"version": __version__, "model_sha256": _model_hash(args.model),
               "seed": args.seed, "backend": kernels.active_backend(),
               "realized_bonds": {f"{i},{j}": s for (i, j), s in
                                  result.realized_bonds.items()},
               "rows": [{"config": _config_string(c, nspin),
                         "probability": spin_probs[c], "oracle_weight": weights[c],
                         "abs_dev": dev[c]} for c in range(1 << nspin)],
               "max_abs_deviation": float(dev.max())}
        _emit(args, json.dumps(doc, sort_keys=True, indent=1) + "\n")
    else:
        lines = _header_lines(args, extra)
        lines.append("config,probability,oracle_weight,abs_dev")
        for c in range(1 << nspin):
            lines.append(f"{_config_string(c, nspin)},{_fmt(spin_probs[c])},"
                         f"{_fmt(weights[c])},{_fmt(dev[c])}")
        lines.append(f"# max_abs_deviation: {_fmt(dev.max())}")
        _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_sample(args) -> int:
    model = _load(args)
    plan = plan_for_model(model, args.policy)
    rng = np.random.default_rng(np.random.PCG64(args.seed))
    oracle = None
    if not plan.has_measurements:
        oracle = builder.result_model(plan)
    report = sampler.sample_configurations(plan, args.samples, rng, oracle=oracle)
    nspin = plan.num_spin_qubits
    weights = (ising.gibbs_distribution(oracle).weights if oracle is not None
               else None)
    if args.json:
        doc = {"version": __version__, "model_sha256": _model_hash(args.model),
               "seed": args.seed, "samples": report.total,
               "backend": kernels.active_backend(),
               "tv_distance": report.tv_distance_to_oracle,
               "energy_mean": report.energy_mean,
               "magnetization_mean": report.magnetization_mean,
               "counts": {_config_string(c, nspin): n
                          for c, n in sorted(report.counts.items())}}
        _emit(args, json.dumps(doc, sort_keys=True, indent=1) + "\n")
    else:
        lines = _header_lines(args, [f"# samples: {report.total}"])
        lines.append("config,count,frequency,oracle_weight")
        for c in sorted(report.counts):
            w = _fmt(weights[c]) if weights is not None else "nan"
            lines.append(f"{_config_string(c, nspin)},{report.counts[c]},"
                         f"{_fmt(report.counts[c] / report.total)},{w}")
        if report.tv_distance_to_oracle is not None:
            lines.append(f"# tv_distance: {_fmt(report.tv_distance_to_oracle)}")
        if report.energy_mean is not None:
            lines.append(f"# energy_mean: {_fmt(report.energy_mean)}")
        lines.append(f"# magnetization_mean: {_fmt(report.magnetization_mean)}")
        _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_groundstate(args) -> int:
    model = _load(args)
    plan = plan_for_model(model, args.policy)
    rng = np.random.default_rng(np.random.PCG64(args.seed))
    oracle = builder.result_model(plan) if not plan.has_measurements else None
    report = sampler.ground_state_search(plan, rng, max_attempts=args.max_attempts,
                                         oracle_model=oracle)
    nspin = plan.num_spin_qubits
    if args.json:
        doc = {"version": __version__, "model_sha256": _model_hash(args.model),
               "seed": args.seed, "config": _config_string(report.config, nspin),
               "energy": report.energy, "attempts": report.attempts,
               "verified": report.verified, "p_star": report.p_star,
               "expected_attempts": report.expected_attempts}
        _emit(args, json.dumps(doc, sort_keys=True, indent=1) + "\n")
    else:
        lines = _header_lines(args)
        lines.append(f"config: {_config_string(report.config, nspin)}")
        lines.append(f"energy: {_fmt(report.energy)}")
        lines.append(f"attempts: {report.attempts}")
        lines.append(f"verified: {report.verified}")
        if report.p_star is not None:
            lines.append(f"p_star: {_fmt(report.p_star)}")
            lines.append(f"expected_attempts: {_fmt(report.expected_attempts)}")
        _emit(args, "\n".join(lines) + "\n")
    return 0 if report.verified or oracle is None else 1


def cmd_verify(args) -> int:
    results = verify.run_suite(args.suite)
    failed = [r for r in results if not r.passed]
    if args.json:
        doc = {"version": __version__, "suite": args.suite,
               "checks": [{"suite": r.suite, "name": r.name,
                           "residual": r.residual, "tolerance": r.tolerance,
                           "passed": r.passed} for r in results],
               "passed": not failed}
        _emit(args, json.dumps(doc, sort_keys=True, indent=1) + "\n")
    else:
        lines = []
        for r in results:
            status = "PASS" if r.passed else "FAIL"
            lines.append(f"{status} [{r.suite}] {r.name}: "
                         f"residual={_fmt(r.residual)} tol={_fmt(r.tolerance)}")
        lines.append(f"{len(results) - len(failed)}/{len(results)} checks passed")
        _emit(args, "\n".join(lines) + "\n")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ising-qsim",
        description="Gibbs-superposition preparation experiments on a "
                    "simulated qubit register")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_model=True):
        if needs_model:
            p.add_argument("--model", required=True, help="model JSON document")
            p.add_argument("--beta", type=float, default=None,
                           help="override the model's inverse temperature")
            p.add_argument("--policy", default="auto",
                           choices=["auto"] + list(builder.POLICIES),
                           help="closing-bond policy for closed chains")
        p.add_argument("--seed", type=int, default=0, help="RNG seed (PCG64)")
        p.add_argument("--out", default=None, help="write the report to a file")
        p.add_argument("--json", action="store_true",
                       help="machine-readable output")

    p = sub.add_parser("prepare", help="amplitude dump against the exact oracle")
    common(p)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("sample", help="repeated preparation-and-measurement")
    common(p)
    p.add_argument("--samples", type=int, required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("groundstate", help="repeat until a ground state appears")
    common(p)
    p.add_argument("--max-attempts", type=int, default=10000)
    p.set_defaults(func=cmd_groundstate)

    p = sub.add_parser("verify", help="run built-in identity suites")
    p.add_argument("--suite", default="all", choices=list(verify.SUITES))
    common(p, needs_model=False)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ModelFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
