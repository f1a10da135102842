#!/usr/bin/env python3
"""Benchmark the compiled gate kernel against the numpy fallback.

Times strided 1-, 2- and 3-qubit gate application across register sizes,
plus an end-to-end chain preparation.  Run after installing the package:

    python3 benchmarks/bench_kernels.py [--max-qubits 22]
"""

import argparse
import time

import numpy as np

from ising_qsim import _kernels_numpy, builder, gates
from ising_qsim import kernels as kernel_select

try:
    from ising_qsim import _kernels as compiled
except ImportError:
    compiled = None


def random_state(num_qubits, rng):
    a = rng.normal(size=1 << num_qubits) + 1j * rng.normal(size=1 << num_qubits)
    return a / np.linalg.norm(a)


def random_unitary(arity, rng):
    dim = 1 << arity
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return np.ascontiguousarray(np.linalg.qr(m)[0])


def time_backend(impl, amps, n, gate, targets, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        impl.apply_gate(amps, n, gate, targets)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_gates(max_qubits):
    rng = np.random.default_rng(1)
    print(f"{'qubits':>6} {'arity':>5} {'numpy':>12} {'compiled':>12} {'speedup':>8}")
    for n in range(10, max_qubits + 1, 4):
        amps = random_state(n, rng)
        for arity in (1, 2, 3):
            gate = random_unitary(arity, rng)
            targets = tuple(int(t) for t in rng.choice(n, size=arity, replace=False))
            repeats = 5 if n >= 20 else 20
            t_np = time_backend(_kernels_numpy, amps, n, gate, targets, repeats)
            if compiled is not None:
                t_cy = time_backend(compiled, amps, n, gate, targets, repeats)
                print(f"{n:>6} {arity:>5} {t_np * 1e3:>10.3f}ms {t_cy * 1e3:>10.3f}ms "
                      f"{t_np / t_cy:>7.2f}x")
            else:
                print(f"{n:>6} {arity:>5} {t_np * 1e3:>10.3f}ms {'n/a':>12} {'':>8}")


def bench_chain_preparation():
    """End-to-end: repeated preparation of a 12-site chain state."""
    rng = np.random.default_rng(2)
    couplings = rng.choice([-1.0, 1.0], size=11)
    plan = builder.open_chain_circuit(couplings, 1.0)
    reps = 200
    t0 = time.perf_counter()
    for _ in range(reps):
        builder.execute(plan, rng)
    per_run = (time.perf_counter() - t0) / reps
    print(f"\n12-site chain preparation ({kernel_select.active_backend()} backend): "
          f"{per_run * 1e3:.3f} ms/run")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--max-qubits", type=int, default=22)
    args = parser.parse_args()
    if compiled is None:
        print("compiled kernel not importable; timing the numpy fallback only\n")
    bench_gates(args.max_qubits)
    bench_chain_preparation()


if __name__ == "__main__":
    main()
