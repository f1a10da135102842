"""Constructors for the unitary gate library.

Every gate is built directly from its defining action on basis kets, so the
matrix entries follow from one place.  Local matrix indices are in ket
order: a gate written on |a, b, c⟩ has index 4·bit(a) + 2·bit(b) + bit(c),
with bit 0 for spin −1 and bit 1 for spin +1.

Throughout, x ≡ e^{β/2}, so x^a = e^{βa/2}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .statevec import GateMatrix

SPINS = (-1, 1)


def _bit(s: int) -> int:
    return (s + 1) // 2


def _xpow(beta: float, exponent: float) -> float:
    return math.exp(0.5 * beta * exponent)


def entangle_normalizer(coupling: float, beta: float) -> float:
    """c = 2 cosh(β·G), the row normaliser of the entangling gate."""
    return 2.0 * math.cosh(beta * coupling)


def field_normalizer(coupling: float, delta: float, beta: float, s: int) -> float:
    """c_s = 2 cosh(β(G + s·Δ)) for the field-carrying entangling gate."""
    return 2.0 * math.cosh(beta * (coupling + s * delta))


@dataclass(frozen=True)
class GateParams:
    """Parameter bundle for gate construction."""

    coupling: float = 0.0
    delta: float = 0.0
    beta: float = 1.0

    @property
    def x(self) -> float:
        return math.exp(0.5 * self.beta)

    @property
    def c(self) -> float:
        return entangle_normalizer(self.coupling, self.beta)

    def c_s(self, s: int) -> float:
        return field_normalizer(self.coupling, self.delta, self.beta, s)


def identity_gate(arity: int = 1) -> GateMatrix:
    return GateMatrix(arity, np.eye(1 << arity, dtype=np.complex128), f"I{arity}")


def rotation_r() -> GateMatrix:
    """π/2 rotation: R|s⟩ = (|−s⟩ − s|s⟩)/√2."""
    mat = np.zeros((2, 2), dtype=np.complex128)
    for s in SPINS:
        col = _bit(s)
        mat[_bit(-s), col] += 1.0 / math.sqrt(2.0)
        mat[_bit(s), col] += -s / math.sqrt(2.0)
    return GateMatrix(1, mat, "R")


def ising_entangle(coupling: float, beta: float) -> GateMatrix:
    """Entangling gate S^G:

    S|s_i, s_j⟩ = (x^{−G·s_i}|s_i, s_j⟩ + s_j·x^{G·s_i}|s_i, −s_j⟩)/√c
    """
    c = entangle_normalizer(coupling, beta)
    mat = np.zeros((4, 4), dtype=np.complex128)
    for si in SPINS:
        for sj in SPINS:
            col = 2 * _bit(si) + _bit(sj)
            mat[2 * _bit(si) + _bit(sj), col] += _xpow(beta, -coupling * si) / math.sqrt(c)
            mat[2 * _bit(si) + _bit(-sj), col] += sj * _xpow(beta, coupling * si) / math.sqrt(c)
    return GateMatrix(2, mat, f"S[G={coupling:g}]")


def xor_gate() -> GateMatrix:
    """Comparison gate: X|s_i, s_j⟩ = s_i·s_j |s_i, s_i·s_j⟩."""
    mat = np.zeros((4, 4), dtype=np.complex128)
    for si in SPINS:
        for sj in SPINS:
            col = 2 * _bit(si) + _bit(sj)
            mat[2 * _bit(si) + _bit(si * sj), col] = si * sj
    return GateMatrix(2, mat, "X")


def omega(abs_coupling: float, beta: float) -> GateMatrix:
    """Loop-closing operator on |s_i, s_j, w⟩: entangle (i, w), then compare (j, w).

    Ω|s_i, s_j, w⟩ = −s_j (x^{|J|s_i}|s_i, s_j, −s_j·w⟩
                           − w·x^{−|J|s_i}|s_i, s_j, s_j·w⟩)/√c
    """
    if abs_coupling < 0:
        raise ValueError("coupling magnitude must be non-negative")
    c = entangle_normalizer(abs_coupling, beta)
    mat = np.zeros((8, 8), dtype=np.complex128)
    for si in SPINS:
        for sj in SPINS:
            for w in SPINS:
                col = 4 * _bit(si) + 2 * _bit(sj) + _bit(w)
                base = 4 * _bit(si) + 2 * _bit(sj)
                mat[base + _bit(-sj * w), col] += -sj * _xpow(beta, abs_coupling * si) / math.sqrt(c)
                mat[base + _bit(sj * w), col] += sj * w * _xpow(beta, -abs_coupling * si) / math.sqrt(c)
    return GateMatrix(3, mat, f"Omega[|J|={abs_coupling:g}]")


def rotation_r_field(delta: float, beta: float) -> GateMatrix:
    """Field-biased rotation: R^Δ|s⟩ = (x^{sΔ}|−⟩ − s·x^{−sΔ}|+⟩)/√(2cosh βΔ)."""
    c = field_normalizer(0.0, delta, beta, +1)
    mat = np.zeros((2, 2), dtype=np.complex128)
    for s in SPINS:
        col = _bit(s)
        mat[_bit(-1), col] += _xpow(beta, s * delta) / math.sqrt(c)
        mat[_bit(+1), col] += -s * _xpow(beta, -s * delta) / math.sqrt(c)
    return GateMatrix(1, mat, f"R[D={delta:g}]")


def ising_entangle_field(coupling: float, delta: float, beta: float) -> GateMatrix:
    """Entangling gate with a field bias on the target spin:

    S|s_i, s_j⟩ = (x^{−(G·s_i+Δ)}|s_i, s_j⟩ + s_j·x^{G·s_i+Δ}|s_i, −s_j⟩)/√c_{s_i}
    """
    mat = np.zeros((4, 4), dtype=np.complex128)
    for si in SPINS:
        c = field_normalizer(coupling, delta, beta, si)
        for sj in SPINS:
            col = 2 * _bit(si) + _bit(sj)
            mat[2 * _bit(si) + _bit(sj), col] += _xpow(beta, -(coupling * si + delta)) / math.sqrt(c)
            mat[2 * _bit(si) + _bit(-sj), col] += sj * _xpow(beta, coupling * si + delta) / math.sqrt(c)
    return GateMatrix(2, mat, f"S[G={coupling:g},D={delta:g}]")


def omega_field(abs_coupling: float, abs_delta: float, beta: float) -> GateMatrix:
    """Loop-closing operator with a field bias, reducing to ``omega`` at Δ=0."""
    if abs_coupling < 0 or abs_delta < 0:
        raise ValueError("magnitudes must be non-negative")
    mat = np.zeros((8, 8), dtype=np.complex128)
    for si in SPINS:
        c = field_normalizer(abs_coupling, abs_delta, beta, si)
        for sj in SPINS:
            for w in SPINS:
                col = 4 * _bit(si) + 2 * _bit(sj) + _bit(w)
                base = 4 * _bit(si) + 2 * _bit(sj)
                expo = abs_coupling * si + abs_delta
                mat[base + _bit(-sj * w), col] += -sj * _xpow(beta, expo) / math.sqrt(c)
                mat[base + _bit(sj * w), col] += sj * w * _xpow(beta, -expo) / math.sqrt(c)
    return GateMatrix(3, mat, f"Omega[|J|={abs_coupling:g},|D|={abs_delta:g}]")
