# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled gate application kernel.

Same contract as ``_kernels_numpy.apply_gate``: strided gather/scatter over
the non-target index space, never materialising a full 2^n x 2^n matrix.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


def apply_gate(amps, int num_qubits, matrix, targets):
    src = np.ascontiguousarray(amps, dtype=np.complex128)
    gate = np.ascontiguousarray(matrix, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(src.shape[0], dtype=np.complex128)
    cdef int k = len(targets)
    cdef int sub = 1 << k
    cdef Py_ssize_t groups = 1 << (num_qubits - k)

    # Offsets of the 2^k local assignments; targets[0] is the local MSB.
    cdef cnp.ndarray[cnp.int64_t, ndim=1] offsets = np.zeros(sub, dtype=np.int64)
    cdef int m, j
    for m in range(sub):
        for j in range(k):
            if (m >> (k - 1 - j)) & 1:
                offsets[m] |= <long long>1 << targets[j]

    # Target positions sorted ascending, for expanding the group counter.
    cdef cnp.ndarray[cnp.int64_t, ndim=1] pos = np.sort(np.asarray(targets, dtype=np.int64))

    cdef const cnp.complex128_t[::1] sv = src
    cdef cnp.complex128_t[::1] ov = out
    cdef const cnp.complex128_t[:, ::1] gv = gate
    cdef const cnp.int64_t[::1] offv = offsets
    cdef const cnp.int64_t[::1] posv = pos

    cdef Py_ssize_t g, base
    cdef long long idx[8]
    cdef cnp.complex128_t acc
    cdef int a, b, t

    with nogil:
        for g in range(groups):
            base = g
            for t in range(k):
                base = ((base >> posv[t]) << (posv[t] + 1)) | (base & ((<Py_ssize_t>1 << posv[t]) - 1))
            for a in range(sub):
                idx[a] = base + offv[a]
            for a in range(sub):
                acc = 0
                for b in range(sub):
                    acc = acc + gv[a, b] * sv[idx[b]]
                ov[idx[a]] = acc
    return out
