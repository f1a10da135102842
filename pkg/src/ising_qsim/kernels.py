"""Kernel backend selection.

The compiled extension is preferred when importable; set
``ISING_QSIM_KERNELS=numpy`` or ``=compiled`` to force a backend.
"""

import os

from . import _kernels_numpy

_forced = os.environ.get("ISING_QSIM_KERNELS", "").strip().lower()

if _forced == "numpy":
    _impl = _kernels_numpy
elif _forced == "compiled":
    from . import _kernels as _impl  # noqa: F401  (ImportError is intentional here)
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_numpy


def active_backend():
    return _impl.BACKEND


def apply_gate(amps, num_qubits, matrix, targets):
    # the compiled kernel is specialised for the 1..3 qubit gate library
    if len(targets) > 3:
        return _kernels_numpy.apply_gate(amps, num_qubits, matrix, targets)
    return _impl.apply_gate(amps, num_qubits, matrix, targets)
