"""Hot numerical kernels with a compiled core and a NumPy fallback.

The compiled Cython extension is picked at import time when present; set
``SRTANNEAL_FORCE_FALLBACK=1`` to force the pure-Python implementation.
Both implementations keep the same fixed per-element accumulation order
(diagonal, then single-bit flips by qubit index, then coupler terms by edge
index), which makes a pair of runs related by a spin-reversal transform
bitwise-identical up to basis relabeling within either implementation.

Run ``python -m benchmarks.bench_kernels`` (from the repository root) to
compare the two backends.
"""

import os

from . import _python

_force_fallback = os.environ.get("SRTANNEAL_FORCE_FALLBACK", "") not in ("", "0")

if not _force_fallback:
    try:
        from . import _native

        have_native = True
    except ImportError:
        _native = None
        have_native = False
else:
    _native = None
    have_native = False

_impl = _native if have_native else _python

impl_name = "native" if have_native else "python"

matvec_real = _impl.matvec_real
rhs = _impl.rhs
evolve_adaptive = _impl.evolve_adaptive

python_impl = _python

__all__ = [
    "have_native",
    "impl_name",
    "matvec_real",
    "rhs",
    "evolve_adaptive",
    "python_impl",
]
