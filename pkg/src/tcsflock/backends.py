"""Kernel backend selection.

The hot numeric kernels exist twice: numba @njit loops and pure-numpy
vectorized fallbacks. The active backend is chosen once at import from the
environment variable ``TCSFLOCK_BACKEND``:

    auto   (default) numba when importable, numpy otherwise
    numba  require the numba kernels, raise if unavailable
    numpy  force the pure-numpy path

``benchmarks/bench_kernels.py`` times both sets side by side.

All reductions run in a fixed summation order (serial numba loops, or
numpy's deterministic pairwise sums), so scalar outputs are reproducible
bit for bit for a fixed configuration; sweep sub-runs execute sequentially,
each writing to its own output slot.
"""

import os

from . import _kernels_numpy

_HOT_KERNELS = (
    "convolve_direct",
    "pairwise_alignment",
    "cross_alignment",
    "max_pairwise_dist",
    "deposit_periodic",
    "fluid_sources",
    "alignment_matrix",
    "nt_predict",
    "nt_correct",
    "weno5_left",
    "weno5_right",
    "weno5_flux_divergence",
)


def _select():
    choice = os.environ.get("TCSFLOCK_BACKEND", "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"TCSFLOCK_BACKEND must be auto|numba|numpy, got {choice!r}")
    if choice == "numpy":
        return _kernels_numpy, "numpy"
    try:
        from . import _kernels_numba
        return _kernels_numba, "numba"
    except ImportError:
        if choice == "numba":
            raise
        return _kernels_numpy, "numpy"


_impl, ACTIVE = _select()

convolve_direct = _impl.convolve_direct
pairwise_alignment = _impl.pairwise_alignment
cross_alignment = _impl.cross_alignment
max_pairwise_dist = _impl.max_pairwise_dist
deposit_periodic = _impl.deposit_periodic
fluid_sources = _impl.fluid_sources
alignment_matrix = _impl.alignment_matrix
nt_predict = _impl.nt_predict
nt_correct = _impl.nt_correct
weno5_left = _impl.weno5_left
weno5_right = _impl.weno5_right
weno5_flux_divergence = _impl.weno5_flux_divergence


def kernel_pairs():
    """Yield (name, numpy_fn, numba_fn) for every hot kernel, or numpy twice
    when numba is unavailable. Used by consistency tests and the benchmark."""
    try:
        from . import _kernels_numba as nb
    except ImportError:
        nb = _kernels_numpy
    for name in _HOT_KERNELS:
        yield name, getattr(_kernels_numpy, name), getattr(nb, name)
