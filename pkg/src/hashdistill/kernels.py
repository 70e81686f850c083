"""Kernel selection: compiled extension when importable, numpy otherwise.

Set ``HASHDISTILL_PURE=1`` to force the numpy path.
"""

from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("HASHDISTILL_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

destination_index = _impl.destination_index
split_round = _impl.split_round
branch_max_sum = _impl.branch_max_sum


def backend_module(name: str):
    """Return the kernel module for ``"python"`` or ``"cython"`` (for benchmarks and tests)."""
    if name == "python":
        return _kernels_py
    from . import _kernels

    return _kernels
