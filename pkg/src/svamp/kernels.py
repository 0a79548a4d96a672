"""Hot-kernel dispatch.

The compiled extension ``_ckernels`` is used when it imports; otherwise the
numpy implementations in ``_kernels_py`` are used.  Set ``SVAMP_PURE_PYTHON=1``
to force the fallback.  Both backends return identical results for identical
inputs, so transcripts do not depend on which one is active.
"""
import os

from . import _kernels_py

if os.environ.get("SVAMP_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = "cython" if _impl is not _kernels_py else "python"

gf_mul_array = _impl.gf_mul_array
product_histogram = _impl.product_histogram
draw_setting_bits = _impl.draw_setting_bits
sample_outcomes = _impl.sample_outcomes
bell_count = _impl.bell_count
simulate_iid_rounds = _impl.simulate_iid_rounds
pivot_inplace = _impl.pivot_inplace


def available_backends():
    """Map backend name -> kernel module for every backend that imports."""
    backends = {"python": _kernels_py}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        backends["cython"] = _ckernels
    return backends
