"""Backend selection for the hot kernels.

The compiled extension is preferred; the numpy fallback is used when it is
not built or when ``UPCONCAVE_PURE_PYTHON`` is set to a non-empty value other
than ``0``.  Custom-integrand routines (``simpson_refine``, ``sample_profile``,
``profile_cdf``) always come from the numpy module.
"""
import os

import numpy as np

from . import _kernels_py

_force_pure = os.environ.get("UPCONCAVE_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_pure:
        raise ImportError("pure-Python backend forced")
    from . import _ckernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _kernels_py
    BACKEND = "python"

# the compiled sampler bisects one uniform at a time; past this many draws the
# vectorized numpy bisection is faster
BATCH_SAMPLES = 64

project_capped_simplex = _impl.project_capped_simplex
ray_weight = _impl.ray_weight


def sample_ray(c, s, u, tol=1e-10, max_iter=60, n_panels=_kernels_py.N_PANELS):
    if _impl is not _kernels_py and np.size(u) >= BATCH_SAMPLES:
        return _kernels_py.sample_ray(c, s, u, tol, max_iter, n_panels)
    return _impl.sample_ray(c, s, u, tol, max_iter, n_panels)

ray_integrand = _kernels_py.ray_integrand
simpson_refine = _kernels_py.simpson_refine
sample_profile = _kernels_py.sample_profile
profile_cdf = _kernels_py.profile_cdf


def get_backend(name):
    """Return the kernel module for ``"cython"`` or ``"python"``."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
