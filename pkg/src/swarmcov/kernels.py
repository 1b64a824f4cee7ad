"""Backend selection for the blob-field kernels.

The compiled extension is used when it is importable; set
``SWARMCOV_BACKEND=python`` to force the numpy implementation.
"""
import os

from . import _kernels_py as python_backend

try:
    if os.environ.get("SWARMCOV_BACKEND", "").lower() == "python":
        raise ImportError("numpy backend requested")
    from . import _kernels as compiled_backend
except ImportError:
    compiled_backend = None

_impl = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if _impl is compiled_backend else "python"

gaussian_field = _impl.gaussian_field
gaussian_grad = _impl.gaussian_grad
indicator_field = _impl.indicator_field
