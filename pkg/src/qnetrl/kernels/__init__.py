"""Kernel backend selection.

The compiled Cython extension is used when it imported successfully; the
numpy fallback otherwise. QNETRL_KERNELS=compiled|python forces a backend
(compiled raises if the extension is unavailable). Both backends expose the
same functions with identical semantics; see benchmarks/bench_kernels.py for
a speed comparison.
"""

import os

from . import py_backend

_choice = os.environ.get("QNETRL_KERNELS", "auto")
if _choice not in ("auto", "compiled", "python"):
    raise ImportError(f"QNETRL_KERNELS must be auto, compiled or python, got {_choice!r}")

_compiled = None
if _choice in ("auto", "compiled"):
    try:
        from . import _ext as _compiled
    except ImportError:
        if _choice == "compiled":
            raise

if _compiled is not None:
    BACKEND = "compiled"
    _impl = _compiled
else:
    BACKEND = "python"
    _impl = py_backend

affine = _impl.affine
affine_relu = _impl.affine_relu
relu_backward = _impl.relu_backward
affine_backward = _impl.affine_backward
affine_backward_data = _impl.affine_backward_data


def available_backends():
    names = ["python"]
    if _compiled is not None:
        names.insert(0, "compiled")
    return names


def get_backend(name):
    """Explicit backend lookup, used by parity tests and the benchmark."""
    if name == "python":
        return py_backend
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernel extension is not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")
