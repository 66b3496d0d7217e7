"""Backend selection for the hot gate kernels.

The compiled Cython core is used when it imports; otherwise, or when the
environment variable ``QPL_BACKEND=numpy`` is set, the numpy implementation
is used.  Both expose ``apply_1q``, ``apply_2q`` and ``adjoint_2q`` with
identical in-place semantics on ``(2**n, m)`` complex128 arrays.
"""
import os

from . import _npkernels

BACKEND = "numpy"
_impl = _npkernels

if os.environ.get("QPL_BACKEND", "").lower() != "numpy":
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _npkernels
    else:
        BACKEND = "cython"

apply_1q = _impl.apply_1q
apply_2q = _impl.apply_2q
adjoint_2q = _impl.adjoint_2q
apply_kq = _npkernels.apply_kq


def get_backend(name):
    """Return the kernel module for ``name`` (``"cython"`` or ``"numpy"``)."""
    if name == "numpy":
        return _npkernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
