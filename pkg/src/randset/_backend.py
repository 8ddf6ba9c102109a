"""Import-time selection between the compiled core and the numpy fallback.

Set ``RANDSET_BACKEND=python`` to force the fallback even when the extension
is built.
"""
import os

from . import _fallback

BACKEND = "python"
kernels = _fallback

if os.environ.get("RANDSET_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"


def get_kernels(name=None):
    """Return a kernel namespace by name (``"cython"`` or ``"python"``)."""
    if name is None:
        return kernels
    if name == "python":
        return _fallback
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
