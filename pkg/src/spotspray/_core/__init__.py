"""Kernel backend selection.

Imports the compiled extension when available, otherwise the pure-Python
fallback.  ``SPOTSPRAY_PURE_PYTHON=1`` in the environment forces the
fallback (used by the parity tests and the benchmark).
"""

import os

from . import fallback

if os.environ.get("SPOTSPRAY_PURE_PYTHON") == "1":
    kernels = fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        kernels = fallback
        BACKEND = "python"


def available_backends():
    """Names of the kernel backends importable in this environment."""
    names = ["python"]
    try:
        from . import _kernels  # noqa: F401

        names.insert(0, "compiled")
    except ImportError:
        pass
    return names


def get_backend(name):
    """Return the kernel module for `name` ("compiled" or "python")."""
    if name == "python":
        return fallback
    if name == "compiled":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
