"""Kernel selection.

The compiled extension is used when it was built; otherwise (or when
``CQEDFEEDBACK_PURE_PYTHON`` is set to a non-empty value other than ``0``)
the numpy implementation is used.
"""

import os

from . import _pykernels

_force_python = os.environ.get("CQEDFEEDBACK_PURE_PYTHON", "") not in ("", "0")

kernels = _pykernels
if not _force_python:
    try:
        from . import _ckernels as kernels
    except ImportError:
        kernels = _pykernels

BACKEND = kernels.NAME


def available():
    """Names of the importable kernel implementations."""
    names = [_pykernels.NAME]
    try:
        from . import _ckernels  # noqa: F401
    except ImportError:
        return names
    return ["cython"] + names


def get(name):
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
