"""Compute-kernel backend selection.

Two interchangeable kernel modules exist: a numba-jitted one and a pure-numpy
one. MSC_BACKEND picks between them: "numba", "numpy", or "auto" (default,
numba when importable). The choice is re-read on every call so tests can flip
the environment variable at runtime; imported modules are cached.
"""

from __future__ import annotations

import importlib
import importlib.util
import os

_ENV_VAR = "MSC_BACKEND"
_CHOICES = ("auto", "numba", "numpy")
_modules: dict[str, object] = {}


def numba_available() -> bool:
    return importlib.util.find_spec("numba") is not None


def backend_name() -> str:
    """Resolved backend name, honoring MSC_BACKEND."""
    env = os.environ.get(_ENV_VAR, "auto").lower()
    if env not in _CHOICES:
        raise ValueError(
            f"{_ENV_VAR} must be one of {_CHOICES}, got {env!r}"
        )
    if env == "auto":
        return "numba" if numba_available() else "numpy"
    if env == "numba" and not numba_available():
        raise RuntimeError(f"{_ENV_VAR}=numba but numba is not installed")
    return env


def kernels():
    """The active kernel module (see kernels_numpy for the call surface)."""
    name = backend_name()
    mod = _modules.get(name)
    if mod is None:
        mod = importlib.import_module(f"msc.nn.kernels_{name}")
        _modules[name] = mod
    return mod
