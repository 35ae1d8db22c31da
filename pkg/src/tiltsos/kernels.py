"""Backend selection for the sampler inner loops.

The compiled extension is used when it was built; otherwise (or when
``TILTSOS_PURE_PYTHON`` is set) the pure-Python versions are used.  Both
consume the same pre-drawn random numbers, so trajectories agree exactly.
"""

import os

import numpy as np

from . import _kernels_py

if os.environ.get("TILTSOS_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"

CHUNK = 1 << 20


def _backend(name):
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")


def run_glauber(h: np.ndarray, drops, beta: float, steps: int, rng: np.random.Generator,
                backend=None) -> None:
    """In-place heat-bath Glauber, ``steps`` uniformly chosen sites."""
    impl = _backend(backend)
    n = h.shape[0] * h.shape[1]
    done = 0
    while done < steps:
        k = min(CHUNK, steps - done)
        sites = rng.integers(0, n, size=k, dtype=np.int64)
        u = rng.random(2 * k)
        impl.glauber_heatbath(h, int(drops[0]), int(drops[1]), float(beta), sites, u)
        done += k


def run_flips(h: np.ndarray, drops, steps: int, rng: np.random.Generator, backend=None) -> int:
    impl = _backend(backend)
    n = h.shape[0] * h.shape[1]
    done = acc = 0
    while done < steps:
        k = min(CHUNK, steps - done)
        sites = rng.integers(0, n, size=k, dtype=np.int64)
        u = rng.random(k)
        acc += impl.flip_chain(h, int(drops[0]), int(drops[1]), sites, u)
        done += k
    return acc
