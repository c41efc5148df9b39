"""Hot loops behind a backend switch.

The compiled ``_core`` extension is used when it was built; otherwise (or with
``HPDN_PURE_PYTHON=1``) the pure-Python twins in ``_pure`` are used. Both give
bit-identical results.
"""
import importlib
import os

_NAMES = (
    "louvain_local_moves",
    "infomap_local_moves",
    "slpa_propagate",
    "sbm_merge_proposals",
    "sbm_sweeps",
    "bfs_distance_sum",
    "triangle_stats",
    "rng_stream",
)


def load_backend(name):
    """Return the kernel module for ``"cython"`` or ``"python"``."""
    if name == "cython":
        return importlib.import_module("hpdn._kernels._core")
    if name == "python":
        return importlib.import_module("hpdn._kernels._pure")
    raise ValueError(f"unknown kernel backend {name!r}")


def available_backends():
    out = ["python"]
    try:
        load_backend("cython")
    except ImportError:
        pass
    else:
        out.insert(0, "cython")
    return out


if os.environ.get("HPDN_PURE_PYTHON") == "1":
    BACKEND = "python"
else:
    BACKEND = available_backends()[0]

_impl = load_backend(BACKEND)
louvain_local_moves = _impl.louvain_local_moves
infomap_local_moves = _impl.infomap_local_moves
slpa_propagate = _impl.slpa_propagate
sbm_merge_proposals = _impl.sbm_merge_proposals
sbm_sweeps = _impl.sbm_sweeps
bfs_distance_sum = _impl.bfs_distance_sum
triangle_stats = _impl.triangle_stats
rng_stream = _impl.rng_stream

__all__ = ["BACKEND", "load_backend", "available_backends", *_NAMES]
