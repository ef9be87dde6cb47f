"""Kernel backend selection.

The compiled extension is used when it was built and imports cleanly;
setting ``RANDDYN_PURE_PYTHON=1`` forces the pure-Python fallback.  Both
backends expose the same functions and produce identical results.
"""

import os
from array import array

from . import _pykernels

PACKED_KEY_LIMIT = 1 << 62

_impl = _pykernels
if not os.environ.get("RANDDYN_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = _impl.BACKEND


def use_backend(name):
    """Switch backend at runtime ("python" or "cython"); used by benchmarks/tests."""
    global _impl, BACKEND
    if name == "python":
        _impl = _pykernels
    elif name == "cython":
        from . import _ckernels

        _impl = _ckernels
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = _impl.BACKEND


def compiled_available():
    try:
        from . import _ckernels  # noqa: F401
    except ImportError:
        return False
    return True


def threshold_array(thresholds):
    return array("Q", thresholds)


def mix64(z):
    return _impl.mix64(z)


def draw_u64(seed, trial, position):
    return _impl.draw_u64(seed, trial, position)


def draw_block(seed, trial, start, count):
    return _impl.draw_block(seed, trial, start, count)


def sample_block(seed, trial, start, count, thresholds):
    return _impl.sample_block(seed, trial, start, count, thresholds)


def count_block(seed, trial_start, n_trials, n, thresholds):
    return _impl.count_block(seed, trial_start, n_trials, n, thresholds)


def mul_packed(a_keys, a_coefs, b_keys, b_coefs):
    if _impl is not _pykernels:
        top = (max(a_keys, default=0) + max(b_keys, default=0))
        if top >= PACKED_KEY_LIMIT:
            return _pykernels.mul_packed(a_keys, a_coefs, b_keys, b_coefs)
    return _impl.mul_packed(a_keys, a_coefs, b_keys, b_coefs)
