"""Numba dispatch for the hot simulation kernel.

The event-loop kernel in ``simcore._kernel`` is plain Python written to be
numba-njit compatible.  By default it is compiled; setting the environment
variable ``COEXSIM_NUMBA=0`` (or numba being unavailable) selects the
uncompiled pure-Python path with identical semantics.  Both paths produce
bit-identical trajectories; see ``benchmarks/backend_bench.py`` for a
speed comparison.
"""

import os

_flag = os.environ.get("COEXSIM_NUMBA", "1").strip().lower()
_want_numba = _flag not in ("0", "false", "no", "off")

NUMBA_ENABLED = False

if _want_numba:
    try:
        import numba  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False


def maybe_njit(func):
    """njit-compile ``func`` (with on-disk cache) unless disabled by env flag."""
    if NUMBA_ENABLED:
        import numba

        return numba.njit(cache=True)(func)
    return func
