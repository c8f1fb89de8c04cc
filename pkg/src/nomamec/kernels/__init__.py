"""Hot loops of the block-coordinate solver.

Two interchangeable backends implement the same algorithms:

* ``numba``: scalar loops compiled with ``@njit`` (default when numba imports).
* ``numpy``: vectorized numpy, no compilation.

Set ``NOMAMEC_DISABLE_NUMBA=1`` to force the numpy path. Every public function also
accepts ``backend="numba" | "numpy"`` to override the default per call.
"""

from __future__ import annotations

import os

from . import _numpy

try:
    from . import _numba
except ImportError:  # numba missing or broken
    _numba = None

_DISABLED = os.environ.get("NOMAMEC_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

DEFAULT_BACKEND = "numpy" if (_DISABLED or _numba is None) else "numba"


def available_backends() -> tuple[str, ...]:
    return ("numba", "numpy") if _numba is not None else ("numpy",)


def _impl(backend: str | None):
    name = backend or DEFAULT_BACKEND
    if name == "numba":
        if _numba is None:
            raise RuntimeError("numba backend requested but numba is not importable")
        return _numba
    if name == "numpy":
        return _numpy
    raise ValueError(f"unknown backend {name!r}")


def solve_rate(a1, a2, rho, q, backend=None):
    """Spectral efficiency x > 0 with a1*phi(x) + (a2-a1)*phi(rho*x) = -q, per group."""
    return _impl(backend).solve_rate(a1, a2, rho, q)


def time_budget(a1, a2, s, d2, B, alpha, backend=None):
    """Time shares demanded at multiplier ``alpha`` and their sum: (t, total)."""
    return _impl(backend).time_budget(a1, a2, s, d2, B, alpha)


def time_allocation(a1, a2, s, d2, B, T, backend=None):
    """Optimal time shares for fixed data. Returns (t, alpha, outer_iters, inner_iters, alpha_trail)."""
    return _impl(backend).time_allocation(a1, a2, s, d2, B, T)


def group_minimizer(a1, a2, k1, k2, c, D1, D2, R1, R2, backend=None):
    """Exact box-constrained minimizer of each group's priced data subproblem: (d1, d2)."""
    return _impl(backend).group_minimizer(a1, a2, k1, k2, c, D1, D2, R1, R2)


def data_allocation(a1, a2, C, P, D, R, c, F, backend=None):
    """Optimal offloading for fixed ``c = B*t``. Returns (d, beta, iterations)."""
    return _impl(backend).data_allocation(a1, a2, C, P, D, R, c, F)
