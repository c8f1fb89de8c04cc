import os
import subprocess
import sys

import numpy as np
import pytest

from nomamec import kernels
from nomamec.scenario import ScenarioSpec, generate
from nomamec.solver import solve

needs_numba = pytest.mark.skipif("numba" not in kernels.available_backends(), reason="numba not importable")


@needs_numba
@pytest.mark.parametrize("seed", range(6))
def test_backends_give_the_same_solution(seed):
    inst = generate(ScenarioSpec(seed=seed, n_users=20, cloud_capacity=4e9 + 1e9 * seed))
    a, ra, ta = solve(inst, backend="numba")
    b, rb, tb = solve(inst, backend="numpy")
    assert ta.iterations == tb.iterations
    np.testing.assert_allclose(a.t, b.t, rtol=1e-12)
    np.testing.assert_allclose(a.d, b.d, rtol=1e-12, atol=1e-6)
    assert ra.total == pytest.approx(rb.total, rel=1e-13)


@needs_numba
def test_rate_solver_backends_agree():
    rng = np.random.default_rng(0)
    n = 200
    a1 = 10 ** rng.uniform(-14, -9, n)
    a2 = a1 * 10 ** rng.uniform(0, 4, n)
    rho = rng.uniform(0, 1, n)
    for q in (1e-12, 1e-6, 1.0, 1e6):
        x = kernels.solve_rate(a1, a2, rho, q, backend="numba")
        y = kernels.solve_rate(a1, a2, rho, q, backend="numpy")
        np.testing.assert_allclose(x, y, rtol=1e-12)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.solve_rate(np.ones(1), np.ones(1), np.ones(1), 1.0, backend="fortran")


def test_env_flag_selects_numpy():
    code = "from nomamec import kernels; print(kernels.DEFAULT_BACKEND)"
    env = dict(os.environ, NOMAMEC_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
