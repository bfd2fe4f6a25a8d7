import numpy as np
import pytest

from miacomp import _backend

py = _backend.get_kernels("python")
try:
    compiled = _backend.get_kernels("compiled")
except ImportError:
    compiled = None

needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled kernels not built")


def test_active_backend_reported():
    assert _backend.BACKEND in ("compiled", "python")
    assert _backend.get_kernels() is _backend.kernels


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.get_kernels("fortran")


@needs_compiled
@pytest.mark.parametrize("d", [0.1, 0.5, 2 / 3, 0.95])
def test_hypergeometric_agree(d):
    x = np.concatenate([[0.0], np.geomspace(1e-9, 1e12, 400)])
    for name in ("hyp_f", "hyp_h", "hyp_f_deriv"):
        a = getattr(compiled, name + "_array")(d, x)
        b = getattr(py, name + "_array")(d, x)
        np.testing.assert_allclose(a, b, rtol=1e-14, atol=0)
        for v in x[::37]:
            assert getattr(compiled, name)(d, float(v)) == pytest.approx(getattr(py, name)(d, float(v)), rel=1e-14)


@needs_compiled
@pytest.mark.parametrize("alpha", [3.0, 4.0, 3.7])
def test_interference_sums_agree(alpha):
    rng = np.random.default_rng(5)
    n = 200
    counts = rng.poisson(30, n)
    total = int(counts.sum())
    u, h = rng.random(total), rng.standard_exponential(total)
    r2_in = rng.uniform(0.01, 1.0, n)
    r2_out = r2_in + rng.uniform(1.0, 50.0, n)
    a = compiled.interference_sums(counts, u, h, r2_in, r2_out, alpha)
    b = py.interference_sums(counts, u, h, r2_in, r2_out, alpha)
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_interference_sums_brute_force():
    counts = np.array([2, 0, 1])
    u = np.array([0.0, 1.0, 0.5])
    h = np.array([1.0, 2.0, 3.0])
    r2_in = np.array([1.0, 4.0, 1.0])
    r2_out = np.array([5.0, 9.0, 3.0])
    out = py.interference_sums(counts, u, h, r2_in, r2_out, 4.0)
    np.testing.assert_allclose(out, [1.0 / 1.0 + 2.0 / 25.0, 0.0, 3.0 / 4.0])


def test_pure_python_forced_by_environment():
    import os
    import subprocess
    import sys

    env = dict(os.environ, MIACOMP_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import miacomp; print(miacomp.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
