import os
import subprocess
import sys

import numpy as np
import pytest

from svamp import kernels
from svamp.bell import BELL_TABLE
from svamp.boxes import noisy_box, quantum_ideal_box
from svamp.extractors import MODULI

BACKENDS = kernels.available_backends()
needs_both = pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernels not built")


def _pair():
    return BACKENDS["python"], BACKENDS["cython"]


@needs_both
@pytest.mark.parametrize("n", [4, 8, 32, 64])
def test_gf_mul_array_agrees(n):
    rng = np.random.default_rng(n)
    hi = 2 ** n
    a = rng.integers(0, hi, 500, dtype=np.uint64)
    b = rng.integers(0, hi, 500, dtype=np.uint64)
    py, cy = _pair()
    assert np.array_equal(py.gf_mul_array(a, b, n, MODULI[n]), cy.gf_mul_array(a, b, n, MODULI[n]))


@needs_both
def test_product_histogram_agrees():
    rng = np.random.default_rng(1)
    xs = rng.choice(256, 40, replace=False).astype(np.uint64)
    ts = rng.choice(256, 30, replace=False).astype(np.uint64)
    py, cy = _pair()
    assert np.array_equal(py.product_histogram(xs, ts, 8, MODULI[8], 3), cy.product_histogram(xs, ts, 8, MODULI[8], 3))


@needs_both
def test_sampling_kernels_agree():
    rng = np.random.default_rng(2)
    probs = rng.uniform(0.4, 0.6, (4, 8))
    ubits = rng.random((5000, 4))
    uout = rng.random(5000)
    cdf = np.ascontiguousarray(np.cumsum(noisy_box(quantum_ideal_box(), 0.3).p, axis=1))
    table = np.ascontiguousarray(BELL_TABLE.astype(np.uint8))
    py, cy = _pair()
    s_py = py.draw_setting_bits(probs, ubits)
    assert np.array_equal(s_py, cy.draw_setting_bits(probs, ubits))
    o_py = py.sample_outcomes(s_py, cdf, uout)
    assert np.array_equal(o_py, cy.sample_outcomes(s_py, cdf, uout))
    assert py.bell_count(s_py, o_py, table) == cy.bell_count(s_py, o_py, table)
    r_py = py.simulate_iid_rounds(probs, cdf, ubits, uout, table)
    r_cy = cy.simulate_iid_rounds(probs, cdf, ubits, uout, table)
    assert np.array_equal(r_py[0], r_cy[0]) and np.array_equal(r_py[1], r_cy[1]) and r_py[2] == r_cy[2]


@needs_both
def test_pivot_agrees():
    rng = np.random.default_rng(3)
    T = rng.normal(size=(30, 40))
    T[rng.random(T.shape) < 0.5] = 0.0
    T[4, 7] = 2.5
    a, b = T.copy(), T.copy()
    py, cy = _pair()
    py.pivot_inplace(a, 4, 7)
    cy.pivot_inplace(b, 4, 7)
    assert np.allclose(a, b, rtol=1e-15, atol=1e-15)
    assert a[4, 7] == 1.0
    assert np.all(np.delete(a[:, 7], 4) == 0.0)


def test_sampling_law():
    cdf = np.ascontiguousarray(np.cumsum(noisy_box(quantum_ideal_box(), 0.5).p, axis=1))
    rng = np.random.default_rng(0)
    settings = np.full(200_000, 9, dtype=np.uint8)
    out = kernels.sample_outcomes(settings, cdf, rng.random(settings.size))
    freq = np.bincount(out, minlength=16) / out.size
    assert np.abs(freq - noisy_box(quantum_ideal_box(), 0.5).p[9]).max() < 0.005


def test_pure_python_switch():
    env = dict(os.environ, SVAMP_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import svamp; print(svamp.BACKEND)"], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
