import numpy as np

from qcascade import _kernels


def test_ladder_matches_numpy_fallback():
    rng = np.random.default_rng(0)
    z = rng.normal(size=20) + 1j * rng.normal(size=20)
    fast = _kernels.blaschke_ladder(z, -0.3 + 0.7j, np.pi, -200, 200)
    slow = _kernels.blaschke_ladder_numpy(z, -0.3 + 0.7j, np.pi, -200, 200)
    assert np.max(np.abs(fast - slow)) < 1e-12 * np.max(np.abs(slow))


def test_ladder_against_sinh_closed_form():
    z = np.array([1 + 1j, 0.3 - 0.2j, -2 + 0.4j])
    zm, period = -0.5 + 0.8j, np.pi
    prod = _kernels.blaschke_ladder(z, zm, period, -4000, 4000)
    closed = np.sinh(np.pi / period * (z - zm)) / np.sinh(np.pi / period * (z + np.conj(zm)))
    assert np.max(np.abs(prod - closed)) < 5e-4


def test_static_loop_det_matches_numpy_fallback():
    rng = np.random.default_rng(1)
    s4 = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    z = rng.normal(size=15) + 1j * rng.normal(size=15)
    delays = np.array([1.0, 2.0])
    fast = _kernels.static_loop_det(z, s4, delays, 0.3)
    slow = _kernels.static_loop_det_numpy(z, s4, delays, 0.3)
    assert np.max(np.abs(fast - slow)) < 1e-11 * max(1, np.max(np.abs(slow)))


def test_phase_increments_consistency():
    theta = np.linspace(0, 4 * np.pi, 300)
    values = np.exp(1j * theta)
    inc = _kernels.phase_increments(values)
    assert abs(np.sum(inc) - 4 * np.pi) < 1e-9
    inc_np = _kernels.phase_increments_numpy(values)
    assert np.max(np.abs(inc - inc_np)) < 1e-12
