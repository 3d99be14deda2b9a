import numpy as np
import pytest
from scipy.linalg import expm

from qcascade import algebra
from qcascade.algebra import BLOCK, INTERLEAVED
from qcascade.errors import DegenerateSubspaceError


def rand_complex(rng, shape, scale=1.0):
    return scale * (rng.normal(size=shape) + 1j * rng.normal(size=shape))


def test_signature_and_sigma_structure():
    for conv in (BLOCK, INTERLEAVED):
        j = algebra.signature_matrix(6, conv)
        s = algebra.sigma_matrix(6, conv)
        assert np.allclose(j @ j, np.eye(6))
        assert np.allclose(j, j.conj().T)
        assert abs(np.trace(j)) < 1e-15
        assert np.allclose(s @ s, np.eye(6))
        # J and Sigma anticommute in both layouts
        assert np.allclose(j @ s + s @ j, 0)


def test_flat_identity_and_j():
    j = algebra.signature_matrix(4)
    assert np.allclose(algebra.flat(np.eye(4)), np.eye(4))
    assert np.allclose(algebra.flat(j), j)


def test_flat_matches_direct_triple_product():
    rng = np.random.default_rng(3)
    m = rand_complex(rng, (4, 4))
    j = np.diag([1.0, -1.0, 1.0, -1.0])
    assert np.allclose(algebra.flat(m, INTERLEAVED), j @ np.conj(m) @ j)


def test_flat_is_involutive():
    rng = np.random.default_rng(4)
    m = rand_complex(rng, (6, 6))
    assert np.max(np.abs(algebra.flat(algebra.flat(m)) - m)) < 1e-14


def test_is_j_unitary_examples():
    ok, res = algebra.is_j_unitary(np.eye(4))
    assert ok and res == 0.0

    bad = np.diag([2.0, 0.5])
    ok, res = algebra.is_j_unitary(bad, convention=INTERLEAVED)
    assert not ok and res > 1.0

    rng = np.random.default_rng(5)
    h = rand_complex(rng, (6, 6))
    h = 0.5 * (h + h.conj().T)
    j = algebra.signature_matrix(6)
    m = expm(1j * j @ h)
    ok, res = algebra.is_j_unitary(m, tol=1e-12)
    assert ok, res


def test_is_doubled_up_examples():
    m = algebra.DoubledUpMatrix.from_blocks(np.eye(2), np.zeros((2, 2)))
    assert m.residual() < 1e-15

    rng = np.random.default_rng(6)
    blocks = algebra.DoubledUpMatrix.from_blocks(
        rand_complex(rng, (3, 3)), rand_complex(rng, (3, 3))
    )
    assert blocks.residual() < 1e-14

    broken = blocks.data.copy()
    broken[:3, 3:] = rand_complex(rng, (3, 3))
    ok, res = algebra.is_doubled_up(broken, convention=BLOCK)
    assert not ok and res > 1e-3


def test_doubled_up_conversion_round_trip():
    rng = np.random.default_rng(7)
    m = algebra.DoubledUpMatrix.from_blocks(
        rand_complex(rng, (2, 2)), rand_complex(rng, (2, 2))
    )
    inter = m.to(INTERLEAVED)
    assert inter.residual() < 1e-14
    back = inter.to(BLOCK)
    assert np.allclose(back.data, m.data)


def test_random_j_unitary_structure():
    for seed in range(5):
        for conv in (BLOCK, INTERLEAVED):
            m = algebra.random_j_unitary_doubled_up(2, seed, convention=conv)
            assert algebra.j_unitarity_residual(m.data, conv) < 1e-10
            assert m.residual() < 1e-10
            assert abs(abs(np.linalg.det(m.data)) - 1.0) < 1e-10


def test_random_j_unitary_zero_generator_is_identity():
    m = algebra.random_j_unitary_doubled_up(2, 0, scale=0.0)
    assert np.allclose(m.data, np.eye(4))


def test_product_and_inverse_closure():
    rng = np.random.default_rng(8)
    for seed in range(10):
        a = algebra.random_j_unitary_doubled_up(4, seed).data
        b = algebra.random_j_unitary_doubled_up(4, seed + 100).data
        prod = a @ b
        assert algebra.j_unitarity_residual(prod, BLOCK) < 1e-10
        assert algebra.doubled_up_residual(prod, BLOCK) < 1e-10
        inv = np.linalg.inv(a)
        assert algebra.doubled_up_residual(inv, BLOCK) < 1e-10


def test_indefinite_complete_square_input_passthrough():
    m = algebra.random_j_unitary_doubled_up(2, 42, convention=INTERLEAVED).data
    out = algebra.indefinite_complete(m, INTERLEAVED)
    assert np.allclose(out, m)


def test_indefinite_complete_extends_partial_basis():
    for seed in range(100):
        m = algebra.random_j_unitary_doubled_up(2, seed, convention=INTERLEAVED).data
        w = m[:, :2]
        full = algebra.indefinite_complete(w, INTERLEAVED)
        j = algebra.signature_matrix(4)
        assert np.linalg.norm(full.conj().T @ j @ full - j, 2) < 1e-10
        # leading columns untouched
        assert np.allclose(full[:, :2], w)


def test_indefinite_complete_rejects_null_vector():
    v = np.array([1.0, 1.0, 0.0, 0.0]) / np.sqrt(2)  # J-null in interleaved layout
    with pytest.raises(DegenerateSubspaceError):
        algebra.indefinite_complete(v.reshape(4, 1), INTERLEAVED)
