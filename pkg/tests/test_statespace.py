import os

import numpy as np
import pytest

from conftest import conj_residual, j_residual_on_grid
from qcascade import algebra, statespace
from qcascade.algebra import INTERLEAVED
from qcascade.errors import PoleProximityError
from qcascade.statespace import SLHModel, slh_to_statespace


def single_port_cavity(kappa=0.8):
    return SLHModel(
        np.eye(1), np.array([[np.sqrt(kappa)]]), np.zeros((1, 1)), np.zeros((2, 2))
    )


def squeezer(kappa=1.0, eps=0.2, two_port=False):
    omega = np.array([[0.0, 1j * eps], [-1j * eps, 0.0]])
    if two_port:
        s = np.array([[-0.8, 0.6], [0.6, 0.8]])
        lam = np.sqrt(kappa) * np.array([[-0.8], [0.6]])
        return SLHModel(s, lam, np.zeros((2, 1)), omega)
    return SLHModel(np.eye(1), np.array([[np.sqrt(kappa)]]), np.zeros((1, 1)), omega)


def test_single_port_cavity_closed_form():
    kappa = 0.8
    tf = slh_to_statespace(single_port_cavity(kappa))
    for z in (0.3 + 0.7j, -1.2 + 0.1j, 2.5):
        expected = (z - kappa / 2) / (z + kappa / 2)
        got = tf(complex(z))
        assert np.allclose(got, expected * np.eye(2), atol=1e-12)


def test_decoupled_cavity_is_identity():
    m = SLHModel(np.eye(1), np.zeros((1, 1)), np.zeros((1, 1)),
                 np.array([[0.5, 0], [0, 0.5]]))
    tf = slh_to_statespace(m)
    assert np.allclose(tf.model.b, 0) and np.allclose(tf.model.c, 0)
    assert np.allclose(tf(1.3 + 0.4j), np.eye(2))
    # A = -i Omega J survives
    assert np.linalg.norm(tf.model.a) > 0


def test_squeezer_pole_positions():
    tf = slh_to_statespace(squeezer())
    assert np.allclose(sorted(tf.poles.real), [-0.7, -0.3], atol=1e-12)
    assert np.max(np.abs(tf.poles.imag)) < 1e-12
    # beamsplitter dressing does not move the poles
    tf2 = slh_to_statespace(squeezer(two_port=True))
    assert np.allclose(sorted(tf2.poles.real), [-0.7, -0.3], atol=1e-12)


def test_eval_far_away_approaches_d():
    tf = slh_to_statespace(squeezer(two_port=True))
    val = tf(1e12)
    assert np.linalg.norm(val - tf.s_inf, 2) < 1e-9 * np.linalg.norm(tf.s_inf, 2)


def test_plain_squeezer_at_origin():
    tf = slh_to_statespace(squeezer(eps=0.0))
    assert np.allclose(tf(0.0), -np.eye(2), atol=1e-12)


def test_pole_guard():
    tf = slh_to_statespace(squeezer())
    with pytest.raises(PoleProximityError):
        tf(-0.3 + 1e-12j)


def test_j_unitary_on_imaginary_axis():
    tf = slh_to_statespace(squeezer(two_port=True))
    omega = np.linspace(-8, 8, 100)
    assert j_residual_on_grid(lambda z: tf.eval_many(z), omega) < 1e-10


def test_inverse_realization():
    tf = slh_to_statespace(squeezer(two_port=True))
    inv = tf.inverse()
    rng = np.random.default_rng(0)
    z = rng.normal(scale=2, size=20) + 1j * rng.normal(scale=2, size=20)
    prod = tf.eval_many(z, guard=False) @ inv.eval_many(z, guard=False)
    assert np.max(np.abs(prod - np.eye(4))) < 1e-9
    assert inv.model.structure_residual() < 1e-10

    ident = statespace.static_tf(np.eye(2))
    assert np.allclose(ident.inverse()(0.5), np.eye(2))


def test_series_concat_feedback_preserve_j_unitarity():
    tf = slh_to_statespace(squeezer(two_port=True))
    inv = tf.inverse()
    z = np.array([0.4 + 0.9j, -0.6 + 0.2j, 1.5 - 2.0j])
    ser = statespace.series(tf, inv)
    assert np.max(np.abs(ser.eval_many(z, guard=False) - np.eye(4))) < 1e-9

    cat = statespace.concat(tf, slh_to_statespace(squeezer()))
    omega = np.linspace(-3, 3, 20)
    assert j_residual_on_grid(lambda q: cat.eval_many(q, guard=False), omega) < 1e-10

    big = statespace.series(
        cat, statespace.static_tf(
            algebra.random_j_unitary_doubled_up(3, 5, convention=INTERLEAVED).data
        )
    )
    closed = statespace.feedback(big, 2)
    rng = np.random.default_rng(1)
    omega = rng.normal(scale=3, size=20)
    assert j_residual_on_grid(
        lambda q: closed.eval_many(q, guard=False), omega
    ) < 1e-9


def test_limit_at_infinity_decay_rate():
    tf = slh_to_statespace(squeezer(two_port=True))
    d, dev = statespace.limit_at_infinity(tf)
    assert np.allclose(d, tf.s_inf)
    assert dev[1e8] <= 1e-7
    # strictly proper remainder decays like 1/R
    assert 10 < dev[1e4] / dev[1e6] < 1000
    assert 10 < dev[1e6] / dev[1e8] < 1000

    flat_tf = statespace.static_tf(np.eye(4))
    _, dev0 = statespace.limit_at_infinity(flat_tf)
    assert dev0[1e8] == 0.0


def test_zero_pole_mirror_pairing():
    tf = slh_to_statespace(squeezer(two_port=True))
    inv = tf.inverse()
    for z0 in tf.zero_positions():
        sv = np.linalg.svd(tf(complex(z0), guard=False), compute_uv=False)
        assert sv[-1] <= 1e-6
        sv_inv = np.linalg.svd(
            inv(complex(-np.conj(z0)), guard=False), compute_uv=False
        )
        assert sv_inv[-1] <= 1e-6


def test_conjugation_symmetry():
    tf = slh_to_statespace(squeezer(two_port=True))
    rng = np.random.default_rng(2)
    z = rng.normal(scale=2, size=100) + 1j * rng.normal(scale=2, size=100)
    assert conj_residual(lambda q: tf.eval_many(q, guard=False), z) < 1e-10


def test_json_round_trip(tmp_path):
    tf = slh_to_statespace(squeezer(two_port=True))
    path = os.path.join(tmp_path, "model.json")
    statespace.save_model(tf, path)
    back = statespace.load_model(path)
    assert np.array_equal(back.model.a, tf.model.a)
    assert np.array_equal(back.model.b, tf.model.b)
    assert np.array_equal(back.model.c, tf.model.c)
    assert np.array_equal(back.model.d, tf.model.d)
    assert back.convention == tf.convention
