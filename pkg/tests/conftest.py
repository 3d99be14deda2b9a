import numpy as np
import pytest

from qcascade import algebra
from qcascade.algebra import INTERLEAVED


@pytest.fixture(scope="session")
def squeezing_net():
    from qcascade import presets

    return presets.enhanced_squeezing_network()


@pytest.fixture(scope="session")
def cavity_net():
    from qcascade import presets

    return presets.detuned_cavity_loop_network()


def j_residual_on_grid(evaluate_many, omega):
    vals = evaluate_many(1j * np.asarray(omega, dtype=float))
    j = algebra.signature_matrix(vals.shape[1], INTERLEAVED)
    return max(np.linalg.norm(v @ j @ v.conj().T - j, 2) for v in vals)


def conj_residual(evaluate_many, z):
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    v_z = evaluate_many(z)
    v_c = evaluate_many(np.conj(z))
    sig = algebra.sigma_matrix(v_z.shape[1], INTERLEAVED)
    return max(
        np.linalg.norm(sig @ np.conj(vc) @ sig - vz, 2) for vz, vc in zip(v_z, v_c)
    )
