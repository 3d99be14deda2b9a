"""Ready-made networks: the squeezer-in-a-delayed-loop example and test rigs."""

import numpy as np

from . import statespace
from .algebra import INTERLEAVED
from .errors import DimensionError
from .network import DelayNetwork, DelaySpec, network_from_slh
from .statespace import SLHModel


def enhanced_squeezing_network(delay=2.0, eta=0.6, kappa=1.0, squeeze=0.2):
    """Degenerate squeezing cavity behind a beamsplitter with a delayed loop.

    One beamsplitter port is closed on itself through a single delay; the
    other stays external.  The loop reflection is +sqrt(1 - eta^2), which
    makes the internal block of the open transfer function constant and
    produces the degenerate loop-pole ladder this preset is used to study.
    """
    r = np.sqrt(1.0 - eta * eta)
    s = np.array([[-r, eta], [eta, r]])
    lam_minus = np.sqrt(kappa) * np.array([[-r], [eta]])
    lam_plus = np.zeros((2, 1))
    omega = np.array([[0.0, 1j * squeeze], [-1j * squeeze, 0.0]])
    slh = SLHModel(s, lam_minus, lam_plus, omega)
    # the loop closes on the +r reflection port (port index 1)
    return network_from_slh(slh, internal_modes=[1], delays=[delay], base_period=delay)


def identity_network(delay=1.0):
    """Trivial two-line network whose closed transfer function is the identity."""
    tf = statespace.static_tf(np.eye(4), INTERLEAVED)
    return DelayNetwork(tf, 1, DelaySpec((delay,), delay))


def detuned_cavity_loop_network(
    delay=1.0,
    theta=0.7227342478134157,
    kappa_c=0.8,
    detuning=0.7,
    loop_phase=0.9,
):
    """Passive detuned cavity inside the delay loop; exact and static ladders differ.

    A beamsplitter mixes the external line with a loop line that passes a
    one-sided cavity, so the internal block inherits the cavity's 1/z
    roll-off.  The loop phase splits the annihilation/creation ladder
    channels, keeping every root simple and non-degenerate; this is the
    reference rig for convergence-rate measurements.
    """
    n = 2
    s = np.array(
        [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
    )
    lam_minus = np.sqrt(kappa_c) * np.array([[np.sin(theta)], [np.cos(theta)]])
    lam_plus = np.zeros((n, 1))
    omega = np.array([[detuning, 0.0], [0.0, detuning]])
    slh = SLHModel(s, lam_minus, lam_plus, omega)
    return network_from_slh(
        slh,
        internal_modes=[1],
        delays=[delay],
        base_period=delay,
        loop_phase=loop_phase,
    )


def random_network(seed, n_external=1, n_internal=1, n_cavity_modes=1, delay=1.0):
    """Random J-unitary doubled-up open system closed through 1..2 delays.

    Static dressings on both sides keep the scattering blocks generic while
    the cavity part supplies rational z-dependence; seeds are rejected until
    the internal static block is safely nonsingular.
    """
    from . import algebra

    rng = np.random.default_rng(seed)
    n_ports = n_external + n_internal
    for attempt in range(40):
        sub = rng.integers(0, 2**31)
        lam_minus = 0.6 * (
            rng.normal(size=(n_ports, n_cavity_modes))
            + 1j * rng.normal(size=(n_ports, n_cavity_modes))
        )
        lam_plus = 0.3 * (
            rng.normal(size=(n_ports, n_cavity_modes))
            + 1j * rng.normal(size=(n_ports, n_cavity_modes))
        )
        h_m = rng.normal(size=(n_cavity_modes, n_cavity_modes)) + 1j * rng.normal(
            size=(n_cavity_modes, n_cavity_modes)
        )
        h_m = 0.5 * (h_m + h_m.conj().T)
        h_p = 0.4 * (
            rng.normal(size=(n_cavity_modes, n_cavity_modes))
            + 1j * rng.normal(size=(n_cavity_modes, n_cavity_modes))
        )
        h_p = 0.5 * (h_p + h_p.T)
        omega = np.block([[h_m, h_p], [np.conj(h_p), np.conj(h_m)]])
        slh = SLHModel(np.eye(n_ports), lam_minus, lam_plus, omega)
        tf = statespace.slh_to_statespace(slh, INTERLEAVED)
        left = algebra.random_j_unitary_doubled_up(
            n_ports, sub, scale=0.35, convention=INTERLEAVED
        ).data
        right = algebra.random_j_unitary_doubled_up(
            n_ports, sub + 1, scale=0.35, convention=INTERLEAVED
        ).data
        dressed = statespace.series(
            statespace.series(statespace.static_tf(left, INTERLEAVED), tf),
            statespace.static_tf(right, INTERLEAVED),
        )
        ne = 2 * n_external
        s = dressed.s_inf
        s2 = s[:ne, ne:]
        s3 = s[ne:, :ne]
        s4 = s[ne:, ne:]
        svals = [
            np.linalg.svd(blk, compute_uv=False)[-1] for blk in (s2, s3, s4)
        ]
        if min(svals) < 0.18:
            continue
        delays = tuple(delay * (1 + k) for k in range(n_internal))
        return DelayNetwork(dressed, n_external, DelaySpec(delays, delay))
    raise DimensionError(f"could not draw a well-conditioned network from seed {seed}")


_PRESETS = {
    "enhanced-squeezing": enhanced_squeezing_network,
    "identity": identity_network,
    "detuned-cavity-loop": detuned_cavity_loop_network,
}


def by_name(name, **params):
    if name not in _PRESETS:
        raise DimensionError(f"unknown preset {name!r}; have {sorted(_PRESETS)}")
    return _PRESETS[name](**params)
