"""Rational doubled-up transfer functions via state-space quadruples.

A model is the quadruple (A, B, C, D) with ``T(z) = D + C (zI - A)^{-1} B``,
all four matrices doubled-up in a common port layout.  Models built from an
(S, L, H) description use

    A = -1/2 * Ldbl_dual @ Ldbl - 1j * Omega @ J
    B = -Ldbl_dual @ Sdbl
    C = Ldbl
    D = Sdbl

with ``Ldbl = DoubledUpMatrix.from_blocks(L-, L+)`` and ``Sdbl`` the
doubled-up static scattering block; D reduces to the identity when S = I.
"""

import json

import numpy as np
from dataclasses import dataclass, field

from . import algebra
from .algebra import BLOCK, INTERLEAVED
from .errors import DimensionError, PoleProximityError

POLE_GUARD_REL = 1e-9


@dataclass
class SLHModel:
    """Scattering matrix, coupling vectors and quadratic Hamiltonian matrix.

    ``lam_minus``/``lam_plus`` have shape (n_ports, n_modes); ``omega`` is the
    2*n_modes Hermitian doubled-up Hamiltonian matrix in block layout and
    ``s`` is the n_ports x n_ports unitary scattering matrix.
    """

    s: np.ndarray
    lam_minus: np.ndarray
    lam_plus: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        self.s = np.atleast_2d(np.asarray(self.s, dtype=complex))
        self.lam_minus = np.atleast_2d(np.asarray(self.lam_minus, dtype=complex))
        self.lam_plus = np.atleast_2d(np.asarray(self.lam_plus, dtype=complex))
        self.omega = np.atleast_2d(np.asarray(self.omega, dtype=complex))
        if self.lam_minus.shape != self.lam_plus.shape:
            raise DimensionError("coupling blocks must share a shape")
        if np.linalg.norm(self.s @ self.s.conj().T - np.eye(self.s.shape[0])) > 1e-9:
            raise DimensionError("scattering matrix is not unitary")
        if np.linalg.norm(self.omega - self.omega.conj().T) > 1e-9:
            raise DimensionError("Hamiltonian matrix is not Hermitian")

    @property
    def n_ports(self):
        return self.lam_minus.shape[0]

    @property
    def n_modes(self):
        return self.lam_minus.shape[1]


class StateSpaceModel:
    """Doubled-up (A, B, C, D) quadruple; immutable after construction."""

    def __init__(self, a, b, c, d, convention=INTERLEAVED):
        self.a = np.atleast_2d(np.asarray(a, dtype=complex))
        self.d = np.atleast_2d(np.asarray(d, dtype=complex))
        n = self.a.shape[0] if self.a.size else 0
        if n:
            self.b = np.asarray(b, dtype=complex).reshape(n, -1)
            self.c = np.asarray(c, dtype=complex).reshape(-1, n)
        else:
            self.a = np.zeros((0, 0), dtype=complex)
            self.b = np.zeros((0, self.d.shape[1]), dtype=complex)
            self.c = np.zeros((self.d.shape[0], 0), dtype=complex)
        self.convention = convention
        if self.b.shape[1] != self.d.shape[1] or self.c.shape[0] != self.d.shape[0]:
            raise DimensionError("inconsistent state-space dimensions")
        self.state_dim = n
        self.port_dim = self.d.shape[0]
        self.pole_values = np.linalg.eigvals(self.a) if n else np.array([])

    def structure_residual(self):
        """Largest doubled-up residual over the four realization matrices."""
        conv = self.convention
        res = [algebra.doubled_up_residual(self.d, conv)]
        if self.state_dim:
            res += [
                algebra.doubled_up_residual(self.a, conv),
                algebra.doubled_up_residual(self.b, conv),
                algebra.doubled_up_residual(self.c, conv),
            ]
        return max(res)

    def to_convention(self, convention):
        if convention == self.convention:
            return self
        conv = (self.convention, convention)
        return StateSpaceModel(
            algebra.convert_layout(self.a, *conv) if self.state_dim else self.a,
            algebra.convert_rect_layout(self.b, *conv) if self.state_dim else self.b,
            algebra.convert_rect_layout(self.c, *conv) if self.state_dim else self.c,
            algebra.convert_layout(self.d, *conv),
            convention,
        )


class RationalTF:
    """Evaluable rational transfer function backed by a state-space model."""

    def __init__(self, model):
        self.model = model
        self.s_inf = model.d.copy()

    @property
    def convention(self):
        return self.model.convention

    @property
    def port_dim(self):
        return self.model.port_dim

    @property
    def poles(self):
        return self.model.pole_values

    def _guard(self, z):
        z = np.atleast_1d(z)
        for lam in self.model.pole_values:
            d = np.abs(z - lam)
            bad = d < POLE_GUARD_REL * (1.0 + np.abs(lam))
            if np.any(bad):
                raise PoleProximityError(z[bad][0], lam)

    def eval_many(self, z, guard=True):
        """Evaluate at an array of points; returns (nz, p, p)."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        m = self.model
        if guard:
            self._guard(z)
        if m.state_dim == 0:
            return np.broadcast_to(m.d, (z.shape[0],) + m.d.shape).copy()
        zi = z[:, None, None] * np.eye(m.state_dim) - m.a
        x = np.linalg.solve(zi, np.broadcast_to(m.b, (z.shape[0],) + m.b.shape))
        return m.d + m.c @ x

    def __call__(self, z, guard=True):
        return self.eval_many(np.array([z]), guard=guard)[0]

    def inverse(self):
        """Realization of the inverse transfer function (needs invertible D)."""
        m = self.model
        d_inv = np.linalg.inv(m.d)
        if m.state_dim == 0:
            return RationalTF(StateSpaceModel(m.a, m.b, m.c, d_inv, m.convention))
        return RationalTF(
            StateSpaceModel(
                m.a - m.b @ d_inv @ m.c,
                -m.b @ d_inv,
                d_inv @ m.c,
                d_inv,
                m.convention,
            )
        )

    def zero_positions(self):
        """Zeros of the transfer function as eigenvalues of the inverse dynamics."""
        m = self.model
        if m.state_dim == 0:
            return np.array([])
        d_inv = np.linalg.inv(m.d)
        return np.linalg.eigvals(m.a - m.b @ d_inv @ m.c)


def static_tf(d, convention=INTERLEAVED):
    """Constant transfer function (state dimension zero)."""
    d = np.atleast_2d(np.asarray(d, dtype=complex))
    empty = np.zeros((0, 0))
    return RationalTF(
        StateSpaceModel(empty, np.zeros((0, d.shape[1])), np.zeros((d.shape[0], 0)), d, convention)
    )


def slh_to_statespace(m, convention=INTERLEAVED):
    """State-space realization of an SLH model (doubled-up by construction)."""
    n, nm = m.n_ports, m.n_modes
    ldbl = algebra.DoubledUpMatrix.from_blocks(m.lam_minus, m.lam_plus, BLOCK).data
    sdbl = algebra.DoubledUpMatrix.from_blocks(m.s, np.zeros_like(m.s), BLOCK).data
    ldual = algebra.j_dual(ldbl, BLOCK)
    j_state = algebra.signature_matrix(2 * nm, BLOCK)
    a = -0.5 * ldual @ ldbl - 1j * m.omega @ j_state
    b = -ldual @ sdbl
    c = ldbl
    d = sdbl
    model = StateSpaceModel(a, b, c, d, BLOCK)
    return RationalTF(model.to_convention(convention))


def concat(a, b):
    """Block-diagonal juxtaposition of two transfer functions (shared layout)."""
    if a.convention != b.convention:
        raise DimensionError("layout conventions differ")
    ma, mb = a.model, b.model
    na, nb = ma.state_dim, mb.state_dim
    pa, pb = ma.port_dim, mb.port_dim
    av = np.zeros((na + nb, na + nb), dtype=complex)
    av[:na, :na] = ma.a
    av[na:, na:] = mb.a
    bv = np.zeros((na + nb, pa + pb), dtype=complex)
    bv[:na, :pa] = ma.b
    bv[na:, pa:] = mb.b
    cv = np.zeros((pa + pb, na + nb), dtype=complex)
    cv[:pa, :na] = ma.c
    cv[pa:, na:] = mb.c
    dv = np.zeros((pa + pb, pa + pb), dtype=complex)
    dv[:pa, :pa] = ma.d
    dv[pa:, pa:] = mb.d
    return RationalTF(StateSpaceModel(av, bv, cv, dv, a.convention))


def series(a, b):
    """Composition ``T(z) = T_a(z) @ T_b(z)`` (signal passes b first)."""
    if a.convention != b.convention:
        raise DimensionError("layout conventions differ")
    ma, mb = a.model, b.model
    if ma.port_dim != mb.port_dim:
        raise DimensionError("port dimensions differ")
    na, nb = ma.state_dim, mb.state_dim
    av = np.zeros((na + nb, na + nb), dtype=complex)
    av[:na, :na] = ma.a
    av[:na, na:] = ma.b @ mb.c
    av[na:, na:] = mb.a
    bv = np.vstack([ma.b @ mb.d, mb.b])
    cv = np.hstack([ma.c, ma.d @ mb.c])
    dv = ma.d @ mb.d
    return RationalTF(StateSpaceModel(av, bv, cv, dv, a.convention))


def feedback(tf, n_external):
    """Close the trailing ports onto themselves with unity feedback.

    ``n_external`` counts doubled components (2 * external modes); the closed
    map is ``T1 + T2 (I - T4)^{-1} T3`` realized in state space.
    """
    m = tf.model
    p = m.port_dim
    ne = n_external
    if not 0 < ne < p:
        raise DimensionError("external port count must split the port space")
    sl_e, sl_i = slice(0, ne), slice(ne, p)
    d_ii = m.d[sl_i, sl_i]
    w = np.linalg.inv(np.eye(p - ne) - d_ii)
    b_e, b_i = m.b[:, sl_e], m.b[:, sl_i]
    c_e, c_i = m.c[sl_e, :], m.c[sl_i, :]
    d_ee, d_ei = m.d[sl_e, sl_e], m.d[sl_e, sl_i]
    d_ie = m.d[sl_i, sl_e]
    av = m.a + b_i @ w @ c_i
    bv = b_e + b_i @ w @ d_ie
    cv = c_e + d_ei @ w @ c_i
    dv = d_ee + d_ei @ w @ d_ie
    return RationalTF(StateSpaceModel(av, bv, cv, dv, m.convention))


def limit_at_infinity(tf, radii=(1e4, 1e6, 1e8)):
    """Constant limit D together with empirical deviations along 4 directions."""
    deviations = {}
    for r in radii:
        pts = np.array([r, -r, 1j * r, -1j * r], dtype=complex)
        vals = tf.eval_many(pts)
        deviations[r] = float(np.max(np.linalg.norm(vals - tf.s_inf, 2, axis=(1, 2))))
    return tf.s_inf.copy(), deviations


# ---------------------------------------------------------------------------
# JSON import/export: complex numbers as [re, im] pairs, matrices row-major.
# ---------------------------------------------------------------------------

def _encode_matrix(m):
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


def _decode_matrix(rows):
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)


def model_to_dict(tf):
    m = tf.model
    return {
        "convention": m.convention,
        "state_dim": int(m.state_dim),
        "port_dim": int(m.port_dim),
        "a": _encode_matrix(m.a) if m.state_dim else [],
        "b": _encode_matrix(m.b) if m.state_dim else [],
        "c": _encode_matrix(m.c) if m.state_dim else [],
        "d": _encode_matrix(m.d),
    }


def model_from_dict(doc):
    d = _decode_matrix(doc["d"])
    sd = int(doc["state_dim"])
    if sd == 0:
        return static_tf(d, doc["convention"])
    a = _decode_matrix(doc["a"])
    b = _decode_matrix(doc["b"]).reshape(sd, -1)
    c = _decode_matrix(doc["c"]).reshape(-1, sd)
    return RationalTF(StateSpaceModel(a, b, c, d, doc["convention"]))


def save_model(tf, path):
    with open(path, "w") as fh:
        json.dump(model_to_dict(tf), fh, indent=1)


def load_model(path):
    with open(path) as fh:
        return model_from_dict(json.load(fh))
