"""Canonical physically realizable two-port factors.

Every factor is built from a 2N x 2 doubled-up matrix V with V_dual V = I
and evaluates as a product of one or two terms of the form

    I - Q + a1(z) * O1 + a2(z) * O2,   a1 = (z - z_a)/(z + z_b),
                                       a2 = (z - z_b)/(z + z_a),

where O1 + O2 = Q is the rank-2 interaction projector.  A complex-pair
factor uses (z_a, z_b) = (z0, conj z0); a real-pair factor uses two real
roots with the extra fixed rotation that keeps V doubled-up; the modified
degenerate factor multiplies the two root orderings to absorb a
multiplicity-two root in one step.
"""

import numpy as np
from dataclasses import dataclass, field

from . import algebra, statespace
from .algebra import INTERLEAVED
from .errors import (
    DegeneracyError,
    DimensionError,
    NotPhysicallyRealizableError,
    UnsupportedBoundaryError,
)

COMPLEX_PAIR = "complex_pair"
REAL_PAIR = "real_pair"
MODIFIED_DEGENERATE = "modified_degenerate"

DEG_THRESHOLD = 1e-6

_KL = np.array([[1.0, 1.0j], [1.0, -1.0j]])
_KR = np.array([[1.0, 1.0], [-1.0j, 1.0j]])


@dataclass
class SLHParams:
    """Coupling and Hamiltonian data recovering a factor as a physical component."""

    lam_minus: np.ndarray
    lam_plus: np.ndarray
    omega: np.ndarray
    kappa: float
    c: float

    def to_dict(self):
        enc = lambda v: [[x.real, x.imag] for x in np.asarray(v).ravel()]
        return {
            "lam_minus": enc(self.lam_minus),
            "lam_plus": enc(self.lam_plus),
            "omega": statespace._encode_matrix(self.omega),
            "kappa": self.kappa,
            "c": self.c,
        }


class CanonicalFactor:
    """One elementary factor; evaluable and invertible at any non-pole z."""

    def __init__(self, variant, v, terms, eigpairs):
        self.variant = variant
        self.v = np.asarray(v, dtype=complex)
        self.terms = [(complex(za), complex(zb)) for za, zb in terms]
        self.eigpairs = eigpairs            # list of (root, eigenvector)
        dim = self.v.shape[0]
        self.dim = dim
        vd = algebra.j_dual(self.v, INTERLEAVED)
        if variant == REAL_PAIR:
            self.w_l = 0.5 * self.v @ _KL
            self.w_r = _KR @ vd
        else:
            self.w_l = self.v
            self.w_r = vd
        self.q = self.w_l @ self.w_r
        self._o1 = np.outer(self.w_l[:, 0], self.w_r[0, :])
        self._o2 = np.outer(self.w_l[:, 1], self.w_r[1, :])
        self._rest = np.eye(dim) - self.q

    # -- root bookkeeping ---------------------------------------------------

    @property
    def zeros(self):
        out = []
        for za, zb in self.terms:
            out.extend([za, zb])
        return out

    @property
    def poles(self):
        return [-np.conj(w) for w in self.zeros]

    # -- evaluation ----------------------------------------------------------

    @staticmethod
    def _ratios(z, za, zb):
        return (z - za) / (z + zb), (z - zb) / (z + za)

    def _term_many(self, z, za, zb, invert=False):
        a1, a2 = self._ratios(z, za, zb)
        if invert:
            a1, a2 = 1.0 / a1, 1.0 / a2
        return (
            self._rest
            + a1[:, None, None] * self._o1
            + a2[:, None, None] * self._o2
        )

    def eval_many(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = self._term_many(z, *self.terms[0])
        for za, zb in self.terms[1:]:
            out = out @ self._term_many(z, za, zb)
        return out

    def inv_many(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = self._term_many(z, *self.terms[-1], invert=True)
        for za, zb in reversed(self.terms[:-1]):
            out = out @ self._term_many(z, za, zb, invert=True)
        return out

    def __call__(self, z):
        return self.eval_many(np.array([z]))[0]

    def inv(self, z):
        return self.inv_many(np.array([z]))[0]

    def eigenvalue(self, z, root):
        """Blaschke eigenvalue of the stored eigenvector at the given root."""
        z = np.asarray(z, dtype=complex)
        out = np.ones_like(z)
        for za, zb in self.terms:
            if abs(root - za) <= abs(root - zb):
                out = out * (z - za) / (z + zb)
            else:
                out = out * (z - zb) / (z + za)
        return out

    def to_dict(self, with_slh=True):
        d = {
            "variant": self.variant,
            "zeros": [[w.real, w.imag] for w in self.zeros],
            "poles": [[w.real, w.imag] for w in self.poles],
            "v": statespace._encode_matrix(self.v),
        }
        if with_slh and self.variant in (COMPLEX_PAIR, REAL_PAIR):
            try:
                d["slh"] = factor_to_slh(self).to_dict()
            except NotPhysicallyRealizableError as err:
                d["slh"] = {"error": str(err)}
        return d


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

def _j(dim):
    return algebra.signature_matrix(dim, INTERLEAVED)


def _sigma(dim):
    return algebra.sigma_matrix(dim, INTERLEAVED)


def build_complex_factor(z0, v0, tol_deg=DEG_THRESHOLD):
    """Elementary factor with zeros {z0, conj z0} and eigenvector v0 at z0.

    Needs Im(z0) != 0 and an eigenvector with nonvanishing indefinite norm;
    a J-null eigenvector routes the caller to the degenerate workarounds.
    """
    v0 = np.asarray(v0, dtype=complex).ravel()
    z0 = complex(z0)
    if abs(z0.imag) < 1e-12 * (1 + abs(z0)):
        raise DimensionError("root is real; use build_real_factor")
    j = _j(v0.size)
    beta = float(np.real(v0.conj() @ j @ v0))
    norm2 = float(np.real(v0.conj() @ v0))
    if abs(beta) < tol_deg * norm2:
        raise DegeneracyError(
            f"eigenvector has vanishing indefinite norm ({beta:.2e})"
        )
    sig = _sigma(v0.size)
    if beta < 0:
        # indefinite norm is fixed under scaling; the conjugate root's
        # eigenvector has the opposite sign and spans the same factor
        z0, v0, beta = np.conj(z0), sig @ v0.conj(), -beta
    v = v0 / np.sqrt(beta)
    w = sig @ v.conj()
    vmat = np.column_stack([v, w])
    return CanonicalFactor(
        COMPLEX_PAIR,
        vmat,
        [(z0, np.conj(z0))],
        [(z0, v), (np.conj(z0), w)],
    )


def _fix_conjugation_phase(v, sig, tol):
    """Rotate v so that sigma @ conj(v) == v; the record must be conjugation-symmetric."""
    target = sig @ v.conj()
    alpha = (v.conj() @ target) / (v.conj() @ v)
    if abs(abs(alpha) - 1.0) > 1e-6 or np.linalg.norm(target - alpha * v) > tol * np.linalg.norm(v):
        raise DegeneracyError(
            "eigenvector at a real root is not conjugation-symmetric up to phase"
        )
    return np.sqrt(alpha) * v


def build_real_factor(z1, z2, v1, v2, tol_deg=DEG_THRESHOLD):
    """Elementary factor with two real zeros z1, z2 and eigenvectors v1, v2."""
    z1, z2 = complex(z1), complex(z2)
    if max(abs(z1.imag), abs(z2.imag)) > 1e-9 * (1 + abs(z1) + abs(z2)):
        raise DimensionError("roots must be real for the real-pair variant")
    z1, z2 = z1.real, z2.real
    v1 = np.asarray(v1, dtype=complex).ravel()
    v2 = np.asarray(v2, dtype=complex).ravel()
    sig, j = _sigma(v1.size), _j(v1.size)
    v1 = _fix_conjugation_phase(v1, sig, 1e-6)
    v2 = _fix_conjugation_phase(v2, sig, 1e-6)
    g12 = complex(v1.conj() @ j @ v2)
    n1, n2 = np.linalg.norm(v1), np.linalg.norm(v2)
    if abs(g12) < tol_deg * n1 * n2:
        raise DegeneracyError(
            f"real-pair eigenvectors are J-orthogonal ({abs(g12):.2e})"
        )
    if abs(g12.real) > 1e-6 * abs(g12):
        raise DegeneracyError("cross indefinite product is not purely imaginary")
    beta = g12.imag
    # real scalings: make v1^dag J v2 = i/2 while equalizing the two norms
    s = np.sqrt(n2 / (2.0 * abs(beta) * n1))
    t = np.sign(beta) * np.sqrt(n1 / (2.0 * abs(beta) * n2))
    v1, v2 = s * v1, t * v2
    vmat = np.column_stack([v1, v2]) @ _KR
    return CanonicalFactor(
        REAL_PAIR,
        vmat,
        [(z1, z2)],
        [(z1, v1), (z2, v2)],
    )


def build_modified_degenerate_factor(z0, vmat, tol=1e-8):
    """Two-term factor absorbing a multiplicity-two root at z0 (and conj z0).

    ``vmat`` is a 2N x 2 doubled-up matrix with V_dual V = I, built either
    from the two-dimensional degenerate root space or from a perturbed
    eigenvector and its conjugate partner.
    """
    vmat = np.asarray(vmat, dtype=complex)
    if vmat.ndim != 2 or vmat.shape[1] != 2:
        raise DimensionError("V must have exactly two columns")
    res_dbl = algebra.doubled_up_residual(vmat, INTERLEAVED)
    vd = algebra.j_dual(vmat, INTERLEAVED)
    res_norm = np.linalg.norm(vd @ vmat - np.eye(2), 2)
    scale = max(1.0, np.linalg.norm(vmat, 2) ** 2)
    if max(res_dbl, res_norm) > max(tol, 1e-10 * scale):
        raise DimensionError(
            f"V violates the doubled-up normalization (residuals {res_dbl:.2e}, "
            f"{res_norm:.2e})"
        )
    z0 = complex(z0)
    return CanonicalFactor(
        MODIFIED_DEGENERATE,
        vmat,
        [(z0, np.conj(z0)), (np.conj(z0), z0)],
        [(z0, vmat[:, 0]), (np.conj(z0), vmat[:, 1])],
    )


def degenerate_v_from_vector(v0, eps=1e-3):
    """Perturb the leading entry of a root-space vector and normalize into V.

    Mirrors the eigenvector-perturbation workaround: the perturbed vector
    acquires a nonzero indefinite norm and, with its conjugate partner,
    spans the interaction plane of a modified factor.
    """
    v0 = np.asarray(v0, dtype=complex).ravel().copy()
    v0[0] += eps
    j, sig = _j(v0.size), _sigma(v0.size)
    beta = float(np.real(v0.conj() @ j @ v0))
    if abs(beta) < 1e-14:
        raise DegeneracyError("perturbation left the indefinite norm at zero")
    if beta < 0:
        v0 = sig @ v0.conj()
        beta = -beta
    v = v0 / np.sqrt(beta)
    return np.column_stack([v, sig @ v.conj()])


def canonicalize_omega(omega, tol=1e-12):
    """Classify a 2x2 Hermitian doubled-up Hamiltonian block.

    Returns (variant, c, s_transform) where s_transform is the J-unitary
    doubled-up matrix bringing the block to its canonical form: for the
    complex variant ``omega = c * S @ S``, for the real variant
    ``S @ omega @ S^dag = [[0, ic], [-ic, 0]]``.
    """
    omega = np.asarray(omega, dtype=complex)
    if omega.shape != (2, 2):
        raise DimensionError("expected a 2x2 Hamiltonian block")
    if np.linalg.norm(omega - omega.conj().T) > 1e-9 * max(1, np.linalg.norm(omega)):
        raise DimensionError("Hamiltonian block is not Hermitian")
    a = float(omega[0, 0].real)
    off = complex(omega[0, 1])
    b = abs(off)
    phi = np.angle(off) if b > 0 else 0.0
    scale = max(1.0, abs(a) + b)
    if abs(abs(a) - b) <= tol * scale:
        raise UnsupportedBoundaryError(
            "|diagonal| equals |off-diagonal|: parabolic boundary between the "
            "two canonical variants is not supported"
        )
    if abs(a) > b:
        c = np.sqrt(a * a - b * b)
        eta = np.arctanh(b / abs(a))
        s = np.array(
            [
                [np.cosh(eta / 2), np.sinh(eta / 2) * np.exp(1j * phi)],
                [np.sinh(eta / 2) * np.exp(-1j * phi), np.cosh(eta / 2)],
            ]
        )
        return COMPLEX_PAIR, float(c), s
    c = np.sqrt(b * b - a * a)
    eta = np.arctanh(a / b)
    ch, sh = np.cosh(eta / 2), np.sinh(eta / 2)
    s = np.array(
        [
            [ch * np.exp(1j * (np.pi / 4 - phi / 2)), -sh * np.exp(1j * (np.pi / 4 + phi / 2))],
            [-sh * np.exp(1j * (-np.pi / 4 - phi / 2)), ch * np.exp(1j * (-np.pi / 4 + phi / 2))],
        ]
    )
    return REAL_PAIR, float(c), s


# ---------------------------------------------------------------------------
# Alternate representation and physical parameters
# ---------------------------------------------------------------------------

def to_blaschke_potapov_form(factor):
    """Rewrite a complex-pair factor as M diag(a, -conj(a(conj z)), 1, -1, ...) M^dag J."""
    if factor.variant != COMPLEX_PAIR:
        raise DimensionError("only complex-pair factors have this normal form")
    j2 = np.diag([1.0, -1.0])
    w = factor.v @ j2
    m = algebra.indefinite_complete(w, INTERLEAVED)
    z0 = factor.terms[0][0]
    return m, {"root": z0, "dim": factor.dim}


def blaschke_potapov_eval(m, root, z):
    """Evaluate the completed normal form at an array of points."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    dim = m.shape[0]
    a = (z - root) / (z + np.conj(root))
    a_conj = (z - np.conj(root)) / (z + root)
    diag = np.zeros((z.shape[0], dim), dtype=complex)
    diag[:, 0] = a
    diag[:, 1] = -a_conj
    rest = np.tile(np.array([1.0, -1.0]), dim // 2)[2:]
    diag[:, 2:] = rest
    j = _j(dim)
    return np.einsum("ij,zj,kj,kl->zil", m, diag, m.conj(), j)


def factor_to_slh(factor):
    """Recover coupling vectors and the Hamiltonian block of a factor."""
    if factor.variant == COMPLEX_PAIR:
        z0 = factor.terms[0][0]
        if z0.imag < 0:
            z0 = np.conj(z0)
        kappa = 2.0 * z0.real
        c = abs(z0.imag)
        if kappa <= 0:
            raise NotPhysicallyRealizableError(
                f"zero pair at Re(z)={z0.real:.3g} <= 0 needs a negative "
                "net coupling rate"
            )
        omega = -c * np.eye(2)
    elif factor.variant == REAL_PAIR:
        za, zb = factor.terms[0]
        kappa = za.real + zb.real
        c_signed = 0.5 * (zb.real - za.real)
        c = abs(c_signed)
        if kappa <= 0:
            raise NotPhysicallyRealizableError(
                f"real zero pair sums to {kappa:.3g} <= 0"
            )
        omega = np.array([[0.0, 1j * c_signed], [-1j * c_signed, 0.0]])
    else:
        raise DimensionError("modified factors do not map to a single component")
    lam_dbl = np.sqrt(kappa) * factor.v
    lam_block = algebra.convert_rect_layout(lam_dbl, INTERLEAVED, algebra.BLOCK)
    n = factor.dim // 2
    return SLHParams(
        lam_minus=lam_block[:n, 0].copy(),
        lam_plus=lam_block[:n, 1].copy(),
        omega=omega,
        kappa=float(kappa),
        c=float(c),
    )


def slh_params_to_tf(params):
    """Transfer function of the recovered component (identity scattering)."""
    n = params.lam_minus.size
    model = statespace.SLHModel(
        np.eye(n),
        params.lam_minus.reshape(n, 1),
        params.lam_plus.reshape(n, 1),
        params.omega,
    )
    return statespace.slh_to_statespace(model, INTERLEAVED)


# ---------------------------------------------------------------------------
# Structural residuals (shared by tests and the verification command)
# ---------------------------------------------------------------------------

def factor_structure_residuals(factor, rng=None, n_axis=50, n_random=50):
    """Max J-unitarity, conjugation and identity-at-infinity residuals."""
    rng = rng or np.random.default_rng(0)
    dim = factor.dim
    j = _j(dim)
    sig = _sigma(dim)
    omega = np.linspace(-8.0, 8.0, n_axis)
    vals = factor.eval_many(1j * omega)
    rj = max(np.linalg.norm(v @ j @ v.conj().T - j, 2) for v in vals)

    z = rng.normal(scale=2.0, size=n_random) + 1j * rng.normal(scale=2.0, size=n_random)
    v_z = factor.eval_many(z)
    v_conj = factor.eval_many(np.conj(z))
    rd = max(
        np.linalg.norm(sig @ np.conj(vc) @ sig - vz, 2)
        for vz, vc in zip(v_z, v_conj)
    )

    big = factor.eval_many(np.array([1e9, -1e9, 1e9j]))
    ri = max(np.linalg.norm(v - np.eye(dim), 2) for v in big)
    return {"j_unitarity": float(rj), "conjugation": float(rd), "identity_at_inf": float(ri)}
