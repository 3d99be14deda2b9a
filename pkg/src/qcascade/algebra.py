"""Complex linear algebra with the indefinite metric J.

Two port layouts are supported and tracked explicitly:

* ``block``: annihilation components first, creation components last.
  The metric is ``J = diag(I, -I)`` and the conjugation matrix is
  ``Sigma = [[0, I], [I, 0]]``.
* ``interleaved``: annihilation/creation components alternate per line.
  The metric is the alternating ``diag(+1, -1, +1, -1, ...)`` and Sigma
  swaps each adjacent pair.

A matrix M is doubled-up when ``M @ Sigma == Sigma @ conj(M)`` and
J-unitary when ``M J M^dag == M^dag J M == J`` (same convention on both
sides).  Constructors build in block layout; the network layer converts to
interleaved at its boundary.
"""

import numpy as np
from dataclasses import dataclass
from scipy.linalg import expm, null_space

from .errors import DegenerateSubspaceError, DimensionError

BLOCK = "block"
INTERLEAVED = "interleaved"

DEFAULT_TOL = 1e-10


def _check_even(dim):
    if dim % 2 or dim <= 0:
        raise DimensionError(f"dimension must be even and positive, got {dim}")


def signature_matrix(dim, convention=INTERLEAVED):
    """Signature matrix J of size dim (even)."""
    _check_even(dim)
    if convention == INTERLEAVED:
        d = np.ones(dim)
        d[1::2] = -1.0
    elif convention == BLOCK:
        d = np.ones(dim)
        d[dim // 2:] = -1.0
    else:
        raise ValueError(f"unknown convention {convention!r}")
    return np.diag(d)


def sigma_matrix(dim, convention=INTERLEAVED):
    """Conjugation-symmetry matrix Sigma of size dim (even)."""
    _check_even(dim)
    n = dim // 2
    s = np.zeros((dim, dim))
    if convention == INTERLEAVED:
        for k in range(n):
            s[2 * k, 2 * k + 1] = 1.0
            s[2 * k + 1, 2 * k] = 1.0
    elif convention == BLOCK:
        s[:n, n:] = np.eye(n)
        s[n:, :n] = np.eye(n)
    else:
        raise ValueError(f"unknown convention {convention!r}")
    return s


def interleave_permutation(dim):
    """Permutation P with ``P @ v_block = v_interleaved``."""
    _check_even(dim)
    n = dim // 2
    p = np.zeros((dim, dim))
    for k in range(n):
        p[2 * k, k] = 1.0
        p[2 * k + 1, n + k] = 1.0
    return p


def convert_layout(m, src, dst):
    """Re-order the rows/columns of a square matrix between layouts."""
    m = np.asarray(m)
    if src == dst:
        return m
    p = interleave_permutation(m.shape[0])
    if (src, dst) == (BLOCK, INTERLEAVED):
        return p @ m @ p.T
    if (src, dst) == (INTERLEAVED, BLOCK):
        return p.T @ m @ p
    raise ValueError(f"unknown layout pair {src!r} -> {dst!r}")


def convert_rect_layout(m, src, dst):
    """Layout conversion for rectangular matrices (rows and columns separately)."""
    m = np.asarray(m)
    if src == dst:
        return m
    pr = interleave_permutation(m.shape[0])
    pc = interleave_permutation(m.shape[1])
    if (src, dst) == (BLOCK, INTERLEAVED):
        return pr @ m @ pc.T
    if (src, dst) == (INTERLEAVED, BLOCK):
        return pr.T @ m @ pc
    raise ValueError(f"unknown layout pair {src!r} -> {dst!r}")


def flat(m, convention=INTERLEAVED):
    """J-conjugation ``J @ conj(M) @ J`` of a square even-dimensional matrix."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"flat expects a square matrix, got shape {m.shape}")
    j = signature_matrix(m.shape[0], convention)
    return j @ np.conj(m) @ j


def j_dual(m, convention=INTERLEAVED):
    """J-adjoint ``J_cols @ M^dag @ J_rows`` for a (2a x 2b) matrix.

    For doubled-up couplings this is the map written with the flat symbol in
    normalization identities like ``V_dual @ V = I``; it differs from
    :func:`flat` by a transpose and handles rectangular shapes.
    """
    m = np.asarray(m)
    jr = signature_matrix(m.shape[0], convention)
    jc = signature_matrix(m.shape[1], convention)
    return jc @ m.conj().T @ jr


def j_unitarity_residual(m, convention=INTERLEAVED):
    m = np.asarray(m)
    j = signature_matrix(m.shape[0], convention)
    r1 = np.linalg.norm(m @ j @ m.conj().T - j, 2)
    r2 = np.linalg.norm(m.conj().T @ j @ m - j, 2)
    return max(r1, r2)


def is_j_unitary(m, tol=DEFAULT_TOL, convention=INTERLEAVED):
    """Return (bool, residual) for the J-unitarity test."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    res = j_unitarity_residual(m, convention)
    return bool(res <= tol), res


def doubled_up_residual(m, convention=INTERLEAVED):
    m = np.asarray(m)
    if m.shape[0] == m.shape[1]:
        s = sigma_matrix(m.shape[0], convention)
        return np.linalg.norm(m @ s - s @ np.conj(m), 2)
    sr = sigma_matrix(m.shape[0], convention)
    sc = sigma_matrix(m.shape[1], convention)
    return np.linalg.norm(m @ sc - sr @ np.conj(m), 2)


def is_doubled_up(m, tol=DEFAULT_TOL, convention=INTERLEAVED):
    """Return (bool, residual) for the doubled-up symmetry test."""
    res = doubled_up_residual(m, convention)
    return bool(res <= tol), res


@dataclass
class DoubledUpMatrix:
    """Even-dimensional complex matrix carrying its port-layout convention."""

    data: np.ndarray
    convention: str = BLOCK

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        _check_even(self.data.shape[0])

    @classmethod
    def from_blocks(cls, m_minus, m_plus, convention=BLOCK):
        """Assemble ``[[M-, M+], [conj(M+), conj(M-)]]`` and convert if needed."""
        m_minus = np.asarray(m_minus, dtype=complex)
        m_plus = np.asarray(m_plus, dtype=complex)
        data = np.block([[m_minus, m_plus], [np.conj(m_plus), np.conj(m_minus)]])
        if convention == INTERLEAVED:
            data = convert_rect_layout(data, BLOCK, INTERLEAVED)
        return cls(data, convention)

    def to(self, convention):
        if convention == self.convention:
            return self
        if self.data.shape[0] == self.data.shape[1]:
            data = convert_layout(self.data, self.convention, convention)
        else:
            data = convert_rect_layout(self.data, self.convention, convention)
        return DoubledUpMatrix(data, convention)

    def j(self):
        return signature_matrix(self.data.shape[0], self.convention)

    def sigma(self):
        return sigma_matrix(self.data.shape[0], self.convention)

    def residual(self):
        return doubled_up_residual(self.data, self.convention)

    @property
    def shape(self):
        return self.data.shape


def random_structured_generator(n_modes, rng, scale=1.0, convention=BLOCK):
    """Random X with X^dag J + J X = 0 and X Sigma = Sigma conj(X).

    Built as ``X = i J H`` with H Hermitian and doubled-up, which satisfies
    both identities exactly; exp(X) is then J-unitary and doubled-up by
    construction.
    """
    n = n_modes
    h_m = rng.normal(scale=scale, size=(n, n)) + 1j * rng.normal(scale=scale, size=(n, n))
    h_m = 0.5 * (h_m + h_m.conj().T)
    h_p = rng.normal(scale=scale, size=(n, n)) + 1j * rng.normal(scale=scale, size=(n, n))
    h_p = 0.5 * (h_p + h_p.T)
    h = np.block([[h_m, h_p], [np.conj(h_p), np.conj(h_m)]])
    x = 1j * signature_matrix(2 * n, BLOCK) @ h
    if convention == INTERLEAVED:
        x = convert_layout(x, BLOCK, INTERLEAVED)
    return x


def random_j_unitary_doubled_up(n_modes, seed, scale=0.6, convention=BLOCK):
    """Random J-unitary doubled-up matrix of size 2*n_modes via a matrix exponential."""
    if n_modes < 1:
        raise DimensionError("need at least one mode")
    rng = np.random.default_rng(seed)
    x = random_structured_generator(n_modes, rng, scale=scale, convention=convention)
    return DoubledUpMatrix(expm(x), convention)


def indefinite_complete(w, convention=INTERLEAVED, tol=1e-8):
    """Complete columns W with ``W^dag J W = J_k`` to a full J-unitary matrix.

    The first k columns of the result are W itself; the remaining columns are
    an orthonormal basis (in the indefinite inner product) of the J-orthogonal
    companion, ordered so the full Gram matrix equals J.

    Raises DegenerateSubspaceError when the Gram structure of W does not match
    the leading k x k part of J, or when the companion subspace is degenerate.
    """
    w = np.asarray(w, dtype=complex)
    if w.ndim != 2:
        raise DimensionError("expected a 2-d array of columns")
    dim, k = w.shape
    _check_even(dim)
    j = signature_matrix(dim, convention)
    jk = np.diag(j)[:k]
    gram = w.conj().T @ j @ w
    scale = max(1.0, np.linalg.norm(w, 2) ** 2)
    if np.linalg.norm(gram - np.diag(jk), 2) > tol * scale:
        raise DegenerateSubspaceError(
            "columns do not satisfy the expected indefinite Gram structure "
            f"(residual {np.linalg.norm(gram - np.diag(jk), 2):.3e})"
        )
    if k == dim:
        return w.copy()

    comp = null_space(w.conj().T @ j)
    if comp.shape[1] != dim - k:
        raise DegenerateSubspaceError(
            f"companion subspace has dimension {comp.shape[1]}, expected {dim - k}"
        )
    g = comp.conj().T @ j @ comp
    g = 0.5 * (g + g.conj().T)
    lam, u = np.linalg.eigh(g)
    if np.min(np.abs(lam)) < 1e-12:
        raise DegenerateSubspaceError(
            "companion subspace degenerate: vanishing indefinite norm direction"
        )
    cols = comp @ u / np.sqrt(np.abs(lam))
    signs = np.sign(lam)

    needed = np.diag(j)[k:]
    pos = [cols[:, i] for i in range(cols.shape[1]) if signs[i] > 0]
    neg = [cols[:, i] for i in range(cols.shape[1]) if signs[i] < 0]
    if len(pos) != np.sum(needed > 0) or len(neg) != np.sum(needed < 0):
        raise DegenerateSubspaceError(
            "signature of the companion subspace does not continue the J pattern"
        )
    ordered = [pos.pop(0) if s > 0 else neg.pop(0) for s in needed]
    return np.hstack([w, np.column_stack(ordered)])
