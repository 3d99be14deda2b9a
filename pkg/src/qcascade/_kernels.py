"""Hot numeric kernels: numba-compiled versions with pure-numpy fallbacks.

The inner loops that dominate runtime are (a) truncated Blaschke ladder
products with up to ~1e6 terms per point, (b) the static loop determinant
sampled along adaptive contours, and (c) phase accumulation for winding
numbers.  Each has a numba ``@njit`` implementation and a vectorized numpy
one.  Set ``QCASCADE_NO_NUMBA=1`` to force the numpy path (the benchmark in
``benchmarks/bench_kernels.py`` compares the two).
"""

import os

import numpy as np

_env = os.environ.get("QCASCADE_NO_NUMBA", "").strip()
NUMBA_DISABLED = _env not in ("", "0")

try:
    if NUMBA_DISABLED:
        raise ImportError("numba disabled via QCASCADE_NO_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

IMPLEMENTATION = "numba" if HAVE_NUMBA else "numpy"

# chunk length for the numpy fallbacks, bounds temporary-array memory
_CHUNK = 16384


# ---------------------------------------------------------------------------
# Blaschke ladder product:  prod_{n=n_lo}^{n_hi} (z - z_n) / (z + conj(z_n))
# with z_n = base + 1j*period*n.
# ---------------------------------------------------------------------------

def blaschke_ladder_numpy(z, base, period, n_lo, n_hi):
    z = np.asarray(z, dtype=np.complex128)
    out = np.ones_like(z)
    for lo in range(n_lo, n_hi + 1, _CHUNK):
        hi = min(lo + _CHUNK - 1, n_hi)
        zn = base + 1j * period * np.arange(lo, hi + 1)
        ratios = (z[..., None] - zn) / (z[..., None] + np.conj(zn))
        out *= ratios.prod(axis=-1)
    return out


if HAVE_NUMBA:

    @njit(cache=True)
    def _blaschke_ladder_jit(z, base, period, n_lo, n_hi):
        out = np.empty_like(z)
        for i in range(z.shape[0]):
            zi = z[i]
            acc = 1.0 + 0.0j
            for n in range(n_lo, n_hi + 1):
                zn = base + 1j * period * n
                acc *= (zi - zn) / (zi + np.conj(zn))
            out[i] = acc
        return out

    def blaschke_ladder(z, base, period, n_lo, n_hi):
        z = np.ascontiguousarray(np.atleast_1d(np.asarray(z, dtype=np.complex128)))
        return _blaschke_ladder_jit(z, complex(base), float(period), int(n_lo), int(n_hi))

else:

    def blaschke_ladder(z, base, period, n_lo, n_hi):
        z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
        return blaschke_ladder_numpy(z, complex(base), float(period), int(n_lo), int(n_hi))


# ---------------------------------------------------------------------------
# Static loop determinant:  det(I - S4 @ E(z)) over an array of z.
# E(z) is diagonal with exp(-T_j z) repeated once for the annihilation and
# once for the creation entry of each delayed line; a loop phase multiplies
# the pair by exp(+i*phase) / exp(-i*phase).
# ---------------------------------------------------------------------------

def _delay_diagonal(z, delays, loop_phase):
    """Diagonal of E(z) as an (nz, 2M) array, interleaved per delayed line."""
    z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    delays = np.asarray(delays, dtype=np.float64)
    ex = np.exp(-np.outer(z, delays))            # (nz, M)
    diag = np.empty((z.shape[0], 2 * delays.shape[0]), dtype=np.complex128)
    diag[:, 0::2] = ex * np.exp(1j * loop_phase)
    diag[:, 1::2] = ex * np.exp(-1j * loop_phase)
    return diag


def static_loop_det_numpy(z, s4, delays, loop_phase=0.0):
    z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    diag = _delay_diagonal(z, delays, loop_phase)
    m = np.eye(s4.shape[0]) - s4[None, :, :] * diag[:, None, :]
    return np.linalg.det(m)


if HAVE_NUMBA:

    @njit(cache=True)
    def _static_loop_det_jit(z, s4, delays, loop_phase):
        n = s4.shape[0]
        m_delays = delays.shape[0]
        out = np.empty(z.shape[0], dtype=np.complex128)
        work = np.empty((n, n), dtype=np.complex128)
        for i in range(z.shape[0]):
            for j in range(m_delays):
                e = np.exp(-delays[j] * z[i])
                ea = e * np.exp(1j * loop_phase)
                ec = e * np.exp(-1j * loop_phase)
                for r in range(n):
                    work[r, 2 * j] = -s4[r, 2 * j] * ea
                    work[r, 2 * j + 1] = -s4[r, 2 * j + 1] * ec
            for r in range(n):
                work[r, r] += 1.0
            out[i] = np.linalg.det(work)
        return out

    def static_loop_det(z, s4, delays, loop_phase=0.0):
        z = np.ascontiguousarray(np.atleast_1d(np.asarray(z, dtype=np.complex128)))
        s4 = np.ascontiguousarray(np.asarray(s4, dtype=np.complex128))
        delays = np.ascontiguousarray(np.asarray(delays, dtype=np.float64))
        return _static_loop_det_jit(z, s4, delays, float(loop_phase))

else:

    static_loop_det = static_loop_det_numpy


# ---------------------------------------------------------------------------
# Phase increments between consecutive samples of a nonvanishing complex path.
# Sum / (2*pi) of the increments of a closed path is its winding number.
# ---------------------------------------------------------------------------

def phase_increments_numpy(values):
    values = np.asarray(values, dtype=np.complex128)
    return np.angle(values[1:] * np.conj(values[:-1]))


if HAVE_NUMBA:

    @njit(cache=True)
    def _phase_increments_jit(values):
        out = np.empty(values.shape[0] - 1, dtype=np.float64)
        for i in range(values.shape[0] - 1):
            w = values[i + 1] * np.conj(values[i])
            out[i] = np.arctan2(w.imag, w.real)
        return out

    def phase_increments(values):
        values = np.ascontiguousarray(np.asarray(values, dtype=np.complex128))
        return _phase_increments_jit(values)

else:

    phase_increments = phase_increments_numpy
