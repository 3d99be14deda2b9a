"""Delayed feedback closure of an open rational transfer function.

The open system has 2(N+M) ports in interleaved layout: the first 2N
components are external, the trailing 2M are routed through pure delays
back into themselves.  With E(z) the diagonal delay operator the closed
function is

    closed(z) = T1 + T2 E(z) (I - T4 E(z))^{-1} T3
              = T1 + T2 (E(-z) - T4)^{-1} T3

and the static surrogate replaces the open blocks by their constant limits
S1..S4.  Both algebraic forms are implemented; evaluation picks the form
that keeps the delay exponentials bounded on the given half plane.
"""

import json

import numpy as np
from dataclasses import dataclass

from . import _kernels, algebra, statespace
from .algebra import INTERLEAVED
from .errors import AssumptionViolation, DimensionError, PoleProximityError

LOOP_GUARD_REL = 1e-9


@dataclass(frozen=True)
class DelaySpec:
    """Positive delay durations sharing a common base period."""

    delays: tuple
    base_period: float

    def __post_init__(self):
        object.__setattr__(self, "delays", tuple(float(t) for t in self.delays))
        if len(self.delays) == 0 or min(self.delays) <= 0:
            raise DimensionError("need at least one positive delay")
        if self.base_period <= 0:
            raise DimensionError("base period must be positive")

    @property
    def multiples(self):
        return tuple(round(t / self.base_period) for t in self.delays)

    def commensurability_residual(self):
        """Largest relative deviation of each delay from an integer multiple."""
        res = 0.0
        for t in self.delays:
            k = max(1, round(t / self.base_period))
            res = max(res, abs(t - k * self.base_period) / t)
        return res

    @property
    def t_min(self):
        return min(self.delays)


def delay_operator(spec, z, loop_phase=0.0):
    """Diagonal delay matrix E(z), each delay entering twice per line."""
    diag = _kernels._delay_diagonal(np.atleast_1d(z), spec.delays, loop_phase)
    return np.diag(diag[0]) if np.isscalar(z) or np.ndim(z) == 0 else diag


@dataclass
class SearchStrip:
    """Vertical strip Re(z) in (c_low, c_high) containing all loop poles."""

    c_low: float
    c_high: float
    period: float

    def contains(self, z):
        return self.c_low < np.real(z) < self.c_high


@dataclass
class AssumptionCheck:
    key: str
    status: str          # pass / warn / fail
    measured: dict
    detail: str


@dataclass
class AssumptionReport:
    checks: list

    @property
    def ok(self):
        return all(c.status != "fail" for c in self.checks)

    def failed(self):
        return [c for c in self.checks if c.status == "fail"]

    def to_dict(self):
        return {
            "ok": self.ok,
            "checks": [
                {
                    "assumption": c.key,
                    "status": c.status,
                    "measured": {k: float(v) for k, v in c.measured.items()},
                    "detail": c.detail,
                }
                for c in self.checks
            ],
        }


class DelayNetwork:
    """Open model plus delay routing; immutable, evaluation is reentrant."""

    def __init__(self, open_tf, n_external_modes, delays, loop_phase=0.0):
        if open_tf.convention != INTERLEAVED:
            open_tf = statespace.RationalTF(open_tf.model.to_convention(INTERLEAVED))
        self.open_tf = open_tf
        self.n_external_modes = int(n_external_modes)
        self.delays = delays if isinstance(delays, DelaySpec) else DelaySpec(
            tuple(np.atleast_1d(delays)), float(np.min(np.atleast_1d(delays)))
        )
        self.loop_phase = float(loop_phase)
        p = open_tf.port_dim
        self.n_internal_modes = p // 2 - self.n_external_modes
        if self.n_internal_modes < 1 or self.n_external_modes < 1:
            raise DimensionError("need at least one external and one internal mode")
        if len(self.delays.delays) != self.n_internal_modes:
            raise DimensionError(
                f"{self.n_internal_modes} internal lines but "
                f"{len(self.delays.delays)} delays"
            )
        self._ne = 2 * self.n_external_modes
        s = open_tf.s_inf
        ne = self._ne
        self.static_blocks = (s[:ne, :ne], s[:ne, ne:], s[ne:, :ne], s[ne:, ne:])
        self._strip = None

    # -- basic structure ----------------------------------------------------

    @property
    def period_im(self):
        return 2.0 * np.pi / self.delays.base_period

    @property
    def external_dim(self):
        return self._ne

    def with_loop_phase(self, delta):
        """Copy of the network with a phase element inside the loop."""
        return DelayNetwork(
            self.open_tf, self.n_external_modes, self.delays, self.loop_phase + delta
        )

    def open_blocks_many(self, z, guard=True):
        t = self.open_tf.eval_many(z, guard=guard)
        ne = self._ne
        return t[:, :ne, :ne], t[:, :ne, ne:], t[:, ne:, :ne], t[:, ne:, ne:]

    # -- closed-loop evaluation ----------------------------------------------

    def _close(self, z, t1, t2, t3, t4, guard):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        nz = z.shape[0]
        di = 2 * self.n_internal_modes
        out = np.empty((nz, self._ne, self._ne), dtype=complex)
        neg = np.real(z) < 0.0
        idx_pos, idx_neg = np.nonzero(~neg)[0], np.nonzero(neg)[0]
        eye = np.eye(di)
        if idx_pos.size:
            e = _kernels._delay_diagonal(z[idx_pos], self.delays.delays, self.loop_phase)
            w = eye - t4[idx_pos] * e[:, None, :]
            self._loop_guard(z[idx_pos], w, guard)
            x = np.linalg.solve(w, t3[idx_pos])
            out[idx_pos] = t1[idx_pos] + t2[idx_pos] @ (e[:, :, None] * x)
        if idx_neg.size:
            einv = _kernels._delay_diagonal(-z[idx_neg], self.delays.delays, -self.loop_phase)
            w = einv[:, :, None] * eye - t4[idx_neg]
            self._loop_guard(z[idx_neg], w, guard)
            x = np.linalg.solve(w, t3[idx_neg])
            out[idx_neg] = t1[idx_neg] + t2[idx_neg] @ x
        return out

    @staticmethod
    def _loop_guard(z, w, guard):
        if not guard:
            return
        smin = np.linalg.svd(w, compute_uv=False)[:, -1]
        scale = np.linalg.norm(w, axis=(1, 2))
        bad = smin < LOOP_GUARD_REL * np.maximum(1.0, scale)
        if np.any(bad):
            raise PoleProximityError(z[bad][0], None, "loop determinant singular near z")

    def closed_many(self, z, guard=True):
        """Closed-loop transfer function on an array of points."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        t1, t2, t3, t4 = self.open_blocks_many(z, guard=guard)
        return self._close(z, t1, t2, t3, t4, guard)

    def closed(self, z, guard=True):
        return self.closed_many(np.array([z]), guard=guard)[0]

    def static_many(self, z, guard=True):
        """Static surrogate: the same closure built from the constant blocks."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        s1, s2, s3, s4 = self.static_blocks
        nz = z.shape[0]
        rep = lambda m: np.broadcast_to(m, (nz,) + m.shape)
        return self._close(z, rep(s1), rep(s2), rep(s3), rep(s4), guard)

    def static(self, z, guard=True):
        return self.static_many(np.array([z]), guard=guard)[0]

    # -- loop determinants ----------------------------------------------------

    def loop_det_many(self, z, which="exact", guard=True):
        """det(I - T4(z) E(z)) for which='exact', det(I - S4 E(z)) for 'static'."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if which == "static":
            return _kernels.static_loop_det(
                z, self.static_blocks[3], self.delays.delays, self.loop_phase
            )
        if which != "exact":
            raise ValueError("which must be 'exact' or 'static'")
        ne = self._ne
        t = self.open_tf.eval_many(z, guard=guard)
        t4 = t[:, ne:, ne:]
        e = _kernels._delay_diagonal(z, self.delays.delays, self.loop_phase)
        di = t4.shape[1]
        return np.linalg.det(np.eye(di) - t4 * e[:, None, :])

    def loop_determinant(self, z, which="exact"):
        return self.loop_det_many(np.array([z]), which=which)[0]

    # -- search strip ----------------------------------------------------------

    def compute_strip(self, margin=0.10):
        """Strip bounds from singular-value estimates, widened by a margin."""
        if self._strip is not None:
            return self._strip
        s4 = self.static_blocks[3]
        sv = np.linalg.svd(s4, compute_uv=False)
        smin, smax = sv[-1], sv[0]
        if smin < 1e-12:
            raise AssumptionViolation(
                "invertible-internal-scattering",
                "static internal block is singular; the loop degenerates to "
                "a delayed feed-forward path",
            )
        # sample the exact internal block far out to tighten the bounds
        lam = self.open_tf.poles
        r_big = 10.0 * (1.0 + (np.max(np.abs(lam)) if lam.size else 1.0))
        angles = np.exp(1j * np.linspace(0.1, 2 * np.pi + 0.1, 24, endpoint=False))
        t4 = self.open_blocks_many(r_big * angles, guard=False)[3]
        sv_t4 = np.linalg.svd(t4, compute_uv=False)
        smin = min(smin, float(np.min(sv_t4)))
        smax = max(smax, float(np.max(sv_t4)))
        t_min = self.delays.t_min
        c_low = np.log(0.5 * smin) / t_min
        c_high = np.log(2.0 * smax) / t_min
        if lam.size:
            spread = np.ptp(np.real(lam)) if lam.size > 1 else 0.0
            c_low = min(c_low, float(np.min(np.real(lam))) - 0.05 * (1.0 + spread))
            c_high = max(c_high, float(np.max(np.real(lam))) + 0.05 * (1.0 + spread))
        width = c_high - c_low
        self._strip = SearchStrip(
            c_low - margin * width, c_high + margin * width, self.period_im
        )
        return self._strip

    # -- assumption validation ---------------------------------------------

    def validate_assumptions(self, tol_structural=1e-8, n_grid=41):
        """Report-only checks of the standing assumptions of the construction."""
        checks = []

        checks.append(
            AssumptionCheck(
                "proper-rational",
                "pass",
                {"state_dim": self.open_tf.model.state_dim},
                "open model is a finite-dimensional state-space realization",
            )
        )

        lam = self.open_tf.poles
        guard_im = 0.37  # keep the test grid off any imaginary-axis pole
        omega = np.linspace(-2 * self.period_im, 2 * self.period_im, n_grid) + guard_im
        vals = self.open_tf.eval_many(1j * omega, guard=False)
        rj = max(algebra.j_unitarity_residual(v, INTERLEAVED) for v in vals)
        rd = max(
            self.open_tf.model.structure_residual(),
            conjugation_residual(
                lambda zz: self.open_tf.eval_many(zz, guard=False),
                0.3 + 1j * omega[::4],
            ),
        )
        status = "pass" if max(rj, rd) <= tol_structural else "fail"
        checks.append(
            AssumptionCheck(
                "physically-realizable",
                status,
                {"j_unitarity_residual": rj, "doubled_up_residual": rd},
                "open transfer function is J-unitary on the axis and "
                "conjugation-symmetric",
            )
        )

        s1, s2, s3, s4 = self.static_blocks
        m2 = float(np.linalg.svd(s2, compute_uv=False)[-1])
        m3 = float(np.linalg.svd(s3, compute_uv=False)[-1])
        m4 = float(np.linalg.svd(s4, compute_uv=False)[-1])
        worst = min(m2, m3, m4)
        status = "pass" if worst > 1e-2 else ("warn" if worst > 1e-6 else "fail")
        checks.append(
            AssumptionCheck(
                "invertible-internal-scattering",
                status,
                {"sigma_min_s2": m2, "sigma_min_s3": m3, "sigma_min_s4": m4},
                "loop blocks keep singular values away from zero at large |z|",
            )
        )

        res = self.delays.commensurability_residual()
        checks.append(
            AssumptionCheck(
                "commensurate-delays",
                "pass" if res <= 1e-12 else "fail",
                {"relative_residual": res},
                "every delay is an integer multiple of the base period",
            )
        )

        zeros = self.open_tf.zero_positions()
        if lam.size and zeros.size:
            dist = float(np.min(np.abs(zeros[:, None] - lam[None, :])))
        else:
            dist = np.inf
        checks.append(
            AssumptionCheck(
                "separated-zeros-poles",
                "pass" if dist > 1e-6 else "fail",
                {"min_zero_pole_distance": dist},
                "zeros and poles of the open model do not collide",
            )
        )

        roots = self._static_pole_scan()
        min_abs_deriv = np.inf
        for r in roots:
            h = 1e-6
            zs = np.array([r + h, r - h])
            fp = np.diff(self.loop_det_many(zs, which="static"))[0] / (-2 * h)
            min_abs_deriv = min(min_abs_deriv, float(np.abs(fp)))
        degenerate = min_abs_deriv < 1e-4
        checks.append(
            AssumptionCheck(
                "simple-roots",
                "warn" if degenerate else "pass",
                {"min_loop_root_derivative": min_abs_deriv, "roots_found": len(roots)},
                "loop determinant roots are simple (degenerate roots need a "
                "workaround strategy)",
            )
        )

        return AssumptionReport(checks)

    def _static_pole_scan(self, n_re=80, n_im=80):
        """Crude Newton sweep for static loop roots in one imaginary period."""
        strip = self.compute_strip()
        re = np.linspace(strip.c_low, strip.c_high, n_re)
        im = np.linspace(0.0, self.period_im, n_im, endpoint=False)
        zz = (re[:, None] + 1j * im[None, :]).ravel()
        f = np.abs(self.loop_det_many(zz, which="static")).reshape(n_re, n_im)
        seeds = zz.reshape(n_re, n_im)[f < 10.0 * np.min(f) + 1e-12]
        roots = []
        for s in seeds[:64]:
            r = self._newton_static(s)
            if r is None or not (strip.c_low - 1 < r.real < strip.c_high + 1):
                continue
            if all(abs(r - q) > 1e-6 for q in roots):
                roots.append(r)
        return roots

    def _newton_static(self, z0, max_iter=60):
        z = complex(z0)
        for _ in range(max_iter):
            h = 1e-7 * (1.0 + abs(z))
            f0, fp, fm = self.loop_det_many(np.array([z, z + h, z - h]), which="static")
            d = (fp - fm) / (2 * h)
            if d == 0:
                return None
            step = f0 / d
            z = z - step
            if abs(step) < 1e-13 * (1.0 + abs(z)):
                return z
        return z if abs(self.loop_det_many(np.array([z]), "static")[0]) < 1e-8 else None


# ---------------------------------------------------------------------------
# Building networks and serialization
# ---------------------------------------------------------------------------

def conjugation_residual(evaluate_many, z_points):
    """Max deviation from f(z) = Sigma conj(f(conj z)) Sigma over the points."""
    z = np.atleast_1d(np.asarray(z_points, dtype=complex))
    v_z = evaluate_many(z)
    v_c = evaluate_many(np.conj(z))
    sig = algebra.sigma_matrix(v_z.shape[1], INTERLEAVED)
    return float(
        max(
            np.linalg.norm(sig @ np.conj(vc) @ sig - vz, 2)
            for vz, vc in zip(v_z, v_c)
        )
    )


def permute_modes(tf, order):
    """Reorder the port lines of a transfer function (interleaved layout)."""
    m = tf.model
    n = m.port_dim // 2
    if sorted(order) != list(range(n)):
        raise DimensionError("order must be a permutation of the mode indices")
    idx = np.concatenate([[2 * k, 2 * k + 1] for k in order])
    pi = np.zeros((2 * n, 2 * n))
    pi[np.arange(2 * n), idx] = 1.0
    return statespace.RationalTF(
        statespace.StateSpaceModel(
            m.a, m.b @ pi.T, pi @ m.c, pi @ m.d @ pi.T, m.convention
        )
    )


def network_from_slh(slh, internal_modes, delays, base_period, loop_phase=0.0):
    """Close the listed SLH ports through delays; remaining ports stay external."""
    tf = statespace.slh_to_statespace(slh, INTERLEAVED)
    n = tf.port_dim // 2
    internal = list(internal_modes)
    external = [k for k in range(n) if k not in internal]
    tf = permute_modes(tf, external + internal)
    return DelayNetwork(
        tf, len(external), DelaySpec(tuple(delays), base_period), loop_phase
    )


def network_to_dict(net):
    return {
        "open_model": statespace.model_to_dict(net.open_tf),
        "n_external_modes": net.n_external_modes,
        "delays": list(net.delays.delays),
        "base_period": net.delays.base_period,
        "loop_phase": net.loop_phase,
    }


def network_from_dict(doc):
    if "preset" in doc:
        from . import presets

        return presets.by_name(doc["preset"], **doc.get("parameters", {}))
    if "slh" in doc:
        s = doc["slh"]
        slh = statespace.SLHModel(
            statespace._decode_matrix(s["s"]),
            statespace._decode_matrix(s["lam_minus"]),
            statespace._decode_matrix(s["lam_plus"]),
            statespace._decode_matrix(s["omega"]),
        )
        return network_from_slh(
            slh,
            doc["internal_modes"],
            doc["delays"],
            doc["base_period"],
            doc.get("loop_phase", 0.0),
        )
    tf = statespace.model_from_dict(doc["open_model"])
    return DelayNetwork(
        tf,
        doc["n_external_modes"],
        DelaySpec(tuple(doc["delays"]), doc["base_period"]),
        doc.get("loop_phase", 0.0),
    )


def save_network(net, path):
    with open(path, "w") as fh:
        json.dump(network_to_dict(net), fh, indent=1)


def load_network(path):
    with open(path) as fh:
        return network_from_dict(json.load(fh))
