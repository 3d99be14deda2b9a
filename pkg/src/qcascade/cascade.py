"""Sequential factor detachment, ordering, truncation and the constant remainder.

Detachment right-multiplies the working function by a factor inverse, so
after detaching P1, P2, ... the identity is ``closed(z) = B @ Pk(z) @ ... @
P1(z)`` with B constant once every zero/pole pair has been absorbed.  Long
periodic ladders are evaluated through scalar Blaschke products (numba
kernels) instead of explicit per-factor matrices, which makes truncations of
~1e6 terms cheap; that route assumes the ladder projector does not drift,
which is checked.
"""

import numpy as np
from dataclasses import dataclass, field

from . import _kernels, algebra, factors as factors_mod, rootfind
from .algebra import INTERLEAVED
from .errors import (
    CorrespondenceError,
    DegeneracyError,
    PoleProximityError,
    RemovabilityError,
)
from .factors import (
    COMPLEX_PAIR,
    MODIFIED_DEGENERATE,
    REAL_PAIR,
    CanonicalFactor,
    build_complex_factor,
    build_modified_degenerate_factor,
    build_real_factor,
    degenerate_v_from_vector,
)

PHASE_SHIFT = "phase_shift"
PERTURB = "perturb"


# ---------------------------------------------------------------------------
# Detachment
# ---------------------------------------------------------------------------

@dataclass
class DetachReport:
    position: complex
    eigen_overlap: float
    removability_sigma: float
    pole_bound: float
    ok: bool

    def to_dict(self):
        return {
            "position": [self.position.real, self.position.imag],
            "eigen_overlap": self.eigen_overlap,
            "removability_sigma": self.removability_sigma,
            "pole_bound": self.pole_bound,
            "ok": self.ok,
        }


def _subspace_overlap(m_at_zero, vectors):
    """Alignment between the small-singular subspace of m and given vectors."""
    vecs = np.atleast_2d(np.asarray(vectors))
    if vecs.shape[0] != m_at_zero.shape[0]:
        vecs = vecs.T
    k = vecs.shape[1]
    _, _, vh = np.linalg.svd(m_at_zero)
    null_basis = vh[-k:].conj().T
    q, _ = np.linalg.qr(vecs)
    overlap = np.linalg.svd(null_basis.conj().T @ q, compute_uv=False)
    return float(np.min(overlap))


def detach(f_many, factor, check=True, overlap_tol=1e-6):
    """Right-divide a matrix function by a factor; verify the root is removed.

    Returns (new_handle, DetachReport).  Refuses when the factor's
    eigenvectors do not align with the null directions of f at the factor's
    zeros: detaching with a wrong eigenvector would leave a zero/pole pair
    behind.
    """
    report = None
    if check:
        groups = {}
        if factor.variant == MODIFIED_DEGENERATE:
            # the two-term product annihilates the whole interaction plane at
            # both roots, so both columns are compared against the null space
            for root in set(factor.zeros):
                groups[complex(root)] = [factor.v[:, 0], factor.v[:, 1]]
        else:
            for root, vec in factor.eigpairs:
                groups.setdefault(complex(root), []).append(vec)
        overlap = 1.0
        for root, vecs in groups.items():
            m0 = f_many(np.array([root]))[0]
            overlap = min(overlap, _subspace_overlap(m0, np.column_stack(vecs)))
        if overlap < 1.0 - overlap_tol:
            raise RemovabilityError(
                f"eigenvector mismatch at {factor.zeros[0]:.6g} "
                f"(subspace overlap {overlap:.6f}); refusing to detach"
            )

    def new_many(z):
        return f_many(z) @ factor.inv_many(np.atleast_1d(z))

    if check:
        z0 = factor.zeros[0]
        ring = z0 + 0.15 * (1 + abs(z0)) * np.exp(1j * np.linspace(0, 2 * np.pi, 6)[:-1])
        scale = float(np.median(np.linalg.norm(f_many(ring), 2, axis=(1, 2))))
        # the detached point itself is removable, not evaluable: probe a tiny ring
        ring_z = z0 + 1e-6 * (1 + abs(z0)) * np.exp(1j * np.linspace(0, 2 * np.pi, 5)[:-1])
        sig_min = float(
            np.median(np.linalg.svd(new_many(ring_z), compute_uv=False)[:, -1])
        )
        pole = factor.poles[0]
        ring_p = pole + 1e-4 * (1 + abs(pole)) * np.exp(1j * np.linspace(0, 2 * np.pi, 6)[:-1])
        pole_bound = float(np.max(np.linalg.norm(new_many(ring_p), 2, axis=(1, 2))))
        ok = sig_min >= 1e-3 * scale and pole_bound <= 1e4 * scale
        report = DetachReport(z0, overlap, sig_min, pole_bound, ok)
        if not ok:
            raise RemovabilityError(
                f"removability check failed at {z0:.6g}: sigma_min {sig_min:.3e}, "
                f"pole bound {pole_bound:.3e} (scale {scale:.3e})"
            )
    return new_many, report


# ---------------------------------------------------------------------------
# Ladder tails: long periodic runs evaluated through scalar products
# ---------------------------------------------------------------------------

@dataclass
class LadderTail:
    """Factors of one periodic family over index ranges, collapsed to scalars.

    mode "projector_scalar": every factor acts as a1*a2 on the full projector
    (modified degenerate families).  mode "two_channel": complex-pair factors
    sharing V, channel ratios accumulated separately.
    """

    v: np.ndarray
    base: complex
    period: float
    ranges: tuple          # tuple of (lo, hi) inclusive index ranges
    mode: str

    def __post_init__(self):
        vd = algebra.j_dual(self.v, INTERLEAVED)
        self.q = self.v @ vd
        self._o1 = np.outer(self.v[:, 0], vd[0, :])
        self._o2 = np.outer(self.v[:, 1], vd[1, :])
        self._rest = np.eye(self.v.shape[0]) - self.q

    def _scalars(self, z, invert):
        p1 = np.ones_like(z)
        p2 = np.ones_like(z)
        for lo, hi in self.ranges:
            p1 = p1 * _kernels.blaschke_ladder(z, self.base, self.period, lo, hi)
            if self.mode == "two_channel":
                p2 = p2 * _kernels.blaschke_ladder(
                    z, np.conj(self.base), self.period, -hi, -lo
                )
        if self.mode == "projector_scalar":
            p2 = p1
        if invert:
            return 1.0 / p1, 1.0 / p2
        return p1, p2

    def eval_many(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        p1, p2 = self._scalars(z, invert=False)
        return self._rest + p1[:, None, None] * self._o1 + p2[:, None, None] * self._o2

    def inv_many(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        p1, p2 = self._scalars(z, invert=True)
        return self._rest + p1[:, None, None] * self._o1 + p2[:, None, None] * self._o2

    def term_count(self):
        n = sum(hi - lo + 1 for lo, hi in self.ranges)
        return 2 * n if self.mode == "projector_scalar" else n


# ---------------------------------------------------------------------------
# Ordering
# ---------------------------------------------------------------------------

@dataclass
class LadderPlanGroup:
    static_base: complex
    members: list            # [(n_index, record)] in spiral order


@dataclass
class FactorizationPlan:
    inner: list
    ladder_groups: list
    r0: float


def _spiral(ns):
    return sorted(ns, key=lambda n: (abs(n), -np.sign(n)))


def plan_order(exact_records, static_records, r0):
    """Inner records by increasing norm; outer ones grouped per static family.

    Each exact record beyond radius r0 must match a static record (within a
    quarter period); groups are keyed by the static family base and ordered
    spiraling outward in the ladder index.
    """
    inner = sorted(
        (r for r in exact_records if abs(r.position) <= r0),
        key=lambda r: (abs(r.position), r.position.imag, r.position.real),
    )
    outer = [r for r in exact_records if abs(r.position) > r0]
    if not outer:
        return FactorizationPlan(inner, [], r0)
    if not static_records:
        raise CorrespondenceError("outer records present but no static records given")
    statics = sorted(static_records, key=lambda r: r.position.imag)
    # family bases: fold static positions into one fundamental period
    positions = np.array([s.position for s in statics])
    period = _infer_period(positions)
    groups = {}
    for rec in outer:
        d = np.abs(positions - rec.position)
        i = int(np.argmin(d))
        if d[i] > 0.25 * period:
            raise CorrespondenceError(
                f"exact record at {rec.position:.6g} has no static partner "
                f"(nearest {d[i]:.3g} away)"
            )
        n = round((statics[i].position.imag) / period)
        base = statics[i].position - 1j * period * n
        key = (round(base.real, 9), round(base.imag, 9))
        groups.setdefault(key, []).append((n, rec))
    ladder_groups = [
        LadderPlanGroup(complex(k[0], k[1]), sorted(v, key=lambda t: (abs(t[0]), -np.sign(t[0]))))
        for k, v in sorted(groups.items())
    ]
    return FactorizationPlan(inner, ladder_groups, r0)


def _infer_period(positions):
    ims = np.sort(np.unique(np.round(np.imag(positions), 9)))
    if ims.size < 2:
        return np.inf
    return float(np.min(np.diff(ims)))


# ---------------------------------------------------------------------------
# Factor construction strategies
# ---------------------------------------------------------------------------

def _symmetric_pair_from_basis(basis, sig):
    """Two conjugation-fixed vectors spanning a two-dimensional root space."""
    b = basis[:, 0]
    v1 = b + sig @ b.conj()
    v2 = 1j * (b - sig @ b.conj())
    if np.linalg.norm(v1) < 1e-8 * np.linalg.norm(b):
        b2 = basis[:, 1]
        v1 = b2 + sig @ b2.conj()
    if np.linalg.norm(v2) < 1e-8 * np.linalg.norm(b):
        b2 = basis[:, 1]
        v2 = 1j * (b2 - sig @ b2.conj())
    return v1 / np.linalg.norm(v1), v2 / np.linalg.norm(v2)


def _pair_real_zeros(real_records):
    """Greedy pairing of real zeros maximizing the cross indefinite product."""
    remaining = list(real_records)
    pairs = []
    j = None
    while remaining:
        r = remaining.pop(0)
        if j is None:
            j = algebra.signature_matrix(r.eigenvector.size, INTERLEAVED)
        if not remaining:
            raise DegeneracyError(
                f"odd number of real zeros; {r.position:.6g} has no partner"
            )
        scores = [
            abs(r.eigenvector.conj() @ j @ q.eigenvector) for q in remaining
        ]
        k = int(np.argmax(scores))
        if scores[k] < 1e-8:
            raise DegeneracyError(
                f"no real partner with nonzero cross product for {r.position:.6g}"
            )
        pairs.append((r, remaining.pop(k)))
    return pairs


def _build_factor_for(record, partner_real=None, strategy=None, perturb_eps=1e-3):
    """Dispatch a zero record (plus optional real partner) to a builder."""
    z0 = record.position
    real = abs(z0.imag) < 1e-9 * (1 + abs(z0))
    if record.degenerate and record.multiplicity >= 2:
        if strategy == PERTURB:
            sig = algebra.sigma_matrix(record.eigenvector.size, INTERLEAVED)
            if real:
                basis = record.eigenbasis
                if basis is None or basis.shape[1] < 2:
                    raise DegeneracyError(
                        f"real degenerate zero at {z0:.6g} lacks a 2-d root space"
                    )
                v1, v2 = _symmetric_pair_from_basis(basis, sig)
                return build_real_factor(z0.real, z0.real, v1, v2)
            vmat = degenerate_v_from_vector(record.eigenvector, perturb_eps)
            return build_modified_degenerate_factor(z0, vmat)
        raise DegeneracyError(
            f"degenerate zero at {z0:.6g} (multiplicity {record.multiplicity})"
        )
    if real:
        if partner_real is None:
            raise DegeneracyError(f"real zero at {z0:.6g} needs a partner")
        return build_real_factor(
            z0.real,
            partner_real.position.real,
            record.eigenvector,
            partner_real.eigenvector,
        )
    return build_complex_factor(z0, record.eigenvector)


# ---------------------------------------------------------------------------
# Result container
# ---------------------------------------------------------------------------

@dataclass
class CascadeResult:
    factors: list
    tails: list
    b_matrix: np.ndarray
    b_dispersion: float
    b_samples: list
    detach_reports: list
    residual_profile: list
    strategy: str = None
    meta: dict = field(default_factory=dict)

    def stages(self):
        return list(self.factors) + list(self.tails)

    def evaluate(self, z):
        """Reconstruction b @ P_last(z) @ ... @ P_first(z) on an array of z."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        stages = self.stages()
        if not stages:
            return np.broadcast_to(self.b_matrix, (z.shape[0],) + self.b_matrix.shape).copy()
        acc = stages[0].eval_many(z)
        for s in stages[1:]:
            acc = s.eval_many(z) @ acc
        return self.b_matrix[None] @ acc

    def complex_pole_count(self):
        """Number of non-real poles, counted with multiplicity, over all stages."""
        count = 0
        for f in self.factors:
            count += sum(1 for p in f.poles if abs(p.imag) > 1e-9 * (1 + abs(p)))
        return count

    def to_dict(self):
        return {
            "strategy": self.strategy,
            "factors": [f.to_dict() for f in self.factors],
            "tails": [
                {
                    "base": [t.base.real, t.base.imag],
                    "period": t.period,
                    "ranges": list(t.ranges),
                    "mode": t.mode,
                    "terms": t.term_count(),
                }
                for t in self.tails
            ],
            "b_matrix": [[ [v.real, v.imag] for v in row] for row in self.b_matrix],
            "b_dispersion": self.b_dispersion,
            "detach_reports": [r.to_dict() for r in self.detach_reports if r],
            "residual_profile": self.residual_profile,
            "meta": self.meta,
        }


# ---------------------------------------------------------------------------
# B estimation
# ---------------------------------------------------------------------------

def _pick_b_points(network, pole_positions, n_points=8):
    """Sample points close to the imaginary axis but away from every pole."""
    period = network.period_im
    offs = 0.01 * period
    ims = np.array([0.11, -0.23, 0.37, -0.41, 0.53, -0.61, 0.29, -0.47]) * period
    pts = []
    for k, im in enumerate(ims[:n_points]):
        re = offs if k % 2 == 0 else -offs
        z = complex(re, im)
        if pole_positions:
            d = min(abs(z - p) for p in pole_positions)
            if d < 0.02 * period:
                z += 1j * 0.04 * period
        pts.append(z)
    return np.array(pts)


def estimate_b(remainder_many, points):
    vals = remainder_many(points)
    b = np.mean(vals, axis=0)
    scale = max(np.linalg.norm(b, 2), 1e-300)
    disp = max(np.linalg.norm(v - b, 2) for v in vals) / scale
    return b, float(disp), [v for v in vals]


# ---------------------------------------------------------------------------
# Main drivers
# ---------------------------------------------------------------------------

def collect_records(network, ladder_levels, which="exact", config=None):
    """Scan a window wide enough for the requested ladder levels and pair."""
    period = network.period_im
    halfwidth = (ladder_levels + 0.5) * period
    records = rootfind.scan_window(network, halfwidth, which=which, config=config)
    rootfind.pair_records(records)
    return records


def factorize_records(
    network,
    records,
    which="exact",
    strategy=None,
    perturb_eps=1e-3,
    deep_tail_levels=None,
    check_removability=True,
    b_points=None,
):
    """Detach factors for all zero records, then estimate the constant remainder.

    Records must be paired already; the conjugate partner of a complex zero is
    consumed by the same factor.  ``deep_tail_levels`` extends each periodic
    family with scalar-product tails before B is estimated (static positions,
    fixed projector: valid when the loop block is constant or the tail is far
    enough out that the per-factor error is negligible).
    """
    evaluate = network.closed_many if which == "exact" else network.static_many
    remainder = lambda zz: evaluate(zz, guard=False)
    zero_records = [r for r in records if r.kind == "zero"]
    zero_records.sort(key=lambda r: (abs(r.position), r.position.imag))
    pole_positions = [r.position for r in records if r.kind == "pole"]

    factors = []
    reports = []
    consumed = set()
    real_simple = [
        r
        for r in zero_records
        if abs(r.position.imag) < 1e-9 * (1 + abs(r.position))
        and not (r.degenerate and r.multiplicity >= 2)
    ]
    real_pairs = _pair_real_zeros(real_simple) if real_simple else []
    real_partner = {}
    for a, b in real_pairs:
        real_partner[id(a)] = b
        real_partner[id(b)] = a

    for rec in zero_records:
        if id(rec) in consumed:
            continue
        consumed.add(id(rec))
        real = abs(rec.position.imag) < 1e-9 * (1 + abs(rec.position))
        partner = None
        if real and not (rec.degenerate and rec.multiplicity >= 2):
            partner = real_partner.get(id(rec))
            if partner is None:
                raise DegeneracyError(f"unpaired real zero at {rec.position:.6g}")
            consumed.add(id(partner))
        elif not real:
            # the conjugate zero is covered by the same factor
            if rec.partner_conj is not None:
                consumed.add(id(records[rec.partner_conj]))
        # refresh the eigen data against the current remainder
        m0 = remainder(np.array([rec.position]))[0]
        _, s, vh = np.linalg.svd(m0)
        nullity = max(rec.multiplicity, 1)
        rec_vec = vh[-1].conj()
        j = algebra.signature_matrix(rec_vec.size, INTERLEAVED)
        live = rootfind.ZeroPoleRecord(
            position=rec.position,
            kind="zero",
            which=which,
            multiplicity=rec.multiplicity,
            residual=float(s[-1]),
            eigenvector=rec_vec,
            eigenbasis=vh[-max(2, nullity):].conj().T if nullity > 1 else None,
            degenerate=rec.degenerate,
        )
        if partner is not None:
            m1 = remainder(np.array([partner.position]))[0]
            _, s1, vh1 = np.linalg.svd(m1)
            partner = rootfind.ZeroPoleRecord(
                position=partner.position,
                kind="zero",
                which=which,
                residual=float(s1[-1]),
                eigenvector=vh1[-1].conj(),
            )
        factor = _build_factor_for(
            live, partner_real=partner, strategy=strategy, perturb_eps=perturb_eps
        )
        remainder, report = detach(remainder, factor, check=check_removability)
        factors.append(factor)
        reports.append(report)

    tails = []
    if deep_tail_levels:
        tails = _deep_tails(network, factors, deep_tail_levels)
        for t in tails:
            prev = remainder
            remainder = (lambda f, tail: (lambda zz: f(zz) @ tail.inv_many(np.atleast_1d(zz))))(prev, t)

    pts = b_points if b_points is not None else _pick_b_points(network, pole_positions)
    b, disp, samples = estimate_b(remainder, pts)
    return CascadeResult(
        factors=factors,
        tails=tails,
        b_matrix=b,
        b_dispersion=disp,
        b_samples=samples,
        detach_reports=reports,
        residual_profile=[],
        strategy=strategy,
        meta={"which": which, "n_records": len(records)},
    )


def _ladder_families(factors, period):
    """Group detached factors into periodic families keyed by the folded base.

    Keys are rounded for grouping only; each family keeps the full-precision
    base taken from its innermost member.
    """
    grouped = {}
    for f in factors:
        z0 = max(f.zeros, key=lambda w: w.imag)
        n = round(z0.imag / period)
        base = z0 - 1j * period * n
        key = (round(base.real, 6), round(base.imag, 6), f.variant)
        grouped.setdefault(key, []).append((n, base, f))
    families = {}
    for (re_b, im_b, variant), members in grouped.items():
        members.sort(key=lambda t: abs(t[0]))
        base = members[0][1]
        families[(base.real, base.imag, variant)] = [(n, f) for n, _, f in members]
    return families


def _deep_tails(network, factors, deep_levels):
    """Scalar tails extending each periodic family to |n| <= deep_levels.

    Uses the family base position and projector; exactness requires the loop
    block to be constant (checked) or the starting level to be far out.
    """
    period = network.period_im
    tails = []
    for (re_b, im_b, variant), members in _ladder_families(factors, period).items():
        if len(members) < 1:
            continue
        ns = sorted(n for n, _ in members)
        if variant == REAL_PAIR and len(ns) == 1 and ns == [0]:
            # the real family base is covered; extension handled by the
            # modified/complex family sharing the same base when present
            continue
        k_in = max(abs(n) for n in ns)
        if deep_levels <= k_in:
            continue
        f0 = members[0][1]
        base = complex(re_b, im_b) if abs(im_b) > 1e-9 else complex(re_b, 0.0)
        if variant == MODIFIED_DEGENERATE:
            mode = "projector_scalar"
        elif variant == COMPLEX_PAIR:
            mode = "two_channel"
        else:
            continue
        ranges = ((k_in + 1, deep_levels), (-deep_levels, -(k_in + 1)))
        tails.append(
            LadderTail(v=f0.v, base=base, period=period, ranges=ranges, mode=mode)
        )
    return tails


def factorize(
    network,
    ladder_levels=1,
    strategy=None,
    delta=1e-3,
    perturb_eps=1e-3,
    deep_tail_levels=None,
    check_removability=True,
    config=None,
):
    """Full pipeline: scan, pair, detach, estimate B.

    ``strategy`` resolves degenerate records: "phase_shift" dresses the loop
    with a small phase (every degenerate root splits into simple complex
    ones), "perturb" keeps the network and uses modified two-term factors
    with a perturbed eigenvector.
    """
    net = network.with_loop_phase(delta) if strategy == PHASE_SHIFT else network
    records = collect_records(net, ladder_levels, which="exact", config=config)
    result = factorize_records(
        net,
        records,
        which="exact",
        strategy=strategy,
        perturb_eps=perturb_eps,
        deep_tail_levels=deep_tail_levels,
        check_removability=check_removability,
    )
    result.meta.update(
        {
            "ladder_levels": ladder_levels,
            "delta": delta if strategy == PHASE_SHIFT else 0.0,
            "network_loop_phase": net.loop_phase,
        }
    )
    return result, net


def residual_profile(network_eff, result, grid, reference=None):
    """Max relative reconstruction error per truncation prefix on a grid.

    Prefixes grow one factor at a time in detachment order; the profile is
    appended to the result and returned.
    """
    z = 1j * np.asarray(grid, dtype=float)
    exact = reference if reference is not None else network_eff.closed_many(z, guard=False)
    norms = np.linalg.norm(exact, 2, axis=(1, 2))
    profile = []
    acc = None
    for k, f in enumerate(result.factors, start=1):
        term = f.eval_many(z)
        acc = term if acc is None else term @ acc
        recon = result.b_matrix[None] @ acc
        err = np.linalg.norm(exact - recon, 2, axis=(1, 2)) / norms
        profile.append({"factors": k, "max_rel_err": float(np.max(err))})
    result.residual_profile = profile
    return profile


# ---------------------------------------------------------------------------
# Static factorization and the sinh oracle
# ---------------------------------------------------------------------------

def static_sinh_oracle(z_m, period, z, n_terms):
    """Truncated two-sided Blaschke ladder next to its sinh closed form.

    The closed form is ``sinh(pi/P (z - z_m)) / sinh(pi/P (z + conj z_m))``;
    the truncation runs over ladder indices |n| <= n_terms.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    arg = np.pi / period * (z + np.conj(z_m))
    denom = np.sinh(arg)
    if np.any(np.abs(denom) < 1e-12):
        raise PoleProximityError(z[np.abs(denom) < 1e-12][0], -np.conj(z_m))
    closed = np.sinh(np.pi / period * (z - z_m)) / denom
    truncated = _kernels.blaschke_ladder(z, z_m, period, -n_terms, n_terms)
    return truncated, closed


def static_factorize(
    network,
    ladder_levels=1,
    deep_tail_levels=None,
    strategy=PERTURB,
    perturb_eps=1e-3,
    projector_drift_tol=1e-8,
    config=None,
):
    """Factorize the static surrogate; cross-check ladders against the oracle."""
    records = collect_records(network, ladder_levels, which="static", config=config)
    result = factorize_records(
        network,
        records,
        which="static",
        strategy=strategy,
        perturb_eps=perturb_eps,
        deep_tail_levels=deep_tail_levels,
        check_removability=True,
    )
    # periodicity: per family, the projector must not drift level to level
    period = network.period_im
    checks = []
    for key, members in _ladder_families(result.factors, period).items():
        if len(members) < 2:
            continue
        v0 = members[0][1].q
        drift = max(np.linalg.norm(f.q - v0, 2) for _, f in members[1:])
        checks.append({"family": [key[0], key[1]], "projector_drift": float(drift)})
        if drift > projector_drift_tol:
            raise RemovabilityError(
                f"static ladder projector drift {drift:.3e} violates periodicity"
            )
    result.meta["projector_checks"] = checks
    result.meta["sinh_crosscheck"] = _sinh_crosscheck(result, period)
    return result


def _sinh_crosscheck(result, period, n_probe=5):
    """Compare each family's scalar part against the ladder kernel product."""
    out = []
    rng = np.random.default_rng(7)
    zp = rng.normal(scale=1.0, size=n_probe) + 1j * rng.normal(scale=1.0, size=n_probe)
    for (re_b, im_b, variant), members in _ladder_families(result.factors, period).items():
        if variant == REAL_PAIR:
            continue
        ns = sorted(n for n, _ in members)
        base = complex(re_b, im_b)
        ladder = _kernels.blaschke_ladder(zp, base, period, min(ns), max(ns))
        if variant == MODIFIED_DEGENERATE:
            ladder = ladder * _kernels.blaschke_ladder(
                zp, np.conj(base), period, -max(ns), -min(ns)
            )
        prod = np.ones_like(zp)
        for _, f in sorted(members, key=lambda t: t[0]):
            za, zb = f.terms[0]
            prod = prod * (zp - za) / (zp + zb)
            if f.variant == MODIFIED_DEGENERATE:
                prod = prod * (zp - zb) / (zp + za)
        out.append(
            {
                "family": [re_b, im_b],
                "max_scalar_mismatch": float(np.max(np.abs(prod - ladder))),
            }
        )
    return out


# ---------------------------------------------------------------------------
# Finite case: rational function without delays
# ---------------------------------------------------------------------------

def factorize_rational(tf, check_removability=True):
    """Finite detachment of all zeros of a rational doubled-up J-unitary map."""
    zeros = sorted(tf.zero_positions(), key=lambda w: (abs(w), w.imag))
    remainder = lambda zz: tf.eval_many(zz, guard=False)
    factors = []
    reports = []
    todo = list(zeros)
    while todo:
        z0 = todo.pop(0)
        m0 = remainder(np.array([z0]))[0]
        _, s, vh = np.linalg.svd(m0)
        v0 = vh[-1].conj()
        if abs(z0.imag) < 1e-8 * (1 + abs(z0)):
            # find the best real partner
            reals = [w for w in todo if abs(w.imag) < 1e-8 * (1 + abs(w))]
            if not reals:
                raise DegeneracyError(f"odd real zero at {z0:.6g}")
            j = algebra.signature_matrix(v0.size, INTERLEAVED)
            best, best_score = None, -1.0
            for w in reals:
                mw = remainder(np.array([w]))[0]
                vw = np.linalg.svd(mw)[2][-1].conj()
                score = abs(v0.conj() @ j @ vw)
                if score > best_score:
                    best, best_score, best_vec = w, score, vw
            todo.remove(best)
            factor = build_real_factor(z0.real, best.real, v0, best_vec)
        else:
            # drop the conjugate zero covered by the same factor
            for w in list(todo):
                if abs(w - np.conj(z0)) < 1e-7 * (1 + abs(z0)):
                    todo.remove(w)
                    break
            factor = build_complex_factor(z0, v0)
        remainder, rep = detach(remainder, factor, check=check_removability)
        factors.append(factor)
        reports.append(rep)
    rng = np.random.default_rng(11)
    pts = rng.normal(scale=1.5, size=8) + 1j * rng.normal(scale=1.5, size=8)
    pole_set = list(tf.poles) + [-np.conj(w) for w in zeros]
    for i in range(pts.size):
        while pole_set and min(abs(pts[i] - p) for p in pole_set) < 0.2:
            pts[i] += 0.31 + 0.17j
    b, disp, samples = estimate_b(remainder, pts)
    return CascadeResult(
        factors=factors,
        tails=[],
        b_matrix=b,
        b_dispersion=disp,
        b_samples=samples,
        detach_reports=reports,
        residual_profile=[],
        meta={"finite": True, "n_zeros": len(zeros)},
    )
