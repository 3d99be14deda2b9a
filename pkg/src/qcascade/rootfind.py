"""Zero and pole location inside the search strip.

Counting uses the argument principle on adaptively sampled rectangle
boundaries; refinement uses multiplicity-aware Newton iteration with a
Muller fallback.  Poles of the closed function come from two sources: roots
of the loop determinant, and poles of the open blocks (eigenvalues of A)
that survive the closure.  Zeros are located on det of the closed function,
seeded by the pole set reflected through z -> -conj(z).
"""

import numpy as np
from dataclasses import dataclass, field

from . import _kernels, algebra
from .algebra import INTERLEAVED
from .errors import (
    BoundarySingularityError,
    PairingError,
    ResolutionError,
    UnresolvedCellError,
)

TWO_PI = 2.0 * np.pi


@dataclass
class ContourCount:
    rectangle: tuple
    winding: int
    samples_used: int
    residual: float


@dataclass
class ZeroPoleRecord:
    """One located zero or pole with its matching data."""

    position: complex
    kind: str                  # "zero" | "pole"
    which: str = "exact"       # "exact" | "static"
    multiplicity: int = 1
    residual: float = np.nan
    eigenvector: np.ndarray = None
    eigenbasis: np.ndarray = None      # null-space basis when multiplicity > 1
    degenerate: bool = False
    partner_neg_conj: int = None       # index of the pole/zero at -conj(position)
    partner_conj: int = None           # index of the same-kind record at conj(position)

    def to_dict(self):
        d = {
            "position": [self.position.real, self.position.imag],
            "kind": self.kind,
            "which": self.which,
            "multiplicity": self.multiplicity,
            "residual": None if np.isnan(self.residual) else float(self.residual),
            "degenerate": bool(self.degenerate),
            "partner_neg_conj": self.partner_neg_conj,
            "partner_conj": self.partner_conj,
        }
        if self.eigenvector is not None:
            d["eigenvector"] = [[v.real, v.imag] for v in np.asarray(self.eigenvector)]
        return d

    def __str__(self):
        return f"{self.kind}@{self.position:.6g}(x{self.multiplicity})"


# ---------------------------------------------------------------------------
# Winding numbers on rectangle boundaries
# ---------------------------------------------------------------------------

def _rect_path(rect, ts):
    """Map arclength fractions in [0, 1) to boundary points, counterclockwise."""
    re_lo, re_hi, im_lo, im_hi = rect
    w, h = re_hi - re_lo, im_hi - im_lo
    per = 2 * (w + h)
    s = np.asarray(ts) * per
    z = np.empty(s.shape, dtype=complex)
    m0 = s < w
    m1 = (s >= w) & (s < w + h)
    m2 = (s >= w + h) & (s < 2 * w + h)
    m3 = s >= 2 * w + h
    z[m0] = re_lo + s[m0] + 1j * im_lo
    z[m1] = re_hi + 1j * (im_lo + (s[m1] - w))
    z[m2] = re_hi - (s[m2] - w - h) + 1j * im_hi
    z[m3] = re_lo + 1j * (im_hi - (s[m3] - 2 * w - h))
    return z


def count_in_rectangle(
    f_many,
    rect,
    init_per_edge=24,
    max_phase_jump=1.0,
    max_samples=60000,
    min_step=1e-10,
):
    """Winding number of f around a rectangle via adaptive boundary sampling.

    ``f_many`` maps an array of complex points to complex values.  Raises
    BoundarySingularityError when a zero or pole hugs the boundary and
    ResolutionError when the sample budget runs out before the accumulated
    phase settles on an integer.
    """
    ts = np.linspace(0.0, 1.0, 4 * init_per_edge, endpoint=False)
    ts = np.append(ts, 1.0)
    vals = f_many(_rect_path(rect, ts % 1.0))
    n_samples = ts.size

    for _ in range(60):
        bad = ~np.isfinite(vals) | (np.abs(vals) < 1e-280)
        if np.any(bad):
            raise BoundarySingularityError(
                "contour sample hit a zero or pole; shift the rectangle",
                shift_hint=1e-6 * (1 + abs(rect[1] - rect[0])),
            )
        jumps = np.abs(_kernels.phase_increments(vals))
        refine = np.nonzero(jumps > max_phase_jump)[0]
        if refine.size == 0:
            break
        gaps = ts[refine + 1] - ts[refine]
        if np.min(gaps) < min_step:
            raise BoundarySingularityError(
                "phase jump persists at minimal step; singularity on the boundary",
                shift_hint=10 * min_step * (1 + abs(rect[1] - rect[0])),
            )
        mids = ts[refine] + 0.5 * gaps
        if n_samples + mids.size > max_samples:
            raise ResolutionError(
                f"sample budget exceeded while counting in {rect}"
            )
        new_vals = f_many(_rect_path(rect, mids % 1.0))
        n_samples += mids.size
        order = np.argsort(np.concatenate([ts, mids]))
        ts = np.concatenate([ts, mids])[order]
        vals = np.concatenate([vals, new_vals])[order]
    else:
        raise ResolutionError(f"adaptive refinement did not settle in {rect}")

    total = float(np.sum(_kernels.phase_increments(vals))) / TWO_PI
    winding = int(np.round(total))
    residual = abs(total - winding)
    if residual > 0.25:
        raise ResolutionError(
            f"winding estimate {total:.3f} too far from an integer in {rect}"
        )
    return ContourCount(tuple(rect), winding, n_samples, residual)


def _winding_with_retry(f_many, rect, tries=6, **kw):
    """Winding count, nudging the rectangle when a root sits on the boundary."""
    rect = list(rect)
    for attempt in range(tries):
        try:
            return count_in_rectangle(f_many, tuple(rect), **kw), tuple(rect)
        except BoundarySingularityError as err:
            pad = max(err.shift_hint, 1e-7) * (1.7 ** attempt)
            rect = [rect[0] - pad, rect[1] + pad, rect[2] - pad * 1.3, rect[3] + pad * 1.3]
    raise BoundarySingularityError(f"could not move contour off a singularity near {rect}")


# ---------------------------------------------------------------------------
# Root refinement
# ---------------------------------------------------------------------------

def refine_root(f_many, z0, multiplicity=1, tol_step=5e-13, max_iter=100):
    """Multiplicity-aware Newton with numerical derivative; returns (root, |f|)."""
    z = complex(z0)
    m = max(1, int(multiplicity))
    for _ in range(max_iter):
        h = 1e-7 * (1.0 + abs(z))
        f0, fp, fm = f_many(np.array([z, z + h, z - h]))
        d = (fp - fm) / (2 * h)
        if not np.isfinite(d) or d == 0:
            break
        step = m * f0 / d
        z -= step
        if abs(step) < tol_step * (1.0 + abs(z)):
            return z, abs(f_many(np.array([z]))[0])
    root = muller(f_many, z)
    if root is None:
        raise UnresolvedCellError(f"refinement stalled near {z0}")
    return root, abs(f_many(np.array([root]))[0])


def muller(f_many, z0, spread=1e-5, tol=5e-13, max_iter=120):
    """Derivative-free Muller iteration; returns the root or None."""
    xs = [z0 + spread, z0 - spread, z0]
    fs = list(f_many(np.array(xs)))
    for _ in range(max_iter):
        x0, x1, x2 = xs[-3:]
        f0, f1, f2 = fs[-3:]
        h1, h2 = x1 - x0, x2 - x1
        if h1 == 0 or h2 == 0 or h2 + h1 == 0:
            return None
        d1, d2 = (f1 - f0) / h1, (f2 - f1) / h2
        a = (d2 - d1) / (h2 + h1)
        b = a * h2 + d2
        disc = np.sqrt(b * b - 4 * f2 * a) if b * b - 4 * f2 * a != 0 else 0.0
        den = b + disc if abs(b + disc) > abs(b - disc) else b - disc
        if den == 0:
            return None
        step = -2 * f2 / den
        x3 = x2 + step
        f3 = f_many(np.array([x3]))[0]
        xs.append(x3)
        fs.append(f3)
        if abs(step) < tol * (1.0 + abs(x3)):
            return x3
    return None


# ---------------------------------------------------------------------------
# Record discovery
# ---------------------------------------------------------------------------

def _cluster(points, tol):
    """Greedy dedup of nearby complex points, keeping multiplicity counts."""
    out = []
    for p in points:
        for i, (q, m) in enumerate(out):
            if abs(p - q) <= tol:
                out[i] = ((q * m + p) / (m + 1), m + 1)
                break
        else:
            out.append((p, 1))
    return out


def _surviving_open_poles(network, region, which):
    """Eigenvalues of A inside the region at which the closed function blows up."""
    if which == "static":
        return []
    re_lo, re_hi, im_lo, im_hi = region
    lam = network.open_tf.poles
    inside = [
        complex(v)
        for v in lam
        if re_lo < v.real < re_hi and im_lo < v.imag < im_hi
    ]
    survivors = []
    for lam0, mult in _cluster(inside, 1e-9):
        rho = 1e-5 * (1.0 + abs(lam0))
        ring = lam0 + rho * np.exp(1j * np.linspace(0, TWO_PI, 9)[:-1])
        vals = network.closed_many(ring, guard=False)
        # residue estimate from the contour mean of T * (z - lam)
        residue = np.mean(vals * (ring - lam0)[:, None, None], axis=0)
        far = network.closed_many(
            np.array([lam0 + 0.1 * (1 + abs(lam0))]), guard=False
        )[0]
        if np.linalg.norm(residue, 2) > 1e-7 * max(1.0, np.linalg.norm(far, 2)):
            survivors.append((lam0, mult))
    return survivors


def _loop_det_poles_in(network, region, which):
    """Open poles that are also poles of the loop determinant, with orders."""
    if which == "static":
        return []
    re_lo, re_hi, im_lo, im_hi = region
    lam = [
        complex(v)
        for v in network.open_tf.poles
        if re_lo < v.real < re_hi and im_lo < v.imag < im_hi
    ]
    f = lambda zz: network.loop_det_many(zz, which=which, guard=False)
    out = []
    for lam0, _ in _cluster(lam, 1e-9):
        rho = 1e-4 * (1.0 + abs(lam0))
        tiny = (lam0.real - rho, lam0.real + rho, lam0.imag - rho, lam0.imag + rho)
        try:
            count, _ = _winding_with_retry(f, tiny, init_per_edge=12)
        except (ResolutionError, BoundarySingularityError):
            continue
        if count.winding != 0:
            out.append((lam0, count.winding))
    return out


def _split_cell(rect):
    width = rect[1] - rect[0]
    height = rect[3] - rect[2]
    # the small offset keeps split lines off roots sitting at round coordinates
    if width >= height:
        mid = 0.5 * (rect[0] + rect[1]) + 3.7e-6 * width
        return (rect[0], mid, rect[2], rect[3]), (mid, rect[1], rect[2], rect[3])
    mid = 0.5 * (rect[2] + rect[3]) + 3.7e-6 * height
    return (rect[0], rect[1], rect[2], mid), (rect[0], rect[1], mid, rect[3])


def _subdivide_roots(f_many, region, pole_corrections, cfg):
    """Recursive rectangle subdivision until every root is isolated and refined.

    ``pole_corrections`` maps known pole positions of f to their orders so the
    winding count can be converted into a zero count per cell.
    """
    roots = []
    stack = [region]
    cells_used = 0
    while stack:
        rect = stack.pop()
        count, rect = _winding_with_retry(
            f_many, rect, init_per_edge=cfg["init_per_edge"]
        )
        zeros_here = count.winding + sum(
            order
            for pos, order in pole_corrections
            if rect[0] < pos.real < rect[1] and rect[2] < pos.imag < rect[3]
        )
        if zeros_here < 0:
            raise UnresolvedCellError(
                f"negative zero count {zeros_here} in {rect}; unaccounted pole"
            )
        if zeros_here == 0:
            continue
        width = rect[1] - rect[0]
        height = rect[3] - rect[2]
        small = max(width, height) < cfg["multiplicity_floor"]
        if zeros_here == 1 or small:
            center = complex(0.5 * (rect[0] + rect[1]), 0.5 * (rect[2] + rect[3]))
            root, fres = refine_root(f_many, center, multiplicity=zeros_here)
            pad = 0.05 * max(width, height)
            inside = (
                rect[0] - pad <= root.real <= rect[1] + pad
                and rect[2] - pad <= root.imag <= rect[3] + pad
            )
            if inside or small:
                roots.append((root, zeros_here, fres))
                continue
            # Newton escaped the cell: isolate further before trusting it
        cells_used += 1
        if cells_used > cfg["max_cells"]:
            raise UnresolvedCellError("subdivision budget exceeded")
        stack.extend(_split_cell(rect))
    merged = []
    for r, m, fres in sorted(roots, key=lambda t: (t[0].imag, t[0].real)):
        for i, (q, mq, fq) in enumerate(merged):
            if abs(r - q) <= cfg["dedup"]:
                merged[i] = (q, mq + m, min(fq, fres))
                break
        else:
            merged.append((r, m, fres))
    return merged


_DEFAULT_CFG = {
    "init_per_edge": 24,
    "multiplicity_floor": 2e-5,
    "dedup": 1e-8,
    "max_cells": 4000,
}


def find_poles(network, region, which="exact", config=None):
    """All poles of the closed (or static) function inside a rectangle."""
    cfg = dict(_DEFAULT_CFG, **(config or {}))
    f = lambda zz: network.loop_det_many(zz, which=which, guard=False)
    corrections = _loop_det_poles_in(network, region, which)
    raw = _subdivide_roots(f, region, [(p, -w) for p, w in corrections], cfg)
    records = [
        ZeroPoleRecord(
            position=r, kind="pole", which=which, multiplicity=m, residual=fres
        )
        for r, m, fres in raw
    ]
    for lam0, mult in _surviving_open_poles(network, region, which):
        if all(abs(lam0 - r.position) > cfg["dedup"] for r in records):
            records.append(
                ZeroPoleRecord(
                    position=lam0, kind="pole", which=which, multiplicity=mult,
                    residual=0.0,
                )
            )
    records.sort(key=lambda r: (r.position.imag, r.position.real))
    return records


def find_zeros(network, region, which="exact", poles=None, config=None):
    """Zeros of det of the closed function, seeded by reflected pole positions."""
    cfg = dict(_DEFAULT_CFG, **(config or {}))
    if poles is None:
        poles = find_poles(network, region, which=which, config=config)
    evaluate = network.closed_many if which == "exact" else network.static_many
    h = lambda zz: np.linalg.det(evaluate(zz, guard=False))
    re_lo, re_hi, im_lo, im_hi = region

    pole_orders = [(p.position, -p.multiplicity) for p in poles]

    found = []
    for p in poles:
        seed = -np.conj(p.position)
        if not (re_lo < seed.real < re_hi and im_lo < seed.imag < im_hi):
            continue
        try:
            root, fres = refine_root(h, seed, multiplicity=p.multiplicity)
        except UnresolvedCellError:
            continue
        if re_lo < root.real < re_hi and im_lo < root.imag < im_hi:
            found.append((root, p.multiplicity, fres))

    merged = []
    for r, m, fres in found:
        for i, (q, mq, fq) in enumerate(merged):
            if abs(r - q) < cfg["dedup"]:
                break
        else:
            merged.append((r, m, fres))

    count, region_used = _winding_with_retry(
        h, region, init_per_edge=cfg["init_per_edge"]
    )
    expected = count.winding + sum(p.multiplicity for p in poles)
    have = sum(m for _, m, _ in merged)
    if have != expected:
        # seeds missed roots; fall back to full subdivision
        merged = _subdivide_roots(h, region_used, pole_orders, cfg)
        have = sum(m for _, m, _ in merged)
        if have != expected:
            raise UnresolvedCellError(
                f"zero count mismatch: winding expects {expected}, found {have}"
            )
    records = [
        ZeroPoleRecord(position=r, kind="zero", which=which, multiplicity=m,
                       residual=fres)
        for r, m, fres in merged
    ]
    records.sort(key=lambda r: (r.position.imag, r.position.real))
    return records


def subdivide_and_refine(network, region, kind="pole", which="exact", config=None):
    """Locate all records of one kind inside a rectangle region."""
    if kind == "pole":
        return find_poles(network, region, which=which, config=config)
    if kind == "zero":
        return find_zeros(network, region, which=which, config=config)
    raise ValueError("kind must be 'pole' or 'zero'")


def scan_window(network, im_halfwidth, which="exact", config=None, margin=0.3):
    """Poles and zeros in the strip restricted to |Im z| <= im_halfwidth.

    The scan region is symmetric under z -> -conj(z) and z -> conj(z) so the
    record set closes under both pairings.
    """
    strip = network.compute_strip()
    width = strip.c_high - strip.c_low
    re_max = max(abs(strip.c_low), abs(strip.c_high)) + margin * width
    region = (-re_max, re_max, -im_halfwidth, im_halfwidth)
    poles = find_poles(network, region, which=which, config=config)
    zeros = find_zeros(network, region, which=which, poles=poles, config=config)
    records = poles + zeros
    for rec in records:
        attach_eigenvector(network, rec)
    return records


# ---------------------------------------------------------------------------
# Eigenvectors and pairing
# ---------------------------------------------------------------------------

DEG_SIGMA_THRESHOLD = 1e-4
DEG_JNORM_THRESHOLD = 1e-6


def attach_eigenvector(network, record):
    """Fill the eigenvector, residual and degeneracy fields of a record."""
    evaluate = network.closed_many if record.which == "exact" else network.static_many
    if record.kind == "zero":
        m = evaluate(np.array([record.position]), guard=False)[0]
        u, s, vh = np.linalg.svd(m)
        v = vh[-1].conj()
        record.eigenvector = v
        record.residual = float(s[-1])
        scale = max(1.0, s[0])
        j = algebra.signature_matrix(v.size, INTERLEAVED)
        jnorm = abs(v.conj() @ j @ v)
        n_null = int(np.sum(s < DEG_SIGMA_THRESHOLD * scale))
        if record.multiplicity > 1 or n_null > 1:
            record.degenerate = True
            record.eigenbasis = vh[-max(2, n_null):].conj().T
        if jnorm < DEG_JNORM_THRESHOLD:
            record.degenerate = True
    else:
        # pole vector is the J-dual of the paired zero eigenvector
        zero_pos = -np.conj(record.position)
        m = evaluate(np.array([zero_pos]), guard=False)[0]
        u, s, vh = np.linalg.svd(m)
        v = vh[-1].conj()
        j = algebra.signature_matrix(v.size, INTERLEAVED)
        record.eigenvector = j @ v
        record.residual = float(s[-1])
        if record.multiplicity > 1 or abs(v.conj() @ j @ v) < DEG_JNORM_THRESHOLD:
            record.degenerate = True
    return record.eigenvector


def eigenvector_at(network, record, which=None):
    """Eigenvector of the closed function at a refined record."""
    if which is not None and which != record.which:
        raise ValueError("record was located on a different target function")
    if record.eigenvector is None:
        attach_eigenvector(network, record)
    return record.eigenvector


def pair_records(records, tol=1e-7):
    """Link zero/pole pairs (z0, -conj z0) and conjugate pairs (z0, conj z0).

    Mutates the records in place; raises PairingError listing unpaired ones.
    """
    unpaired = []
    by_kind = {"zero": [], "pole": []}
    for i, r in enumerate(records):
        by_kind[r.kind].append(i)

    def nearest(indices, target, mult):
        best, dist = None, tol
        for i in indices:
            d = abs(records[i].position - target)
            if d <= dist and records[i].multiplicity == mult:
                best, dist = i, d
        return best

    for i, r in enumerate(records):
        other = "pole" if r.kind == "zero" else "zero"
        j = nearest(by_kind[other], -np.conj(r.position), r.multiplicity)
        if j is None:
            unpaired.append(r)
            continue
        r.partner_neg_conj = j
        k = nearest(by_kind[r.kind], np.conj(r.position), r.multiplicity)
        if k is None:
            unpaired.append(r)
            continue
        r.partner_conj = k
    if unpaired:
        raise PairingError(unpaired)
    return records
