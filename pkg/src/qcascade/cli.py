"""Command-line front end.

Commands (via --command): validate, poles, factorize, verify, example.
Outputs are JSON/CSV files under --out plus a manifest with content hashes;
identical (input, config, seed) produce byte-identical outputs.  Exit codes:
0 success, 2 assumption violation, 3 numerical failure.
"""

import argparse
import csv
import hashlib
import json
import logging
import os
import sys

import numpy as np
from dataclasses import dataclass, field, asdict

from . import algebra, cascade, factors as factors_mod, network as network_mod
from . import presets, rootfind, statespace
from .algebra import INTERLEAVED
from .errors import AssumptionViolation, QcascadeError

log = logging.getLogger("qcascade")


@dataclass
class RunConfig:
    command: str
    input: str = None
    out: str = "qcascade_out"
    window_im: tuple = None
    truncation: int = 1
    degeneracy: str = "phase_shift"
    delta: float = 1e-3
    perturb_eps: float = 1e-3
    tol_structural: float = 1e-10
    seed: int = 0
    grid_points: int = 401
    deep_tail_levels: int = None

    def to_dict(self):
        d = asdict(self)
        d["window_im"] = list(self.window_im) if self.window_im else None
        return d


@dataclass
class ReportBundle:
    out_dir: str
    outputs: dict = field(default_factory=dict)
    manifest_path: str = None

    def add(self, name, path):
        with open(path, "rb") as fh:
            digest = hashlib.sha256(fh.read()).hexdigest()
        self.outputs[name] = {"path": os.path.basename(path), "sha256": digest}


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _load_network(config):
    if config.input is None or config.input == "example":
        return presets.enhanced_squeezing_network()
    if config.input.startswith("preset:"):
        return presets.by_name(config.input.split(":", 1)[1])
    return network_mod.load_network(config.input)


def _window(config, net):
    if config.window_im is not None:
        return float(config.window_im[1])
    return (config.truncation + 0.5) * net.period_im


def _records_csv(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["kind", "which", "re", "im", "multiplicity", "residual", "degenerate"]
        )
        for r in records:
            w.writerow(
                [
                    r.kind,
                    r.which,
                    repr(r.position.real),
                    repr(r.position.imag),
                    r.multiplicity,
                    repr(float(r.residual)),
                    int(r.degenerate),
                ]
            )


def emit_tf_samples(result, net_eff, grid, path, components=((0, 0), (0, 1))):
    """Exact vs reconstructed samples along the imaginary axis, prefactor-matched.

    A constant matrix prefactor makes the two functions agree at the grid
    point nearest the origin; grid points inside a pole guard are skipped.
    """
    omega = np.asarray(grid, dtype=float)
    keep = []
    for w in omega:
        try:
            net_eff.closed_many(np.array([1j * w]), guard=True)
            keep.append(w)
        except QcascadeError:
            log.warning("grid point %g skipped: pole guard", w)
    omega = np.array(keep)
    z = 1j * omega
    exact = net_eff.closed_many(z, guard=False)
    recon = result.evaluate(z)
    i0 = int(np.argmin(np.abs(omega)))
    prefactor = exact[i0] @ np.linalg.inv(recon[i0])
    recon = prefactor[None] @ recon
    err = np.linalg.norm(exact - recon, 2, axis=(1, 2))
    rel = err / np.linalg.norm(exact, 2, axis=(1, 2))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        head = ["omega"]
        for (i, j) in components:
            head += [
                f"exact_{i}{j}_re",
                f"exact_{i}{j}_im",
                f"recon_{i}{j}_re",
                f"recon_{i}{j}_im",
            ]
        head += ["abs_err", "rel_err", "prefactor_norm"]
        w.writerow(head)
        pn = repr(float(np.linalg.norm(prefactor, 2)))
        for k in range(omega.size):
            row = [repr(float(omega[k]))]
            for (i, j) in components:
                row += [
                    repr(float(exact[k, i, j].real)),
                    repr(float(exact[k, i, j].imag)),
                    repr(float(recon[k, i, j].real)),
                    repr(float(recon[k, i, j].imag)),
                ]
            row += [repr(float(err[k])), repr(float(rel[k])), pn]
            w.writerow(row)
    return prefactor, float(np.max(rel))


def _run_validate(config, net, bundle):
    report = net.validate_assumptions(tol_structural=max(config.tol_structural, 1e-8))
    path = os.path.join(bundle.out_dir, "assumptions.json")
    _write_json(path, report.to_dict())
    bundle.add("assumptions", path)
    for check in report.checks:
        log.info("assumption %-34s %s", check.key, check.status)
    if not report.ok:
        failed = ", ".join(c.key for c in report.failed())
        raise AssumptionViolation(failed, "validation failed")
    return report


def _run_poles(config, net, bundle):
    halfwidth = _window(config, net)
    records = rootfind.scan_window(net, halfwidth)
    rootfind.pair_records(records)
    path_json = os.path.join(bundle.out_dir, "records.json")
    _write_json(path_json, {"records": [r.to_dict() for r in records]})
    bundle.add("records_json", path_json)
    path_csv = os.path.join(bundle.out_dir, "records.csv")
    _records_csv(path_csv, records)
    bundle.add("records_csv", path_csv)
    return records


def _run_factorize(config, net, bundle):
    result, net_eff = cascade.factorize(
        net,
        ladder_levels=config.truncation,
        strategy=config.degeneracy,
        delta=config.delta,
        perturb_eps=config.perturb_eps,
        deep_tail_levels=config.deep_tail_levels,
    )
    if config.window_im is not None:
        halfwidth = float(config.window_im[1])
    else:
        # default comparison grid: one ladder period per side
        halfwidth = config.truncation * net.period_im
    omega = np.linspace(-halfwidth, halfwidth, config.grid_points)
    grid = 1j * omega
    reference = net_eff.closed_many(grid, guard=False)
    cascade.residual_profile(net_eff, result, omega, reference=reference)

    samples_path = os.path.join(bundle.out_dir, "tf_samples.csv")
    _, max_rel = emit_tf_samples(result, net_eff, omega, samples_path)
    bundle.add("tf_samples", samples_path)
    log.info("reconstruction max relative error %.3e", max_rel)
    result.meta["max_rel_err"] = max_rel

    path = os.path.join(bundle.out_dir, "factors.json")
    _write_json(path, result.to_dict())
    bundle.add("factors", path)

    profile_path = os.path.join(bundle.out_dir, "residual_profile.csv")
    with open(profile_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["factors", "max_rel_err"])
        for row in result.residual_profile:
            w.writerow([row["factors"], repr(row["max_rel_err"])])
    bundle.add("residual_profile", profile_path)
    return result


def _run_verify(config, bundle):
    src = config.input
    if src is None or not os.path.isdir(src):
        raise QcascadeError("--input must point at a factorize output directory")
    with open(os.path.join(src, "manifest.json")) as fh:
        manifest = json.load(fh)
    net = network_mod.load_network(os.path.join(src, "network.json"))
    with open(os.path.join(src, "factors.json")) as fh:
        fdoc = json.load(fh)
    table = []
    ok_all = True
    rng = np.random.default_rng(config.seed)
    net_eff = net.with_loop_phase(fdoc["meta"].get("network_loop_phase", 0.0) - net.loop_phase)
    for k, fd in enumerate(fdoc["factors"]):
        v = statespace._decode_matrix(fd["v"])
        zeros = [complex(a, b) for a, b in fd["zeros"]]
        if fd["variant"] == factors_mod.REAL_PAIR:
            terms = [(zeros[0], zeros[1])]
        elif fd["variant"] == factors_mod.COMPLEX_PAIR:
            terms = [(zeros[0], zeros[1])]
        else:
            terms = [(zeros[0], zeros[1]), (zeros[1], zeros[0])]
        fac = factors_mod.CanonicalFactor(fd["variant"], v, terms, [])
        res = factors_mod.factor_structure_residuals(fac, rng)
        ok = max(res.values()) < 1e-6 or res["identity_at_inf"] < 1e-5
        ok_all &= ok
        table.append({"factor": k, **res, "ok": bool(ok)})
    b = statespace._decode_matrix(fdoc["b_matrix"])
    bj = algebra.j_unitarity_residual(b, INTERLEAVED)
    bd = algebra.doubled_up_residual(b, INTERLEAVED)
    # the constant remainder is only as good as the recorded truncation allows
    b_tol = max(1e-6, 10.0 * float(fdoc["b_dispersion"]))
    table.append(
        {"factor": "B", "j_unitarity": float(bj), "doubled_up": float(bd),
         "dispersion": float(fdoc["b_dispersion"]), "ok": bool(max(bj, bd) < b_tol)}
    )
    path = os.path.join(bundle.out_dir, "verify.json")
    _write_json(path, {"checks": table, "ok": bool(ok_all)})
    bundle.add("verify", path)
    for row in table:
        flag = "pass" if row["ok"] else "FAIL"
        print(f"{str(row['factor']):>6}  {flag}  " + "  ".join(
            f"{k}={v:.2e}" for k, v in row.items() if isinstance(v, float)
        ))
    if not ok_all:
        raise QcascadeError("verification failed")
    return table


def run(config):
    """Execute one command; returns the report bundle with all output hashes."""
    os.makedirs(config.out, exist_ok=True)
    bundle = ReportBundle(config.out)

    if config.command == "verify":
        _run_verify(config, bundle)
    else:
        if config.command == "example":
            net = presets.enhanced_squeezing_network()
        else:
            net = _load_network(config)
        net_path = os.path.join(config.out, "network.json")
        network_mod.save_network(net, net_path)
        bundle.add("network", net_path)

        if config.command == "validate":
            _run_validate(config, net, bundle)
        elif config.command == "poles":
            _run_poles(config, net, bundle)
        elif config.command in ("factorize", "example"):
            report = net.validate_assumptions()
            path = os.path.join(bundle.out_dir, "assumptions.json")
            _write_json(path, report.to_dict())
            bundle.add("assumptions", path)
            if any(c.status == "fail" for c in report.checks):
                failed = ", ".join(c.key for c in report.failed())
                raise AssumptionViolation(failed, "cannot factorize this network")
            _run_poles(config, net, bundle)
            _run_factorize(config, net, bundle)
        else:
            raise QcascadeError(f"unknown command {config.command!r}")

    manifest = {
        "command": config.command,
        "config": config.to_dict(),
        "outputs": bundle.outputs,
    }
    bundle.manifest_path = os.path.join(config.out, "manifest.json")
    _write_json(bundle.manifest_path, manifest)
    return bundle


def build_parser():
    p = argparse.ArgumentParser(
        prog="qcascade",
        description="Factorize delayed-feedback network transfer functions "
        "into cascades of canonical two-port components.",
    )
    p.add_argument("--command", required=True,
                   choices=["validate", "poles", "factorize", "verify", "example"])
    p.add_argument("--input", help="network JSON, 'preset:<name>', or a "
                   "factorize output directory for verify")
    p.add_argument("--window-im", nargs=2, type=float, metavar=("LO", "HI"))
    p.add_argument("--truncation", type=int, default=1,
                   help="ladder levels to include on each side of the real axis")
    p.add_argument("--degeneracy", choices=["phase_shift", "perturb"],
                   default="phase_shift")
    p.add_argument("--delta", type=float, default=1e-3,
                   help="loop phase used by the phase_shift strategy")
    p.add_argument("--perturb-eps", type=float, default=1e-3,
                   help="eigenvector perturbation used by the perturb strategy")
    p.add_argument("--tol-structural", type=float, default=1e-10)
    p.add_argument("--deep-tail-levels", type=int, default=None,
                   help="extend periodic ladders to this level before estimating B")
    p.add_argument("--grid-points", type=int, default=401)
    p.add_argument("--out", default="qcascade_out")
    p.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = os.environ.get("QCASCADE_LOG", "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO),
                        format="%(levelname)s %(name)s: %(message)s")
    config = RunConfig(
        command=args.command,
        input=args.input,
        out=args.out,
        window_im=tuple(args.window_im) if args.window_im else None,
        truncation=args.truncation,
        degeneracy=args.degeneracy,
        delta=args.delta,
        perturb_eps=args.perturb_eps,
        tol_structural=args.tol_structural,
        seed=args.seed,
        grid_points=args.grid_points,
        deep_tail_levels=args.deep_tail_levels,
    )
    try:
        bundle = run(config)
    except AssumptionViolation as err:
        log.error("%s", err)
        return 2
    except QcascadeError as err:
        log.error("%s", err)
        return 3
    print(f"wrote {bundle.manifest_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
