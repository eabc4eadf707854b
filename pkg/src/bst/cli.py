"""Command-line interface: ``bst <subcommand> ...``.

Exit codes: 0 success, 1 a checked condition fails (output still written),
2 bad input.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path


from . import __version__
from .billiard import SearchConfig, find_orbits, length_spectrum
from .boundary import validate_spec
from .bouncing_ball import check_DL_conditions, detect_bouncing_balls, poincare_map
from .errors import BSTError, InputError
from .hessian import hessian_data
from .invariants import InvariantConstants, b_invariant, prefactor
from .io import (RunManifest, dumps, file_sha256, load_domain, manifest_path, read_json, write_csv,
                 write_json)
from .reconstruction import (SpectralData, duality_report, recover_jet, roundtrip_jets,
                             spectral_data_from_jets)

log = logging.getLogger("bst")

ROUNDTRIP_TOL = 1e-8


class ConditionFailure(Exception):
    """Raised after output is written when a checked condition fails."""


def _q_range(text: str):
    try:
        if ".." in text:
            lo, hi = text.split("..")
            qs = list(range(int(lo), int(hi) + 1))
        else:
            qs = [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad q range {text!r}; use e.g. 2..8 or 3,5")
    if not qs or min(qs) < 2:
        raise argparse.ArgumentTypeError("q values must be >= 2")
    return qs


def _emit(obj, out, manifest: RunManifest):
    text = dumps(obj)
    if out:
        Path(out).write_text(text)
        write_json(manifest.finish(), manifest_path(out))
    else:
        sys.stdout.write(text)


def _domain(args, manifest):
    spec = load_domain(args.domain)
    manifest.domain_sha256 = file_sha256(args.domain)
    return validate_spec(spec)


def _search(args, manifest):
    s = SearchConfig(n_starts=args.starts, seed=args.seed)
    manifest.seed = s.seed
    manifest.tolerances.update(grad_tol=s.grad_tol, degeneracy_tol=s.degeneracy_tol, n_starts=s.n_starts)
    return s


def _constants(path):
    return InvariantConstants.from_dict(read_json(path)) if path else InvariantConstants()


def _pick_orbit(bbs, index):
    if index is None:
        return bbs
    if not 0 <= index < len(bbs):
        raise InputError(f"--orbit {index} out of range; {len(bbs)} bouncing ball orbit(s) found")
    return [bbs[index]]


def _usable_orbit(geom, bbs, index):
    """First orbit (or the chosen one) that is nondegenerate with f3 != 0."""
    for bb in _pick_orbit(bbs, index):
        st = poincare_map(geom, bb, strict=False)
        if st.kind != "degenerate" and abs(bb.f_plus[3]) > 1e-8:
            return bb
    raise ConditionFailure("no bouncing ball orbit is nondegenerate with nonzero third derivative")


# subcommands


def cmd_validate(args, m):
    geom = _domain(args, m)
    _emit({
        "label": geom.spec.label,
        "perimeter": geom.perimeter,
        "convex": geom.convex,
        "kappa_min": geom.kappa_min,
        "kappa_max": geom.kappa_max,
        "r_min": geom.r_min,
        "r_max": geom.r_max,
        "modes": len(geom.freqs),
    }, args.out, m)


def cmd_bouncing_ball(args, m):
    geom = _domain(args, m)
    bbs = detect_bouncing_balls(geom, args.jet_order)
    for bb in bbs:
        poincare_map(geom, bb, strict=False)
    _emit({"orbits": bbs}, args.out, m)


def cmd_check(args, m):
    geom = _domain(args, m)
    search = _search(args, m)
    spectrum = length_spectrum(geom, args.qmax, args.tol, search)
    reports = [check_DL_conditions(geom, bb, args.qmax, spectrum=spectrum)
               for bb in _pick_orbit(detect_bouncing_balls(geom), args.orbit)]
    _emit({"qmax": args.qmax, "reports": reports}, args.out, m)
    if not all(r["passed"] for r in reports):
        raise ConditionFailure("at least one condition fails")


def cmd_orbits(args, m):
    geom = _domain(args, m)
    search = _search(args, m)
    found, warnings = [], []
    for q in args.q:
        res = find_orbits(geom, q, args.p, search)
        found.extend(res)
        warnings.extend(res.warnings)
    _emit({"orbits": found, "warnings": warnings, "starts_per_p": search.n_starts}, args.out, m)
    if args.plot:
        from .plotting import plot_orbits

        plot_orbits(geom, found, args.plot, geom.spec.label)


def cmd_spectrum(args, m):
    geom = _domain(args, m)
    search = _search(args, m)
    m.tolerances["cluster_tol"] = args.tol
    spec = length_spectrum(geom, args.qmax, args.tol, search)
    rows = spec.rows()
    if args.out:
        write_csv(args.out, ["length", "multiplicity", "p", "q", "degenerate_flag"], rows)
        write_json(m.finish(), manifest_path(args.out))
        from .plotting import plot_spectrum

        plot_spectrum(spec, str(Path(args.out).with_suffix(".png")), geom.spec.label)
    else:
        sys.stdout.write("length,multiplicity,p,q,degenerate_flag\n")
        for row in rows:
            sys.stdout.write(",".join(repr(x) if isinstance(x, float) else str(x) for x in row) + "\n")
    for w in spec.warnings:
        log.info(w)


def cmd_hessian(args, m):
    branch = "+" if args.branch == "plus" else "-"
    data = hessian_data(args.a, args.L, args.r, branch)
    _emit(data, args.out, m)


def cmd_invariants(args, m):
    geom = _domain(args, m)
    consts = _constants(args.constants)
    bbs = detect_bouncing_balls(geom, 2 * args.jmax)
    bb = _usable_orbit(geom, bbs, args.orbit)
    st = bb.stability
    hess = {r: hessian_data(bb.a, bb.L, r) for r in (1, 2)}
    inv = [b_invariant(bb.f_plus.derivatives, hess[r], consts, r, j)
           for r in (1, 2) for j in range(2, args.jmax + 1)]
    pre = []
    for r in (1, 2):
        for bc in ("dirichlet", "neumann"):
            pre.append(prefactor(st, r, bc, hess[r].maslov.m, args.k, bb.L))
    sd = spectral_data_from_jets(bb.f_plus.derivatives, bb.f_minus.derivatives, bb.L, consts, args.jmax)
    _emit({
        "orbit": {"theta": bb.theta, "L": bb.L, "a": bb.a, "kind": st.kind, "alpha": st.alpha},
        "hessian": {str(r): {"signature": h.signature, "maslov": h.maslov, "G": h.G} for r, h in hess.items()},
        "invariants": inv,
        "prefactors": pre,
        "spectral_data": sd,
    }, args.out, m)


def cmd_reconstruct(args, m):
    d = read_json(args.spectral)
    if isinstance(d, dict) and "spectral_data" in d:
        d = d["spectral_data"]
    data = SpectralData.from_dict(d)
    res = recover_jet(data, _constants(args.constants), args.J)
    _emit(res, args.out, m)


def cmd_roundtrip(args, m):
    geom = _domain(args, m)
    consts = _constants(args.constants)
    bb = _usable_orbit(geom, detect_bouncing_balls(geom, 2 * args.J), args.orbit)
    rep = roundtrip_jets(bb.f_plus.derivatives, bb.f_minus.derivatives, bb.L, args.J, consts)
    rep["theta"] = bb.theta
    m.tolerances["roundtrip_tol"] = ROUNDTRIP_TOL
    if args.out:
        _emit(rep, args.out, m)
    print(f"max_jet_error {rep['max_jet_error']:.3e}")
    if not rep["max_jet_error"] <= ROUNDTRIP_TOL:
        raise ConditionFailure("round trip error above tolerance")


def cmd_duality(args, m):
    rep = duality_report(args.alpha, args.L, args.kind)
    _emit(rep, args.out, m)
    if not rep["distinguished"]:
        raise ConditionFailure("the two branches are not distinguished by the signature")


# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bst", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_, domain=True, out=True):
        sp = sub.add_parser(name, help=help_)
        if domain:
            sp.add_argument("--domain", required=True, help="domain JSON {label, radial_coeffs, rotation}")
        if out:
            sp.add_argument("--out", help="output file (stdout if omitted)")
        sp.set_defaults(func=func)
        return sp

    def search_flags(sp):
        sp.add_argument("--starts", type=int, default=SearchConfig.n_starts, help="multistart seeds per (p, q)")
        sp.add_argument("--seed", type=int, default=SearchConfig.seed)

    add("validate", cmd_validate, "check a domain spec and print its geometry")
    sp = add("bouncing-ball", cmd_bouncing_ball, "bouncing ball orbits and their stability")
    sp.add_argument("--jet-order", type=int, default=12)
    sp = add("check", cmd_check, "genericity conditions (1)-(4) for each bouncing ball orbit")
    sp.add_argument("--qmax", type=int, default=6)
    sp.add_argument("--tol", type=float, default=1e-9, help="length clustering width")
    sp.add_argument("--orbit", type=int, help="index of the bouncing ball orbit to check")
    search_flags(sp)
    sp = add("orbits", cmd_orbits, "periodic orbits for given bounce counts")
    sp.add_argument("--q", type=_q_range, default=[2], help="e.g. 2..8 or 3,5")
    sp.add_argument("--p", type=int, nargs="*", help="winding numbers to keep")
    sp.add_argument("--plot", help="also draw the orbits to this image file")
    search_flags(sp)
    sp = add("spectrum", cmd_spectrum, "length spectrum as CSV (and a PNG next to it)")
    sp.add_argument("--qmax", type=int, default=6)
    sp.add_argument("--tol", type=float, default=1e-9)
    search_flags(sp)
    sp = add("hessian", cmd_hessian, "closed-form Hessian data for the 2r-fold iterate", domain=False)
    sp.add_argument("--a", type=float, required=True)
    sp.add_argument("--L", type=float, required=True)
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--branch", choices=["plus", "minus"], default="plus")
    sp = add("invariants", cmd_invariants, "normalized invariants of a bouncing ball orbit")
    sp.add_argument("--jmax", type=int, default=6)
    sp.add_argument("--constants", help="JSON {C_tilde, C, C_hat, A}; all 1 if omitted")
    sp.add_argument("--orbit", type=int)
    sp.add_argument("--k", type=float, default=0.0, help="wavenumber for the prefactor")
    sp = add("reconstruct", cmd_reconstruct, "recover the jet from spectral data", domain=False)
    sp.add_argument("--spectral", required=True, help="spectral data JSON (or invariants output)")
    sp.add_argument("--constants")
    sp.add_argument("--J", type=int)
    sp = add("roundtrip", cmd_roundtrip, "domain -> invariants -> jet; prints the largest error")
    sp.add_argument("--J", type=int, default=6)
    sp.add_argument("--constants")
    sp.add_argument("--orbit", type=int)
    sp = add("duality", cmd_duality, "the dual curvature pair and its signatures", domain=False)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--L", type=float, required=True)
    sp.add_argument("--kind", choices=["elliptic", "hyperbolic"], default="elliptic")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    argv = list(sys.argv[1:] if argv is None else argv)
    manifest = RunManifest(args.command, argv)
    try:
        args.func(args, manifest)
    except (InputError, OSError, ValueError) as exc:
        print(f"bst {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except ConditionFailure as exc:
        print(f"bst {args.command}: {exc}", file=sys.stderr)
        return 1
    except BSTError as exc:
        print(f"bst {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
