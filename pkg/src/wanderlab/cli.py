"""``wanderlab <subcommand> --config <path> --out <dir>``.

Exit codes: 0 pass, 1 fail, 2 inconclusive, 3 usage or config error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from . import config as cfg
from .certifier import (CertifyOptions, admissible_delta, assemble_wandering_model, certify,
                        make_tubes, write_certificate)
from .denjoy import GapLaw, build_denjoy, verify_wandering, write_endpoint_csv
from .errors import ConfigError, WanderlabError
from .geometry import ManifoldPatch, Tolerances, check_tatjer, detect_intrinsic_tangency
from .hopf import HopfFamilyParams, PolynomialRemainder, ns_scan, write_ns_csv
from .mapcore import identity_map
from .models import (SaddleFocusParams, assemble_cycle_model, heterodimensional_cycle_spec,
                     make_saddle_focus, reference_cycle_spec)

log = logging.getLogger("wanderlab")

EXIT_PASS, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 3
FMT = ".17g"
SUBCOMMANDS = ("model", "tangency", "hopf-scan", "denjoy", "certify")


def _num(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), FMT)


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_num(v) for v in row])


# ---------------------------------------------------------------------------
# builders shared by the subcommands


def hopf_params(sc: cfg.Scenario) -> HopfFamilyParams:
    h = sc.hopf
    ho = None
    if h.radial_r4 or h.angular_r2:
        ho = PolynomialRemainder(h.radial_r4, h.angular_r2)
    return HopfFamilyParams(mu=h.mu, a=h.a, beta=h.beta, gamma=h.gamma, period=h.period, higher_order=ho)


def denjoy_map(sc: cfg.Scenario):
    d = sc.denjoy
    law = GapLaw(d.mass, family=d.family, p=d.p, q=d.q)
    return build_denjoy(d.alpha, law, i_max=d.i_max, strict=d.strict, ratio_tol=sc.tolerances.ratio)


def tolerances(sc: cfg.Scenario) -> Tolerances:
    t = sc.tolerances
    return Tolerances(first=t.first, second=t.second, meet=t.meet, off=t.off, trans=t.trans)


# ---------------------------------------------------------------------------
# subcommands


def run_model(sc: cfg.Scenario, out: str) -> int:
    c = sc.cycle
    if c.scenario == "reference":
        spec = reference_cycle_spec(c.contracting_modulus, c.expanding_modulus, c.rotation)
    else:
        spec = heterodimensional_cycle_spec()
    model = assemble_cycle_model(replace(spec, collar_fraction=c.collar_fraction))
    rows = []
    for name, pp in model.saddles.items():
        m = sorted(pp.multipliers, key=lambda z: (abs(z), z.imag))
        rows.append([name, *pp.location, pp.u_ind, *(v for z in m for v in (z.real, z.imag))])
    _write_rows(os.path.join(out, "saddles.csv"),
                ["name", "x", "y", "z", "u_ind", "re1", "im1", "re2", "im2", "re3", "im3"], rows)
    _write_rows(os.path.join(out, "markers.csv"), ["name", "kind", "verified", "residual", "rank", "codim"],
                ([r.name, r.kind, r.verified, r.residual, r.rank, r.codim] for r in model.markers))
    ok = all(r.verified for r in model.markers)
    print(f"model: {len(model.saddles)} saddles, {sum(r.verified for r in model.markers)}/"
          f"{len(model.markers)} markers verified")
    return EXIT_PASS if ok else EXIT_FAIL


def _line(p, d, n=41):
    p, d = np.asarray(p, dtype=float), np.asarray(d, dtype=float)
    return ManifoldPatch.from_function(lambda t: p + t[:, None] * d, np.linspace(-0.5, 0.5, n))


def run_tangency(sc: cfg.Scenario, out: str) -> int:
    c = sc.cycle
    tol = tolerances(sc)
    params = SaddleFocusParams(c.contracting_modulus, c.expanding_modulus, c.rotation, "stable_xy")
    M = np.linalg.matrix_power(make_saddle_focus(params).meta["matrix"], c.tangency_iterate)
    off = c.parabola_offset

    # image of the vertical cylinder over the parabola y = off + s^2
    def cylinder(s, w):
        base = np.stack([s, off + s * s, 0.0 * s], axis=-1) @ M.T
        return base + np.stack([0.0 * s, 0.0 * s, w], axis=-1)

    Wu = ManifoldPatch.from_function(cylinder, np.linspace(-1.0, 1.0, c.patch_samples),
                                     np.linspace(-0.1, 0.1, 11), kind="unstable")
    Wu.to_csv(os.path.join(out, "wu_patch.csv"))
    res = detect_intrinsic_tangency(Wu, lambda x: _line((x[0], x[1], 0.0), (0.0, 1.0, 0.0)),
                                    tol=tol, plane=((0.0, 0.0, 0.0), (0.0, 0.0, 1.0)))
    rep = res.report
    _write_rows(os.path.join(out, "tangency.csv"),
                ["x", "y", "z", "order", "codim", "first_derivative", "second_derivative", "curve_param"],
                [[*rep.location, rep.order, rep.codim, rep.first_derivative, rep.second_derivative,
                  rep.curve_param]])

    # Tatjer conditions for a returning stable manifold touching W^u_loc = {z = 0}
    x0 = np.asarray(rep.location, dtype=float)
    ts = np.linspace(-0.3, 0.3, 61)
    Ws = ManifoldPatch.from_function(lambda s: np.stack([x0[0] + 0 * s, x0[1] + s, s * s], axis=-1), ts)
    grid = np.linspace(-1.0, 1.0, 41)
    Wu_loc = ManifoldPatch.from_function(lambda a, b: np.stack([a, b, 0 * a], axis=-1), grid, grid)
    verdict = check_tatjer(Ws, Wu_loc, _line((x0[0], 0.0, 0.0), (0.0, 1.0, 0.0)),
                           _line((0.0, 0.0, 0.0), (0.0, 1.0, 0.0)), identity_map(), 0, tol=tol)
    with open(os.path.join(out, "tatjer.txt"), "w") as fh:
        for key in ("c1", "c2", "c3"):
            fh.write(f"{key}: {'pass' if getattr(verdict, key) else 'fail'}\n")
    print(f"tangency: {rep.order} at leaf {res.leaf_index}; tatjer {'holds' if verdict.holds else 'fails'}")
    return EXIT_PASS if rep.order == "quadratic" and verdict.holds else EXIT_FAIL


def run_hopf_scan(sc: cfg.Scenario, out: str) -> int:
    h = sc.hopf
    rep = ns_scan(hopf_params(sc), mu_range=(h.scan_min, h.scan_max), period=h.period, grid=h.scan_grid)
    write_ns_csv(rep, os.path.join(out, "ns_scan.csv"))
    print(f"hopf-scan: mu* = {rep.mu_star:.17g}, modulus slope {rep.modulus_slope:.17g}, "
          f"strong resonance {'yes' if rep.strong_resonance else 'no'}")
    return EXIT_INCONCLUSIVE if rep.strong_resonance else EXIT_PASS


def run_denjoy(sc: cfg.Scenario, out: str) -> int:
    d = denjoy_map(sc)
    write_endpoint_csv(d, os.path.join(out, "endpoints.csv"))
    rep = verify_wandering(d, min(sc.denjoy.verify_horizon, d.i_max))
    print(f"denjoy: {d.n_gaps} gaps, retained mass {d.retained_mass:.17g}, "
          f"disjoint {rep.disjoint}, max overlap {rep.max_overlap:.3g}")
    return EXIT_PASS if rep.disjoint else EXIT_FAIL


def run_certify(sc: cfg.Scenario, out: str) -> int:
    hp = hopf_params(sc)
    d = denjoy_map(sc)
    model = assemble_wandering_model(hp, d)
    rs = model.meta["radius"]
    N = sc.certify.horizon
    count = min(N + 1, d.i_max)
    dmax = admissible_delta(d, rs, count)
    tubes = make_tubes(d, rs, sc.tubes.delta_fraction * dmax, count, center=model.meta["centers"][0])
    c = sc.certify
    opts = CertifyOptions(horizon=N, max_period=c.max_period, diameter_tol=c.diameter_tol,
                          omega_seeds=c.omega_seeds, omega_start=c.omega_start, omega_stop=c.omega_stop,
                          omega_stride=c.omega_stride, resolution=c.resolution,
                          lyapunov_iterates=c.lyapunov_iterates, lyapunov_tol=c.lyapunov_tol,
                          density_iterates=c.density_iterates, density_eps=c.density_eps, seed=c.seed)
    cert = certify(model, tubes, d, options=opts)
    write_certificate(cert, out)
    write_endpoint_csv(d, os.path.join(out, "endpoints.csv"))
    for key, val in cert.verdicts.items():
        print(f"{key}: {val}")
    return {"pass": EXIT_PASS, "fail": EXIT_FAIL}.get(cert.status, EXIT_INCONCLUSIVE)


RUNNERS = {
    "model": run_model,
    "tangency": run_tangency,
    "hopf-scan": run_hopf_scan,
    "denjoy": run_denjoy,
    "certify": run_certify,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"wanderlab: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wanderlab", description="Wandering-domain model construction and certification.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="scenario INI file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--dump-defaults", action="store_true", help="print the default scenario and exit")
    p.add_argument("--seed", type=int, help="override certify.seed")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    if args.dump_defaults:
        sys.stdout.write(cfg.default_scenario().dumps())
        return EXIT_PASS
    if not args.config or not args.out:
        print("wanderlab: error: --config and --out are required", file=sys.stderr)
        return EXIT_USAGE
    try:
        sc = cfg.load(args.config)
    except ConfigError as exc:
        print(f"wanderlab: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.seed is not None:
        sc.certify.seed = args.seed
    try:
        os.makedirs(args.out, exist_ok=True)
    except OSError as exc:
        print(f"wanderlab: cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return RUNNERS[args.subcommand](sc, args.out)
    except ConfigError as exc:
        print(f"wanderlab: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except WanderlabError as exc:
        print(f"wanderlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        print(f"wanderlab: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
