"""Command-line entry point: ``statpriv <command> ...``.

Exit codes: 0 success, 1 verification failure, 2 invalid input,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .analytic import (
    PURE_EPS_REGIME,
    delta_gaussian_approx,
    delta_pure_analytic,
    delta_subsample_analytic,
    dp_gaussian_baseline,
    dp_laplace_baseline,
    dp_laplace_closed_form,
    laplace_stat_epsilon,
)
from .curve import DEFAULT_EPS_GRID, MixtureDist, curve, delta_discrete, delta_mixture
from .distributions import ContinuousKernel
from .experiments import PRESETS, run_lambda_sweep, sp_delta_noise
from .io import OUTPUT_DIR_ENV, RunConfig, atomic_write, dumps, to_csv, write_table
from .quadrature import QuadratureError
from .query import (
    Gaussian,
    Laplace,
    PropertyQuery,
    Pure,
    Subsample,
    pair_for,
    sample_size,
    subsample_pair,
)
from .utility import match_noise_to_subsample, matched_laplace_epsilon, ul_subsample

logger = logging.getLogger("statpriv")

EXIT_VERIFY = 1
EXIT_INPUT = 2
EXIT_NUMERIC = 3


class InputError(ValueError):
    pass


def _rate(args, n: int) -> Fraction:
    if args.m is not None:
        return Fraction(sample_size(n, Fraction(args.m, n)), n)
    if args.lam is None:
        raise InputError("subsampling needs --lambda or --m")
    return Fraction(sample_size(n, args.lam), n)


def _mechanism(args, q: PropertyQuery):
    kind = args.mech
    if kind == "pure":
        return Pure()
    if kind == "subsample":
        return Subsample(int(_rate(args, q.n) * q.n))
    scale = args.psi if kind == "laplace" else args.sigma
    if args.nu is not None:
        scale = args.nu / q.n
    if scale is None:
        raise InputError(f"{kind} noise needs {'--psi' if kind == 'laplace' else '--sigma'} or --nu")
    return Laplace(scale) if kind == "laplace" else Gaussian(scale)


def _mech_dict(mech) -> dict:
    d = {"kind": mech.name}
    d.update({k: v for k, v in vars(mech).items()})
    return d


def _eps_list(args) -> list:
    grid = list(args.eps) if args.eps else list(DEFAULT_EPS_GRID)
    if any(not (e >= 0) or math.isinf(e) for e in grid):
        raise InputError("epsilon values must be finite and >= 0")
    return sorted(grid)


def _emit(args, header, rows, config: RunConfig) -> None:
    text = write_table(args.out, header, rows, args.format, extra={"config": config.to_dict()})
    if not args.out:
        sys.stdout.write(text)


def cmd_curve(args) -> int:
    q = PropertyQuery(args.n, args.pi)
    mech = _mechanism(args, q)
    eps_grid = _eps_list(args)
    config = RunConfig("curve", q.n, q.pi, _mech_dict(mech), eps_grid, args.format, args.out,
                       {"quadrature": args.tol})
    pair = pair_for(q, mech)
    oracle = curve(pair.plus, pair.minus, eps_grid, tol=args.tol, workers=args.workers)

    rows = []
    for e, d_or in zip(eps_grid, oracle.deltas):
        outside = False
        if isinstance(mech, Pure):
            analytic, kind = max(delta_pure_analytic(q, e)), "exact"
            outside = e > PURE_EPS_REGIME
        elif isinstance(mech, Subsample):
            analytic, kind = max(delta_subsample_analytic(q, Fraction(mech.m, q.n), e)), "exact"
        elif isinstance(mech, Laplace):
            bound = laplace_stat_epsilon(q, mech.psi)
            analytic, kind = (0.0 if e >= bound else math.nan), "bound"
        else:
            analytic, kind = max(delta_gaussian_approx(q, mech.sigma, e)), "approximate"
        disc = abs(analytic - d_or) if math.isfinite(analytic) else math.nan
        rows.append([e, analytic, d_or, disc, kind, outside])
    header = ["epsilon", "delta_analytic", "delta_oracle", "abs_discrepancy",
              "analytic_kind", "outside_stated_regime"]
    _emit(args, header, rows, config)
    return 0


def cmd_compare(args) -> int:
    q = PropertyQuery(args.n, args.pi)
    lam = _rate(args, q.n)
    if lam == 1:
        raise InputError("lambda = 1 has no utility loss to match")
    config = RunConfig("compare", q.n, q.pi, {"kind": "subsample", "m": int(lam * q.n)},
                       [args.eps], args.format, args.out)
    loss = ul_subsample(q, lam)
    rows = [["subsample", float(lam), loss, max(delta_subsample_analytic(q, lam, args.eps))]]
    for kind in ("gaussian", "laplace"):
        kern = match_noise_to_subsample(q, lam, kind)
        rows.append([kind, kern.scale, kern.variance, sp_delta_noise(q, kern, args.eps, args.tol)])
    _emit(args, ["mechanism", "parameter", "utility_loss", "delta"], rows, config)
    return 0


def cmd_sweep(args) -> int:
    n = args.n
    lams = [Fraction(sample_size(n, lam), n) for lam in args.lambdas] if args.lambdas else None
    config = RunConfig("sweep", n, args.pi[0], {"kind": "subsample"}, [args.eps], args.format, args.out)
    series = run_lambda_sweep(n, args.eps, args.pi, lams, workers=args.workers)
    rows = []
    for s in series:
        for x, y in zip(s.x, s.y):
            rows.append([s.meta["pi"], x, s.meta["mechanism"], y])
    _emit(args, ["pi", "lambda", "mechanism", "delta"], rows, config)
    return 0


def cmd_utility_match(args) -> int:
    q = PropertyQuery(args.n, args.pi)
    lam = _rate(args, q.n)
    if lam == 1:
        raise InputError("lambda = 1 has no utility loss to match")
    config = RunConfig("utility-match", q.n, q.pi, {"kind": "subsample", "m": int(lam * q.n)},
                       [], args.format, args.out)
    loss = ul_subsample(q, lam)
    lap = match_noise_to_subsample(q, lam, "laplace")
    gau = match_noise_to_subsample(q, lam, "gaussian")
    rows = [
        ["subsample", float(lam), loss, ""],
        ["laplace", lap.scale, lap.variance, matched_laplace_epsilon(q, lam)],
        ["gaussian", gau.scale, gau.variance, ""],
    ]
    _emit(args, ["mechanism", "parameter", "utility_loss", "pure_epsilon"], rows, config)
    return 0


def _slug(label: str) -> str:
    return "".join(c if c.isalnum() or c in "._-=" else "_" for c in label)


def cmd_preset(args) -> int:
    if args.id not in PRESETS:
        raise InputError(f"unknown preset {args.id!r}; choose from {', '.join(sorted(PRESETS))}")
    preset = PRESETS[args.id]
    base = args.out_dir or os.environ.get(OUTPUT_DIR_ENV) or "statpriv-output"
    outdir = Path(base) / preset.id
    series = preset.run(workers=args.workers)
    entries = []
    for s in series:
        fname = f"{_slug(s.label)}.csv"
        atomic_write(outdir / fname, to_csv(["x", "y"], zip(s.x, s.y)))
        entries.append({"label": s.label, "file": fname, "points": len(s.x), "meta": s.meta})
    config = RunConfig("preset", preset=preset.id, out=str(outdir))
    manifest = {
        "preset": preset.id,
        "description": preset.description,
        "version": __version__,
        "parameters": preset.parameters,
        "series": entries,
        "config": config.to_dict(),
    }
    atomic_write(outdir / "manifest.json", dumps(manifest))
    print(outdir)
    return 0


def verification_battery(quick: bool = False):
    """Yield (label, discrepancy, kind) for every analytic-vs-oracle check."""
    ns = (10, 50) if quick else (10, 50, 200)
    pis = (0.1, 0.5) if quick else (0.01, 0.1, 0.5)
    lams = (Fraction(1, 10), Fraction(1, 2), Fraction(1))
    epss = (0.0, 0.01, 0.1, math.log(2))
    for n in ns:
        for pi in pis:
            q = PropertyQuery(n, pi)
            for lam in lams:
                pair = subsample_pair(q, lam)
                for e in epss:
                    a = delta_subsample_analytic(q, lam, e)
                    o = (delta_discrete(pair.plus, pair.minus, e), delta_discrete(pair.minus, pair.plus, e))
                    yield (f"subsample n={n} pi={pi} lambda={lam} eps={e:.6g}",
                           max(abs(a[0] - o[0]), abs(a[1] - o[1])), "discrete")
            for e in epss:
                yield (f"pure-vs-subsample n={n} pi={pi} eps={e:.6g}",
                       max(abs(x - y) for x, y in zip(delta_pure_analytic(q, e),
                                                      delta_subsample_analytic(q, 1, e))),
                       "discrete")
    for nu in ((1.0, 3.0) if quick else (1.0, 3.0, 10.0)):
        s, sig = 1e-3, nu * 1e-3
        for e in (0.0, 0.01, 0.1):
            kg = ContinuousKernel("gaussian", sig)
            p = MixtureDist(kg, (Fraction(s),), [0.0])
            r = MixtureDist(kg, (Fraction(0),), [0.0])
            yield (f"dp-gaussian nu={nu} eps={e}",
                   abs(delta_mixture(p, r, e) - dp_gaussian_baseline(s, sig, e)), "mixture")
            yield (f"dp-laplace nu={nu} eps={e}",
                   abs(dp_laplace_baseline(s, sig, e) - dp_laplace_closed_form(s, sig, e)), "mixture")


def cmd_verify(args) -> int:
    tol_d = args.tol if args.tol is not None else args.tol_discrete
    tol_m = args.tol if args.tol is not None else args.tol_mixture
    worst = {"discrete": ("", 0.0), "mixture": ("", 0.0)}
    failures = []
    count = 0
    for label, disc, kind in verification_battery(args.quick):
        count += 1
        if disc > worst[kind][1]:
            worst[kind] = (label, disc)
        if disc > (tol_d if kind == "discrete" else tol_m):
            failures.append((disc, label))
    print(f"checks run: {count}")
    print(f"max discrete discrepancy: {worst['discrete'][1]:.3e} ({worst['discrete'][0]})")
    print(f"max mixture discrepancy:  {worst['mixture'][1]:.3e} ({worst['mixture'][0]})")
    if failures:
        disc, label = max(failures)
        print(f"FAIL: {len(failures)} checks above tolerance; worst {label}: {disc:.3e}")
        return EXIT_VERIFY
    print("OK")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="statpriv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def query_args(p, pi_many=False):
        p.add_argument("--n", type=int, required=True, help="database size")
        if pi_many:
            p.add_argument("--pi", type=float, nargs="+", required=True)
        else:
            p.add_argument("--pi", type=float, required=True, help="property probability")

    def rate_args(p):
        g = p.add_mutually_exclusive_group()
        g.add_argument("--lambda", dest="lam", type=float, help="sampling rate")
        g.add_argument("--m", type=int, help="sample size")

    def out_args(p):
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--tol", type=float, default=1e-9, help="quadrature tolerance")
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("curve", help="analytic and oracle (eps, delta) curve")
    query_args(p)
    p.add_argument("--mech", choices=("pure", "subsample", "laplace", "gaussian"), default="pure")
    rate_args(p)
    p.add_argument("--psi", type=float, help="Laplace scale")
    p.add_argument("--sigma", type=float, help="Gaussian standard deviation")
    p.add_argument("--nu", type=float, help="noise scale in units of the sensitivity 1/n")
    p.add_argument("--eps", type=float, nargs="+", help="epsilon values (default: log grid)")
    out_args(p)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("compare", help="subsampling vs utility-matched noise at one eps")
    query_args(p)
    rate_args(p)
    p.add_argument("--eps", type=float, required=True)
    out_args(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="equal-utility mechanisms across sampling rates")
    query_args(p, pi_many=True)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--lambdas", type=float, nargs="+")
    out_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("utility-match", help="noise scales matching the subsampling loss")
    query_args(p)
    rate_args(p)
    out_args(p)
    p.set_defaults(func=cmd_utility_match)

    p = sub.add_parser("preset", help="write a figure dataset (CSV per series + manifest)")
    p.add_argument("id", help=", ".join(PRESETS))
    p.add_argument("--out-dir", help=f"parent directory (default: ${OUTPUT_DIR_ENV} or ./statpriv-output)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("verify", help="analytic-vs-oracle battery")
    p.add_argument("--quick", action="store_true", help="reduced grid")
    p.add_argument("--tol", type=float, help="override both tolerances")
    p.add_argument("--tol-discrete", type=float, default=1e-8)
    p.add_argument("--tol-mixture", type=float, default=1e-6)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    for name in ("tol", "tol_discrete", "tol_mixture"):
        val = getattr(args, name, None)
        if val is not None and not val > 0:
            print(f"statpriv: error: --{name.replace('_', '-')} must be positive", file=sys.stderr)
            return EXIT_INPUT
    try:
        return args.func(args)
    except QuadratureError as exc:
        print(f"statpriv: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError) as exc:
        print(f"statpriv: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
