"""Command-line interface.

Subcommands: ``weights`` (weight constants and diagnostics), ``norm``
(norm of a described function), ``apply`` (operator evaluation, grid
dump), ``verify`` (lemma/tail/kernel-class/theorem checks), ``report``
(CSV to SVG).  Exit codes: 0 all requested checks passed, 1 a check
failed, 2 invalid configuration or usage.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from .harness import (
    THEOREM_IDS,
    ConfigError,
    ExperimentConfig,
    check_product_lemma,
    check_tail_bounds,
    default_config,
    render_sweep_svg,
    sweep,
    write_sweep_csv,
    write_sweep_json,
)
from .lattice import GridFunction, make_lattice
from .operators import (
    KernelSamplingPlan,
    TruncationPolicy,
    apply_czo,
    apply_fractional,
    verify_kernel_class,
)
from .spaces import (
    MorreyParams,
    lebesgue_norm,
    morrey_norm,
    two_weight_morrey_norm,
    weak_lebesgue_norm,
    weak_morrey_norm,
)
from .weights import (
    ExponentVector,
    FractionalParams,
    PowerWeight,
    ainfty_diagnostics,
    apq_constant,
    muckenhoupt_constant,
    random_sampled_weight,
)

__all__ = ["main", "run_cli", "console_main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="morreylab",
        description="Desk-scale checks for weighted Morrey bounds of multilinear operators",
    )
    sub = parser.add_subparsers(dest="command")

    def add_common(p):
        p.add_argument("--config", help="TOML experiment configuration")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    w = sub.add_parser("weights", help="weight-class constants and diagnostics")
    w.add_argument("--power", type=float, default=0.5, help="weight exponent a in |x|^a")
    w.add_argument("--p", type=float, default=2.0)
    w.add_argument("--q", type=float, help="also report the two-exponent constant")
    w.add_argument("--N", type=int, default=257)
    w.add_argument("--L", type=float, default=4.0)

    n = sub.add_parser("norm", help="norm of a described function")
    n.add_argument(
        "--space",
        choices=("lebesgue", "weak-lebesgue", "morrey", "weak-morrey", "two-weight-morrey"),
        default="morrey",
    )
    n.add_argument("--p", type=float, default=1.0)
    n.add_argument("--kappa", type=float, default=0.5)
    n.add_argument("--power", type=float, default=0.0, help="weight exponent")
    n.add_argument("--power-v", type=float, help="second weight exponent (two-weight)")
    n.add_argument("--shape", choices=("bump", "box"), default="box")
    n.add_argument("--center", type=float, default=0.0)
    n.add_argument("--width", type=float, default=1.0)
    n.add_argument("--amplitude", type=float, default=1.0)
    n.add_argument("--N", type=int, default=257)
    n.add_argument("--L", type=float, default=4.0)

    a = sub.add_parser("apply", help="evaluate an operator, dump the output grid")
    a.add_argument("--operator", choices=("czo", "fractional"), default="fractional")
    a.add_argument("--alpha", type=float, default=0.5)
    a.add_argument("--delta-factor", type=float, default=2.0)
    a.add_argument("--shape", choices=("bump", "box"), default="bump")
    a.add_argument("--center", type=float, default=0.25)
    a.add_argument("--width", type=float, default=1.0)
    a.add_argument("--amplitude", type=float, default=1.0)
    a.add_argument("--N", type=int, default=129)
    a.add_argument("--L", type=float, default=4.0)
    a.add_argument("--out", default=".")
    a.add_argument("--format", choices=("csv", "json"), default="csv")

    v = sub.add_parser("verify", help="run a check; exit 0 iff it passes")
    v.add_argument(
        "what",
        choices=("lemma31", "lemma41", "tail", "kernel-class", "theorem"),
    )
    v.add_argument("which", nargs="?", help="statement id for 'theorem' (1.1-1.4)")
    add_common(v)

    r = sub.add_parser("report", help="render sweep CSV to an SVG plot")
    r.add_argument("--csv", required=True)
    r.add_argument("--out", default=".")
    return parser


def _load_config(args, fallback: ExperimentConfig) -> ExperimentConfig:
    cfg = ExperimentConfig.from_toml(args.config) if args.config else fallback
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _make_function(args, lattice) -> GridFunction:
    if args.shape == "bump":
        return GridFunction.poly_bump(lattice, args.center, args.width, args.amplitude)
    half = args.width / 2.0
    box = GridFunction.indicator_box(lattice, args.center - half, args.center + half)
    return args.amplitude * box


def _cmd_weights(args) -> int:
    lat = make_lattice(1, args.L, args.N)
    fam = ExperimentConfig(N=args.N, L=args.L).make_family(lat)
    w = PowerWeight(args.power, 1)
    rep = muckenhoupt_constant(w, args.p, fam, lat)
    print(f"A_p constant of {w} at p={args.p:g}: {rep.value:.6g} ({rep.extremal_ball})")
    if args.q is not None:
        rq = apq_constant(w, args.p, args.q, fam, lat)
        print(
            f"A_pq constant of {w} at (p, q)=({args.p:g}, {args.q:g}): "
            f"{rq.value:.6g} ({rq.extremal_ball})"
        )
    diag = ainfty_diagnostics(w, fam, lat)
    print(f"doubling: {diag.doubling.value:.6g} ({diag.doubling.extremal_ball})")
    print(f"reverse-Jensen ratio: {diag.reverse_jensen.value:.6g}")
    if diag.delta is not None:
        print(f"comparability exponent delta: {diag.delta.value:.6g}")
    for flag in diag.flags:
        print(f"note: {flag}", file=sys.stderr)
    return 0


def _cmd_norm(args) -> int:
    lat = make_lattice(1, args.L, args.N)
    f = _make_function(args, lat)
    w = PowerWeight(args.power, 1)
    if args.space == "lebesgue":
        print(f"{lebesgue_norm(f, w, args.p):.8g}")
        return 0
    if args.space == "weak-lebesgue":
        rep = weak_lebesgue_norm(f, w, args.p)
        print(f"{rep.value:.8g} (level {rep.extremal_level})")
        return 0
    fam = ExperimentConfig(N=args.N, L=args.L).make_family(lat)
    mp = MorreyParams(args.p, args.kappa)
    if args.space == "morrey":
        rep = morrey_norm(f, w, mp, fam)
    elif args.space == "weak-morrey":
        rep = weak_morrey_norm(f, w, mp, fam)
    else:
        v = PowerWeight(args.power_v if args.power_v is not None else args.power, 1)
        rep = two_weight_morrey_norm(f, w, v, mp, fam)
    print(f"{rep.value:.8g} ({rep.extremal_ball})")
    return 0


def _cmd_apply(args) -> int:
    lat = make_lattice(1, args.L, args.N)
    f = _make_function(args, lat)
    if args.operator == "czo":
        cfg = ExperimentConfig(operator="czo", N=args.N, L=args.L)
        out = apply_czo(cfg.make_kernel(), [f, f], TruncationPolicy(args.delta_factor * lat.h))
    else:
        out = apply_fractional(args.alpha, [f, f])
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"apply_{args.operator}.{args.format}")
    if args.format == "csv":
        with open(path, "w") as fh:
            fh.write("x,value\n")
            for x, v in zip(lat.axis, out.values):
                fh.write(f"{x!r},{v!r}\n")
    else:
        with open(path, "w") as fh:
            json.dump(
                {"x": [float(v) for v in lat.axis], "value": [float(v) for v in out.values]},
                fh,
            )
            fh.write("\n")
    print(f"wrote {path} (max |output| = {np.abs(out.values).max():.6g})")
    return 0


def _cmd_verify(args) -> int:
    if args.what == "theorem":
        if args.which not in THEOREM_IDS:
            print(f"error: expected a statement id from {sorted(THEOREM_IDS)}", file=sys.stderr)
            return 2
        cfg = _load_config(args, default_config(args.which))
        report = sweep(cfg, theorem=args.which, jobs=args.jobs)
        os.makedirs(args.out, exist_ok=True)
        base = os.path.join(args.out, f"sweep_{args.which.replace('.', '_')}")
        if args.format == "csv":
            write_sweep_csv(report, base + ".csv")
        else:
            write_sweep_json(report, base + ".json")
        print(report.summary())
        for note in report.hypothesis_warnings:
            print(f"warning: {note}", file=sys.stderr)
        if report.passed is None:
            print("no verdict: hypothesis windows violated", file=sys.stderr)
            return 0
        return 0 if report.passed else 1

    if args.what in ("lemma31", "lemma41"):
        mode = "czo" if args.what == "lemma31" else "fractional"
        cfg = _load_config(args, default_config("1.1" if mode == "czo" else "1.3"))
        lat = cfg.make_lattice()
        fam = cfg.make_family(lat)
        P = ExponentVector(cfg.exponents)
        fp = FractionalParams(cfg.alpha, P, cfg.n) if mode == "fractional" else None
        ok = True
        rep = check_product_lemma(cfg.make_weights(), P, fam, lat, mode, fp)
        print(rep.summary())
        ok &= rep.holder_ok
        rng = np.random.default_rng(cfg.seed)
        for k in range(5):
            ws = [random_sampled_weight(lat, rng) for _ in range(P.m)]
            rrep = check_product_lemma(ws, P, fam, lat, mode, fp)
            ok &= rrep.holder_ok
        print(f"random corpus (5 weight vectors): reverse direction {'holds' if ok else 'FAILS'}")
        return 0 if ok else 1

    if args.what == "tail":
        cfg = _load_config(args, default_config("1.3"))
        ok = True
        for mode in ("czo", "fractional"):
            rep = check_tail_bounds(cfg, mode=mode)
            print(rep.summary())
            ok &= rep.passed
        return 0 if ok else 1

    # kernel-class
    cfg = _load_config(args, default_config("1.1"))
    kernel = cfg.make_kernel()
    rep = verify_kernel_class(kernel, KernelSamplingPlan(seed=cfg.seed))
    print(f"{kernel.tag}: {rep.summary()}")
    return 0 if rep.passed else 1


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors (and --help)
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        if args.command == "weights":
            return _cmd_weights(args)
        if args.command == "norm":
            return _cmd_norm(args)
        if args.command == "apply":
            return _cmd_apply(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "report":
            os.makedirs(args.out, exist_ok=True)
            out = os.path.join(
                args.out, os.path.splitext(os.path.basename(args.csv))[0] + ".svg"
            )
            render_sweep_svg(args.csv, out)
            print(f"wrote {out}")
            return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


def run_cli(args: list[str] | None = None) -> int:
    """Programmatic entry point; returns the exit code."""
    return main(args)


def console_main() -> None:
    sys.exit(main())
