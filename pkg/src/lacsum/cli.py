"""Command-line driver.

Subcommands: gen, partial-sum, maximal, decompose, converge, verify, report.
Exit codes: 0 all assertions pass, 1 an assertion failed, 2 usage or config
error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .errors import LacsumError
from .lattice import JkIndexSpace, SampleJk, make_lacunary
from .maximal import weak_type_table, weighted_maximal
from .decomp import coefficient_transfer, decompose_free_pair
from .seqcalc import abel_identity_check
from .serialize import (
    dumps,
    gridfunction_slice_rows,
    gridfunction_to_dict,
    load_json,
    save_csv,
    save_json,
    spectrum_from_dict,
    spectrum_to_dict,
)
from .spectral import TorusGrid, grid_l2, partial_sum
from .suites import (
    ExperimentConfig,
    Report,
    config_from_mapping,
    emit_report,
    gen_test_function,
    parse_config_file,
    run_convergence_suite,
    run_identity_suite,
    run_maximal_suite,
)
from .weyl import weight_from_kind


def _emit(report: Report, out: str | None, fmt: str) -> None:
    if out:
        emit_report(report, out, fmt)
        print(f"wrote {out}")
    else:
        sys.stdout.write(dumps(report.to_dict()))


def _config_from_args(args: argparse.Namespace, suite: str) -> ExperimentConfig:
    mapping: dict = {}
    if getattr(args, "config", None):
        mapping.update(parse_config_file(args.config))
    for key in (
        "seed",
        "dimension",
        "q",
        "lambda_count",
        "grid",
        "bandwidth",
        "trials",
        "weight",
        "family",
        "beta",
        "free_cap",
    ):
        value = getattr(args, key, None)
        if value is not None:
            mapping[key] = value
    if getattr(args, "jk", None):
        mapping["jk"] = tuple(args.jk)
    if getattr(args, "cap_schedule", None):
        mapping["cap_schedule"] = tuple(args.cap_schedule)
    if getattr(args, "levels", None):
        mapping["levels"] = tuple(args.levels)
    mapping["suite"] = suite
    return config_from_mapping(mapping)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="RNG seed (recorded in reports)")
    p.add_argument("--grid", type=int, default=None, help="grid resolution per axis")
    p.add_argument("--out", type=str, default=None, help="output path (stdout if omitted)")
    p.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
    p.add_argument("--config", type=str, default=None, help="key = value config file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lacsum",
        description="Rectangular partial sums of multiple Fourier series: "
        "experiments with lacunary index sweeps and convergence weights.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a test spectrum")
    _add_common(g)
    g.add_argument("--family", default="random_decay")
    g.add_argument("--N", dest="dimension", type=int, default=3)
    g.add_argument("--B", dest="bandwidth", type=int, default=8)
    g.add_argument("--beta", type=float, default=2.0)
    g.add_argument("--eps", type=float, default=0.5)
    g.add_argument("--mode", type=int, nargs="+", default=None, help="single-mode frequency")
    g.add_argument("--Jk", dest="jk", type=int, nargs="+", default=None)
    g.add_argument("--no-normalize", action="store_true")

    ps = sub.add_parser("partial-sum", help="evaluate a rectangular partial sum")
    _add_common(ps)
    ps.add_argument("--spec", required=True, help="spectrum JSON file")
    ps.add_argument("--n", type=int, nargs="+", required=True, help="partial-sum index")
    ps.add_argument("--fix", type=int, nargs="*", default=None, help="axis index pairs to pin for CSV slices")

    mx = sub.add_parser("maximal", help="weighted maximal sweep over an index space")
    _add_common(mx)
    mx.add_argument("--spec", required=True)
    mx.add_argument("--Jk", dest="jk", type=int, nargs="+", required=True)
    mx.add_argument("--q", type=float, default=2.0)
    mx.add_argument("--lambda-count", dest="lambda_count", type=int, default=5)
    mx.add_argument("--free-cap", dest="free_cap", type=int, default=32)
    mx.add_argument("--weight", default="product")

    dc = sub.add_parser("decompose", help="four-term decomposition of a partial sum")
    _add_common(dc)
    dc.add_argument("--spec", required=True)
    dc.add_argument("--free-axes", dest="free_axes", type=int, nargs=2, required=True)
    dc.add_argument("--n", type=int, nargs="+", required=True)

    cv = sub.add_parser("converge", help="convergence suite")
    _add_common(cv)
    cv.add_argument("--trials", type=int, default=None)
    cv.add_argument("--levels", type=int, nargs="+", default=None)
    cv.add_argument("--Jk", dest="jk", type=int, nargs="+", default=None)
    cv.add_argument("--free-cap", dest="free_cap", type=int, default=None)

    vf = sub.add_parser("verify", help="identity suites")
    _add_common(vf)
    vf.add_argument("target", choices=("abel", "identities"))
    vf.add_argument("--nu", type=int, default=3)
    vf.add_argument("--n", type=int, default=4)
    vf.add_argument("--trials", type=int, default=100)

    mxs = sub.add_parser("maximal-suite", help="maximal-ratio suite with cap doubling")
    _add_common(mxs)
    mxs.add_argument("--trials", type=int, default=None)
    mxs.add_argument("--Jk", dest="jk", type=int, nargs="+", default=None)
    mxs.add_argument("--q", type=float, default=None)
    mxs.add_argument("--cap-schedule", dest="cap_schedule", type=int, nargs="+", default=None)
    mxs.add_argument("--weight", default=None)

    rp = sub.add_parser("report", help="re-emit a JSON report (optionally as CSV)")
    _add_common(rp)
    rp.add_argument("--in", dest="infile", required=True)

    return parser


def _cmd_gen(args) -> int:
    cfg = ExperimentConfig()
    if args.config:
        cfg = config_from_mapping(parse_config_file(args.config))
    sample = SampleJk(args.dimension, tuple(args.jk)) if args.jk else None
    spectrum = gen_test_function(
        args.family,
        bandwidth=cfg.bandwidth if cfg.bandwidth is not None else args.bandwidth,
        dimension=args.dimension,
        seed=args.seed if args.seed is not None else cfg.seed,
        beta=args.beta,
        eps=args.eps,
        mode=tuple(args.mode) if args.mode else (1,) * args.dimension,
        sample=sample,
        normalize=not args.no_normalize,
    )
    doc = spectrum_to_dict(spectrum)
    if args.out:
        save_json(doc, args.out)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(dumps(doc))
    return 0


def _cmd_partial_sum(args) -> int:
    spectrum = spectrum_from_dict(load_json(args.spec))
    res = args.grid if args.grid else max(4 * b for b in spectrum.bandwidth)
    grid = TorusGrid((res,) * spectrum.dimension)
    f = partial_sum(spectrum, tuple(args.n), grid)
    if args.fmt == "csv":
        fixed = {}
        pairs = args.fix or []
        if len(pairs) % 2:
            raise LacsumError("--fix wants axis/index pairs")
        for axis, pos in zip(pairs[::2], pairs[1::2]):
            fixed[axis] = pos
        if spectrum.dimension > 2 and len(fixed) < spectrum.dimension - 2:
            fixed.update(
                {
                    p + 1: 0
                    for p in range(spectrum.dimension)
                    if (p + 1) not in fixed and spectrum.dimension - len(fixed) > 2
                }
            )
        names, rows = gridfunction_slice_rows(f, fixed)
        if not args.out:
            raise LacsumError("--out required for CSV output")
        save_csv(names, rows, args.out)
        print(f"wrote {args.out}")
        return 0
    doc = gridfunction_to_dict(f)
    if args.out:
        save_json(doc, args.out)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(dumps(doc))
    return 0


def _cmd_maximal(args) -> int:
    spectrum = spectrum_from_dict(load_json(args.spec))
    n = spectrum.dimension
    sample = SampleJk(n, tuple(args.jk))
    family = make_lacunary(args.q, args.lambda_count)
    space = JkIndexSpace(
        sample,
        tuple(family for _ in sample.lacunary_axes),
        tuple(args.free_cap for _ in sample.free_axes),
    )
    res = args.grid if args.grid else max(4 * b for b in spectrum.bandwidth)
    grid = TorusGrid((res,) * n)
    weight = weight_from_kind(args.weight, sample)
    report = weighted_maximal(spectrum, space, weight, grid, record_argmax=False)
    table = weak_type_table(spectrum, space, weight, grid)
    doc = {
        "schema": "lacsum.maximal/1",
        "space": report.space,
        "weight": report.weight,
        "m_l2": report.m_l2,
        "input_l2": report.input_l2,
        "ratio": report.ratio,
        "weak_type": {
            "alphas": list(table.alphas),
            "ratios": list(table.ratios),
            "sigma": table.sigma,
            "max_ratio": table.max_ratio,
        },
    }
    if args.out:
        save_json(doc, args.out)
        rows = [
            {"alpha": float(a), "ratio": float(r)}
            for a, r in zip(table.alphas, table.ratios)
        ]
        save_csv(["alpha", "ratio"], rows, Path(args.out).with_suffix(".csv"))
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(dumps(doc))
    return 0


def _cmd_decompose(args) -> int:
    f_spectrum = spectrum_from_dict(load_json(args.spec))
    n = f_spectrum.dimension
    res = args.grid if args.grid else max(4 * b for b in f_spectrum.bandwidth)
    grid = TorusGrid((res,) * n)
    g_spectrum = coefficient_transfer(f_spectrum, tuple(args.free_axes))
    result = decompose_free_pair(g_spectrum, tuple(args.n), tuple(args.free_axes), grid)
    doc = {
        "schema": "lacsum.decompose/1",
        "index": list(result.index),
        "free_axes": list(result.free_axes),
        "diagonal_cut": result.diagonal_cut,
        "term_l2": list(result.term_l2()),
        "reference_l2": grid_l2(result.reference),
        "max_reassembly_error": result.max_error,
    }
    if args.out:
        save_json(doc, args.out)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(dumps(doc))
    return 0 if result.max_error <= 1e-10 else 1


def _cmd_verify(args) -> int:
    if args.target == "abel":
        rng = np.random.default_rng(args.seed if args.seed is not None else 7)
        worst = 0.0
        for _ in range(args.trials):
            shape = tuple(int(v) + 1 for v in rng.integers(2, args.n + 1, size=args.nu))
            a = rng.standard_normal(shape)
            b = rng.uniform(0.1, 2.0, size=max(shape))
            n_idx = tuple(s - 1 for s in shape)
            worst = max(worst, abel_identity_check(a, b, n_idx).difference)
        doc = {
            "schema": "lacsum.verify/1",
            "target": "abel",
            "trials": args.trials,
            "max_abs_difference": worst,
        }
        if args.out:
            save_json(doc, args.out)
            print(f"wrote {args.out}")
        else:
            sys.stdout.write(dumps(doc))
        return 0 if worst <= 1e-10 else 1
    config = _config_from_args(args, "identity")
    report = run_identity_suite(config)
    _emit(report, args.out, args.fmt)
    return 0 if report.passed else 1


def _cmd_suite(args, runner, suite) -> int:
    config = _config_from_args(args, suite)
    report = runner(config)
    _emit(report, args.out, args.fmt)
    return 0 if report.passed else 1


def _cmd_report(args) -> int:
    doc = load_json(args.infile)
    if args.fmt == "csv":
        cases = doc.get("results", {}).get("cases") or doc.get("results", {}).get("checks")
        if isinstance(cases, dict):
            rows = [{"check": k, **v} for k, v in cases.items()]
        else:
            rows = cases or []
        if not rows:
            raise LacsumError("report holds no tabular cases")
        names = list(rows[0].keys())
        if not args.out:
            raise LacsumError("--out required for CSV output")
        save_csv(names, rows, args.out)
        print(f"wrote {args.out}")
        return 0
    if args.out:
        save_json(doc, args.out)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(dumps(doc))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "partial-sum":
            return _cmd_partial_sum(args)
        if args.command == "maximal":
            return _cmd_maximal(args)
        if args.command == "decompose":
            return _cmd_decompose(args)
        if args.command == "converge":
            return _cmd_suite(args, run_convergence_suite, "convergence")
        if args.command == "maximal-suite":
            return _cmd_suite(args, run_maximal_suite, "maximal")
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "report":
            return _cmd_report(args)
        parser.error(f"unknown command {args.command!r}")
    except LacsumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
