"""Command-line front end.

Subcommands: validate, betti, logdet, torsion, auto-torsion, mahler, combine,
growth.  Exit status 0 on success, 2 on validation failure, 3 on a numeric
precondition failure (for example an indefinite Laplacian).  Reports are
byte-deterministic for a fixed configuration and thread count 1; the only
environment variable honored is ``L2TORSION_THREADS``.

The CLI owns the worker pool: modules receive a parallel-map callable and
stay pure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import engine, formats
from .abelian import l2_torsion_abelian, mahler_log
from .combine import evaluate_decomposition
from .complexes import laplacian, validate_complex
from .errors import NumericPreconditionError, ValidationFailure
from .formats import fmt_float, render_report, report_header
from .growth import growth_series
from .mapping_torus import DEFAULT_T_MULTIPLIER, MappingTorusSpec
from .presentation import PresentationError
from .towers import validate_automorphism, validate_tower

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3


def _thread_default() -> int:
    raw = os.environ.get("L2TORSION_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _make_pmap(threads: int):
    if threads <= 1:
        return map
    pool = ThreadPoolExecutor(max_workers=threads)

    def pmap(fn, items):
        return pool.map(fn, items)

    return pmap


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _require_files(*paths: str | None) -> None:
    for p in paths:
        if p is not None and not Path(p).is_file():
            raise ValidationFailure(f"input file not found: {p}")


def _policy(args) -> engine.CutoffPolicy:
    if args.cutoff_floor <= 0 or args.cutoff_scale <= 0:
        raise ValidationFailure("cutoff knobs must be positive")
    return engine.CutoffPolicy(floor=args.cutoff_floor, scale=args.cutoff_scale)


def _config_of(args, keys) -> dict:
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def cmd_validate(args) -> int:
    _require_files(args.presentation, args.tower, args.complex, args.automorphism)
    lines: list[str] = []
    ok = True
    if args.complex:
        complex_ = formats.load_complex(args.complex)
        presentation = complex_.presentation
    elif args.presentation:
        presentation = formats.load_presentation(args.presentation)
        complex_ = None
    else:
        raise ValidationFailure("validate needs --complex or --presentation")
    if presentation.warnings:
        lines.extend(f"warning: {w}" for w in presentation.warnings)
    tower = None
    if args.tower:
        tower = formats.load_tower(args.tower, presentation)
        report = validate_tower(presentation, tower)
        lines.append(report.summary())
        ok &= report.passed
    if complex_ is not None and tower is not None:
        report = validate_complex(complex_, tower)
        lines.append(report.summary())
        ok &= report.passed
    if args.automorphism:
        if tower is None:
            raise ValidationFailure("automorphism validation needs --tower")
        spec, _ = formats.load_automorphism(
            args.automorphism, presentation, complex_.ranks if complex_ else None
        )
        report = validate_automorphism(presentation, spec, tower)
        status = "pass" if report.passed else "FAIL"
        lines.append(f"automorphism: {status}")
        for check in report.checks:
            for message in check.messages:
                lines.append(f"  level {check.label}: {message}")
        ok &= report.passed
    header = report_header("validate", _config_of(args, ("presentation", "tower", "complex", "automorphism")))
    _emit(render_report(header, lines), args.output)
    return EXIT_OK if ok else EXIT_VALIDATION


def _load_complex_and_tower(args):
    _require_files(args.complex, args.tower)
    complex_ = formats.load_complex(args.complex)
    tower = formats.load_tower(args.tower, complex_.presentation)
    report = validate_tower(complex_.presentation, tower)
    if not report.passed:
        raise ValidationFailure("tower validation failed:\n" + report.summary())
    dd = validate_complex(complex_, tower)
    if not dd.passed:
        failure = dd.first_failure()
        raise ValidationFailure(
            f"complex validation failed at level {failure.level_label}, degree {failure.degree}"
        )
    return complex_, tower


def cmd_betti(args) -> int:
    complex_, tower = _load_complex_and_tower(args)
    pmap = _make_pmap(args.threads)
    degrees = range(complex_.dim + 1) if args.degree is None else [args.degree]
    body = ["level,index,degree,kernel_dim,value,exact"]
    footer = []
    for p in degrees:
        estimate = engine.betti(complex_, tower, p, policy=_policy(args), pmap=pmap)
        for lv in estimate.levels:
            body.append(f"{lv.label},{lv.index},{p},{lv.kernel_dim},{lv.value},{int(lv.exact)}")
        footer.append(
            f"# degree {p}: extrapolated {estimate.extrapolated}, dispersion {fmt_float(estimate.dispersion)}"
        )
    header = report_header("betti", _config_of(args, ("complex", "tower", "degree", "cutoff_floor", "cutoff_scale")))
    _emit(render_report(header, body + footer), args.output)
    return EXIT_OK


def cmd_logdet(args) -> int:
    complex_, tower = _load_complex_and_tower(args)
    pmap = _make_pmap(args.threads)
    delta = laplacian(complex_, args.degree)
    estimate = engine.fk_log_det(delta, tower, policy=_policy(args), pmap=pmap)
    body = ["level,index,value,discarded_count,kernel_dim,flagged"]
    for lv in estimate.levels:
        kdim = "" if lv.kernel_dim is None else lv.kernel_dim
        body.append(
            f"{lv.label},{lv.index},{fmt_float(lv.value)},{lv.discarded},{kdim},{int(lv.flagged)}"
        )
    body.append(f"# headline {fmt_float(estimate.headline)}, dispersion {fmt_float(estimate.dispersion)}")
    header = report_header("logdet", _config_of(args, ("complex", "tower", "degree", "cutoff_floor", "cutoff_scale")))
    _emit(render_report(header, body), args.output)
    return EXIT_OK


def _torsion_body(estimate) -> list[str]:
    body = []
    body.append("level,index,rho")
    for label, index, value in estimate.per_level:
        body.append(f"{label},{index},{fmt_float(value)}")
    body.append(f"# headline {fmt_float(estimate.value)} provenance {estimate.provenance}")
    for p in sorted(estimate.degree_breakdown):
        est = estimate.degree_breakdown[p]
        body.append(f"# degree {p}: logdet {fmt_float(est.headline)}, dispersion {fmt_float(est.dispersion)}")
    for key in sorted(estimate.diagnostics):
        value = estimate.diagnostics[key]
        if key in ("not_l2_acyclic", "kernel_mismatch_levels", "t_multiplier", "grid", "error_proxy"):
            body.append(f"# diagnostic {key}: {value}")
    return body


def cmd_torsion(args) -> int:
    complex_, tower = _load_complex_and_tower(args) if not args.abelian else (None, None)
    if args.abelian:
        _require_files(args.complex)
        complex_ = formats.load_complex(args.complex)
        estimate = l2_torsion_abelian(complex_, tol=args.tolerance)
        body = [f"# headline {fmt_float(estimate.value)} provenance {estimate.provenance}"]
        for key in ("grid", "error_proxy", "not_det_l2_acyclic", "zero_determinant_degrees"):
            if key in estimate.diagnostics:
                body.append(f"# diagnostic {key}: {estimate.diagnostics[key]}")
    else:
        pmap = _make_pmap(args.threads)
        estimate = engine.l2_torsion(complex_, tower, policy=_policy(args), pmap=pmap)
        body = _torsion_body(estimate)
    header = report_header(
        "torsion",
        _config_of(args, ("complex", "tower", "abelian", "cutoff_floor", "cutoff_scale", "tolerance")),
    )
    _emit(render_report(header, body), args.output)
    return EXIT_OK


def cmd_auto_torsion(args) -> int:
    complex_, tower = _load_complex_and_tower(args)
    _require_files(args.automorphism)
    phi, chain_map = formats.load_automorphism(args.automorphism, complex_.presentation, complex_.ranks)
    if chain_map is None:
        from .ring import RingMatrix

        chain_map = tuple(RingMatrix.identity(r) for r in complex_.ranks)
    if args.m < 1:
        raise ValidationFailure("t-order multiplier must be >= 1")
    spec = MappingTorusSpec(complex_, phi, chain_map)
    pmap = _make_pmap(args.threads)
    estimate = engine.rho_of_automorphism(spec, tower, m=args.m, policy=_policy(args), pmap=pmap)
    header = report_header(
        "auto-torsion",
        _config_of(args, ("complex", "tower", "automorphism", "m", "cutoff_floor", "cutoff_scale")),
    )
    _emit(render_report(header, _torsion_body(estimate)), args.output)
    return EXIT_OK


def cmd_mahler(args) -> int:
    _require_files(args.poly)
    if args.grid < 8:
        raise ValidationFailure("grid must be at least 8")
    poly = formats.load_laurent(args.poly)
    result = mahler_log(
        poly, grid=args.grid, tol=args.tolerance, method=args.method, samples=args.samples
    )
    header = report_header("mahler", _config_of(args, ("poly", "grid", "tolerance", "method", "samples")))
    body = [
        f"value {fmt_float(result.value)}",
        f"grid {result.grid}",
        f"method {result.method}",
        f"error_proxy {fmt_float(result.error_proxy)}",
    ]
    _emit(render_report(header, body), args.output)
    return EXIT_OK


def cmd_combine(args) -> int:
    _require_files(args.spec)
    spec = formats.load_decomposition(args.spec)
    evaluation = evaluate_decomposition(spec)
    header = report_header("combine", _config_of(args, ("spec",)))
    body = [
        f"value {fmt_float(evaluation.value.value)}",
        f"exact {evaluation.value.describe()}",
        f"provenance {evaluation.value.provenance}",
        "trace:",
        evaluation.format_trace(),
    ]
    if args.json_trace:
        body.append(json.dumps(evaluation.trace_json(), indent=2, sort_keys=True))
    _emit(render_report(header, body), args.output)
    return EXIT_OK


def cmd_growth(args) -> int:
    complex_, tower = _load_complex_and_tower(args)
    pmap = _make_pmap(args.threads)
    degrees = None
    if args.degrees:
        degrees = tuple(int(d) for d in args.degrees.split(","))
    report = growth_series(
        complex_, tower, degrees=degrees, include_engine=not args.no_engine, pmap=pmap
    )
    header = report_header("growth", _config_of(args, ("complex", "tower", "degrees", "no_engine")))
    _emit(render_report(header, report.csv_rows()), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="l2torsion",
        description="Finite-quotient approximation of L2-torsion and friends",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, tower=True):
        p.add_argument("--complex", required=True, help="complex JSON file")
        if tower:
            p.add_argument("--tower", help="tower JSON file")
        p.add_argument("--threads", type=int, default=_thread_default())
        p.add_argument("--output", help="write the report here instead of stdout")
        p.add_argument("--cutoff-floor", type=float, default=engine.CutoffPolicy.floor)
        p.add_argument("--cutoff-scale", type=float, default=engine.CutoffPolicy.scale)

    p = sub.add_parser("validate", help="validate presentation/tower/complex/automorphism")
    p.add_argument("--presentation")
    p.add_argument("--tower")
    p.add_argument("--complex")
    p.add_argument("--automorphism")
    p.add_argument("--output")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("betti", help="normalized kernel dimensions across the tower")
    common(p)
    p.add_argument("--degree", type=int, default=None)
    p.set_defaults(fn=cmd_betti)

    p = sub.add_parser("logdet", help="Fuglede-Kadison log-determinant of a Laplacian")
    common(p)
    p.add_argument("--degree", type=int, required=True)
    p.set_defaults(fn=cmd_logdet)

    p = sub.add_parser("torsion", help="L2-torsion of a complex")
    common(p)
    p.add_argument("--abelian", action="store_true", help="use the exact abelian route")
    p.add_argument("--tolerance", type=float, default=1e-7)
    p.set_defaults(fn=cmd_torsion)

    p = sub.add_parser("auto-torsion", help="torsion of a twisted chain self-map")
    common(p)
    p.add_argument("--automorphism", required=True)
    p.add_argument("--m", type=int, default=DEFAULT_T_MULTIPLIER, help="t-order multiplier")
    p.set_defaults(fn=cmd_auto_torsion)

    p = sub.add_parser("mahler", help="logarithmic Mahler measure of a Laurent polynomial")
    p.add_argument("--poly", required=True)
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--method", choices=("quadrature", "monte-carlo"), default="quadrature")
    p.add_argument("--samples", type=int, default=10**5)
    p.add_argument("--output")
    p.set_defaults(fn=cmd_mahler)

    p = sub.add_parser("combine", help="evaluate a decomposition spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--json-trace", action="store_true")
    p.add_argument("--output")
    p.set_defaults(fn=cmd_combine)

    p = sub.add_parser("growth", help="homology torsion growth statistics")
    common(p)
    p.add_argument("--degrees", help="comma-separated degrees (default: all)")
    p.add_argument("--no-engine", action="store_true", help="skip the engine comparison column")
    p.set_defaults(fn=cmd_growth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "tower", None) is None and args.command in ("betti", "logdet", "auto-torsion", "growth"):
        parser.error(f"{args.command} requires --tower")
    if args.command == "torsion" and not args.abelian and args.tower is None:
        parser.error("torsion requires --tower unless --abelian is given")
    try:
        return args.fn(args)
    except (ValidationFailure, PresentationError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericPreconditionError as exc:
        print(f"numeric precondition failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
