"""Command-line front end.

Subcommands: shearer-check, boundary, gap, mt-run, mt-estimate, wdag-sum,
criterion, beyond, lattice-gap, selftest. Exit codes: 0 success, 1 verdict
rejected (output still valid), 2 input error, 3 cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import acceptance, jsonio
from .criterion import (
    IntersectionSetting,
    beyond_shearer_verdict,
    intersection_lll_verdict,
    lattice_gap_q,
)
from .graphs import InputError, base_graph
from .jsonio import emit_report, fraction_str, parse_fraction
from .lattices import builtin_lattice
from .mt_engine import (
    SELECTION_RULES,
    estimate_expected_steps,
    measure_pair_intersections,
    run_mt,
)
from .shearer import (
    CapExceeded,
    boundary_scale,
    expected_resample_bound,
    in_shearer_bound,
    l1_gap,
)
from .wdag import weight_sums

EXIT_OK = 0
EXIT_REJECT = 1
EXIT_INPUT = 2
EXIT_CAP = 3


def _read_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except FileNotFoundError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: line {exc.lineno}") from exc


def _graph(args):
    bipartite = getattr(args, "bipartite", None)
    if args.graph and bipartite:
        raise InputError("give either --graph or --bipartite, not both")
    if bipartite:
        return base_graph(jsonio.load_bipartite(_read_json(bipartite)))
    if not args.graph:
        raise InputError("a --graph or --bipartite input is required")
    return jsonio.load_graph(_read_json(args.graph))


def _pvec(args):
    return jsonio.load_probability_vector(args.p)


def _emit(args, payload, fmt=None):
    text = emit_report(payload, args.out, fmt or args.format)
    if not args.out:
        sys.stdout.write(text)


def cmd_shearer_check(args) -> int:
    g = _graph(args)
    report = in_shearer_bound(g, _pvec(args))
    payload = jsonio.shearer_report_to_dict(report)
    if report.in_bound:
        payload["expected_resample_bound"] = fraction_str(
            expected_resample_bound(g, _pvec(args))
        )
    _emit(args, payload)
    return EXIT_OK if report.in_bound else EXIT_REJECT


def cmd_boundary(args) -> int:
    g = _graph(args)
    scale = boundary_scale(g, _pvec(args), parse_fraction(args.resolution))
    _emit(
        args,
        {
            "lo": fraction_str(scale.lo),
            "hi": fraction_str(scale.hi),
            "clamped": scale.clamped,
        },
    )
    return EXIT_OK


def cmd_gap(args) -> int:
    g = _graph(args)
    gap = l1_gap(g, _pvec(args), parse_fraction(args.resolution))
    _emit(args, jsonio.gap_to_dict(gap))
    return EXIT_OK


def cmd_mt_run(args) -> int:
    system = jsonio.load_event_system(_read_json(args.system))
    stats = run_mt(system, args.rule, args.seed, args.step_cap)
    _emit(args, jsonio.run_stats_to_dict(stats))
    return EXIT_OK


def cmd_mt_estimate(args) -> int:
    system = jsonio.load_event_system(_read_json(args.system))
    est = estimate_expected_steps(
        system, args.rule, args.trials, args.seed, args.step_cap
    )
    if args.format == "csv":
        _emit(args, jsonio.estimate_to_rows(est, args.seed), fmt="csv")
    else:
        _emit(
            args,
            {
                "mean": est.mean,
                "stderr": est.stderr,
                "trials": est.trials,
                "truncated_runs": est.truncated_runs,
            },
        )
    return EXIT_OK


def cmd_wdag_sum(args) -> int:
    g = _graph(args)
    sums = weight_sums(g, _pvec(args), args.node_cap)
    if args.format == "csv":
        rows = [["size", "sum", "cumulative"]]
        acc = Fraction(0)
        for size in sorted(sums.by_size):
            acc += sums.by_size[size]
            rows.append([size, fraction_str(sums.by_size[size]), fraction_str(acc)])
        _emit(args, rows, fmt="csv")
    else:
        _emit(
            args,
            {
                "by_size": {str(k): fraction_str(v) for k, v in sums.by_size.items()},
                "cumulative": fraction_str(sums.cumulative),
                "node_cap": sums.node_cap,
            },
        )
    return EXIT_OK


def cmd_criterion(args) -> int:
    g = _graph(args)
    p = _pvec(args)
    matching = jsonio.load_matching(args.matching)
    if args.delta:
        values = [parse_fraction(x) for x in args.delta.split(",")]
        pairs = sorted(matching.pairs)
        if len(values) != len(pairs):
            raise InputError("one delta per matching pair required")
        delta = dict(zip(pairs, values))
        source = "user"
    elif args.system:
        system = jsonio.load_event_system(_read_json(args.system))
        inter = measure_pair_intersections(system)
        delta = {pair: inter[pair] for pair in matching.pairs}
        source = "measured"
    else:
        raise InputError("need --delta or --system to bound pair intersections")
    setting = IntersectionSetting(g, p, matching, delta)
    verdict = intersection_lll_verdict(setting, parse_fraction(args.eps), source)
    _emit(
        args,
        {
            "accepted": verdict.accepted,
            "bound_on_expected_steps": verdict.bound_on_et,
            "evidence": verdict.evidence,
            "details": verdict.details,
        },
    )
    return EXIT_OK if verdict.accepted else EXIT_REJECT


def cmd_beyond(args) -> int:
    g = _graph(args)
    verdict = beyond_shearer_verdict(
        g,
        _pvec(args),
        parse_fraction(args.eps),
        gap_resolution=parse_fraction(args.resolution) if args.resolution else None,
    )
    _emit(
        args,
        {
            "accepted": verdict.accepted,
            "bound_on_expected_steps": verdict.bound_on_et,
            "evidence": verdict.evidence,
            "details": verdict.details,
        },
    )
    return EXIT_OK if verdict.accepted else EXIT_REJECT


def cmd_lattice_gap(args) -> int:
    spec = builtin_lattice(args.lattice)
    expanded, _ = spec.expanded()
    report = lattice_gap_q(expanded, spec.unit, parse_fraction(args.pa))
    _emit(
        args,
        {
            "lattice": args.lattice,
            "q_lower": fraction_str(report.q.lo),
            "q_upper": fraction_str(report.q.hi),
            "q_float": float((report.q.lo + report.q.hi) / 2),
            "unit_diameter": report.unit_diameter,
            "unit_vertices": report.unit_vertices,
            "lattice_max_degree": report.lattice_max_degree,
            "overlap_functional_lower": float(report.overlap_functional.lo),
            "note": report.note,
        },
    )
    return EXIT_OK


def cmd_selftest(args) -> int:
    results = acceptance.run_all()
    all_ok = True
    for res in results:
        flag = "PASS" if res.passed else "FAIL"
        sys.stdout.write(
            f"[{flag}] criterion {res.criterion} ({res.elapsed:.1f}s): {res.detail}\n"
        )
        all_ok = all_ok and res.passed
    sys.stdout.write("selftest: " + ("all passed\n" if all_ok else "FAILURES\n"))
    return EXIT_OK if all_ok else EXIT_REJECT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lll-workbench",
        description="Exact Shearer-region computation and resampling workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, graph=False, pvec=False, system=False):
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", default="json", choices=("json", "csv"))
        if graph:
            p.add_argument("--graph", default=None, help="dependency graph JSON path")
            p.add_argument(
                "--bipartite", default=None,
                help="event-variable graph JSON path (dependency graph derived)",
            )
        if pvec:
            p.add_argument("--p", required=True, help="probabilities: '1/4,1/4' or JSON")
        if system:
            p.add_argument("--system", required=True, help="event system JSON path")

    p = sub.add_parser("shearer-check", help="membership in the Shearer region")
    common(p, graph=True, pvec=True)
    p.set_defaults(fn=cmd_shearer_check)

    p = sub.add_parser("boundary", help="bisection bracket of the boundary scale")
    common(p, graph=True, pvec=True)
    p.add_argument("--resolution", default="1/1024")
    p.set_defaults(fn=cmd_boundary)

    p = sub.add_parser("gap", help="certified bounds on the L1 gap")
    common(p, graph=True, pvec=True)
    p.add_argument("--resolution", default="1/256")
    p.set_defaults(fn=cmd_gap)

    p = sub.add_parser("mt-run", help="one seeded resampling run")
    common(p, system=True)
    p.add_argument("--rule", default="lowest-index", choices=SELECTION_RULES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step-cap", type=int, default=1_000_000)
    p.set_defaults(fn=cmd_mt_run)

    p = sub.add_parser("mt-estimate", help="mean resample count over seeded runs")
    common(p, system=True)
    p.add_argument("--rule", default="lowest-index", choices=SELECTION_RULES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--step-cap", type=int, default=1_000_000)
    p.set_defaults(fn=cmd_mt_estimate)

    p = sub.add_parser("wdag-sum", help="exact pwdag weight sums by size")
    common(p, graph=True, pvec=True)
    p.add_argument("--node-cap", type=int, default=6)
    p.set_defaults(fn=cmd_wdag_sum)

    p = sub.add_parser("criterion", help="intersection-aware convergence verdict")
    common(p, graph=True, pvec=True)
    p.add_argument("--matching", required=True, help="matched pairs: '1-2,3-4'")
    p.add_argument("--delta", default=None, help="per-pair floors: '1/8,1/8'")
    p.add_argument("--system", default=None, help="measure floors from this system")
    p.add_argument("--eps", required=True)
    p.set_defaults(fn=cmd_criterion)

    p = sub.add_parser("beyond", help="beyond-region verdict from cycle slack")
    common(p, graph=True, pvec=True)
    p.add_argument("--eps", required=True)
    p.add_argument("--resolution", default=None, help="gap search resolution")
    p.set_defaults(fn=cmd_beyond)

    p = sub.add_parser("lattice-gap", help="gap bound for a built-in lattice")
    common(p)
    p.add_argument("--lattice", required=True, choices=("square", "hexagonal", "cubic"))
    p.add_argument("--pa", required=True, help="symmetric boundary probability")
    p.set_defaults(fn=cmd_lattice_gap)

    p = sub.add_parser("selftest", help="run the acceptance checks")
    common(p)
    p.set_defaults(fn=cmd_selftest)

    return parser


def dispatch(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CapExceeded as exc:
        sys.stderr.write(f"cap exceeded: {exc}\n")
        return EXIT_CAP
    except InputError as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_INPUT


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
