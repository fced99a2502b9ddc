"""Command line: repair, synthesize, check, simulate, metrics.

Exit codes: 0 success, 2 unreadable or malformed input, 3 precondition
failure (or unsound net under ``check --strict``), 4 resource bound hit.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

from . import petri_net as pn
from .conformance import precision
from .event_log import EventLog, filter_top_k, log_stats, read_log, serialize_traces_text
from .exceptions import ParseError, PreconditionError, ResourceError
from .pnml import read_pnml, serialize_pnml
from .regions import DEFAULT_ESSP_BUDGET, DEFAULT_SYNTHESIS_BUDGET, synthesize
from .repair import repair
from .transition_system import build_prefix_tree, minimize
from .transition_system import to_dot as ts_to_dot

EXIT_OK, EXIT_PARSE, EXIT_PRECONDITION, EXIT_RESOURCE = 0, 2, 3, 4

log = logging.getLogger("fcrepair")


def _positive(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {value}")
    return value


def _load_log(path, top_k=None) -> EventLog:
    data = read_log(path)
    return filter_top_k(data, top_k) if top_k else data


def _write(path, data: bytes):
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True)
    path.write_bytes(data)


def _fmt(value):
    if value is None:
        return "undefined"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def _summary_rows(stats, sys, summary):
    rows = [
        ("event_occurrences", stats["event_occurrences"]),
        ("trace_occurrences", stats["trace_occurrences"]),
        ("unique_events", stats["unique_events"]),
        ("places", len(sys.net.places)),
        ("transitions", len(sys.net.transitions)),
        ("arcs", len(sys.net.arcs)),
    ]
    if summary is not None:
        rows.extend(summary.as_dict().items())
    return rows


def cmd_repair(args) -> int:
    data = _load_log(args.log, args.top_k)
    net_sys = read_pnml(args.net)
    repaired, report = repair(
        net_sys,
        data,
        args.essp_budget,
        args.max_states,
        metrics=not args.no_metrics,
        theorem4_check=args.theorem4_check,
    )
    out = Path(args.output)
    _write(out, serialize_pnml(repaired))
    report_path = Path(args.report) if args.report else out.with_suffix(".report.jsonl")
    _write(report_path, report.to_jsonl().encode("utf-8"))
    if args.dot_out:
        d = Path(args.dot_out)
        _write(d / "log_ts.dot", ts_to_dot(minimize(build_prefix_tree(data))).encode("utf-8"))
        _write(d / "input_net.dot", pn.to_dot(net_sys).encode("utf-8"))
        _write(d / "repaired_net.dot", pn.to_dot(repaired).encode("utf-8"))
    sys.stdout.write(report.summary(include_time=True))
    return EXIT_OK


def cmd_synthesize(args) -> int:
    start = time.perf_counter()
    data = _load_log(args.log, args.top_k)
    ts = minimize(build_prefix_tree(data))
    net_sys = synthesize(ts, args.budget)
    _write(args.output, serialize_pnml(net_sys))
    if args.dot_out:
        d = Path(args.dot_out)
        _write(d / "log_ts.dot", ts_to_dot(ts).encode("utf-8"))
        _write(d / "synthesized_net.dot", pn.to_dot(net_sys).encode("utf-8"))
    summary = None
    if not args.no_metrics:
        summary = precision(net_sys, data, args.max_states)
    for key, value in _summary_rows(log_stats(data), net_sys, summary):
        print(f"{key}={_fmt(value)}")
    print(f"ts_states={len(ts.states)}")
    print(f"time_ms={(time.perf_counter() - start) * 1000:.1f}")
    return EXIT_OK


def cmd_check(args) -> int:
    net_sys = read_pnml(args.net)
    net = net_sys.net
    fc = pn.is_free_choice(net)
    wf = pn.is_workflow_net(net)
    print(f"places={len(net.places)}")
    print(f"transitions={len(net.transitions)}")
    print(f"free_choice={fc.ok}")
    for v in fc.violations:
        print(f"  violation: {v}")
    print(f"workflow_net={wf.ok}")
    for d in wf.diagnostics:
        print(f"  diagnostic: {d}")
    sound = None
    if wf.ok:
        rep = pn.check_soundness(net_sys, args.max_states)
        sound = rep.is_sound
        print(f"safe={rep.safe}")
        print(f"sound={rep.is_sound}")
        print(f"every_marking_reaches_a_listed_final={rep.can_reach_some_final}")
        for m in rep.improper_completions:
            print(f"  improper completion: {m!r}")
        for m in rep.unreachable_final_from[:10]:
            print(f"  cannot reach [{wf.sink}] from: {m!r}")
        for t in rep.dead_transitions:
            print(f"  dead transition: {t}")
    else:
        rg = pn.reachability_graph(net_sys, args.max_states)
        print(f"safe={rg.safe}")
        print("sound=n/a (not a workflow net)")
    if args.strict and not sound:
        return EXIT_PRECONDITION
    return EXIT_OK


def cmd_simulate(args) -> int:
    net_sys = read_pnml(args.net)
    traces = pn.simulate(net_sys, args.n_traces, seed=args.seed, max_steps=args.max_steps)
    data = serialize_traces_text(EventLog(traces))
    if args.output:
        _write(args.output, data)
    else:
        sys.stdout.buffer.write(data)
    return EXIT_OK


def cmd_metrics(args) -> int:
    start = time.perf_counter()
    data = _load_log(args.log, args.top_k)
    net_sys = read_pnml(args.net)
    summary = precision(net_sys, data, args.max_states)
    elapsed = (time.perf_counter() - start) * 1000
    rows = _summary_rows(log_stats(data), net_sys, summary)
    for key, value in rows:
        print(f"{key}={_fmt(value)}")
    print(f"time_ms={elapsed:.1f}")
    print()
    print(f"{'Log':<24} {'#Events':>8} {'#Traces':>8} {'#Act.':>6} {'Size':>6} {'Fitness':>8} {'Prec.':>8} {'Time (ms)':>10}")
    stats = log_stats(data)
    prec = "undefined" if summary.precision is None else f"{summary.precision:.3f}"
    print(
        f"{os.path.basename(str(args.log)):<24} {stats['event_occurrences']:>8} {stats['trace_occurrences']:>8} "
        f"{stats['unique_events']:>6} {net_sys.net.size:>6} {summary.replay_fitness:>8.3f} {prec:>8} {elapsed:>10.1f}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fcrepair", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv region-search trace")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, top_k=True):
        if top_k:
            p.add_argument("--top-k", type=_positive, help="keep only the k most frequent distinct traces")
        p.add_argument("--max-states", type=_positive, default=pn.DEFAULT_MAX_STATES)

    p = sub.add_parser("repair", help="add constraint places to a free-choice workflow net")
    p.add_argument("log")
    p.add_argument("net")
    p.add_argument("-o", "--output", required=True, help="repaired PNML")
    p.add_argument("--report", help="record stream (default: <output>.report.jsonl)")
    p.add_argument("--essp-budget", type=_positive, default=DEFAULT_ESSP_BUDGET)
    p.add_argument("--theorem4-check", action="store_true", help="predict soundness of the repaired net")
    p.add_argument("--no-metrics", action="store_true")
    p.add_argument("--dot-out", metavar="DIR")
    common(p)
    p.set_defaults(func=cmd_repair)

    p = sub.add_parser("synthesize", help="net with one place per minimal region of the log's TS")
    p.add_argument("log")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--budget", type=_positive, default=DEFAULT_SYNTHESIS_BUDGET)
    p.add_argument("--no-metrics", action="store_true")
    p.add_argument("--dot-out", metavar="DIR")
    common(p)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("check", help="free-choice, workflow, safeness and soundness checks")
    p.add_argument("net")
    p.add_argument("--strict", action="store_true", help="exit 3 unless the net is a sound workflow net")
    common(p, top_k=False)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="random complete runs written as a trace log")
    p.add_argument("net")
    p.add_argument("-n", "--n-traces", type=_positive, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steps", type=_positive, default=pn.DEFAULT_MAX_STEPS)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metrics", help="fitness, entropy precision and size of a net against a log")
    p.add_argument("log")
    p.add_argument("net")
    common(p)
    p.set_defaults(func=cmd_metrics)
    return parser


def _configure_logging(verbosity: int):
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    for h in [h for h in log.handlers if getattr(h, "_fcrepair_cli", False)]:
        log.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))
    handler._fcrepair_cli = True
    log.addHandler(handler)
    log.setLevel(level)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return args.func(args)
    except (ParseError, OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except PreconditionError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ResourceError as exc:
        print(f"resource bound: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
