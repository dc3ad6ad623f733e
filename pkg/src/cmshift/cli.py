"""Batch experiment driver.

Every verb writes a JSON report (and a CSV trace where applicable) into
--out-dir, embedding the full parameter echo and the library version.
Outputs are deterministic: fixed enumerations, fixed tie-breaks, sorted
keys, no timestamps.  Numeric columns carry exact numerator/denominator
pairs; any *_display column is a convenience float only.

Exit codes: 0 success, 2 invalid configuration, 3 a semi-decidable
search exhausted its caps (a partial report is still written).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .asymptotics import (
    EscapeSearchError,
    NotEnoughLoopsError,
    classify_limit,
    cylinder_limit,
    escape_sequence,
    fixed_point_sequence,
    gurevich_entropy_estimate,
    non_f_witness_sequence,
    pair_loop_sequence,
)
from .measures import (
    canonical_cylinders,
    combo_of_cylinder,
    combo_to_jsonable,
    invariance_check,
    metric_d,
    parse_combo_text,
)
from .shifts import (
    SearchCaps,
    check_shift,
    connect,
    enumerate_loops,
    load_shift_text,
    parse_shift_arg,
    successors,
)
from .suspension import (
    ApproximationError,
    FlowEscapeError,
    approximate_by_single_orbit,
    class_R_check,
    flow_limit_analyze,
    flow_metric_rho,
    kac_lift,
    parse_roof_arg,
    parse_roof_text,
    roof_integral,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_EXHAUSTED = 3


def _rational(text: str) -> Fraction:
    text = text.strip()
    try:
        return Fraction(text)
    except ValueError:
        pass
    try:
        from decimal import Decimal

        return Fraction(Decimal(text))
    except Exception:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from None


def _load_shift(args) -> object:
    if getattr(args, "shift_file", None):
        return load_shift_text(Path(args.shift_file).read_text())
    return parse_shift_arg(args.shift)


def _load_roof(args) -> object:
    if getattr(args, "roof_file", None):
        return parse_roof_text(Path(args.roof_file).read_text())
    return parse_roof_arg(args.roof)


def _echo(args) -> dict:
    skip = {"func", "out_dir", "config"}
    return {
        k: (str(v) if isinstance(v, Fraction) else v)
        for k, v in sorted(vars(args).items())
        if k not in skip and v is not None
    }


def _write_report(args, name: str, payload: dict) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = {"version": __version__, "config": _echo(args), **payload}
    path = out / f"{name}.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def _write_csv(args, name: str, header: list[str], rows: list[list]) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.csv"
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _word_str(word) -> str:
    return "-".join(str(s) for s in word)


def _trace_rows(report) -> list[list]:
    rows = []
    for word in sorted(report.traces):
        sparse = report.traces[word]
        for n in report.sample_indices:
            v = sparse.get(n, Fraction(0))
            rows.append([n, _word_str(word), v.numerator, v.denominator, float(v)])
    return rows


# ---------------------------------------------------------------------------
# verbs


def cmd_shift_info(args) -> int:
    spec = _load_shift(args)
    rows = {}
    for i in range(1, args.horizon + 1):
        row, truncated = successors(spec, i, args.symbol_cap)
        rows[str(i)] = {"row": row, "truncated": truncated}
    _write_report(
        args,
        "shift_info",
        {
            "name": spec.name,
            "alphabet_size": spec.alphabet_size,
            "transitive_declared": spec.transitive_declared,
            "rows": rows,
        },
    )
    print(f"shift {spec.name}: rows up to {args.horizon} written")
    return EXIT_OK


def cmd_shift_check(args) -> int:
    spec = _load_shift(args)
    report = check_shift(spec, args.horizon, args.symbol_cap)
    _write_report(args, "shift_check", {"check": report.to_jsonable()})
    print(
        f"shift {spec.name}: ok-up-to-truncation={report.ok} "
        f"reachable={len(report.reachable_from_one)}/{report.horizon}"
    )
    return EXIT_OK


def cmd_orbit_enum(args) -> int:
    spec = _load_shift(args)
    loops, saturated = enumerate_loops(spec, args.a, args.n, args.cap, args.symbol_cap)
    _write_csv(
        args,
        "orbit_enum",
        ["index", "word"],
        [[i + 1, _word_str(w)] for i, w in enumerate(loops)],
    )
    _write_report(args, "orbit_enum", {"count": len(loops), "saturated": saturated})
    print(f"{len(loops)} loops at {args.a} of length {args.n} (saturated={saturated})")
    return EXIT_OK


def cmd_orbit_connect(args) -> int:
    spec = _load_shift(args)
    word = connect(spec, args.a, args.b, args.max_len, args.symbol_cap)
    _write_report(
        args,
        "orbit_connect",
        {"found": word is not None, "word": None if word is None else list(word)},
    )
    if word is None:
        print(f"no word from {args.a} to {args.b} within length {args.max_len}")
        return EXIT_EXHAUSTED
    print(f"connected: {_word_str(word)}")
    return EXIT_OK


def cmd_measure_eval(args) -> int:
    spec = _load_shift(args)
    combo = parse_combo_text(spec, args.combo)
    word = tuple(int(t) for t in args.cylinder.split(","))
    value = combo_of_cylinder(combo, word)
    _write_report(
        args,
        "measure_eval",
        {
            "measure": combo_to_jsonable(combo),
            "cylinder": list(word),
            "numerator": value.numerator,
            "denominator": value.denominator,
            "value_display": float(value),
        },
    )
    print(f"measure of [{args.cylinder}] = {value}")
    return EXIT_OK


def cmd_measure_invariance(args) -> int:
    spec = _load_shift(args)
    combo = parse_combo_text(spec, args.combo)
    report = invariance_check(combo, args.depth, args.symbol_cap)
    _write_report(
        args,
        "measure_invariance",
        {
            "max_defect": str(report.max_defect),
            "words_checked": report.words_checked,
            "nonzero_defects": [
                {"word": list(w), "defect": str(d)} for w, d in report.defects
            ],
        },
    )
    print(f"max invariance defect at depth {args.depth}: {report.max_defect}")
    return EXIT_OK


def cmd_metric_d(args) -> int:
    spec = _load_shift(args)
    a = parse_combo_text(spec, args.combo_a)
    b = parse_combo_text(spec, args.combo_b)
    lo, hi = metric_d(a, b, args.N, spec)
    _write_report(
        args,
        "metric_d",
        {
            "lower": str(lo),
            "upper": str(hi),
            "lower_display": float(lo),
            "upper_display": float(hi),
            "cylinders": [
                _word_str(w) for w in canonical_cylinders(spec, args.N)
            ],
        },
    )
    print(f"d bracket over first {args.N} cylinders: [{lo}, {hi}]")
    return EXIT_OK


def cmd_metric_rho(args) -> int:
    spec = _load_shift(args)
    roof = _load_roof(args)
    a = kac_lift(parse_combo_text(spec, args.combo_a), roof)
    b = kac_lift(parse_combo_text(spec, args.combo_b), roof)
    lo, hi = flow_metric_rho(a, b, args.N, spec, prec=args.prec)
    _write_report(
        args,
        "metric_rho",
        {"lower": str(lo), "upper": str(hi), "upper_display": float(hi)},
    )
    print(f"rho bracket over first {args.N} cylinders: [{float(lo):.6g}, {float(hi):.6g}]")
    return EXIT_OK


_SEQUENCES = {
    "pair-loops": lambda spec, args: pair_loop_sequence(spec, a=args.i, start=2),
    "point-masses": lambda spec, args: fixed_point_sequence(spec),
}


def _build_sequence(spec, args):
    try:
        builder = _SEQUENCES[args.seq]
    except KeyError:
        raise argparse.ArgumentTypeError(
            f"unknown sequence constructor {args.seq!r}; "
            f"choices: {sorted(_SEQUENCES)}"
        ) from None
    return builder(spec, args)


def cmd_converge_trace(args) -> int:
    spec = _load_shift(args)
    seq = _build_sequence(spec, args)
    report = cylinder_limit(seq, args.depth, args.symbol_cap, args.n_max, args.tol)
    _write_csv(
        args,
        "converge_trace",
        ["n", "cylinder", "numerator", "denominator", "value_display"],
        _trace_rows(report),
    )
    _write_report(
        args,
        "converge_trace",
        {
            "classification": report.classification.to_jsonable(),
            "limit_table": report.limit_table.to_jsonable(),
            "mass_lower": str(report.mass_bracket[0]),
        },
    )
    print(f"trace written; report classification: {report.classification.kind}")
    return EXIT_OK


def cmd_converge_classify(args) -> int:
    spec = _load_shift(args)
    seq = _build_sequence(spec, args)
    report = cylinder_limit(seq, args.depth, args.symbol_cap, args.n_max, args.tol)
    cls = classify_limit(report, args.K, args.tol)
    _write_report(
        args,
        "converge_classify",
        {
            "classification": cls.to_jsonable(),
            "limit_table": report.limit_table.to_jsonable(),
        },
    )
    print(f"classification at horizon K={args.K}: {cls.kind}")
    return EXIT_OK


def cmd_escape(args) -> int:
    spec = _load_shift(args)
    caps = SearchCaps(symbol_cap=args.symbol_cap, connect_max_len=args.connect_max_len)
    try:
        result = escape_sequence(spec, args.k, args.target_len, caps)
    except EscapeSearchError as exc:
        _write_report(args, "escape", {"error": str(exc), "found": False})
        print(f"escape search exhausted: {exc}", file=sys.stderr)
        return EXIT_EXHAUSTED
    _write_report(args, "escape", {"found": True, "result": result.to_jsonable()})
    print(
        f"escape word of length {len(result.word)}; "
        f"mass of low symbols {result.low_mass} <= {result.bound}"
    )
    return EXIT_OK


def cmd_nonf_demo(args) -> int:
    spec = _load_shift(args)
    try:
        seq = non_f_witness_sequence(spec, args.i, args.q, args.count, args.symbol_cap)
    except NotEnoughLoopsError as exc:
        _write_report(args, "nonf_demo", {"error": str(exc)})
        print(f"not enough loops: {exc}", file=sys.stderr)
        return EXIT_EXHAUSTED
    rows = []
    for n in range(1, args.count + 1):
        v = combo_of_cylinder(seq.term(n), (args.i,))
        rows.append([n, _word_str((args.i,)), v.numerator, v.denominator, float(v)])
    _write_csv(
        args,
        "nonf_demo",
        ["n", "cylinder", "numerator", "denominator", "value_display"],
        rows,
    )
    # the table cap sits below the family's moving symbols so the final
    # values show the limit, not the last term's escaping block
    table_cap = args.table_cap or max(args.i + 1, args.count // 2)
    report = cylinder_limit(seq, args.depth, table_cap, args.count, args.tol)
    cls = classify_limit(report, min(args.K, table_cap), args.tol)
    _write_report(
        args,
        "nonf_demo",
        {
            "classification": cls.to_jsonable(),
            "limit_table": report.limit_table.to_jsonable(),
        },
    )
    print(f"witness family classification: {cls.kind}")
    return EXIT_OK


def cmd_entropy(args) -> int:
    spec = _load_shift(args)
    lo, _, hi = args.n.partition("..")
    n_values = range(int(lo), int(hi or lo) + 1)
    report = gurevich_entropy_estimate(spec, args.a, n_values, args.symbol_cap)
    _write_csv(
        args,
        "entropy",
        ["n", "loop_count", "estimate_display"],
        [[r.n, r.loop_count, r.estimate] for r in report.rows],
    )
    _write_report(args, "entropy", {"entropy": report.to_jsonable()})
    print(
        f"loop counts at {args.a} for n={args.n}; "
        f"running max estimate {report.running_max:.6f}"
    )
    return EXIT_OK


def cmd_flow_integral(args) -> int:
    spec = _load_shift(args)
    roof = _load_roof(args)
    combo = parse_combo_text(spec, args.combo)
    value = roof_integral(roof, combo)
    _write_report(
        args,
        "flow_integral",
        {"integral": value.to_jsonable(), "roof": roof.name},
    )
    print(f"roof integral = {float(value):.12g}")
    return EXIT_OK


def cmd_flow_limit(args) -> int:
    spec = _load_shift(args)
    roof = _load_roof(args)
    seq = _build_sequence(spec, args)
    report = flow_limit_analyze(
        seq, roof, args.n_max, args.depth, args.symbol_cap, args.tol, prec=args.prec
    )
    _write_csv(
        args,
        "flow_limit",
        ["n", "integral_display"],
        [[n + 1, float(v)] for n, v in enumerate(report.integral_trace)],
    )
    _write_report(args, "flow_limit", {"flow_limit": report.to_jsonable()})
    print(f"flow limit verdict: {report.verdict}")
    return EXIT_OK


def cmd_flow_classr(args) -> int:
    spec = _load_shift(args) if args.shift else None
    roof = _load_roof(args)
    report = class_R_check(roof, args.horizon, spec)
    _write_report(args, "flow_classr", {"class_r": report.to_jsonable()})
    print(f"roof {roof.name}: tail verdict {report.tail_verdict}")
    return EXIT_OK


def cmd_densusp(args) -> int:
    spec = _load_shift(args)
    roof = _load_roof(args)
    target = parse_combo_text(spec, args.target)
    caps = SearchCaps(symbol_cap=args.symbol_cap, connect_max_len=args.connect_max_len)
    try:
        result = approximate_by_single_orbit(target, roof, args.eps, spec, caps)
    except ApproximationError as exc:
        payload = {"error": str(exc)}
        if exc.best is not None:
            payload["best"] = exc.best.to_jsonable()
        _write_report(args, "densusp", payload)
        print(f"approximation failed: {exc}", file=sys.stderr)
        return EXIT_EXHAUSTED
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "densusp_orbit.txt").write_text(
        " ".join(str(s) for s in result.word) + "\n"
    )
    _write_report(args, "densusp", {"result": result.to_jsonable()})
    print(
        f"orbit of period {result.measure.period}: metric upper bound "
        f"{float(result.metric_bracket[1]):.3g}, integral gap "
        f"{float(result.integral_gap):.3g}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser assembly


def _add_common(p: argparse.ArgumentParser, *, shift=True, roof=False) -> None:
    p.add_argument("--out-dir", default=".", help="artifact directory")
    p.add_argument("--seed", type=int, default=0, help="echoed into reports")
    if shift:
        g = p.add_mutually_exclusive_group(required=False)
        g.add_argument("--shift", default="full", help="built-in shift reference")
        g.add_argument("--shift-file", help="row-list shift file")
    if roof:
        g = p.add_mutually_exclusive_group(required=False)
        g.add_argument("--roof", default="log1p", help="roof reference")
        g.add_argument("--roof-file", help="roof definition file")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="cmshift",
        description="exact experiments with invariant measures on countable Markov shifts",
    )
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("shift", help="inspect or sanity-check a shift")
    s2 = p.add_subparsers(dest="sub", required=True)
    q = s2.add_parser("info")
    _add_common(q)
    q.add_argument("--horizon", type=int, default=8)
    q.add_argument("--symbol-cap", type=int, default=32)
    q.set_defaults(func=cmd_shift_info)
    q = s2.add_parser("check")
    _add_common(q)
    q.add_argument("--horizon", type=int, default=8)
    q.add_argument("--symbol-cap", type=int, default=200)
    q.set_defaults(func=cmd_shift_check)

    p = sub.add_parser("orbit", help="enumerate loops or search connecting words")
    s2 = p.add_subparsers(dest="sub", required=True)
    q = s2.add_parser("enum")
    _add_common(q)
    q.add_argument("--a", type=int, required=True)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--cap", type=int, default=100)
    q.add_argument("--symbol-cap", type=int, default=100)
    q.set_defaults(func=cmd_orbit_enum)
    q = s2.add_parser("connect")
    _add_common(q)
    q.add_argument("--a", type=int, required=True)
    q.add_argument("--b", type=int, required=True)
    q.add_argument("--max-len", type=int, default=8)
    q.add_argument("--symbol-cap", type=int, default=1000)
    q.set_defaults(func=cmd_orbit_connect)

    p = sub.add_parser("measure", help="evaluate measures and check invariance")
    s2 = p.add_subparsers(dest="sub", required=True)
    q = s2.add_parser("eval")
    _add_common(q)
    q.add_argument("--combo", required=True, help="e.g. '1/2:(1);1/2:(1,2)'")
    q.add_argument("--cylinder", required=True, help="e.g. '1,2'")
    q.set_defaults(func=cmd_measure_eval)
    q = s2.add_parser("invariance")
    _add_common(q)
    q.add_argument("--combo", required=True)
    q.add_argument("--depth", type=int, default=3)
    q.add_argument("--symbol-cap", type=int, default=1000)
    q.set_defaults(func=cmd_measure_invariance)

    p = sub.add_parser("metric", help="cylinder metric brackets")
    s2 = p.add_subparsers(dest="sub", required=True)
    q = s2.add_parser("d")
    _add_common(q)
    q.add_argument("--combo-a", required=True)
    q.add_argument("--combo-b", required=True)
    q.add_argument("--N", type=int, default=16)
    q.set_defaults(func=cmd_metric_d)
    q = s2.add_parser("rho")
    _add_common(q, roof=True)
    q.add_argument("--combo-a", required=True)
    q.add_argument("--combo-b", required=True)
    q.add_argument("--N", type=int, default=16)
    q.add_argument("--prec", type=int, default=64)
    q.set_defaults(func=cmd_metric_rho)

    p = sub.add_parser("converge", help="cylinder-limit traces and classification")
    s2 = p.add_subparsers(dest="sub", required=True)
    for name, fn in (("trace", cmd_converge_trace), ("classify", cmd_converge_classify)):
        q = s2.add_parser(name)
        _add_common(q)
        q.add_argument("--seq", default="pair-loops", help=f"one of {sorted(_SEQUENCES)}")
        q.add_argument("--i", type=int, default=1)
        q.add_argument("--depth", type=int, default=2)
        q.add_argument("--symbol-cap", type=int, default=100)
        q.add_argument("--n-max", type=int, default=100)
        q.add_argument("--tol", type=_rational, default=Fraction(1, 1000))
        if name == "classify":
            q.add_argument("--K", type=int, default=100)
        q.set_defaults(func=fn)

    q = sub.add_parser("escape", help="periodic measure escaping the first k symbols")
    _add_common(q)
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--target-len", type=int, required=True)
    q.add_argument("--symbol-cap", type=int, default=10_000)
    q.add_argument("--connect-max-len", type=int, default=32)
    q.set_defaults(func=cmd_escape)

    q = sub.add_parser("nonf-demo", help="first-return loop family and its limit")
    _add_common(q)
    q.add_argument("--i", type=int, default=1)
    q.add_argument("--q", type=int, default=2)
    q.add_argument("--count", type=int, default=50)
    q.add_argument("--depth", type=int, default=2)
    q.add_argument("--symbol-cap", type=int, default=200)
    q.add_argument("--table-cap", type=int, default=None,
                   help="limit-table symbol cap (default: count/2)")
    q.add_argument("--K", type=int, default=100)
    q.add_argument("--tol", type=_rational, default=Fraction(1, 1000))
    q.set_defaults(func=cmd_nonf_demo)

    q = sub.add_parser("entropy", help="loop counts and entropy estimates")
    _add_common(q)
    q.add_argument("--a", type=int, default=1)
    q.add_argument("--n", required=True, help="single n or range 'lo..hi'")
    q.add_argument("--symbol-cap", type=int, default=1000)
    q.set_defaults(func=cmd_entropy)

    p = sub.add_parser("flow", help="suspension-flow layer")
    s2 = p.add_subparsers(dest="sub", required=True)
    q = s2.add_parser("integral")
    _add_common(q, roof=True)
    q.add_argument("--combo", required=True)
    q.set_defaults(func=cmd_flow_integral)
    q = s2.add_parser("limit")
    _add_common(q, roof=True)
    q.add_argument("--seq", default="point-masses")
    q.add_argument("--i", type=int, default=1)
    q.add_argument("--n-max", type=int, default=40)
    q.add_argument("--depth", type=int, default=1)
    q.add_argument("--symbol-cap", type=int, default=50)
    q.add_argument("--tol", type=_rational, default=Fraction(1, 1000))
    q.add_argument("--prec", type=int, default=64)
    q.set_defaults(func=cmd_flow_limit)
    q = s2.add_parser("classr")
    _add_common(q, roof=True)
    q.add_argument("--horizon", type=int, default=16)
    q.set_defaults(func=cmd_flow_classr)

    q = sub.add_parser("densusp", help="single-orbit approximation with certificates")
    _add_common(q, roof=True)
    q.add_argument("--target", required=True, help="e.g. '1/2:(1);1/2:(2)'")
    q.add_argument("--eps", type=_rational, required=True)
    q.add_argument("--symbol-cap", type=int, default=10_000)
    q.add_argument("--connect-max-len", type=int, default=32)
    q.set_defaults(func=cmd_densusp)

    q = sub.add_parser("run", help="run one verb from a declarative JSON config")
    q.add_argument("config", help="JSON file: {\"argv\": [\"entropy\", ...]}")
    q.set_defaults(func=None)

    return top


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if argv and argv[0] == "run":
        ns = parser.parse_args(argv)
        try:
            config = json.loads(Path(ns.config).read_text())
            argv = [str(a) for a in config["argv"]]
        except (OSError, KeyError, ValueError) as exc:
            print(f"bad config file: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        if argv and argv[0] == "run":
            print("config files cannot nest 'run'", file=sys.stderr)
            return EXIT_CONFIG
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EscapeSearchError, NotEnoughLoopsError, FlowEscapeError, ApproximationError) as exc:
        print(f"search exhausted: {exc}", file=sys.stderr)
        return EXIT_EXHAUSTED


if __name__ == "__main__":
    raise SystemExit(main())
