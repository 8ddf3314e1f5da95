"""Command-line front-end: analyze, search, sweep, validate, distribution.

Single results print as structured text by default, matrices as CSV; both
honor --format and --out.  Budgets accept plain bytes, K/M suffixes, comma
lists, and the geometric range form "1K..512K:x2".  Exit codes: 0 success,
1 usage, 2 validation failure, 3 oracle-cap refusal.
"""

from __future__ import annotations

import argparse
import csv
import re
import sys
from pathlib import Path

from .layers import LayerShape, LayerSuite, ValidationError, parse_layer_suite
from .model import schedule_from_json, schedule_to_json, traffic
from .oracle import OracleCapError, validate
from .search import (
    DISTRIBUTION_BINS, MODEL_ORDER, SearchConfig, best_schedule, distribution,
    sweep,
)
from .space import TILE_POLICY_MODES, TilePolicy
from .suites import BUILTIN_SUITE_NAMES, builtin_suite
from .baselines import cache_best, peemen_best

CSV_COLUMNS = ("suite", "layer", "model", "budget", "t_in", "t_w", "t_o_acc",
               "t_o_final", "total", "buffer_bytes", "feasible", "schedule",
               "overhead_vs_ours_pct")

_AGGREGATE_LAYER = "(all)"


def parse_byte_size(token: str) -> int:
    """A byte count with an optional K or M suffix (powers of 1024)."""
    m = re.fullmatch(r"\s*(\d+)\s*([kKmM]?)\s*", token)
    if not m:
        raise ValueError(f"bad byte size {token!r}")
    scale = {"": 1, "k": 1024, "m": 1024 * 1024}[m.group(2).lower()]
    return int(m.group(1)) * scale


def parse_budget_list(spec: str) -> tuple[int, ...]:
    """Comma-separated sizes, or a geometric range like "1K..512K:x2"."""
    s = spec.strip()
    if ".." in s:
        rng, _, step = s.partition(":")
        lo_s, _, hi_s = rng.partition("..")
        lo, hi = parse_byte_size(lo_s), parse_byte_size(hi_s)
        factor = 2
        if step:
            m = re.fullmatch(r"\s*[xX](\d+)\s*", step)
            if not m or int(m.group(1)) < 2:
                raise ValueError(f"bad range step {step!r}; expected e.g. x2")
            factor = int(m.group(1))
        if lo < 1 or hi < lo:
            raise ValueError(f"bad budget range {spec!r}")
        out = []
        b = lo
        while b <= hi:
            out.append(b)
            b *= factor
        return tuple(out)
    return tuple(parse_byte_size(t) for t in s.split(","))


def _check_budgets(budgets: tuple[int, ...]) -> tuple[int, ...]:
    if any(b <= 0 for b in budgets):
        raise ValidationError("budgets must be positive")
    return budgets


def _resolve_layer(args) -> tuple[str, LayerShape]:
    """The (owning suite name, layer) a single-layer command works on."""
    if args.layer_file:
        suite = _read_suite_file(args.layer_file)
        if args.layer:
            return suite.name, suite.get(args.layer)
        if len(suite) == 1:
            return suite.name, suite.layers[0]
        raise ValidationError(
            "--layer is required when the layer file holds several layers")
    if not args.layer:
        raise ValidationError("a layer is required: --layer NAME or --layer-file FILE")
    want = args.layer.lower()
    for suite_name in BUILTIN_SUITE_NAMES:
        for layer in builtin_suite(suite_name):
            if layer.name.lower() == want:
                return suite_name, layer
    raise ValidationError(f"no built-in layer named {args.layer!r}")


def _read_suite_file(path: str) -> LayerSuite:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ValidationError(f"cannot read layer file {path}: {e}") from e
    return parse_layer_suite(text)


def _read_schedule(path: str, layer: LayerShape):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ValidationError(f"cannot read schedule file {path}: {e}") from e
    return schedule_from_json(text, layer)


def _policy(args) -> TilePolicy:
    return TilePolicy(mode=args.tile_policy)


def _report_row(suite: str, layer: str, model: str, budget, report,
                serial: str | None, overhead: float | None = None) -> dict:
    row = dict.fromkeys(CSV_COLUMNS, "")
    row.update(suite=suite, layer=layer, model=model,
               budget="" if budget is None else budget)
    if report is not None:
        row.update(t_in=report.t_in, t_w=report.t_w, t_o_acc=report.t_o_acc,
                   t_o_final=report.t_o_final, total=report.total,
                   buffer_bytes=report.buffer_bytes,
                   feasible="true" if report.feasible else "false")
    else:
        row["feasible"] = "false"
    if serial is not None:
        row["schedule"] = serial
    if overhead is not None:
        row["overhead_vs_ours_pct"] = f"{overhead:.6f}"
    return row


def _emit_csv(out, rows: list[dict]) -> None:
    w = csv.DictWriter(out, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)


def _print_report(out, report, budget) -> None:
    cap = "unconstrained" if budget is None else f"{budget} B"
    verdict = "feasible" if report.feasible else "infeasible"
    print(f"buffers  I={report.b_in}  W={report.b_w}  O={report.b_o}  "
          f"total={report.buffer_bytes} B  ({cap}: {verdict})", file=out)
    print(f"traffic  I={report.t_in}  W={report.t_w}  "
          f"O_acc={report.t_o_acc}  O_final={report.t_o_final}  "
          f"total={report.total} B", file=out)


def cmd_analyze(args, out) -> int:
    suite_name, layer = _resolve_layer(args)
    if args.budget is not None and args.budget <= 0:
        raise ValidationError("budget must be positive")
    schedule, assignment = _read_schedule(args.schedule, layer)
    report = traffic(schedule, assignment, args.budget)
    serial = schedule_to_json(schedule, assignment)
    if args.format == "csv":
        _emit_csv(out, [_report_row(suite_name, layer.name, "manual",
                                    args.budget, report, serial)])
    else:
        print(f"layer {layer.name} (suite {suite_name})", file=out)
        print(f"schedule {serial}", file=out)
        _print_report(out, report, args.budget)
    return 0


def cmd_search(args, out) -> int:
    suite_name, layer = _resolve_layer(args)
    if args.model == "ours":
        config = SearchConfig(budgets=(args.budget,), tile_policy=_policy(args),
                              prune=not args.no_prune)
        res = best_schedule(layer, args.budget, config)
    elif args.model == "peemen":
        res = peemen_best(layer, args.budget, _policy(args))
    else:
        res = cache_best(layer, args.budget, _policy(args))
    serial = schedule_to_json(res.schedule, res.assignment)
    if args.format == "csv":
        _emit_csv(out, [_report_row(suite_name, layer.name, args.model,
                                    args.budget, res.report, serial)])
    else:
        print(f"layer {layer.name} (suite {suite_name})  model {args.model}  "
              f"budget {args.budget} B  candidates {res.candidates}", file=out)
        print(f"schedule {serial}", file=out)
        _print_report(out, res.report, args.budget)
    return 0


def cmd_sweep(args, out) -> int:
    if args.suite:
        suite = builtin_suite_checked(args.suite)
    elif args.layer_file:
        suite = _read_suite_file(args.layer_file)
    else:
        raise ValidationError("sweep needs --suite or --layer-file")
    models = tuple(m.strip() for m in args.model.split(","))
    config = SearchConfig(budgets=_check_budgets(parse_budget_list(args.budgets)),
                          tile_policy=_policy(args), prune=not args.no_prune)
    result = sweep(suite, config, models)

    rows = [_report_row(r.suite, r.layer, r.model, r.budget, r.report,
                        r.schedule_json) for r in result.rows]
    for agg in result.aggregates:
        row = dict.fromkeys(CSV_COLUMNS, "")
        row.update(suite=agg.suite, layer=_AGGREGATE_LAYER, model=agg.model,
                   budget=agg.budget, t_in=agg.t_in, t_w=agg.t_w,
                   t_o_acc=agg.t_o_acc, t_o_final=agg.t_o_final,
                   total=agg.total, buffer_bytes=agg.buffer_bytes,
                   feasible="true" if agg.feasible else "false")
        if agg.overhead_vs_ours_pct is not None:
            row["overhead_vs_ours_pct"] = f"{agg.overhead_vs_ours_pct:.6f}"
        rows.append(row)

    if args.format == "text":
        print(f"suite {suite.name}: aggregate totals (bytes)", file=out)
        header = f"{'budget':>8} " + " ".join(f"{m:>14}" for m in result.models)
        print(header, file=out)
        by = {(a.model, a.budget): a for a in result.aggregates}
        for b in result.budgets:
            cells = " ".join(f"{by[m, b].total:>14}" for m in result.models)
            print(f"{b:>8} {cells}", file=out)
    else:
        _emit_csv(out, rows)
    return 0


def builtin_suite_checked(name: str) -> LayerSuite:
    try:
        return builtin_suite(name)
    except KeyError as e:
        raise ValidationError(e.args[0]) from e


def cmd_validate(args, out) -> int:
    suite_name, layer = _resolve_layer(args)
    if args.budget is not None and args.budget <= 0:
        raise ValidationError("budget must be positive")
    schedule, assignment = _read_schedule(args.schedule, layer)
    rep = validate(schedule, assignment, cap=args.oracle_cap)
    model = rep.model
    tr = rep.oracle
    rows = [
        ("I", model.t_in, layer.p_in * tr.loads_i, rep.rel_err_i),
        ("W", model.t_w, layer.p_w * tr.loads_w, rep.rel_err_w),
        ("O", model.t_o_acc + model.t_o_final,
         layer.p_acc * (tr.writes_o_partial + tr.reads_o_partial)
         + layer.p_out * tr.writes_o_final, rep.rel_err_o),
    ]
    if args.format == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(("layer", "array", "model_bytes", "oracle_bytes",
                    "rel_err", "undercount"))
        for array, model_bytes, oracle_bytes, err in rows:
            w.writerow((layer.name, array, model_bytes, oracle_bytes,
                        f"{err:.8f}", "yes" if array in rep.undercounts else "no"))
        w.writerow((layer.name, "total", model.total, tr.bytes_total,
                    f"{rep.rel_err_total:.8f}",
                    "yes" if rep.undercounts else "no"))
    else:
        print(f"layer {layer.name} (suite {suite_name})  "
              f"iterations {tr.iterations}", file=out)
        for array, model_bytes, oracle_bytes, err in rows:
            print(f"{array:>5}  model {model_bytes:>14}  oracle {oracle_bytes:>14}  "
                  f"rel_err {100 * err:+.4f}%", file=out)
        print(f"total  model {model.total:>14}  oracle {tr.bytes_total:>14}  "
              f"rel_err {100 * rep.rel_err_total:+.4f}%", file=out)
        under = ", ".join(rep.undercounts) if rep.undercounts else "none"
        print(f"undercounts: {under}", file=out)
    return 2 if rep.undercounts else 0


def cmd_distribution(args, out) -> int:
    if args.suite:
        layers = list(builtin_suite_checked(args.suite))
    elif args.layer_file:
        layers = list(_read_suite_file(args.layer_file))
    else:
        layers = [l for name in BUILTIN_SUITE_NAMES
                  for l in builtin_suite(name)]
    budgets = _check_budgets(parse_budget_list(args.budgets))
    table = distribution(layers, budgets, _policy(args), not args.no_prune)
    if args.format == "text":
        print(f"layers {table.layer_count}  orderings {table.ordering_count}",
              file=out)
        header = f"{'budget':>8} " + " ".join(f"{b:>11}" for b in table.bins)
        print(header, file=out)
        for bidx, budget in enumerate(table.budgets):
            cells = " ".join(f"{f:>11.4f}" for f in table.fractions[bidx])
            print(f"{budget:>8} {cells}", file=out)
    else:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(("budget",) + table.bins)
        for bidx, budget in enumerate(table.budgets):
            w.writerow((budget,) + tuple(f"{f:.8f}"
                                         for f in table.fractions[bidx]))
    return 0


def _add_layer_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--layer", metavar="NAME",
                   help="built-in layer name, or a layer in --layer-file")
    p.add_argument("--layer-file", metavar="FILE",
                   help="JSON layer-suite file")


def _add_space_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tile-policy", choices=[m for m in TILE_POLICY_MODES
                                             if m != "explicit"],
                   default="pow2-extents", help="tile-size enumeration mode")
    p.add_argument("--no-prune", action="store_true",
                   help="search all 720 orderings instead of the pruned 180")


def _add_out_flags(p: argparse.ArgumentParser, default_format: str) -> None:
    p.add_argument("--format", choices=("csv", "text"), default=default_format)
    p.add_argument("--out", metavar="FILE", help="write output here, not stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convsched",
        description="Memory-traffic models and schedule search for "
                    "convolution loop-nests.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="price one schedule on one layer")
    _add_layer_flags(p)
    p.add_argument("--schedule", required=True, metavar="FILE",
                   help="JSON schedule document")
    p.add_argument("--budget", type=parse_byte_size, default=None,
                   help="local buffer capacity, e.g. 1K")
    _add_out_flags(p, "text")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("search", help="best schedule for one layer and budget")
    _add_layer_flags(p)
    p.add_argument("--budget", type=parse_byte_size, required=True)
    p.add_argument("--model", choices=("ours", "peemen", "cache"),
                   default="ours")
    _add_space_flags(p)
    _add_out_flags(p, "text")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("sweep", help="budget sweep over a suite, several models")
    p.add_argument("--suite", metavar="NAME",
                   help="built-in suite: " + ", ".join(BUILTIN_SUITE_NAMES))
    p.add_argument("--layer-file", metavar="FILE")
    p.add_argument("--budgets", default="1K..256K:x2",
                   help='range "1K..512K:x2" or comma list (default %(default)s)')
    p.add_argument("--model", default="ours,peemen,cache", metavar="LIST",
                   help="comma list from: " + ", ".join(m for m in MODEL_ORDER
                                                        if m != "ideal"))
    _add_space_flags(p)
    _add_out_flags(p, "csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="check the model against the trace oracle")
    _add_layer_flags(p)
    p.add_argument("--schedule", required=True, metavar="FILE")
    p.add_argument("--budget", type=parse_byte_size, default=None)
    p.add_argument("--oracle-cap", type=int, default=10 ** 8,
                   help="iteration cap for the oracle (default %(default)s)")
    _add_out_flags(p, "text")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("distribution",
                       help="permutation-quality histogram over budgets")
    p.add_argument("--suite", metavar="NAME",
                   help="one built-in suite (default: all built-in layers)")
    p.add_argument("--layer-file", metavar="FILE")
    p.add_argument("--budgets", default="1K..256K:x2")
    _add_space_flags(p)
    _add_out_flags(p, "csv")
    p.set_defaults(func=cmd_distribution)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse reserves 2 for usage errors; remap to our contract.
        return 0 if e.code in (0, None) else 1

    sink = sys.stdout
    opened = None
    if args.out:
        try:
            opened = open(args.out, "w", newline="")
        except OSError as e:
            print(f"error: cannot write {args.out}: {e}", file=sys.stderr)
            return 2
        sink = opened
    try:
        return args.func(args, sink)
    except OracleCapError as e:
        print(f"refused: {e}", file=sys.stderr)
        return 3
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except KeyError as e:
        print(f"error: {e.args[0] if e.args else e}", file=sys.stderr)
        return 2
    finally:
        if opened is not None:
            opened.close()


if __name__ == "__main__":
    sys.exit(main())
