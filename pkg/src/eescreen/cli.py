"""Command-line driver: plan, run, analyze, report.

Exit codes: 0 ok, 1 usage or config error, 2 evaluation failures,
3 incomplete ledger.
"""
from __future__ import annotations

import argparse
import csv
import glob
import logging
import os
import sys

from . import __version__
from .config import load_config
from .design import FIRST_ORDER, DesignPlan
from .effects import aggregate, compute_effects
from .exceptions import (
    ConfigError,
    EEScreenError,
    IncompleteEvaluationError,
    InvalidDesignError,
    StalePlanError,
    TransformDomainError,
)
from .ledger import Ledger, evaluate_plan
from .models import ExternalModelSpec
from .report import (
    PRESENTATIONS,
    classify_all,
    emit_scatter_svg,
    read_summary_csv,
    split_kinds,
    write_effects_csv,
    write_summary_csv,
    write_zones_csv,
)
from .transforms import transformed_outputs

log = logging.getLogger("eescreen")

EXIT_OK, EXIT_USAGE, EXIT_EVAL, EXIT_INCOMPLETE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _Fail(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _paths(args):
    out = args.out_dir
    plan = getattr(args, "plan", None) or os.path.join(out, "plan.json")
    ledger = getattr(args, "ledger", None) or os.path.join(out, "ledger.jsonl")
    return plan, ledger


def _config(args):
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _load_plan(cfg, path):
    try:
        plan = DesignPlan.load(path)
    except FileNotFoundError:
        raise _Fail(EXIT_USAGE, f"plan file {path} not found; run 'eescreen plan' first")
    except (InvalidDesignError, ValueError, KeyError) as exc:
        raise _Fail(EXIT_USAGE, f"invalid plan file {path}: {exc}")
    if plan.config_hash != cfg.plan_hash():
        raise _Fail(EXIT_USAGE, f"stale plan: {path} was generated from a different config or seed")
    return plan


def cmd_plan(args) -> int:
    cfg = _config(args)
    plan = cfg.make_plan()
    path, _ = _paths(args)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    plan.save(path)
    k, r = plan.k, plan.replicates
    formula = f"r(k+1) = {r}x{k + 1}" if plan.mode == FIRST_ORDER else f"r(1+k+k(k-1)/2) = {r}x{1 + k + k * (k - 1) // 2}"
    print(f"plan {cfg.name}: {k} parameters, {plan.mode}, r={r}, seed={plan.seed}")
    print(f"{plan.n_evaluations} runs announced ({formula}); {plan.n_distinct} distinct points")
    print(f"wrote {path}")
    return EXIT_OK


def _model_for(cfg, standin):
    entry = cfg.select_model(standin)
    if isinstance(entry, ExternalModelSpec):
        return entry, entry, list(entry.outputs)
    return entry, entry.model, list(entry.outputs)


def cmd_run(args) -> int:
    cfg = _config(args)
    plan_path, ledger_path = _paths(args)
    plan = _load_plan(cfg, plan_path)
    entry, model, outputs = _model_for(cfg, args.standin)
    try:
        ledger = Ledger(ledger_path, cfg.ledger_hash(entry), plan.config_hash)
    except StalePlanError as exc:
        raise _Fail(EXIT_USAGE, str(exc))
    ledger, stats = evaluate_plan(
        plan, model, outputs, ledger, jobs=args.jobs, workdir=args.workdir, timeout_s=args.timeout_s,
    )
    print(f"{stats.n_invoked} new evaluations, {stats.n_cached} cached, {stats.n_failed} failed "
          f"({plan.n_distinct} distinct points, ledger {ledger_path})")
    failures = ledger.failures_for(plan)
    if failures:
        for pid, why in failures[:10]:
            print(f"  point {pid}: {why}", file=sys.stderr)
        if len(failures) > 10:
            print(f"  ... {len(failures) - 10} more", file=sys.stderr)
        return EXIT_EVAL
    return EXIT_OK


def _export_evaluations(path, plan, records, raw_names, derived):
    names = [p.name for p in plan.parameters]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["point_id", *names, *raw_names, *derived])
        for rec in records:
            row = [rec.point_id, *(repr(float(v)) for v in rec.physical_values)]
            row += [repr(float(rec.outputs[n])) if n in rec.outputs else "" for n in raw_names]
            row += ["" if rec.point_id not in vals else repr(vals[rec.point_id]) for vals in derived.values()]
            w.writerow(row)


def cmd_analyze(args) -> int:
    cfg = _config(args)
    plan_path, ledger_path = _paths(args)
    plan = _load_plan(cfg, plan_path)
    if not os.path.exists(ledger_path):
        raise _Fail(EXIT_INCOMPLETE, f"ledger {ledger_path} not found; run 'eescreen run' first")
    try:
        ledger = Ledger(ledger_path, plan_hash=plan.config_hash)
    except StalePlanError as exc:
        raise _Fail(EXIT_USAGE, str(exc))
    try:
        records = ledger.records_for(plan)
    except IncompleteEvaluationError as exc:
        raise _Fail(EXIT_INCOMPLETE, f"incomplete ledger: {exc}")
    if not cfg.analyses:
        raise _Fail(EXIT_USAGE, "config declares no analyses")

    os.makedirs(args.out_dir, exist_ok=True)
    derived, code = {}, EXIT_OK
    for analysis in cfg.analyses:
        try:
            values = transformed_outputs(analysis.transforms, records, analysis.output)
        except TransformDomainError as exc:
            print(f"analysis {analysis.name} aborted: {exc}", file=sys.stderr)
            code = EXIT_EVAL
            continue
        derived[analysis.name] = values
        samples = compute_effects(plan, values)
        summaries = aggregate(samples)
        write_effects_csv(samples, os.path.join(args.out_dir, f"{analysis.name}_effects.csv"))
        write_summary_csv(summaries, os.path.join(args.out_dir, f"{analysis.name}_summary.csv"))
        print(f"analysis {analysis.name}: {len(samples)} effects, {len(summaries)} groups")
    raw_names = sorted({n for rec in records for n in rec.outputs})
    _export_evaluations(os.path.join(args.out_dir, "evaluations.csv"), plan, records, raw_names, derived)
    print(f"model runs recorded: {ledger.run_count} (unchanged by analysis)")
    return code


def cmd_report(args) -> int:
    if args.config:
        cfg = load_config(args.config)
        wanted = [(a.name, a.presentations) for a in cfg.analyses]
        negligible_rel = cfg.negligible_rel
    else:
        found = sorted(glob.glob(os.path.join(args.out_dir, "*_summary.csv")))
        wanted = [(os.path.basename(p)[: -len("_summary.csv")], ("sigma",)) for p in found]
        negligible_rel = 0.01
    if args.negligible_rel is not None:
        negligible_rel = args.negligible_rel
    if not wanted:
        raise _Fail(EXIT_USAGE, f"no summary files in {args.out_dir}")

    for name, presentations in wanted:
        path = os.path.join(args.out_dir, f"{name}_summary.csv")
        if not os.path.exists(path):
            raise _Fail(EXIT_USAGE, f"summary {path} not found; run 'eescreen analyze' first")
        summaries = read_summary_csv(path)
        usable = [s for s in summaries if s.n >= 2]
        if len(usable) != len(summaries):
            raise _Fail(EXIT_USAGE, f"{name}: zones need at least 2 replicates")
        zones = classify_all(summaries, negligible_rel)
        write_zones_csv(summaries, zones, os.path.join(args.out_dir, f"{name}_zones.csv"))
        chosen = args.presentation or list(presentations)
        for kind_rows in split_kinds(summaries):
            if not kind_rows:
                continue
            kind = kind_rows[0].kind
            for pres in dict.fromkeys(chosen):
                svg = os.path.join(args.out_dir, f"{name}_{kind}_{pres}.svg")
                emit_scatter_svg(kind_rows, pres, svg, title=f"{name} ({kind}-order effects)")
                print(f"wrote {svg}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eescreen", description="Elementary-effects screening of black-box models.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="experiment config (JSON)")
        p.add_argument("--out-dir", default=".", help="directory for generated files (default: .)")
        p.add_argument("--seed", type=int, help="override design.seed from the config")

    p = sub.add_parser("plan", help="generate the design plan")
    common(p)
    p.add_argument("--plan", help="plan output path (default: OUT_DIR/plan.json)")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("run", help="evaluate the plan into the ledger")
    common(p)
    p.add_argument("--plan")
    p.add_argument("--ledger", help="ledger path (default: OUT_DIR/ledger.jsonl)")
    p.add_argument("--jobs", type=int, default=1, help="parallel evaluations")
    p.add_argument("--timeout-s", type=float, help="per-invocation timeout for external models")
    p.add_argument("--workdir", help="where external request/response files are written")
    p.add_argument("--standin", action="store_true", help="use the config's analytic stand-in model")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("analyze", help="compute effects and summaries from the ledger")
    common(p)
    p.add_argument("--plan")
    p.add_argument("--ledger")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", help="zones CSV and SVG scatter plots from summaries")
    common(p, config_required=False)
    p.add_argument("--presentation", action="append", choices=PRESENTATIONS,
                   help="sigma: mu* vs sigma; ratio: mu* vs sigma/mu* (repeatable)")
    p.add_argument("--negligible-rel", type=float, help="negligible threshold relative to max mu*")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _Fail as exc:
        print(f"eescreen: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, FileNotFoundError) as exc:
        print(f"eescreen: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IncompleteEvaluationError as exc:
        print(f"eescreen: incomplete ledger: {exc}", file=sys.stderr)
        return EXIT_INCOMPLETE
    except (EEScreenError, OSError) as exc:
        print(f"eescreen: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
