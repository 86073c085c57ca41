"""Command line interface.

    bbccv correct MATRIX [--method bbc|tt|both] ...   corrections on stored predictions
    bbccv run DATASET GRID [--protocol ...] ...       tune and estimate with built-in learners
    bbccv simulate [--preset smoke|full | --settings FILE] --out PREFIX
    bbccv report FILE                                 print a report bundle or bias table

Exit codes: 0 success, 1 computation error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import BBCError
from .io import (
    ReportDocument,
    dumps_reports,
    load_dataset,
    load_grid,
    parse_prediction_matrix,
    write_bias_table,
    write_prediction_matrix,
)
from .metrics import METRIC_KINDS, get_metric
from .protocols import (
    _native_ci,
    bbc,
    run_bbc_cv,
    run_bced,
    run_cv,
    run_cvt,
    run_ncv,
    run_tt,
    tt_correct,
)
from .resampling import stratified_fold_plan
from .selection import css
from .simulation import LATENT_MODES, SimSetting, preset, run_bias_study

log = logging.getLogger("bbccv")

EXIT_OK, EXIT_COMPUTE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- correct


def cmd_correct(args) -> int:
    store = parse_prediction_matrix(args.matrix)
    metric = get_metric(args.metric)
    alive = store.present.any(axis=(0, 2))
    docs = []
    common = dict(seed=args.seed, repeats=store.n_repeats)
    if args.method in ("bbc", "both"):
        res = bbc(store, metric, args.B, args.alpha, args.seed, alive=alive, selection=args.selection)
        winner = _winner(store, metric, alive, args.selection)
        docs.append(ReportDocument(
            protocol="bbc",
            metric=metric.kind,
            estimate=metric.to_native(res.estimate),
            selected_config=store.config_ids[winner],
            models_trained=0,
            ci=list(_native_ci(metric, res.ci)),
            B=args.B,
            alpha=args.alpha,
            extra={"selection": args.selection, "n_samples": store.n_samples,
                   "n_configs": store.n_configs},
            **common,
        ))
    if args.method in ("tt", "both"):
        tt = tt_correct(store, metric, alive=alive, selection=args.selection,
                        skip_degenerate=args.skip_degenerate)
        docs.append(ReportDocument(
            protocol="tt",
            metric=metric.kind,
            estimate=metric.to_native(tt.l_tt),
            selected_config=store.config_ids[tt.winner],
            models_trained=0,
            extra={"l_cvt": metric.to_native(tt.l_cvt), "tt_bias": tt.bias,
                   "skipped_folds": list(tt.skipped_folds)},
            **common,
        ))
    _emit(dumps_reports(docs), args.out)
    return EXIT_OK


def _winner(store, metric, alive, selection):
    return css(store, alive=alive, metric=metric, mode=selection).best_index


# ---------------------------------------------------------------- run


def cmd_run(args) -> int:
    data = load_dataset(args.dataset, label=args.label, event=args.event)
    grid = load_grid(args.grid)
    metric = get_metric(args.metric)
    if metric.survival and data.y.ndim != 2:
        raise UsageError("c-index needs survival labels; pass --event")
    if args.repeats < 1:
        raise UsageError("--repeats must be at least 1")
    if args.repeats > 1 and args.protocol not in ("cvt", "bbc"):
        raise UsageError(f"--repeats > 1 is supported for cvt and bbc, not {args.protocol}")
    plans = [stratified_fold_plan(data.y, args.K, seed=args.seed, repeat=r) for r in range(args.repeats)]
    plan = plans[0]
    params = dict(seed=args.seed, K=args.K, repeats=args.repeats)
    docs = []
    store = None
    p = args.protocol
    if p == "cv":
        if len(grid) != 1:
            raise UsageError(f"protocol cv takes a grid with one configuration, got {len(grid)}")
        report, _ = run_cv(grid[0], data, plan, metric)
        docs.append(ReportDocument.from_protocol(report, **params))
    elif p == "cvt":
        report, store = run_cvt(grid, data, plans, metric, args.selection)
        docs.append(ReportDocument.from_protocol(report, **params))
        if args.repeats > 1:
            alive = np.array([cid not in report.failed_configs for cid in store.config_ids])
            res = bbc(store, metric, args.B, args.alpha, args.seed, alive=alive,
                      selection=args.selection)
            docs.append(ReportDocument(
                protocol="bbc", metric=metric.kind, estimate=metric.to_native(res.estimate),
                selected_config=report.selected_config_id, models_trained=report.models_trained,
                ci=list(_native_ci(metric, res.ci)), B=args.B, alpha=args.alpha, **params,
            ))
    elif p == "bbc":
        report, store = run_bbc_cv(grid, data, plans, metric, args.B, args.alpha, args.seed,
                                   args.selection)
        docs.append(ReportDocument.from_protocol(report, B=args.B, alpha=args.alpha, **params))
    elif p == "tt":
        report, store = run_tt(grid, data, plan, metric, args.skip_degenerate)
        docs.append(ReportDocument.from_protocol(report, **params))
    elif p == "ncv":
        report = run_ncv(grid, data, plan, metric, args.selection)
        docs.append(ReportDocument.from_protocol(report, **params))
    elif p == "bced":
        report, store = run_bced(grid, data, plan, metric, args.B, args.alpha_drop, args.min_oos,
                                 args.seed, args.alpha)
        docs.append(ReportDocument.from_protocol(
            report, config_ids=grid.ids, B=args.B, alpha=args.alpha, alpha_drop=args.alpha_drop,
            min_oos=args.min_oos, **params,
        ))
    for doc in docs:
        failed = doc.extra.get("failed_configs")
        if failed:
            log.warning("%d configuration(s) failed: %s", len(failed), ", ".join(sorted(failed)))
    if args.dump_matrix:
        if store is None:
            raise UsageError(f"protocol {p} keeps no prediction matrix to dump")
        write_prediction_matrix(store, args.dump_matrix)
    _emit(dumps_reports(docs), args.out)
    return EXIT_OK


# ---------------------------------------------------------------- simulate


def _load_settings(path, seed, reps, latent) -> list[SimSetting]:
    raw = json.loads(Path(path).read_text())
    if isinstance(raw, dict):
        raw = raw.get("settings", [])
    if not raw:
        raise UsageError(f"{path}: no settings")
    out = []
    for entry in raw:
        entry = dict(entry)
        entry.setdefault("seed", seed)
        entry.setdefault("latent", latent)
        if reps is not None:
            entry["reps"] = reps
        out.append(SimSetting(**entry))
    return out


def cmd_simulate(args) -> int:
    if args.settings:
        settings = _load_settings(args.settings, args.seed, args.reps, args.latent)
    else:
        settings = preset(args.preset, seed=args.seed, reps=args.reps, latent=args.latent)
    total = sum(s.reps for s in settings)

    def progress(done, n):
        if args.verbose and (done % 100 == 0 or done == n):
            print(f"{done}/{n} replicates", file=sys.stderr)

    study = run_bias_study(settings, K=args.K, B=args.B, alpha_drop=args.alpha_drop,
                           min_oos=args.min_oos, alpha=args.alpha, progress=progress)
    prefix = Path(args.out)
    rows = write_bias_table(study, prefix.with_suffix(".json"), prefix.with_suffix(".csv"))
    print(f"{len(rows)} rows from {total} replicates -> {prefix.with_suffix('.json')}, "
          f"{prefix.with_suffix('.csv')}")
    return EXIT_OK


# ---------------------------------------------------------------- report


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def cmd_report(args) -> int:
    doc = json.loads(Path(args.file).read_text())
    out = []
    if "reports" in doc:
        for r in doc["reports"]:
            ci = r.get("ci")
            ci_text = f"  CI [{ci[0]:.4f}, {ci[1]:.4f}]" if ci else ""
            out.append(f"{r['protocol']:>5}  {r['metric']}={r['estimate']:.4f}{ci_text}  "
                       f"selected={r['selected_config']}  models={_fmt(r.get('models_trained'))}")
            for d in r.get("drop_trace", []):
                out.append(f"       dropped {d['config']} after fold {d['fold']} (p={d['p_hat']:.3f})")
    elif "rows" in doc:
        cols = ["N", "C", "mu", "protocol", "mean_bias", "se_bias", "mean_models", "coverage"]
        out.append("\t".join(cols))
        for r in doc["rows"]:
            out.append("\t".join(_fmt(r[c]) for c in cols))
    else:
        raise UsageError(f"{args.file}: neither a report bundle nor a bias table")
    print("\n".join(out))
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _add_bootstrap(p):
    p.add_argument("--B", type=int, default=1000, help="bootstrap iterations (default 1000)")
    p.add_argument("--alpha", type=float, default=0.05, help="CI level is 1 - alpha (default 0.05)")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bbccv", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"bbccv {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("correct", help="BBC and/or TT on a prediction matrix file")
    p.add_argument("matrix")
    p.add_argument("--metric", choices=METRIC_KINDS, default="zero-one")
    p.add_argument("--method", choices=("bbc", "tt", "both"), default="bbc")
    p.add_argument("--selection", choices=("pooled", "fold-averaged"), default="pooled")
    p.add_argument("--skip-degenerate", action="store_true",
                   help="TT: leave out folds where the metric is undefined")
    p.add_argument("--out")
    _add_bootstrap(p)
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("run", help="run a protocol with the built-in learners")
    p.add_argument("dataset")
    p.add_argument("grid")
    p.add_argument("--protocol", choices=("cv", "cvt", "ncv", "bced", "bbc", "tt"), default="cvt")
    p.add_argument("--K", type=int, default=10)
    p.add_argument("--metric", choices=METRIC_KINDS, default="zero-one")
    p.add_argument("--alpha-drop", type=float, default=0.99)
    p.add_argument("--min-oos", type=int, default=50)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--selection", choices=("pooled", "fold-averaged"), default="pooled")
    p.add_argument("--skip-degenerate", action="store_true")
    p.add_argument("--label", default="label", help="label column (survival: time column)")
    p.add_argument("--event", help="event column for survival data")
    p.add_argument("--dump-matrix", help="write the prediction matrix here")
    p.add_argument("--out")
    _add_bootstrap(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("simulate", help="synthetic bias study")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", choices=("smoke", "full"), default="smoke")
    src.add_argument("--settings", help="JSON list of settings")
    p.add_argument("--out", required=True, help="output prefix; writes PREFIX.json and PREFIX.csv")
    p.add_argument("--K", type=int, default=10)
    p.add_argument("--reps", type=int, help="override the replicate count")
    p.add_argument("--alpha-drop", type=float, default=0.99)
    p.add_argument("--min-oos", type=int, default=50)
    p.add_argument("--latent", choices=LATENT_MODES, default="independent")
    _add_bootstrap(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="print a report bundle or bias table")
    p.add_argument("file")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"bbccv: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"bbccv: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BBCError, ValueError, TypeError) as exc:
        print(f"bbccv: error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
