"""Command-line interface.

Exit codes: 0 success, 2 configuration/validation error, 3 data error,
4 internal error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .archive import FORMAT_VERSION, load_model, save_model
from .data import BinaryLabel, Dataset, load_dataset, save_dataset
from .errors import ConfigError, DataError, PartitionOverlapError
from .forest import TsfHyperParams, TsfModel
from .multivariate import BaseSpec, MetaParams, MultivariateStrategy, fit_multivariate, fit_stacking
from .prep import (
    SyntheticConfig,
    WindowConfig,
    class_ratio,
    generate_synthetic,
    load_flares,
    load_regions,
    slice_sliding_windows,
    undersample_negatives,
)
from .selection import DEFAULT_GRID, HyperParameterGrid, grid_search, results_csv
from .tree import ClassWeights
from .verification import SCORERS, SkillReport, tabulate

log = logging.getLogger("allclear_tsf")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INTERNAL = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _partitions(text: str) -> list[int]:
    try:
        parts = sorted({int(p) for p in text.split(",") if p.strip()})
    except ValueError:
        raise argparse.ArgumentTypeError(f"partitions must be comma-separated integers, got {text!r}") from None
    if not parts:
        raise argparse.ArgumentTypeError("empty partition list")
    return parts


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _intervals(text: str):
    return "auto" if text == "auto" else int(text)


def _write_json(path, obj) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _dataset_paths(out: str) -> tuple[Path, Path]:
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    return d / "catalog.csv", d / "values.csv"


def _load(args, repair: bool = True) -> Dataset:
    ds = load_dataset(args.catalog, args.values, args.cadence)
    return ds.repaired() if repair else ds


def _add_data(p, required=True):
    p.add_argument("--catalog", required=required, help="catalog CSV (instance_id,partition,flare_class)")
    p.add_argument("--values", required=required, help="values CSV (instance_id,step,<params...>)")
    p.add_argument("--cadence", type=int, default=12, help="cadence in minutes (metadata only)")


def _add_hparams(p):
    p.add_argument("--strategy", default="column-ensemble", help="column-concatenation or column-ensemble")
    p.add_argument("--estimators", type=int, default=100)
    p.add_argument("--depth", type=int, default=5)
    p.add_argument("--weights", default="1,1", help="class weights XM,CBN, e.g. 0.33,0.67")
    p.add_argument("--intervals", type=_intervals, default="auto", help="intervals per tree or 'auto'")
    p.add_argument("--min-interval-length", type=int, default=3)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--min-leaf", type=int, default=1)


def _hparams(args) -> TsfHyperParams:
    return TsfHyperParams(
        n_estimators=args.estimators,
        max_depth=args.depth,
        class_weights=ClassWeights.parse(args.weights),
        intervals_per_tree=args.intervals,
        min_interval_length=args.min_interval_length,
        threshold=args.threshold,
        min_leaf=args.min_leaf,
    )


def _require_disjoint(a, b, what="training and test partitions") -> None:
    if a and b:
        shared = set(a) & set(b)
        if shared:
            raise PartitionOverlapError(f"{what} overlap: {sorted(shared)}")


def _select(ds: Dataset, partitions, role: str) -> Dataset:
    sub = ds.select(partitions)
    if not len(sub):
        raise DataError(f"no instances in {role} partition(s) {partitions}")
    return sub


# -- commands ---------------------------------------------------------------

def cmd_synth(args) -> int:
    if args.config:
        base = json.loads(Path(args.config).read_text())
    else:
        base = {}
    overrides = {
        "n_instances": args.n, "n_positive": args.positive, "length": args.length,
        "class_separation": args.separation, "noise_sigma": args.noise, "seed": args.seed,
        "parameters": args.params.split(",") if args.params else None,
    }
    base.update({k: v for k, v in overrides.items() if v is not None})
    if "seed" not in base:
        raise ConfigError("--seed (or a seed in --config) is required")
    try:
        cfg = SyntheticConfig.from_dict(base)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    ds = generate_synthetic(cfg)
    catalog, values = _dataset_paths(args.out)
    save_dataset(ds, catalog, values)
    _write_json(None, {"format_version": FORMAT_VERSION, "command": "synth", "config": cfg.to_dict(),
                       "instances": len(ds), **ds.class_counts(), "catalog": str(catalog), "values": str(values)})
    return EXIT_OK


def cmd_ingest(args) -> int:
    raw = _load(args, repair=False)
    missing = int(np.isnan(raw.array()).sum()) if len(raw) else 0
    ds = raw.repaired()
    summary = {
        "format_version": FORMAT_VERSION, "command": "ingest",
        "config": {"catalog": args.catalog, "values": args.values, "cadence_minutes": args.cadence},
        "instances": len(ds), "length": ds.length, "parameters": list(ds.parameters),
        "partitions": ds.partitions, **ds.class_counts(), "repaired_cells": missing, "digest": ds.digest(),
    }
    if args.out:
        catalog, values = _dataset_paths(args.out)
        save_dataset(ds, catalog, values)
        summary.update(catalog=str(catalog), values=str(values))
    _write_json(None, summary)
    return EXIT_OK


def cmd_undersample(args) -> int:
    ds = _load(args, repair=False)
    out = undersample_negatives(ds, args.ratio, args.seed)
    catalog, values = _dataset_paths(args.out)
    save_dataset(out, catalog, values)
    _write_json(None, {
        "format_version": FORMAT_VERSION, "command": "undersample",
        "config": {"ratio": args.ratio, "seed": args.seed, "catalog": args.catalog, "values": args.values},
        "before": {**ds.class_counts(), "ratio": class_ratio(ds)},
        "after": {**out.class_counts(), "ratio": class_ratio(out)},
        "catalog": str(catalog), "values": str(values),
    })
    return EXIT_OK


def cmd_slice(args) -> int:
    regions = load_regions(args.regions, args.meta)
    flares = load_flares(args.flares) if args.flares else []
    wc = WindowConfig(args.observation_hours, args.step_hours, args.horizon_hours)
    instances = []
    for region in regions:
        own = [f for f in flares if f.region_id == region.region_id]
        instances.extend(slice_sliding_windows(region, own, wc, args.partition))
    if not instances:
        raise DataError("no windows produced")
    cadences = {r.cadence_minutes for r in regions}
    if len(cadences) != 1:
        raise DataError(f"regions have different cadences {sorted(cadences)}")
    ds = Dataset(tuple(regions[0].values), instances, cadences.pop())
    catalog, values = _dataset_paths(args.out)
    save_dataset(ds, catalog, values)
    _write_json(None, {
        "format_version": FORMAT_VERSION, "command": "slice",
        "config": {"observation_hours": wc.observation_hours, "step_hours": wc.step_hours,
                   "horizon_hours": wc.horizon_hours, "partition": args.partition},
        "regions": len(regions), "instances": len(ds), "length": ds.length, **ds.class_counts(),
        "catalog": str(catalog), "values": str(values),
    })
    return EXIT_OK


def _train_stacking(args, ds: Dataset, spec_path) -> int:
    spec = json.loads(Path(spec_path).read_text())
    if "base_models" not in spec:
        raise ConfigError(f"{spec_path}: stacking specification needs 'base_models'")
    base_specs = [BaseSpec.from_dict(b) for b in spec["base_models"]]
    meta = MetaParams.from_dict(spec.get("meta", {}))
    if not args.meta_partitions:
        raise ConfigError("stacking needs --meta-partitions")
    _require_disjoint(args.partitions, args.meta_partitions, "base and meta training partitions")
    _require_disjoint(args.partitions, args.test_partitions)
    _require_disjoint(args.meta_partitions, args.test_partitions, "meta training and test partitions")
    base = _select(ds, args.partitions, "base training")
    meta_ds = _select(ds, args.meta_partitions, "meta training")
    model = fit_stacking(base_specs, base, meta_ds, meta, args.seed, args.jobs)
    config = {"command": "train", "stack": spec, "partitions": args.partitions,
              "meta_partitions": args.meta_partitions, "test_partitions": args.test_partitions,
              "seed": args.seed, "parameters": list(ds.parameters)}
    save_model(args.out, model, config, base.digest() + ":" + meta_ds.digest())
    log.info("wrote stacking archive %s", args.out)
    return EXIT_OK


def cmd_train(args) -> int:
    _require_disjoint(args.partitions, args.test_partitions)
    ds = _load(args)
    if args.stack:
        return _train_stacking(args, ds, args.stack)
    hp = _hparams(args)
    strategy = MultivariateStrategy.parse(args.strategy)
    train = _select(ds, args.partitions, "training")
    model = fit_multivariate(train, strategy, hp, args.seed, args.jobs)
    config = {"command": "train", "strategy": strategy.value, "hyperparams": hp.to_dict(),
              "partitions": args.partitions, "test_partitions": args.test_partitions, "seed": args.seed,
              "parameters": list(ds.parameters)}
    save_model(args.out, model, config, train.digest())
    log.info("wrote archive %s", args.out)
    return EXIT_OK


def cmd_stack(args) -> int:
    _require_disjoint(args.partitions, args.test_partitions)
    ds = _load(args)
    return _train_stacking(args, ds, args.spec)


def _read_predictions(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"instance_id", "predicted", "actual"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise DataError(f"{path}: header must contain instance_id,prob_xm,predicted,actual")
        rows = list(reader)
    if not rows:
        raise DataError(f"{path}: no predictions")
    actual = [BinaryLabel.parse(r["actual"]) for r in rows]
    predicted = [BinaryLabel.parse(r["predicted"]) for r in rows]
    return rows, actual, predicted


def write_predictions(path, ids, probs, predicted, actual) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["instance_id", "prob_xm", "predicted", "actual"])
        for i, p, yh, y in zip(ids, probs, predicted, actual):
            w.writerow([i, "" if p is None else repr(float(p)), "XM" if yh else "CBN", "XM" if y else "CBN"])


def cmd_evaluate(args) -> int:
    modes = sum(x is not None for x in (args.model, args.predictions, args.baseline))
    if modes != 1:
        raise ConfigError("choose exactly one of --model, --predictions, --baseline")
    config = {"command": "evaluate", "test_partitions": args.test_partitions}
    if args.predictions:
        _, actual, predicted = _read_predictions(args.predictions)
        report = SkillReport.from_table(tabulate(actual, predicted))
        config["predictions"] = args.predictions
    else:
        if not (args.catalog and args.values):
            raise ConfigError("--catalog and --values are required with --model/--baseline")
        if not args.test_partitions:
            raise ConfigError("--test-partitions is required")
        ds = _select(_load(args), args.test_partitions, "test")
        if args.baseline:
            probs = np.zeros(len(ds))
            pred = np.zeros(len(ds), dtype=bool)
            config["baseline"] = args.baseline
        else:
            model, archive = load_model(args.model)
            if args.strict:
                cfg = archive.get("config", {})
                trained = set(cfg.get("partitions") or []) | set(cfg.get("meta_partitions") or [])
                _require_disjoint(sorted(trained), args.test_partitions)
            if isinstance(model, TsfModel):
                if len(ds.parameters) != 1:
                    raise DataError("univariate archive needs a single-parameter dataset")
                probs = model.predict_proba_batch(ds.array()[:, 0, :])
                pred = probs >= model.hyperparams.threshold
            else:
                if tuple(ds.parameters) != tuple(model.parameters):
                    raise DataError(f"archive parameters {list(model.parameters)} do not match dataset "
                                    f"{list(ds.parameters)}")
                probs = model.predict_proba(ds)
                pred = probs >= model.threshold
            config["model"] = args.model
            config["model_kind"] = archive["model_kind"]
        report = SkillReport.from_table(tabulate(ds.is_xm, pred))
        if args.predictions_out:
            write_predictions(args.predictions_out, ds.ids, probs, pred, ds.is_xm)
    doc = {"format_version": FORMAT_VERSION, "config": config, **report.to_dict()}
    _write_json(args.out_json, doc)
    if args.out_csv:
        Path(args.out_csv).write_text(report.to_csv())
    return EXIT_OK


def cmd_gridsearch(args) -> int:
    grid = HyperParameterGrid.from_dict(json.loads(Path(args.grid).read_text())) if args.grid else DEFAULT_GRID
    if args.strategy:
        grid = HyperParameterGrid(grid.n_estimators, grid.max_depth, grid.class_weights,
                                  MultivariateStrategy.parse(args.strategy), grid.base)
    ds = _load(args)
    if args.partitions:
        _require_disjoint(args.partitions, args.test_partitions)
        ds = _select(ds, args.partitions, "search")
    best, results = grid_search(ds, grid, args.scorer, args.seed, args.jobs)
    Path(args.out).write_text(results_csv(results, args.scorer))
    winner = min(results, key=lambda r: r.rank_key())
    doc = {
        "format_version": FORMAT_VERSION,
        "config": {"command": "gridsearch", "grid": grid.to_dict(), "scorer": args.scorer, "seed": args.seed,
                   "partitions": ds.partitions},
        "scorer": args.scorer,
        "best_params": {"strategy": grid.strategy.value, **best.to_dict()},
        "best_mean_score": winner.mean_score,
        "best_fold_scores": {str(f): s for f, s in winner.per_fold_scores},
        "n_grid_points": len(results),
    }
    _write_json(args.best, doc)
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="allclear-tsf",
                     description="Interval-based multivariate time series forests for all-clear flare forecasting.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--config", help="JSON document with SyntheticConfig fields")
    p.add_argument("--n", type=int)
    p.add_argument("--positive", type=int)
    p.add_argument("--length", type=int)
    p.add_argument("--params", help="comma-separated parameter names")
    p.add_argument("--separation", type=float)
    p.add_argument("--noise", type=float)
    p.add_argument("--seed", type=_seed)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="validate a dataset and repair missing values")
    _add_data(p)
    p.add_argument("--out", help="directory for the repaired dataset")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("undersample", help="reduce negatives to a target class ratio")
    _add_data(p)
    p.add_argument("--ratio", type=float, required=True, help="target negatives per positive")
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_undersample)

    p = sub.add_parser("slice", help="cut region series into labelled windows")
    p.add_argument("--regions", required=True, help="region CSV (region_id,step,<params...>)")
    p.add_argument("--meta", required=True, help="sidecar JSON with region_id, start_time, cadence_minutes")
    p.add_argument("--flares", help="flare catalog CSV (region_id,peak_time,flare_class)")
    p.add_argument("--partition", type=int, default=1)
    p.add_argument("--observation-hours", type=float, default=12.0)
    p.add_argument("--step-hours", type=float, default=1.0)
    p.add_argument("--horizon-hours", type=float, default=24.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_slice)

    for name, helptext in (("train", "fit a multivariate forest or stacking ensemble"),
                           ("stack", "fit a stacking ensemble")):
        p = sub.add_parser(name, help=helptext)
        _add_data(p)
        if name == "train":
            _add_hparams(p)
            p.add_argument("--stack", help="stacking specification JSON")
        else:
            p.add_argument("--spec", required=True, help="stacking specification JSON")
        p.add_argument("--partitions", type=_partitions, required=True, help="(base) training partitions")
        p.add_argument("--meta-partitions", type=_partitions, help="meta-learner training partitions")
        p.add_argument("--test-partitions", type=_partitions, help="reserved test partitions (must be disjoint)")
        p.add_argument("--seed", type=_seed, required=True)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--out", required=True, help="archive path")
        p.set_defaults(func=cmd_train if name == "train" else cmd_stack)

    p = sub.add_parser("evaluate", help="score predictions")
    _add_data(p, required=False)
    p.add_argument("--model", help="model archive")
    p.add_argument("--predictions", help="external prediction CSV (instance_id,prob_xm,predicted,actual)")
    p.add_argument("--baseline", choices=["all-negative"])
    p.add_argument("--test-partitions", type=_partitions)
    p.add_argument("--strict", action="store_true", help="refuse test partitions the model was trained on")
    p.add_argument("--out-json", help="report JSON path (default stdout)")
    p.add_argument("--out-csv", help="one-row report CSV path")
    p.add_argument("--predictions-out", help="per-instance prediction CSV path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("gridsearch", help="partition-aware grid search")
    _add_data(p)
    p.add_argument("--grid", help="grid JSON (n_estimators, max_depth, class_weights, strategy)")
    p.add_argument("--strategy", help="override the grid's strategy")
    p.add_argument("--scorer", default="hss", choices=SCORERS)
    p.add_argument("--partitions", type=_partitions, help="partitions to search over (default all)")
    p.add_argument("--test-partitions", type=_partitions, help="reserved test partitions (must be disjoint)")
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="results CSV")
    p.add_argument("--best", help="best-params JSON path (default stdout)")
    p.set_defaults(func=cmd_gridsearch)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
