"""Command-line interface.

Exit codes: 0 success, 2 validation error, 3 convergence warning (results
still written), 4 I/O error.
"""
import argparse
import json
import sys
import warnings
from pathlib import Path

from . import cart
from .dataio import FeatureTable, ingest_manifest
from .errors import CartPsoError, StageError, ValidationError
from .features import DEFAULT_CATALOG
from .pipeline import (
    PipelineConfig,
    emit_report,
    evaluate_table,
    extract_features,
    predict_table,
    run_pipeline,
)
from .pso import trace_to_csv
from .svm import ConvergenceWarning, SvmMulticlassModel

EXIT_OK, EXIT_VALIDATION, EXIT_CONVERGENCE, EXIT_IO = 0, 2, 3, 4


def _write(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8", newline="")


def _config(args):
    overrides = {}
    for key in ("k_selected", "seed", "task", "n_trees"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if args.config:
        return PipelineConfig.load(args.config, overrides)
    return PipelineConfig.from_dict(overrides)


def _load_table(path, config=None):
    class_list = list(config.class_list) if config and config.class_list else None
    return FeatureTable.read(path, class_list)


def cmd_extract(args):
    manifest = ingest_manifest(args.manifest)
    table = extract_features(manifest, n_jobs=args.jobs)
    _write(table.to_csv(), args.output)
    return EXIT_OK


def cmd_rank(args):
    table = _load_table(args.features)
    classes = table.classes
    codes = [classes.index(lab) for lab in table.labels]
    report = cart.feature_importance(
        table.X, codes, cart.CartParams(), args.trees, args.seed, DEFAULT_CATALOG.names
    )
    _write(report.to_csv(), args.output)
    return EXIT_OK


def _run(args):
    config = _config(args)
    src = Path(args.input)
    if src.suffix.lower() in (".jsonl", ".json", ".ndjson"):
        manifest = ingest_manifest(src)
        table = extract_features(manifest, n_jobs=getattr(args, "jobs", 1))
        if config.normal_classes is None and manifest.normal_class_set:
            config = PipelineConfig.from_dict(
                {"normal_classes": manifest.normal_class_set}, config
            )
    else:
        table = _load_table(src, config)
    return run_pipeline(table, config)


def _side_outputs(args, report):
    if args.trace:
        _write(trace_to_csv(report.trace), args.trace)


def cmd_train(args):
    report = _run(args)
    _side_outputs(args, report)
    _write(report.model.to_json() + "\n", args.output)
    if args.report:
        _write(emit_report(report, "json"), args.report)
    return EXIT_OK if report.converged else EXIT_CONVERGENCE


def cmd_pipeline(args):
    report = _run(args)
    _side_outputs(args, report)
    _write(emit_report(report, args.format, not args.no_timings), args.output)
    if args.model:
        _write(report.model.to_json() + "\n", args.model)
    return EXIT_OK if report.converged else EXIT_CONVERGENCE


def _load_model(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(path)
    return SvmMulticlassModel.from_json(path.read_text(encoding="utf-8"))


def cmd_predict(args):
    model = _load_model(args.model)
    table = _load_table(args.features)
    pred = predict_table(model, table)
    lines = ["sample_id,prediction"] + [f"{s},{p}" for s, p in zip(table.sample_ids, pred)]
    _write("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def cmd_evaluate(args):
    model = _load_model(args.model)
    table = _load_table(args.features)
    ev = evaluate_table(model, table)
    _write(ev.to_csv() if args.format == "csv" else ev.to_json() + "\n", args.output)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="cartpso", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("extract", help="extract the 20 features for every manifest record")
    s.add_argument("manifest")
    s.add_argument("-o", "--output", default="-")
    s.add_argument("-j", "--jobs", type=int, default=1)
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("rank", help="Gini_Gain importance of each feature")
    s.add_argument("features")
    s.add_argument("--trees", type=int, default=25)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", default="-")
    s.set_defaults(func=cmd_rank)

    def run_options(s):
        s.add_argument("--config")
        s.add_argument("--k", dest="k_selected", type=int)
        s.add_argument("--seed", type=int)
        s.add_argument("--task", choices=["two_class", "seven_class"])
        s.add_argument("--trees", dest="n_trees", type=int)
        s.add_argument("-j", "--jobs", type=int, default=1)
        s.add_argument("--trace", help="write the PSO best-fitness trace as CSV")

    s = sub.add_parser("train", help="rank, select, tune and fit; write the model")
    s.add_argument("input", metavar="features.csv")
    run_options(s)
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--report")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("predict", help="predict labels for a feature table")
    s.add_argument("model")
    s.add_argument("features")
    s.add_argument("-o", "--output", default="-")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("evaluate", help="score a model on a labelled feature table")
    s.add_argument("model")
    s.add_argument("features")
    s.add_argument("--format", choices=["json", "csv"], default="json")
    s.add_argument("-o", "--output", default="-")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("pipeline", help="full run from a manifest or feature table")
    s.add_argument("input", metavar="manifest|features.csv")
    run_options(s)
    s.add_argument("--format", choices=["json", "csv", "text"], default="json")
    s.add_argument("--no-timings", action="store_true",
                   help="omit wall-clock timings so reports are reproducible byte for byte")
    s.add_argument("-o", "--output", default="-")
    s.add_argument("--model")
    s.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION if isinstance(exc.cause, ValidationError) else EXIT_IO
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, CartPsoError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
