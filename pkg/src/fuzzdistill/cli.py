"""Command-line entry point for the extraction/training/prediction pipeline.

Exit codes: 0 success, 1 user error (bad arguments, unreadable inputs,
malformed data), 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path

from . import dnn, gbdt, plots
from .dataset import (
    BLOCK_KIND,
    DEFAULT_PROFILES,
    FUNCTION_KIND,
    DegenerateClassError,
    FeatureTable,
    TableError,
    apply_feature_profile,
    assemble_corpus,
    get_profile,
    read_table,
    stratified_split,
    write_ssv,
)
from .ir import DEFAULT_CONFIG, ExtractionConfig, IrParseError, parse_module
from .metrics import compute_report
from .modelio import (
    CorruptModelError,
    MissingFeatureError,
    VersionMismatchError,
)
from .pipeline import extract_rows, rows_to_table
from .service import (
    DEFAULT_HIGH_THRESHOLD,
    DEFAULT_SURE_THRESHOLD,
    ServiceConfig,
    build_service,
)
from .toy import generate_toy_corpus

KINDS = (FUNCTION_KIND, BLOCK_KIND)


class UserError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        raise UserError(message)


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise UserError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UserError(f"config file is not valid JSON: {exc}") from exc


def _extraction_config(config: dict) -> ExtractionConfig:
    section = config.get("extraction", {})
    try:
        return ExtractionConfig.from_dict(section) if section else DEFAULT_CONFIG
    except TypeError as exc:
        raise UserError(f"bad extraction config: {exc}") from exc


def _collect_ll_files(inputs: list[str]) -> list[Path]:
    files: list[Path] = []
    for item in inputs:
        path = Path(item)
        if path.is_dir():
            files.extend(sorted(path.rglob("*.ll"), key=lambda p: p.as_posix()))
        elif path.is_file():
            files.append(path)
        else:
            raise UserError(f"input path does not exist: {path}")
    return files


def _fragment_name(path: Path, taken: set[str]) -> str:
    stem = path.stem
    name = stem
    counter = 1
    while name in taken:
        name = f"{stem}_{counter}"
        counter += 1
    taken.add(name)
    return name


def cmd_extract(args) -> int:
    config = _extraction_config(_load_config_file(args.config))
    files = _collect_ll_files(args.inputs)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not files:
        print("warning: no .ll files found", file=sys.stderr)
        return 0

    modules = []
    sources = []
    failures = 0
    for path in files:
        try:
            modules.append(parse_module(path.read_text(), source_path=str(path), config=config))
            sources.append(path)
        except (OSError, IrParseError) as exc:
            failures += 1
            print(f"error: {path}: {exc}", file=sys.stderr)

    module_rows = extract_rows(modules, config, label_override=args.label)
    taken: set[str] = set()
    for path, rows in zip(sources, module_rows):
        fragment = out_dir / (_fragment_name(path, taken) + ".ssv")
        table = rows_to_table([rows], args.kind)
        fragment.write_text(write_ssv(table, with_header=False))
        print(f"{path} -> {fragment} ({len(table.rows)} rows)")
    return 1 if failures else 0


def cmd_assemble(args) -> int:
    table = assemble_corpus(args.fragments, args.kind)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(write_ssv(table, with_header=True))
    print(f"{args.out}: {len(table.rows)} rows")
    return 0


def _read_dataset(path: str, kind: str, allow_missing_label: bool = False) -> FeatureTable:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UserError(f"cannot read dataset: {exc}") from exc
    return read_table(text, kind, allow_missing_label=allow_missing_label)


def _train_one(table: FeatureTable, model_kind: str, config: dict, seed: int):
    if model_kind == "gbdt":
        overrides = config.get("gbdt", {})
        cfg = gbdt.GbdtConfig(**overrides) if overrides else gbdt.GbdtConfig()
        model = gbdt.train_gbdt(table, cfg)
        return model, gbdt.save_model(model), lambda rows: gbdt.predict_proba(model, rows)
    overrides = dict(config.get("mlp", {}))
    overrides.setdefault("seed", seed)
    cfg = dnn.MlpConfig(**overrides)
    model, _history = dnn.train_mlp(table, cfg)
    return model, dnn.save_model(model), lambda rows: dnn.predict_proba(model, rows)


def _print_report(report) -> None:
    for name in ("accuracy", "precision", "recall", "f1", "auc_roc", "mcc", "kappa"):
        print(f"{name:10s} {getattr(report, name):.4f}")
    cm = report.confusion
    print(f"confusion  tn={cm.tn} fp={cm.fp} fn={cm.fn} tp={cm.tp}")


def _write_report_files(report, scores, labels, importance, out_dir: Path, figures: bool) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "report.json"
    report_path.write_text(json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n")
    print(f"report: {report_path}")
    if not figures:
        return
    written = [
        plots.plot_confusion(report.confusion, out_dir / "confusion_matrix.png"),
        plots.plot_roc(scores, labels, out_dir / "roc_curve.png"),
        plots.plot_pr(scores, labels, out_dir / "pr_curve.png"),
    ]
    if importance:
        written.append(plots.plot_importance(importance, out_dir / "feature_importance.png"))
    print("figures: " + ", ".join(str(p) for p in written))


def cmd_train(args) -> int:
    config = _load_config_file(args.config)
    table = _read_dataset(args.dataset, args.kind)
    profile = get_profile(args.profile or DEFAULT_PROFILES[args.kind])
    table = apply_feature_profile(table, profile)
    train_part, test_part = stratified_split(table, args.test_fraction, seed=args.seed)

    model, payload, predictor = _train_one(train_part, args.model, config, args.seed)
    scores = predictor(test_part)
    labels = test_part.labels()
    report = compute_report(scores, labels)

    out_model = Path(args.out)
    out_model.parent.mkdir(parents=True, exist_ok=True)
    out_model.write_bytes(payload)
    print(f"model: {out_model}")

    importance = gbdt.feature_importance(model) if args.model == "gbdt" else (
        dnn.permutation_importance(model, test_part, seed=args.seed)
    )
    report_dir = Path(args.report_dir) if args.report_dir else out_model.parent
    _write_report_files(report, scores, labels, importance, report_dir, args.figures)
    if args.learning_curve:
        from .metrics import learning_curve

        fractions = [float(f) for f in args.learning_curve.split(",")]
        trainer = _curve_trainer(args.model, config, args.seed)
        points = learning_curve(trainer, train_part, fractions, seed=args.seed)
        plots.plot_learning_curve(points, report_dir / "learning_curve.png")
        print(f"figures: {report_dir / 'learning_curve.png'}")
    _print_report(report)
    return 0


def _curve_trainer(model_kind: str, config: dict, seed: int):
    def trainer(table: FeatureTable):
        _model, _payload, predictor = _train_one(table, model_kind, config, seed)
        return predictor

    return trainer


def _load_any_model(path: str):
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise UserError(f"cannot read model: {exc}") from exc
    try:
        kind = json.loads(data.decode())["format"]
    except Exception as exc:
        raise CorruptModelError(f"unreadable model file: {exc}") from exc
    if kind == "fuzzdistill-gbdt":
        model = gbdt.load_model(data)
        return model, lambda rows: gbdt.predict_proba(model, rows), "gbdt"
    if kind == "fuzzdistill-mlp":
        model = dnn.load_model(data)
        return model, lambda rows: dnn.predict_proba(model, rows), "mlp"
    raise CorruptModelError(f"unknown model format {kind!r}")


def cmd_evaluate(args) -> int:
    table = _read_dataset(args.dataset, args.kind)
    model, predictor, family = _load_any_model(args.model_file)
    scores = predictor(table)
    labels = table.labels()
    report = compute_report(scores, labels)
    importance = gbdt.feature_importance(model) if family == "gbdt" else (
        dnn.permutation_importance(model, table, seed=args.seed)
    )
    report_dir = Path(args.report_dir) if args.report_dir else Path(args.model_file).parent
    _write_report_files(report, scores, labels, importance, report_dir, args.figures)
    _print_report(report)
    return 0


def cmd_predict(args) -> int:
    config = _load_config_file(args.config)
    thresholds = config.get("thresholds", {})
    high = float(thresholds.get("high", DEFAULT_HIGH_THRESHOLD))
    sure = float(thresholds.get("sure", DEFAULT_SURE_THRESHOLD))

    model, predictor, _family = _load_any_model(args.model_file)
    table = _read_dataset(args.features, args.kind, allow_missing_label=True)
    scores = predictor(table)
    name_column = "FunctionName" if args.kind == FUNCTION_KIND else "BlockName"
    names = table.column(name_column)

    minimum = {"all": None, "high": high, "sure": sure}[args.filter]
    records = [
        {"name": str(name), "probability": float(p), "predicted": 1 if p >= 0.5 else 0}
        for name, p in zip(names, scores)
        if minimum is None or p >= minimum
    ]
    body = {
        "model_file": Path(args.model_file).name,
        "filter": args.filter,
        "total_rows": len(table.rows),
        "records": records,
    }
    text = json.dumps(body, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out} ({len(records)} records)")
    else:
        print(text, end="")
    return 0


def cmd_tune(args) -> int:
    config = _load_config_file(args.config)
    table = _read_dataset(args.dataset, args.kind)
    profile = get_profile(args.profile or DEFAULT_PROFILES[args.kind])
    table = apply_feature_profile(table, profile)
    try:
        grid = json.loads(Path(args.grid).read_text())
    except OSError as exc:
        raise UserError(f"cannot read grid file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UserError(f"grid file is not valid JSON: {exc}") from exc

    if args.model == "gbdt":
        base = gbdt.GbdtConfig(**config.get("gbdt", {}))
        result = gbdt.grid_search(table, grid, args.folds, base_config=base, seed=args.seed)
        best = result.best_config
    else:
        overrides = dict(config.get("mlp", {}))
        overrides.setdefault("seed", args.seed)
        base = dnn.MlpConfig(**overrides)

        def fit_predict(cfg, fit_part, eval_part):
            model, _history = dnn.train_mlp(fit_part, cfg)
            return dnn.predict_proba(model, eval_part)

        result = gbdt.grid_search(
            table, grid, args.folds, base_config=base, fit_predict=fit_predict, seed=args.seed
        )
        best = result.best_config

    print("best configuration:")
    for key in grid:
        print(f"  {key} = {getattr(best, key)}")
    for params, scores in zip(result.candidates, result.fold_scores):
        mean = sum(scores) / len(scores)
        print(f"  candidate {params} mean_auc={mean:.4f}")
    if args.out:
        body = {
            "best": {key: getattr(best, key) for key in grid},
            "candidates": result.candidates,
            "fold_scores": result.fold_scores,
        }
        Path(args.out).write_text(json.dumps(body, sort_keys=True, indent=2) + "\n")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    config = _load_config_file(args.config)
    section = config.get("service", {})
    model_paths = dict(section.get("models", {}))
    for model_id in ("dnnfn", "dnnbb", "gbdtfn", "gbdtbb"):
        override = getattr(args, model_id)
        if override:
            model_paths[model_id] = override
    if not model_paths:
        raise UserError("no models configured; pass --gbdtfn/... or a config file")
    service_config = ServiceConfig(
        model_paths=model_paths,
        high_threshold=float(section.get("high_threshold", DEFAULT_HIGH_THRESHOLD)),
        sure_threshold=float(section.get("sure_threshold", DEFAULT_SURE_THRESHOLD)),
        ui_dir=args.ui_dir or section.get("ui_dir"),
    )
    app = build_service(service_config)
    try:
        uvicorn.run(app, host=args.host, port=args.port)
    except SystemExit as exc:  # uvicorn exits 3 when it cannot bind
        raise UserError(f"server failed to start (port {args.port} in use?)") from exc
    return 0


def cmd_toy_corpus(args) -> int:
    paths = generate_toy_corpus(args.out_dir, pairs=args.pairs, seed=args.seed)
    print(f"wrote {len(paths)} files under {args.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fuzzdistill", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("extract", help="parse .ll files into header-less SSV fragments")
    p.add_argument("inputs", nargs="+", help=".ll files or directories")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--label", type=int, choices=(0, 1), default=None,
                   help="force this label instead of name-marker derivation")
    p.add_argument("--config", default=None, help="JSON config file")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("assemble", help="concatenate fragments into one dataset")
    p.add_argument("--fragments", required=True, help="directory of .ssv fragments")
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=KINDS, required=True)
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("train", help="train a classifier and report held-out metrics")
    p.add_argument("--dataset", required=True)
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--model", choices=("gbdt", "mlp"), default="gbdt")
    p.add_argument("--profile", default=None)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--report-dir", default=None)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--learning-curve", default=None,
                   help="comma-separated training fractions, e.g. 0.2,0.5,1.0")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a labeled dataset with a saved model")
    p.add_argument("--dataset", required=True)
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--model-file", required=True)
    p.add_argument("--report-dir", default=None)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="rank rows of a feature file by vulnerability")
    p.add_argument("--features", required=True)
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--model-file", required=True)
    p.add_argument("--filter", choices=("all", "high", "sure"), default="all")
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("tune", help="grid search with stratified cross-validation")
    p.add_argument("--dataset", required=True)
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--model", choices=("gbdt", "mlp"), default="gbdt")
    p.add_argument("--grid", required=True, help="JSON file: param -> candidates")
    p.add_argument("--folds", type=int, default=3)
    p.add_argument("--profile", default=None)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("serve", help="run the HTTP prediction service")
    p.add_argument("--config", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--dnnfn", default=None)
    p.add_argument("--dnnbb", default=None)
    p.add_argument("--gbdtfn", default=None)
    p.add_argument("--gbdtbb", default=None)
    p.add_argument("--ui-dir", default=None)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("toy-corpus", help="generate a small labeled IR corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--pairs", type=int, default=100)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_toy_corpus)

    return parser


_USER_ERRORS = (
    UserError,
    TableError,
    IrParseError,
    MissingFeatureError,
    CorruptModelError,
    VersionMismatchError,
    DegenerateClassError,
)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
