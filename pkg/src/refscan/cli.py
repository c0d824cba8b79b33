"""Command-line entry point: `refscan <subcommand>`.

The subcommands chain into the full workflow, each reading the previous
step's artifact:

    mine -> label -> featurize -> train -> predict -> explain / ensemble
                              \\-> evaluate (fits everything per fold)

Exit codes: 0 success, 1 usage error, 2 data error.  Every artifact is
written atomically, and JSON artifacts carry a provenance object (tool,
version, config hash, creation time).  A JSON config file passed via
--config supplies defaults for any flag (keys use underscores); explicit
flags win.
"""

from __future__ import annotations

import argparse
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__, baselines, corpus, ensemble, explain, features, labeling
from . import evaluation, model as model_mod, pipeline, sampling
from ._util import read_json, read_jsonl, sha256_of, write_json, write_jsonl
from .errors import ParseError, RefscanError, SchemaMismatch, UnknownModelKind

_SETTING_TO_STRATEGY = {
    "mixed": "mixed",
    "within": "within_project",
    "cross": "cross_project",
}
MODEL_KINDS = ("gbdt",) + baselines.KINDS
SAMPLER_FLAGS = ("none", "nearmiss1", "nearmiss2", "nearmiss3")


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; this tool reserves 2 for
    data errors, so usage problems exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _scan_config_path(argv) -> str | None:
    for i, token in enumerate(argv):
        if token == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if token.startswith("--config="):
            return token.split("=", 1)[1]
    return None


def _config_namespace(argv, parser: _Parser) -> argparse.Namespace | None:
    """Pre-load config values onto the namespace so argparse treats them
    as already-set (flags given on the command line still override)."""
    path = _scan_config_path(argv)
    if path is None:
        return None
    obj = read_json(path, what="config file")
    if not isinstance(obj, dict):
        raise ParseError(f"config file {path}: expected a JSON object")
    known = _all_dests(parser)
    ns = argparse.Namespace()
    for key, value in obj.items():
        dest = key.replace("-", "_")
        if dest not in known:
            raise ParseError(f"config file {path}: unknown option {key!r}")
        setattr(ns, dest, value)
    return ns


def _all_dests(parser: argparse.ArgumentParser) -> set:
    dests = set()
    for action in parser._actions:
        dests.add(action.dest)
        if isinstance(action, argparse._SubParsersAction):
            for sub in action.choices.values():
                dests |= _all_dests(sub)
    return dests


def _resolve_jobs(value) -> int:
    if value is not None:
        return max(1, int(value))
    env = os.environ.get("REFSCAN_JOBS", "")
    if env.strip():
        try:
            return max(1, int(env))
        except ValueError:
            print(f"warning: ignoring non-numeric REFSCAN_JOBS={env!r}", file=sys.stderr)
    return 1


def _provenance(command: str, args: argparse.Namespace) -> dict:
    config = {"command": command}
    for key, value in sorted(vars(args).items()):
        if key in ("func", "config") or callable(value):
            continue
        config[key] = value
    return {
        "tool": "refscan",
        "version": __version__,
        "config_hash": sha256_of(config),
        "created_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def _status(prov: dict, command: str, out_path: str, detail: str = "") -> None:
    suffix = f" ({detail})" if detail else ""
    print(
        f"refscan {prov['version']} {command} config={prov['config_hash'][:12]} "
        f"-> {out_path}{suffix}"
    )


def _sampler_config(flag: str) -> sampling.SamplerConfig | None:
    if flag == "none":
        return None
    return sampling.SamplerConfig(variant=sampling.variant_from_flag(flag))


def _load_model_checked(model_path: str, schema: pipeline.FeatureSchema):
    fitted = model_mod.read_model(model_path)
    expected = schema.content_hash()
    if fitted.schema_hash and fitted.schema_hash != expected:
        raise SchemaMismatch(
            f"model {model_path} was trained against schema {fitted.schema_hash[:12]}, "
            f"but the given schema hashes to {expected[:12]}"
        )
    return fitted


def _model_proba(fitted, dense: np.ndarray) -> np.ndarray:
    if isinstance(fitted, model_mod.GbdtModel):
        return model_mod.predict_proba(fitted, dense)
    return fitted.predict_proba(dense)


# ---------------------------------------------------------------- commands


def cmd_mine(args) -> int:
    entries = corpus.load_manifest(args.manifest)
    records = corpus.mine_corpus(entries, jobs=_resolve_jobs(args.jobs))
    corpus.write_commits(args.out, records)
    prov = _provenance("mine", args)
    _status(prov, "mine", args.out, f"{len(records)} commits from {len(entries)} repos")
    return 0


def cmd_label(args) -> int:
    commits = corpus.read_commits(args.commits)
    keywords = (
        labeling.load_keywords(args.keywords) if args.keywords else labeling.default_keywords()
    )
    rule_map = labeling.ingest_rule_labels(args.rules) if args.rules else {}
    records = []
    missing_rule = 0
    for commit in commits:
        has_exec = any(f.is_executable for f in commit.files)
        if args.rules and commit.sha not in rule_map:
            missing_rule += 1
        records.append(
            labeling.LabelRecord.build(commit.sha, commit.message, has_exec, keywords, rule_map)
        )
    if missing_rule:
        print(
            f"warning: {missing_rule} of {len(records)} commits had no rule verdict; "
            "counted as non-refactoring",
            file=sys.stderr,
        )
    write_jsonl(args.out, [r.to_json() for r in records])
    positives = sum(1 for r in records if r.combined)
    prov = _provenance("label", args)
    _status(prov, "label", args.out, f"{positives} of {len(records)} labeled refactoring")
    return 0


def cmd_featurize(args) -> int:
    if args.dataset and not (args.fit_schema or args.apply_schema):
        print("refscan featurize: error: --dataset requires --fit-schema or --apply-schema",
              file=sys.stderr)
        return 1
    if (args.fit_schema or args.apply_schema) and not args.dataset:
        print("refscan featurize: error: --fit-schema/--apply-schema require --dataset",
              file=sys.stderr)
        return 1

    commits = corpus.read_commits(args.commits)
    labels = {
        rec.sha: rec
        for rec in (
            labeling.LabelRecord.from_json(obj)
            for obj in read_jsonl(args.labels, what="labels file")
        )
    }
    entries = corpus.load_manifest(args.manifest)
    repo_paths = {e.id: e.path for e in entries}
    rows = features.extract_features(commits, labels, repo_paths, n_max=args.ngram_max)
    features.write_features(args.out, rows)

    prov = _provenance("featurize", args)
    detail = f"{len(rows)} rows"
    if args.fit_schema:
        schema = pipeline.fit_schema(rows)
        pipeline.write_schema(args.fit_schema, schema, provenance=prov)
        pipeline.write_dataset(args.dataset, pipeline.transform(rows, schema))
        detail += f", schema width {schema.width}"
    elif args.apply_schema:
        schema = pipeline.read_schema(args.apply_schema)
        pipeline.write_dataset(args.dataset, pipeline.transform(rows, schema))
        detail += f", schema width {schema.width}"
    _status(prov, "featurize", args.out, detail)
    return 0


def cmd_train(args) -> int:
    schema = pipeline.read_schema(args.schema)
    matrix = pipeline.read_dataset(args.dataset, schema)
    sampler = _sampler_config(args.sampler)
    if sampler is not None:
        matrix = sampling.undersample(matrix, sampler)

    if args.model == "gbdt":
        if args.search_budget >= 1:
            params, search_auc = model_mod.random_search(
                matrix, budget=args.search_budget, seed=args.seed
            )
            detail = f"search AUC {search_auc:.4f}"
        else:
            params = model_mod.GbdtParams(seed=args.seed)
            detail = "default params"
        fitted = model_mod.train_gbdt(matrix, params)
    else:
        fitted = baselines.train_baseline(
            args.model, matrix, baselines.BaselineParams(seed=args.seed)
        )
        detail = args.model

    prov = _provenance("train", args)
    obj = fitted.to_json()
    obj["provenance"] = prov
    write_json(args.out, obj)
    _status(prov, "train", args.out, f"{len(matrix)} rows, {detail}")
    return 0


def cmd_evaluate(args) -> int:
    rows = features.read_features(args.features)
    plan = evaluation.SplitPlan(
        strategy=_SETTING_TO_STRATEGY[args.setting],
        test_ratio=args.test_ratio,
        seed=args.seed,
    )
    report = evaluation.run_evaluation(
        rows,
        plan,
        model_kind=args.model,
        sampler=_sampler_config(args.sampler),
        search_budget=args.search_budget,
        threshold=args.threshold,
    )
    prov = _provenance("evaluate", args)
    report["provenance"] = prov
    write_json(args.out, report)
    summary = report["summary"]
    _status(
        prov,
        "evaluate",
        args.out,
        f"{len(report['folds'])} folds, median AUC {summary['median_auc']:.4f}",
    )
    return 0


def cmd_predict(args) -> int:
    schema = pipeline.read_schema(args.schema)
    matrix = pipeline.read_dataset(args.dataset, schema)
    fitted = _load_model_checked(args.model, schema)
    proba = _model_proba(fitted, matrix.to_dense())
    rows = [
        {"sha": sha, "proba": float(p), "label": int(p >= args.threshold)}
        for sha, p in zip(matrix.shas, proba)
    ]
    write_jsonl(args.out, rows)
    prov = _provenance("predict", args)
    positives = sum(r["label"] for r in rows)
    _status(prov, "predict", args.out, f"{positives} of {len(rows)} predicted refactoring")
    return 0


def cmd_explain(args) -> int:
    schema = pipeline.read_schema(args.schema)
    matrix = pipeline.read_dataset(args.dataset, schema)
    fitted = _load_model_checked(args.model, schema)
    if not isinstance(fitted, model_mod.GbdtModel):
        raise UnknownModelKind("explanations require a gbdt model file")

    config = explain.ExplainConfig(n_samples=args.n_samples, top_k=args.top_k, seed=args.seed)
    dense = matrix.to_dense()
    limit = len(matrix) if args.limit is None else min(args.limit, len(matrix))
    instances = []
    skipped = 0
    from .errors import DegenerateInstance

    for i in range(limit):
        try:
            instances.append(
                explain.lime_explain(fitted, schema, dense[i], config, sha=matrix.shas[i])
            )
        except DegenerateInstance:
            skipped += 1
    if skipped:
        print(
            f"warning: skipped {skipped} rows with no active features", file=sys.stderr
        )

    importance = explain.split_importance(fitted, schema)
    aggregate = explain.aggregate_explanations(instances, importance)
    obj = explain.report_json(instances, aggregate)
    prov = _provenance("explain", args)
    obj["provenance"] = prov
    write_json(args.out, obj)
    _status(prov, "explain", args.out, f"{len(instances)} instances")
    return 0


def cmd_ensemble(args) -> int:
    predictions = read_jsonl(args.predictions, what="predictions file")
    model_votes = {}
    for row in predictions:
        if "sha" not in row or "label" not in row:
            raise ParseError(f"predictions file {args.predictions}: rows need sha and label")
        model_votes[str(row["sha"])] = bool(row["label"])
    rule_votes = labeling.ingest_rule_labels(args.rules)
    verdicts = ensemble.combine(model_votes, rule_votes, args.scheme)
    write_jsonl(args.out, [v.to_json() for v in verdicts])
    prov = _provenance("ensemble", args)
    finals = sum(1 for v in verdicts if v.final)
    _status(prov, "ensemble", args.out, f"{finals} of {len(verdicts)} final refactoring")
    return 0


# ---------------------------------------------------------------- parser


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON file supplying defaults for any flag")


def build_parser() -> _Parser:
    parser = _Parser(prog="refscan", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"refscan {__version__}")
    subs = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = subs.add_parser("mine", help="extract commit records from the manifest's repos")
    p.add_argument("--manifest", required=True, help="repo manifest (TOML-like)")
    p.add_argument("--out", required=True, help="commits JSONL output")
    p.add_argument("--jobs", type=int, default=None, help="parallel repo workers")
    _add_common(p)
    p.set_defaults(func=cmd_mine)

    p = subs.add_parser("label", help="keyword + rule labels for mined commits")
    p.add_argument("--commits", required=True)
    p.add_argument("--out", required=True, help="labels JSONL output")
    p.add_argument("--keywords", default=None, help="stem list file (default: built-in)")
    p.add_argument("--rules", default=None, help="rule detector output JSON")
    _add_common(p)
    p.set_defaults(func=cmd_label)

    p = subs.add_parser("featurize", help="raw features; optionally fit/apply a schema")
    p.add_argument("--commits", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--manifest", required=True, help="for reading file contents at each commit")
    p.add_argument("--out", required=True, help="raw features JSONL output")
    p.add_argument("--ngram-max", type=int, default=6)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--fit-schema", default=None, help="fit a schema and write it here")
    group.add_argument("--apply-schema", default=None, help="reuse an existing schema file")
    p.add_argument("--dataset", default=None, help="transformed dataset JSONL output")
    _add_common(p)
    p.set_defaults(func=cmd_featurize)

    p = subs.add_parser("train", help="fit a classifier on a transformed dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--out", required=True, help="model JSON output")
    p.add_argument("--model", choices=MODEL_KINDS, default="gbdt")
    p.add_argument("--sampler", choices=SAMPLER_FLAGS, default="none")
    p.add_argument("--search-budget", type=int, default=0, help="random-search samples (0 = off)")
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("evaluate", help="split, train per fold, report metrics")
    p.add_argument("--features", required=True, help="RAW features JSONL (schema fits per fold)")
    p.add_argument("--out", required=True, help="report JSON output")
    p.add_argument("--setting", choices=sorted(_SETTING_TO_STRATEGY), default="mixed")
    p.add_argument("--model", choices=MODEL_KINDS, default="gbdt")
    p.add_argument("--sampler", choices=SAMPLER_FLAGS, default="none")
    p.add_argument("--search-budget", type=int, default=0)
    p.add_argument("--test-ratio", type=float, default=0.2)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = subs.add_parser("predict", help="score a transformed dataset with a trained model")
    p.add_argument("--dataset", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--out", required=True, help="verdicts JSONL output")
    p.add_argument("--threshold", type=float, default=0.5)
    _add_common(p)
    p.set_defaults(func=cmd_predict)

    p = subs.add_parser("explain", help="split importances + local surrogate explanations")
    p.add_argument("--dataset", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--model", required=True, help="gbdt model JSON file")
    p.add_argument("--out", required=True, help="explanations JSON output")
    p.add_argument("--n-samples", type=int, default=1000)
    p.add_argument("--top-k", type=int, default=20)
    p.add_argument("--limit", type=int, default=None, help="explain only the first N rows")
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=cmd_explain)

    p = subs.add_parser("ensemble", help="vote classifier verdicts against rule verdicts")
    p.add_argument("--predictions", required=True, help="predict subcommand output")
    p.add_argument("--rules", required=True, help="rule detector output JSON")
    p.add_argument("--scheme", choices=ensemble.SCHEMES, required=True)
    p.add_argument("--out", required=True, help="verdicts JSONL output")
    _add_common(p)
    p.set_defaults(func=cmd_ensemble)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        namespace = _config_namespace(argv, parser)
        args = parser.parse_args(argv, namespace=namespace)
    except SystemExit as exc:
        return int(exc.code or 0)
    except RefscanError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if getattr(args, "func", None) is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args) or 0
    except RefscanError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
