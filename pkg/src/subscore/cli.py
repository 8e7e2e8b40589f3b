"""Command-line front end: ingest, validate-tree, score, evaluate, report, serve, export.

Options can come from a JSON config file (``--config``); explicit flags win
over config values. Exit codes: 0 success, 1 validation failure, 2 provider
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .corpus import IngestError
from .gateway import (
    AuthenticationError,
    Gateway,
    GatewayError,
    HttpChatProvider,
    HttpProviderConfig,
    SeededMockProvider,
)
from .metrics import MetricError
from .reporting import (
    ReportConfig,
    ReportError,
    build_bundle,
    emit_reports,
    render_classification_tables,
    render_consistency_table,
    render_correlation_table,
    render_human_model_table,
    render_irr_table,
    render_overlap_table,
)
from .rubric import RubricError, load_skill_tree, validate_tree
from .scoring import PromptSettings, score_batch
from .store import CorpusStore, StoreError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_PROVIDER = 2


class UsageError(ValueError):
    pass


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [f"--{name.replace('_', '-')}" for name in names if getattr(args, name, None) in (None, "")]
    if missing:
        raise UsageError(f"{args.command}: missing required options: {', '.join(missing)}")


def _load_tree(path: str):
    return load_skill_tree(Path(path).read_text(encoding="utf-8"))


def cmd_ingest(args: argparse.Namespace) -> int:
    _require(args, "corpus", "store")
    tree = _load_tree(args.tree) if args.tree else None
    store = CorpusStore(args.store)
    corpus = store.ingest(args.corpus, tree)
    counts = corpus.counts()
    print(
        f"ingested {counts['items']} items, {counts['responses']} responses, "
        f"{counts['reads']} reads into {args.store}"
    )
    return EXIT_OK


def cmd_validate_tree(args: argparse.Namespace) -> int:
    _require(args, "tree")
    text = Path(args.tree).read_text(encoding="utf-8")
    try:
        tree = load_skill_tree(text)
    except RubricError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    violations = validate_tree(tree)
    if violations:
        for v in violations:
            print(f"invalid: {v.path}: {v.message}", file=sys.stderr)
        return EXIT_VALIDATION
    n_subs = len(tree.subtraits())
    print(f"tree ok: version {tree.version}, {len(tree.traits)} traits, {n_subs} subtraits")
    return EXIT_OK


def _make_provider(args: argparse.Namespace, store: CorpusStore, tree) -> object:
    if args.provider == "mock":
        corpus = store.load(tree)
        return SeededMockProvider({rid: r.text for rid, r in corpus.responses.items()}, seed=args.seed)
    if args.provider == "live":
        return HttpChatProvider(HttpProviderConfig(base_url=args.base_url, model=args.model))
    raise UsageError(f"unknown provider {args.provider!r}")


def cmd_score(args: argparse.Namespace) -> int:
    _require(args, "store", "tree")
    tree = _load_tree(args.tree)
    store = CorpusStore(args.store)
    corpus = store.load(tree)
    existing = store.load_runs()
    if existing and not args.force:
        print(f"store already holds {len(existing)} runs; pass --force to replace them", file=sys.stderr)
        return EXIT_VALIDATION
    subtrait_ids = None if args.subtraits == "all" else [s.strip() for s in args.subtraits.split(",") if s.strip()]
    provider = _make_provider(args, store, tree)
    gateway = Gateway(provider, max_in_flight=args.workers)
    total = (
        len(corpus.responses)
        * (len(subtrait_ids) if subtrait_ids is not None else len(tree.subtraits()))
        * args.runs
    )
    done = {"count": 0}

    def progress(_run) -> None:
        done["count"] += 1
        if done["count"] % 50 == 0 or done["count"] == total:
            print(f"  scored {done['count']}/{total} runs", file=sys.stderr)

    runs = score_batch(
        gateway,
        corpus,
        tree,
        runs_per_pair=args.runs,
        settings=PromptSettings(temperature=args.temperature, seed=args.seed),
        subtrait_ids=subtrait_ids,
        workers=args.workers,
        progress=progress,
    )
    if existing and args.force:
        store.clear_runs()
    store.append_runs(runs)
    ok = sum(1 for r in runs if r.ok)
    print(f"scored {len(runs)} runs ({ok} ok, {len(runs) - ok} failed) with provider {args.provider}")
    if runs and ok == 0 and all("provider failure" in r.detail for r in runs):
        print("every run failed at the provider; check connectivity and credentials", file=sys.stderr)
        return EXIT_PROVIDER
    return EXIT_OK


def _bundle_from_store(args: argparse.Namespace):
    tree = _load_tree(args.tree)
    store = CorpusStore(args.store)
    corpus = store.load(tree)
    runs = store.load_runs()
    config = ReportConfig(
        y_true_policy=args.y_true,
        zero_division_precision=args.zero_division,
        provider=getattr(args, "provider", "") or "",
    )
    return corpus, runs, tree, config


def cmd_evaluate(args: argparse.Namespace) -> int:
    _require(args, "store", "tree")
    corpus, runs, tree, config = _bundle_from_store(args)
    bundle = build_bundle(corpus, runs, tree, config)
    for renderer in (
        render_irr_table,
        render_correlation_table,
        render_human_model_table,
        render_classification_tables,
        render_consistency_table,
        render_overlap_table,
    ):
        print(renderer(bundle))
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    _require(args, "store", "tree", "out")
    corpus, runs, tree, config = _bundle_from_store(args)
    emit_reports(corpus, runs, tree, config, args.out)
    print(f"wrote report bundle to {args.out}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import ServeConfig, create_app, load_tokens

    _require(args, "store", "tree", "tokens")
    tree = _load_tree(args.tree)
    store = CorpusStore(args.store)
    tokens = load_tokens(args.tokens)
    config = ServeConfig(
        order_mode=args.order,
        order_seed=args.seed,
        ui_dir=args.ui,
        report=ReportConfig(y_true_policy=args.y_true, zero_division_precision=args.zero_division),
    )
    app = create_app(store, tree, tokens, config)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_export(args: argparse.Namespace) -> int:
    _require(args, "store", "out")
    tree = _load_tree(args.tree) if args.tree else None
    store = CorpusStore(args.store)
    count = store.export(args.out, tree)
    print(f"exported {count} records to {args.out}")
    return EXIT_OK


def build_parser() -> tuple[argparse.ArgumentParser, list[argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="subscore",
        description="Subtrait-level writing evaluation workbench",
    )
    parser.add_argument("--config", help="JSON config file; explicit flags override its values")
    sub = parser.add_subparsers(dest="command", required=True)
    children: list[argparse.ArgumentParser] = []

    p = sub.add_parser("ingest", help="load a corpus JSONL file into a store directory")
    p.add_argument("--corpus", help="corpus JSONL file")
    p.add_argument("--store", help="store directory")
    p.add_argument("--tree", help="rubric tree JSON; enables score completeness checks")
    p.set_defaults(func=cmd_ingest)
    children.append(p)

    p = sub.add_parser("validate-tree", help="check a rubric tree file")
    p.add_argument("--tree")
    p.set_defaults(func=cmd_validate_tree)
    children.append(p)

    p = sub.add_parser("score", help="run K model passes per (response, subtrait)")
    p.add_argument("--store")
    p.add_argument("--tree")
    p.add_argument("--subtraits", default="all", help="'all' or comma-separated subtrait ids")
    p.add_argument("--runs", type=int, default=1, help="passes per (response, subtrait)")
    p.add_argument("--provider", choices=("mock", "live"), default="mock")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--base-url", default="https://api.openai.com/v1", help="live provider API root")
    p.add_argument("--model", default="gpt-4o-mini", help="live provider model name")
    p.add_argument("--force", action="store_true", help="replace runs already in the store")
    p.set_defaults(func=cmd_score)
    children.append(p)

    p = sub.add_parser("evaluate", help="print evaluation tables to stdout")
    p.add_argument("--store")
    p.add_argument("--tree")
    p.add_argument("--y-true", choices=("first_read", "rounded_average"), default="first_read")
    p.add_argument("--zero-division", type=float, choices=(0.0, 1.0), default=1.0)
    p.set_defaults(func=cmd_evaluate)
    children.append(p)

    p = sub.add_parser("report", help="write the full report bundle to a directory")
    p.add_argument("--store")
    p.add_argument("--tree")
    p.add_argument("--out", help="output directory")
    p.add_argument("--y-true", choices=("first_read", "rounded_average"), default="first_read")
    p.add_argument("--zero-division", type=float, choices=(0.0, 1.0), default=1.0)
    p.set_defaults(func=cmd_report)
    children.append(p)

    p = sub.add_parser("serve", help="start the annotation/scoring HTTP service")
    p.add_argument("--store")
    p.add_argument("--tree")
    p.add_argument("--tokens", help="JSON file with a 'tokens' map of token -> marker id")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8400)
    p.add_argument("--ui", help="directory with the built annotation UI")
    p.add_argument("--order", choices=("by_item", "pooled"), default="by_item")
    p.add_argument("--seed", type=int, default=0, help="seed for pooled queue ordering")
    p.add_argument("--y-true", choices=("first_read", "rounded_average"), default="first_read")
    p.add_argument("--zero-division", type=float, choices=(0.0, 1.0), default=1.0)
    p.set_defaults(func=cmd_serve)
    children.append(p)

    p = sub.add_parser("export", help="write the consolidated corpus + reads JSONL")
    p.add_argument("--store")
    p.add_argument("--out")
    p.add_argument("--tree")
    p.set_defaults(func=cmd_export)
    children.append(p)

    for child in children:  # accept --config on either side of the subcommand
        child.add_argument("--config", help=argparse.SUPPRESS)

    return parser, children


def _apply_config_file(
    parser: argparse.ArgumentParser,
    children: list[argparse.ArgumentParser],
    argv: list[str],
) -> None:
    """Seed parser defaults from --config JSON so explicit flags still win."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    if not known.config:
        return
    doc = json.loads(Path(known.config).read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise UsageError("config file must hold a JSON object of option defaults")
    defaults = {key.replace("-", "_"): value for key, value in doc.items()}
    parser.set_defaults(**defaults)
    for child in children:
        child.set_defaults(**defaults)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, children = build_parser()
    try:
        _apply_config_file(parser, children, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except AuthenticationError as exc:
        print(f"provider authentication failed: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except GatewayError as exc:
        print(f"provider failure: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except (RubricError, IngestError, MetricError, ReportError, StoreError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
