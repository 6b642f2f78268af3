"""Command-line interface.

One executable, subcommand per pipeline stage:

    frugaltext audit    --corpus c.jsonl --vocab v.txt [--out DIR]
    frugaltext prepare  --corpus c.jsonl --out DIR [--fold K]
    frugaltext shorten  --corpus c.jsonl --vocab v.txt --strategy a2 ... --out DIR
    frugaltext train    --backend builtin --corpus c.jsonl --vocab v.txt --lr 1e-2 ...
    frugaltext hpo      {init|run|status|report} --backend fixture:reference ...

Every flag can instead come from a config file (--config, key=value lines,
'#' comments); explicit flags win. Exit codes: 0 success, 1 usage or
configuration, 2 data problem, 3 backend problem.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .backends import (
    BuiltinBackend,
    ExternalBackend,
    FixtureTable,
    SplitPaths,
    parse_backend_spec,
)
from .corpus import (
    Document,
    clean_whitespace,
    dump_documents_jsonl,
    load_corpus_jsonl,
    make_split,
    upsample_balance,
)
from .errors import (
    BackendError,
    ConfigError,
    FrugaltextError,
    SessionBudgetExhausted,
    UnavailableTrialError,
)
from .hpo import SearchConfig, reconstruct_state, session_run
from .ledger import Ledger
from .report import render_search_report, render_status
from .shorten import StopwordList, Strategy, TokenBudget, shorten_and_truncate
from .tokenizer import SubwordVocab, audit, word_tokenize
from .trainer import Hyperparams
from . import reference

# options that may come from a config file, with their value parsers
_CONFIG_KEYS = {
    "corpus": str, "vocab": str, "stopwords": str, "backend": str,
    "strategy": str, "ledger": str, "out": str,
    "budget": int, "bs": int, "lr": float, "epochs": int, "seed": int,
    "fold": int, "workers": int, "session_trials": int,
    "session_seconds": float,
}


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is exit 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value file supplying any flag below")
    parser.add_argument("--corpus", help="fold-annotated corpus JSONL")
    parser.add_argument("--vocab", help="subword vocabulary, one token per line")
    parser.add_argument("--stopwords", help="stopword list, one word per line")
    parser.add_argument("--strategy", help="shortening strategy (a1..c1)")
    parser.add_argument("--budget", type=int, help="subword budget per document")
    parser.add_argument("--backend",
                        help="builtin | fixture:<file|reference> | exec:<command>")
    parser.add_argument("--bs", type=int, help="batch size")
    parser.add_argument("--lr", type=float, help="learning rate")
    parser.add_argument("--epochs", type=int, help="epoch count")
    parser.add_argument("--seed", type=int, help="random seed")
    parser.add_argument("--fold", type=int, help="fold index")
    parser.add_argument("--ledger", help="trial ledger path")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--workers", type=int, help="parallel fold-trial workers")
    parser.add_argument("--session-trials", type=int, dest="session_trials",
                        help="max trials this invocation")
    parser.add_argument("--session-seconds", type=float, dest="session_seconds",
                        help="max wall-clock seconds this invocation")


def build_parser() -> _Parser:
    parser = _Parser(prog="frugaltext",
                     description="Corpus tooling and budgeted hyperparameter search "
                                 "for text classifiers.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("audit", cmd_audit), ("prepare", cmd_prepare),
                     ("shorten", cmd_shorten), ("train", cmd_train)):
        p = sub.add_parser(name)
        _common_flags(p)
        p.set_defaults(func=fn)
    hpo_parser = sub.add_parser("hpo")
    hpo_parser.add_argument("action", choices=("init", "run", "status", "report"))
    _common_flags(hpo_parser)
    hpo_parser.set_defaults(func=cmd_hpo)
    return parser


def _apply_config_file(args: argparse.Namespace) -> None:
    if not args.config:
        return
    path = Path(args.config)
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{line_no}: expected key=value")
            values[key.strip().lower().replace("-", "_")] = value.strip()
    for key, value in values.items():
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}: unknown option {key!r}")
        if getattr(args, key, None) is None:
            try:
                setattr(args, key, _CONFIG_KEYS[key](value))
            except ValueError as exc:
                raise ConfigError(f"{path}: bad value for {key}: {value!r}") from exc


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise ConfigError(f"missing required option(s): {flags}")


def _load_stopwords(args) -> StopwordList | None:
    return StopwordList.from_file(args.stopwords) if args.stopwords else None


def _strategy(args) -> Strategy:
    strategy = Strategy.from_name(args.strategy or "a1")
    if strategy.needs_stopwords and not args.stopwords:
        raise ConfigError(f"strategy {strategy.value} needs --stopwords")
    return strategy


def _budget(args) -> TokenBudget:
    return TokenBudget(args.budget if args.budget is not None else 128)


def _out_dir(args) -> Path | None:
    if args.out is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _build_backend(args, seed: int):
    spec = args.backend or "builtin"

    def builtin_factory() -> BuiltinBackend:
        _require(args, "corpus", "vocab")
        corpus = load_corpus_jsonl(args.corpus)
        vocab = SubwordVocab.from_file(args.vocab)
        return BuiltinBackend(corpus, vocab, stopwords=_load_stopwords(args),
                              data_seed=seed)

    def fixture_resolver(ref: str) -> FixtureTable:
        if ref == "reference":
            return reference.reference_table()
        return FixtureTable.from_file(ref)

    def external_factory(command: str) -> ExternalBackend:
        _require(args, "out")
        root = Path(args.out)
        split_paths = {}
        for fold_dir in sorted(root.glob("fold*")):
            try:
                fold = int(fold_dir.name[len("fold"):])
            except ValueError:
                continue
            split_paths[fold] = SplitPaths(
                train=str(fold_dir / "train.jsonl"),
                valid=str(fold_dir / "valid.jsonl"),
                test=str(fold_dir / "test.jsonl"))
        return ExternalBackend(command, split_paths)

    return parse_backend_spec(spec, fixture_resolver=fixture_resolver,
                              builtin_factory=builtin_factory,
                              external_factory=external_factory)


# ---------------------------------------------------------------------------
# commands


def cmd_audit(args) -> int:
    _require(args, "corpus", "vocab")
    corpus = load_corpus_jsonl(args.corpus)
    vocab = SubwordVocab.from_file(args.vocab)
    report = audit(corpus.documents(), vocab)
    print(report.to_json())
    out = _out_dir(args)
    if out is not None:
        (out / "audit.json").write_text(report.to_json() + "\n", encoding="utf-8")
        report.write_csv(out / "audit.csv")
    return 0


def cmd_prepare(args) -> int:
    _require(args, "corpus", "out")
    seed = args.seed or 0
    corpus = load_corpus_jsonl(args.corpus)
    cleaned = type(corpus)(
        folds=[[Document(d.id, d.label, clean_whitespace(d.text)) for d in fold]
               for fold in corpus.folds],
        valid_fraction=corpus.valid_fraction)
    folds = [args.fold] if args.fold is not None else list(range(corpus.n_folds))
    out = _out_dir(args)
    for fold in folds:
        split = make_split(cleaned, fold, seed)
        balanced = upsample_balance(list(split.train), seed)
        fold_dir = out / f"fold{fold}"
        fold_dir.mkdir(parents=True, exist_ok=True)
        dump_documents_jsonl(balanced, fold_dir / "train.jsonl", fold=0)
        dump_documents_jsonl(split.valid, fold_dir / "valid.jsonl", fold=0)
        dump_documents_jsonl(split.test, fold_dir / "test.jsonl", fold=0)
        print(f"fold {fold}: train {len(balanced)}, valid {len(split.valid)}, "
              f"test {len(split.test)} -> {fold_dir}")
    return 0


def cmd_shorten(args) -> int:
    _require(args, "corpus", "vocab", "out")
    strategy = _strategy(args)
    budget = _budget(args)
    corpus = load_corpus_jsonl(args.corpus)
    vocab = SubwordVocab.from_file(args.vocab)
    stopwords = _load_stopwords(args)
    out = _out_dir(args)
    path = out / f"shortened-{strategy.value}-{budget.max_tokens}.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus.documents():
            words = word_tokenize(clean_whitespace(doc.text))
            tokens = shorten_and_truncate(words, strategy, budget, vocab, stopwords)
            fh.write(json.dumps({"id": doc.id, "label": doc.label,
                                 "tokens": tokens}) + "\n")
    print(f"wrote {path}")
    return 0


def cmd_train(args) -> int:
    seed = args.seed or 0
    strategy = _strategy(args)
    backend = _build_backend(args, seed)
    _require(args, "lr", "bs")
    hp = Hyperparams(lr=args.lr, batch_size=args.bs,
                     epochs=args.epochs if args.epochs is not None else 1,
                     seed=seed, budget=_budget(args), strategy=strategy)
    results = backend.run_trial(hp, args.fold if args.fold is not None else 0)
    for r in results:
        print(json.dumps({"epoch": r.epoch, "f1_test": r.f1_test,
                          "valid_loss": r.valid_loss}))
    return 0


def _search_config(args) -> SearchConfig:
    return SearchConfig(
        lr0=args.lr if args.lr is not None else 5e-5,
        initial_bs=args.bs,
        max_epochs=args.epochs if args.epochs is not None else 3,
        strategy=_strategy(args),
        budget=_budget(args),
        seed=args.seed or 0,
        workers=args.workers or 1,
    )


def cmd_hpo(args) -> int:
    ledger_path = Path(args.ledger) if args.ledger else Path("ledger.jsonl")
    cfg = _search_config(args)

    if args.action == "init":
        ledger_path.parent.mkdir(parents=True, exist_ok=True)
        ledger_path.touch()
        ledger = Ledger(ledger_path)
        backend = _build_backend(args, cfg.seed)
        state = reconstruct_state(cfg, ledger, backend.backend_id,
                                  deterministic=backend.deterministic)
        print(render_status(state))
        return 0

    ledger = Ledger(ledger_path)

    if args.action == "run":
        backend = _build_backend(args, cfg.seed)
        try:
            report = session_run(cfg, backend, ledger,
                                 max_trials=args.session_trials,
                                 max_seconds=args.session_seconds)
        finally:
            if hasattr(backend, "close"):
                backend.close()
        print(render_status(report.state))
        if report.exhausted:
            print(f"session budget exhausted after {report.trials_run} trials")
        return 0

    if args.action == "status":
        backend = _build_backend(args, cfg.seed)
        state = reconstruct_state(cfg, ledger, backend.backend_id,
                                  deterministic=backend.deterministic)
        print(render_status(state))
        return 0

    # report: render everything the ledger holds
    text = render_search_report(ledger, max_epochs=cfg.max_epochs)
    print(text, end="")
    out = _out_dir(args)
    if out is not None:
        (out / "report.md").write_text(text, encoding="utf-8")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (UnavailableTrialError, BackendError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except SessionBudgetExhausted as exc:
        print(str(exc))
        return 0
    except FrugaltextError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
