"""Command line entry point: ``revrec <command> [options]``.

Options left unset fall back to ``--config FILE`` (``section.key = value``
lines) and then to the built-in defaults, so a flag always overrides its
config twin. Exit codes: 0 success, 2 configuration, 3 data, 4 numerical.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from . import autoencoder as ae
from .corpus import (
    DictionaryConfig,
    build_dictionary,
    load_records,
    read_reviews,
    select_subset,
    split_dataset,
    tokenize,
    write_reviews,
    write_split,
)
from .errors import ConfigurationError, DataError, RevrecError
from .harness.config import PRESETS, ExperimentConfig, apply_preset, load_config
from .harness.synthetic import generate_synthetic_corpus
from .harness.tables import ResultTable, compute_gains
from .ratings import LATENT, NONE, RAW, evaluate_mse, fit_hybrid, load_model, predict_mf, save_model
from .rouge import rouge_n
from .sentiment import (
    COMBINED,
    TEXT_ONLY,
    evaluate_error,
    load_classifier,
    make_examples,
    save_classifier,
    select_lambda,
    train_combined,
    train_text_svm,
)
from .summarizer import Mode, ReviewGenerator

logger = logging.getLogger("revrec")

# flag dest -> config key; unset flags are filled from the config
CONFIG_KEYS = {
    "seed": "run.seed",
    "users": "data.n_users",
    "items": "data.n_items",
    "strict": "data.strict",
    "min_doc_freq": "data.min_doc_freq",
    "max_vocab": "data.max_vocab",
    "synth_users": "synth.n_users",
    "synth_items": "synth.n_items",
    "rank": "synth.latent_rank",
    "vocab": "synth.vocab",
    "noise": "synth.noise",
    "density": "synth.density",
    "style": "synth.style",
    "k": "ratings.k",
    "lambda_u": "ratings.lambda_u",
    "lambda_i": "ratings.lambda_i",
    "iters": "ratings.iters",
    "tol": "ratings.tol",
    "alpha": "ratings.alpha",
    "coding_dim": "autoencoder.coding_dim",
    "epochs_ae": "autoencoder.epochs",
    "lr": "autoencoder.lr",
    "batch_size": "autoencoder.batch_size",
    "ae_max_vocab": "autoencoder.max_vocab",
    "corruption": "autoencoder.corruption",
    "ns": "summarizer.n",
    "epochs_svm": "sentiment.epochs",
    "lambdas": "sentiment.lambdas",
    "center_f": "sentiment.center_f",
}


def _fill_from_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    values = dict(cfg.items())
    for dest, key in CONFIG_KEYS.items():
        if hasattr(args, dest) and getattr(args, dest) is None:
            setattr(args, dest, values[key])
    return cfg


def _csv_ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(","))


def _csv_floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(","))


def _write_text(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# -- corpus ------------------------------------------------------------------


def cmd_ingest(args) -> int:
    report = read_reviews(args.input, strict=args.strict)
    write_reviews(args.out, report.records)
    print(f"{len(report.records)} reviews written, {report.skipped} skipped")
    return 0


def cmd_subset(args) -> int:
    if args.preset:
        cfg = apply_preset(ExperimentConfig(), args.preset)
        args.users, args.items = cfg.data.n_users, cfg.data.n_items
    records = select_subset(load_records(args.input), args.users, args.items)
    write_reviews(args.out, records)
    print(f"{len(records)} reviews in subset")
    return 0


def cmd_split(args) -> int:
    split = split_dataset(load_records(args.input), args.seed)
    write_split(split, args.out)
    print("train/val/test = {train}/{val}/{test}".format(**split.counts))
    return 0


def cmd_synth(args) -> int:
    records = generate_synthetic_corpus(
        args.synth_users, args.synth_items, args.rank, args.vocab, args.noise, args.seed,
        density=args.density, style=args.style,
    )
    write_reviews(args.out, records)
    print(f"{len(records)} synthetic reviews written")
    return 0


# -- training ----------------------------------------------------------------


def cmd_train_autoencoder(args) -> int:
    train = load_records(args.input)
    dict_path = Path(args.dict) if args.dict else None
    if dict_path is not None and dict_path.exists():
        dictionary = _load_dictionary(dict_path)
    else:
        dictionary = build_dictionary(train, DictionaryConfig(args.ae_max_vocab, 0, True))
        if dict_path is not None:
            dict_path.write_text(json.dumps(dictionary.to_json(), sort_keys=True))
    params, history = ae.train_on_records(
        train, dictionary, args.coding_dim, args.epochs_ae, args.lr, args.batch_size,
        args.seed, args.corruption,
    )
    ae.save_autoencoder(args.out, params, dictionary,
                        {"history": history, "seed": args.seed, "lr": args.lr, "epochs": args.epochs_ae})
    print(f"loss {history[0]:.4f} -> {history[-1]:.4f}")
    return 0


def _load_dictionary(path: Path):
    from .corpus import Dictionary

    try:
        return Dictionary.from_json(json.loads(path.read_text()))
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"cannot read dictionary {path}: {exc}") from exc


def cmd_train_ratings(args) -> int:
    train = load_records(args.input)
    val = load_records(args.val) if args.val else None
    raw_dict = build_dictionary(train, DictionaryConfig(args.max_vocab, args.min_doc_freq, False))
    encoder = text_dict = None
    if args.profile == LATENT:
        if not args.autoencoder:
            raise ConfigurationError("--profile latent needs --autoencoder ae.bin")
        encoder, text_dict, _ = ae.load_autoencoder(args.autoencoder)
    elif args.profile == RAW:
        text_dict = raw_dict
    model = fit_hybrid(
        train, val, args.profile, text_dict, encoder, args.k, args.lambda_u, args.lambda_i,
        args.alpha, args.iters, args.tol, args.seed, raw_dictionary=raw_dict,
    )
    save_model(args.out, model)
    print("betas " + " ".join(f"{b:.6g}" for b in model.betas))
    return 0


def _rating_fn(path: str):
    model = load_model(path)
    return model, model.predict


def cmd_train_sentiment(args) -> int:
    train = load_records(args.input)
    recommender = None
    if args.mode == COMBINED:
        if not args.ratings_model:
            raise ConfigurationError("--mode combined needs --ratings-model")
        model, recommender = _rating_fn(args.ratings_model)
        dictionary = model.raw_dictionary
    else:
        dictionary = build_dictionary(train, DictionaryConfig(args.max_vocab, args.min_doc_freq, False))
    examples = make_examples(train, dictionary)
    if args.lam is not None:
        if recommender is None:
            clf = train_text_svm(examples, args.lam, args.epochs_svm, args.seed)
        else:
            clf = train_combined(examples, recommender, args.lam, args.epochs_svm, args.seed, args.center_f)
    else:
        if not args.val:
            raise ConfigurationError("give --lambda, or --val to select it over the grid")
        val = make_examples(load_records(args.val), dictionary)
        clf, errors = select_lambda(examples, val, args.lambdas, args.epochs_svm, args.seed,
                                    recommender, args.center_f)
        for lam, err in errors.items():
            logger.info("lambda %g: validation error %.4f", lam, err)
    ratings_ref = None
    if args.ratings_model:
        ratings_ref = str(Path(args.ratings_model).resolve())
    save_classifier(args.out, clf, dictionary, ratings_ref)
    print(f"lambda {clf.lam:g}, final objective {clf.history[-1]:.6g}")
    return 0


# -- generation and evaluation -------------------------------------------------


def cmd_summarize(args) -> int:
    model = load_model(args.model)
    gen = ReviewGenerator.from_model(load_records(args.train), model, use_text=not args.ratings_only)
    mode = Mode.parse(args.mode)
    if args.pairs:
        lines = []
        with open(args.pairs) as fh:
            for line in fh:
                if line.strip():
                    obj = json.loads(line)
                    u, i = obj.get("user", obj.get("user_id")), obj.get("item", obj.get("item_id"))
                    review = gen.generate(u, i, mode)
                    lines.append(json.dumps(review.to_json(u, i), sort_keys=True))
        _write_text(args.out, "".join(x + "\n" for x in lines))
        return 0
    if args.user is None or args.item is None:
        raise ConfigurationError("give --user and --item, or --pairs for batch mode")
    review = gen.generate(args.user, args.item, mode)
    _write_text(args.out, review.text + "\n")
    return 0


def cmd_eval_mse(args) -> int:
    model = load_model(args.model)
    test = load_records(args.test)
    if args.component == "hybrid":
        fn = model.predict
    elif args.component == "mf":
        fn = lambda u, i: min(5.0, max(1.0, predict_mf(model.factors, u, i)))  # noqa: E731
    else:
        b = model.bias
        fn = {
            "mu": lambda u, i: b.mu,
            "mu_u": lambda u, i: b.user(u),
            "mu_i": lambda u, i: b.item(i),
        }[args.component]
    print(f"{evaluate_mse(fn, test):.6f}")
    return 0


def cmd_eval_rouge(args) -> int:
    refs = {(r.user_id, r.item_id): r.tokens for r in load_records(args.refs)}
    ns = args.ns
    cols = [f"ROUGE-{n}" for n in ns]
    table = ResultTable("rouge", cols)
    scores = []
    with open(args.pred) as fh:
        for line in fh:
            if not line.strip():
                continue
            p = json.loads(line)
            key = (p["user"], p["item"])
            if key not in refs:
                raise DataError(f"no reference review for user {key[0]} and item {key[1]}")
            cand = tokenize(p["text"])
            row = {n: rouge_n(cand, refs[key], n) for n in ns}
            scores.append(row)
            for n, c in zip(ns, cols):
                table.set(f"{key[0]}/{key[1]}", c, row[n])
    if not scores:
        raise DataError("no predictions to score")
    for n, c in zip(ns, cols):
        table.set("mean", c, float(np.mean([s[n] for s in scores])))
    if args.out:
        Path(args.out).write_text(table.to_csv())
    print(" ".join(f"{c}={table.get('mean', c):.4f}" for c in cols))
    return 0


def cmd_eval_sentiment(args) -> int:
    clf, dictionary, meta = load_classifier(args.clf)
    if clf.mode == COMBINED:
        path = args.ratings_model or meta.get("ratings_model")
        if not path:
            raise ConfigurationError("combined classifier: give --ratings-model")
        if not Path(path).is_absolute():
            path = str(Path(args.clf).parent / path)
        clf.recommender = load_model(path).predict
    examples = make_examples(load_records(args.test), dictionary)
    print(f"{evaluate_error(clf, examples):.6f}")
    return 0


def cmd_gains(args) -> int:
    tables = [ResultTable.from_csv(p) for p in args.tables]
    gains = compute_gains(tables, args.baseline, args.metric, args.higher_is_better)
    if args.out:
        Path(args.out).write_text(gains.to_csv())
    sys.stdout.write(gains.to_text())
    return 0


def cmd_run(args) -> int:
    from .harness.pipeline import run_experiment

    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = ExperimentConfig()
    if args.preset:
        apply_preset(cfg, args.preset)
    overrides = {
        "run.seed": args.seed,
        "data.input": args.input,
        "data.n_users": args.users,
        "data.n_items": args.items,
    }
    if args.profile is not None:
        overrides["ratings.profiles"] = tuple(args.profile.split(","))
    for key, value in overrides.items():
        if value is not None:
            cfg.set(key, value)
    for item in args.set or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigurationError(f"--set expects section.key=value, got {item!r}")
        cfg.set(key.strip(), value)
    out = args.out or cfg.output
    tables = run_experiment(cfg, out)
    for name in ("mse", "sentiment"):
        if name in tables:
            sys.stdout.write(tables[name].to_text())
    print(f"results in {out}")
    return 0


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="revrec", description="Review-aware rating prediction, review generation and polarity classification.")
    p.add_argument("--version", action="version", version=f"revrec {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def command(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="config file supplying defaults for unset flags")
        sp.set_defaults(func=fn)
        return sp

    sp = command("ingest", cmd_ingest, "normalize a raw review file to the corpus format")
    sp.add_argument("--input", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--strict", action="store_const", const=True, default=None)

    sp = command("subset", cmd_subset, "keep the most active users and items")
    sp.add_argument("--input", required=True)
    sp.add_argument("--users", type=int)
    sp.add_argument("--items", type=int)
    sp.add_argument("--preset", choices=sorted(PRESETS))
    sp.add_argument("--out", required=True)

    sp = command("split", cmd_split, "random 80/10/10 train/validation/test split")
    sp.add_argument("--input", required=True)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", required=True, help="output directory")

    sp = command("synth", cmd_synth, "write a synthetic corpus with planted structure")
    sp.add_argument("--users", dest="synth_users", type=int)
    sp.add_argument("--items", dest="synth_items", type=int)
    sp.add_argument("--rank", type=int)
    sp.add_argument("--vocab", type=int)
    sp.add_argument("--noise", type=float)
    sp.add_argument("--density", type=float)
    sp.add_argument("--style", action=argparse.BooleanOptionalAction, default=None)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", required=True)

    sp = command("train-ratings", cmd_train_ratings, "fit the rating predictor")
    sp.add_argument("--input", required=True, help="training reviews")
    sp.add_argument("--val", help="validation reviews for the combination weights")
    sp.add_argument("--profile", choices=(RAW, LATENT, NONE), default=RAW)
    sp.add_argument("--autoencoder", help="autoencoder file (latent profiles)")
    sp.add_argument("--k", type=int)
    sp.add_argument("--lambda-u", dest="lambda_u", type=float)
    sp.add_argument("--lambda-i", dest="lambda_i", type=float)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--iters", type=int)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--min-doc-freq", dest="min_doc_freq", type=int)
    sp.add_argument("--max-vocab", dest="max_vocab", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", required=True)

    sp = command("train-autoencoder", cmd_train_autoencoder, "train the sentence autoencoder")
    sp.add_argument("--input", required=True)
    sp.add_argument("--dict", help="dictionary JSON: loaded if present, otherwise built and written")
    sp.add_argument("--coding-dim", dest="coding_dim", type=int)
    sp.add_argument("--epochs", dest="epochs_ae", type=int)
    sp.add_argument("--lr", type=float)
    sp.add_argument("--batch-size", dest="batch_size", type=int)
    sp.add_argument("--max-vocab", dest="ae_max_vocab", type=int)
    sp.add_argument("--corruption", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", required=True)

    sp = command("train-sentiment", cmd_train_sentiment, "train a polarity classifier")
    sp.add_argument("--input", required=True)
    sp.add_argument("--val", help="validation reviews for lambda selection")
    sp.add_argument("--mode", choices=("text", "combined"), default="text")
    sp.add_argument("--ratings-model", dest="ratings_model")
    sp.add_argument("--lambda", dest="lam", type=float, help="fixed lambda (skips selection)")
    sp.add_argument("--lambdas", type=_csv_floats, help="selection grid, comma separated")
    sp.add_argument("--epochs", dest="epochs_svm", type=int)
    sp.add_argument("--center-f", dest="center_f", action="store_const", const=True, default=None)
    sp.add_argument("--min-doc-freq", dest="min_doc_freq", type=int)
    sp.add_argument("--max-vocab", dest="max_vocab", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", required=True)

    sp = command("summarize", cmd_summarize, "generate a review for a user and an item")
    sp.add_argument("--model", required=True)
    sp.add_argument("--train", required=True, help="training reviews the sentences come from")
    sp.add_argument("--mode", type=str.upper, choices=[m.value for m in Mode], default="XS")
    sp.add_argument("--user")
    sp.add_argument("--item")
    sp.add_argument("--pairs", help="JSON lines with user and item; emits JSON lines")
    sp.add_argument("--ratings-only", action="store_true", help="ignore the text profiles")
    sp.add_argument("--out")

    sp = command("eval-mse", cmd_eval_mse, "test MSE of a rating model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--test", required=True)
    sp.add_argument("--component", choices=("hybrid", "mf", "mu", "mu_u", "mu_i"), default="hybrid")

    sp = command("eval-rouge", cmd_eval_rouge, "ROUGE-n of generated reviews")
    sp.add_argument("--pred", required=True)
    sp.add_argument("--refs", required=True)
    sp.add_argument("--n", dest="ns", type=_csv_ints)
    sp.add_argument("--out")

    sp = command("eval-sentiment", cmd_eval_sentiment, "test error of a polarity classifier")
    sp.add_argument("--clf", required=True)
    sp.add_argument("--test", required=True)
    sp.add_argument("--ratings-model", dest="ratings_model")

    sp = command("gains", cmd_gains, "percent gains over a baseline row, averaged over tables")
    sp.add_argument("--tables", nargs="+", required=True)
    sp.add_argument("--baseline", required=True)
    sp.add_argument("--metric")
    sp.add_argument("--higher-is-better", action="store_true")
    sp.add_argument("--out")

    sp = command("run", cmd_run, "full experiment: train everything, write all tables")
    sp.add_argument("--preset", choices=sorted(PRESETS))
    sp.add_argument("--input")
    sp.add_argument("--users", type=int)
    sp.add_argument("--items", type=int)
    sp.add_argument("--profile", help="comma separated subset of raw,latent (or none)")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")
    sp.add_argument("--out")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command != "run":
            _fill_from_config(args)
        if getattr(args, "mode", None) == "text":
            args.mode = TEXT_ONLY
        return args.func(args)
    except RevrecError as exc:
        print(f"revrec: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"revrec: error: {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
