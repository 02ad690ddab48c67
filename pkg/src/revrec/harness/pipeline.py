"""End-to-end experiment: data, training, the three evaluations, tables.

Output tree under the run directory::

    config.cfg          resolved configuration
    data/               train/val/test splits
    models/             every fitted model
    summaries/          generated reviews of the model-based selectors
    tables/             result tables as CSV and aligned text
    provenance.log      one line per table cell: op, inputs and models used
"""

from __future__ import annotations

import contextlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .. import autoencoder as ae
from ..corpus import (
    AUTOENCODER_DICTIONARY,
    DictionaryConfig,
    ReviewRecord,
    build_dictionary,
    read_reviews,
    select_subset,
    split_dataset,
    write_split,
)
from ..errors import DataError, RevrecError
from ..ratings import (
    LATENT,
    NONE,
    RAW,
    FactorModel,
    HybridRatingModel,
    evaluate_mse,
    fit_hybrid,
    fit_nmf,
    predict_mf,
    save_model,
)
from ..rouge import rouge_n
from ..sentiment import (
    RatingThresholdClassifier,
    evaluate_error,
    make_examples,
    save_classifier,
    select_lambda,
)
from ..summarizer import Mode, ReviewGenerator, generate_oracle, generate_random
from .config import ExperimentConfig
from .synthetic import generate_synthetic_corpus
from .tables import ResultTable, compute_gains

logger = logging.getLogger(__name__)


class StageError(RevrecError):
    """A pipeline stage failed; keeps the exit code of the underlying error."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.exit_code = getattr(cause, "exit_code", 1)


@contextlib.contextmanager
def stage(name: str):
    logger.info("stage %s", name)
    try:
        yield
    except StageError:
        raise
    except (RevrecError, ValueError, ArithmeticError, OSError) as exc:
        raise StageError(name, exc) from exc


@dataclass
class Provenance:
    lines: list[str] = field(default_factory=list)

    def record(self, table: ResultTable, row: str, column: str, value: float, op: str, **inputs) -> None:
        table.set(row, column, value)
        extra = " ".join(f"{k}={v}" for k, v in inputs.items())
        self.lines.append(f"{table.name}\t{row}\t{column}\t{value!r}\top={op} {extra}".rstrip())

    def write(self, path: Path) -> None:
        path.write_text("".join(line + "\n" for line in self.lines))


def _clamp(x: float) -> float:
    return min(5.0, max(1.0, x))


def mf_predictor(factors: FactorModel) -> Callable[[str, str], float]:
    """Plain factorization prediction clamped to the rating scale."""
    return lambda u, i: _clamp(predict_mf(factors, u, i))


def load_corpus(cfg: ExperimentConfig) -> list[ReviewRecord]:
    if cfg.data.input:
        report = read_reviews(cfg.data.input, strict=cfg.data.strict)
        if report.skipped:
            logger.warning("skipped %d malformed reviews", report.skipped)
        return report.records
    s = cfg.synth
    return generate_synthetic_corpus(
        s.n_users, s.n_items, s.latent_rank, s.vocab, s.noise,
        seed=cfg.stage_seed("synth"), density=s.density, style=s.style,
    )


def select_factorization(cfg: ExperimentConfig, train, val, seed: int) -> FactorModel:
    """Fit the factorization, picking (k, lambda) on validation MSE when a grid is set."""
    r = cfg.ratings
    ks = r.grid_k or (r.k,)
    lams = r.grid_lambda or (None,)
    best, best_mse = None, math.inf
    for k in ks:
        for lam in lams:
            lu, li = (r.lambda_u, r.lambda_i) if lam is None else (lam, lam)
            f = fit_nmf(train, k, lu, li, r.iters, r.tol, seed)
            mse = evaluate_mse(mf_predictor(f), val) if len(ks) * len(lams) > 1 else 0.0
            if mse < best_mse:
                best, best_mse = f, mse
    return best


def _rouge_pairs(test, generator: ReviewGenerator, limit: int):
    pairs = [r for r in test if generator.candidates(r.user_id, r.item_id, Mode.ONE_SENTENCE)]
    return pairs[:limit] if limit else pairs


def run_experiment(cfg: ExperimentConfig, out_dir: Optional[str] = None) -> dict[str, ResultTable]:
    out = Path(out_dir if out_dir is not None else cfg.output)
    for sub in ("data", "models", "summaries", "tables"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    (out / "config.cfg").write_text(cfg.to_text())
    prov = Provenance()
    meta = {"dataset": cfg.data.dataset, "seed": str(cfg.seed)}
    tables: dict[str, ResultTable] = {}
    profiles = [p for p in cfg.ratings.profiles if p != NONE]

    try:
        with stage("ingest"):
            records = load_corpus(cfg)
            if not records:
                raise DataError("the corpus is empty")
        with stage("subset"):
            records = select_subset(records, cfg.data.n_users, cfg.data.n_items)
        with stage("split"):
            split = split_dataset(records, cfg.stage_seed("split"))
            write_split(split, out / "data")
            train, val, test = split.train, split.validation, split.test

        with stage("dictionaries"):
            raw_dict = build_dictionary(
                train, DictionaryConfig(cfg.data.max_vocab, cfg.data.min_doc_freq, False)
            )
        with stage("factorization"):
            factors = select_factorization(cfg, train, val, cfg.stage_seed("nmf"))
            base = fit_hybrid(train, val, NONE, factors=factors, raw_dictionary=raw_dict,
                              seed=cfg.stage_seed("nmf"))
            save_model(out / "models" / "ratings_none.bin", base)

        encoder = ae_dict = None
        if LATENT in profiles:
            with stage("autoencoder"):
                a = cfg.autoencoder
                ae_dict = build_dictionary(
                    train, DictionaryConfig(a.max_vocab, AUTOENCODER_DICTIONARY.min_doc_freq, True)
                )
                encoder, history = ae.train_on_records(
                    train, ae_dict, a.coding_dim, a.epochs, a.lr, a.batch_size,
                    cfg.stage_seed("autoencoder"), a.corruption,
                )
                ae.save_autoencoder(out / "models" / "autoencoder.bin", encoder, ae_dict,
                                    {"history": history, "coding_dim": a.coding_dim})

        hybrids: dict[str, HybridRatingModel] = {}
        for kind in profiles:
            with stage(f"hybrid-{kind}"):
                hybrids[kind] = fit_hybrid(
                    train, val, kind, raw_dict if kind == RAW else ae_dict, encoder,
                    alpha=cfg.ratings.alpha, seed=cfg.stage_seed("nmf"),
                    raw_dictionary=raw_dict, factors=factors,
                )
                save_model(out / "models" / f"ratings_{kind}.bin", hybrids[kind])

        with stage("evaluate-mse"):
            tables["mse"] = t = ResultTable("mse", ["MSE"], meta=dict(meta))
            b = base.bias
            singles = {
                "global-mean": lambda u, i: b.mu,
                "user-mean": lambda u, i: b.user(u),
                "item-mean": lambda u, i: b.item(i),
                "MF": mf_predictor(factors),
            }
            for row, fn in singles.items():
                prov.record(t, row, "MSE", evaluate_mse(fn, test), "evaluate_mse",
                            data="data/test.jsonl", model="models/ratings_none.bin")
            for kind, m in hybrids.items():
                prov.record(t, f"hybrid-{kind}", "MSE", evaluate_mse(m.predict, test), "evaluate_mse",
                            data="data/test.jsonl", model=f"models/ratings_{kind}.bin")

        with stage("evaluate-rouge"):
            tables.update(_rouge_tables(cfg, train, test, raw_dict, factors, hybrids, prov, out, meta))

        with stage("evaluate-sentiment"):
            tables["sentiment"] = _sentiment_table(cfg, train, val, test, raw_dict, base, factors,
                                                   hybrids, prov, out, meta)

        with stage("gains"):
            tables["gains"] = _gains(tables)
    finally:
        for t in tables.values():
            t.write(out / "tables")
        prov.write(out / "provenance.log")
    return tables


def _rouge_tables(cfg, train, test, raw_dict, factors, hybrids, prov, out, meta):
    ns = cfg.summarizer.n
    cols = [f"ROUGE-{n}" for n in ns]
    mf_gen = ReviewGenerator(train, raw_dict, mf_predictor(factors))
    gens = {"MF": (mf_gen, "models/ratings_none.bin")}
    for kind, m in hybrids.items():
        gens[f"hybrid-{kind}"] = (ReviewGenerator.from_model(train, m), f"models/ratings_{kind}.bin")
    pairs = _rouge_pairs(test, mf_gen, cfg.summarizer.pairs)
    if not pairs:
        raise DataError("no test pair has reviews of the item by other users")
    random_seed = cfg.stage_seed("random-summaries")

    tables = {}
    for mode in map(Mode.parse, cfg.summarizer.modes):
        t = ResultTable(f"rouge_{mode.value}", cols, meta={**meta, "pairs": str(len(pairs))})
        scores: dict[str, list[dict[int, float]]] = {}

        def score(row, review, ref):
            scores.setdefault(row, []).append({n: rouge_n(review.tokens, ref, n) for n in ns})

        for j, r in enumerate(pairs):
            ref = r.tokens
            pool = mf_gen.candidates(r.user_id, r.item_id, mode)
            length = mf_gen.target_length(r.user_id)
            score("random", generate_random(pool, mode, length, random_seed + j), ref)
            for n in ns:
                score(f"oracle-R{n}", generate_oracle(pool, ref, n, mode, length), ref)
        for row, (gen, model) in gens.items():
            lines = []
            for r in pairs:
                review = gen.generate(r.user_id, r.item_id, mode)
                score(row, review, r.tokens)
                lines.append(json.dumps(review.to_json(r.user_id, r.item_id), sort_keys=True))
            (out / "summaries" / f"{row}_{mode.value}.jsonl").write_text("".join(x + "\n" for x in lines))
        for row, per_pair in scores.items():
            model = gens[row][1] if row in gens else "none"
            for n, col in zip(ns, cols):
                prov.record(t, row, col, float(np.mean([s[n] for s in per_pair])), "rouge_n",
                            data="data/test.jsonl", model=model, mode=mode.value)
        tables[t.name] = t
    return tables


def _sentiment_table(cfg, train, val, test, raw_dict, base, factors, hybrids, prov, out, meta):
    s = cfg.sentiment
    seed = cfg.stage_seed("sentiment")
    tr, va, te = (make_examples(x, raw_dict) for x in (train, val, test))
    if not te:
        raise DataError("the test set has no polarized review (all rated 3)")
    t = ResultTable("sentiment", ["error"], meta=dict(meta))

    text, _ = select_lambda(tr, va, s.lambdas, s.epochs, seed)
    save_classifier(out / "models" / "sentiment_text.bin", text, raw_dict)
    prov.record(t, "text-svm", "error", evaluate_error(text, te), "evaluate_error",
                data="data/test.jsonl", model="models/sentiment_text.bin", lam=text.lam)

    b = base.bias
    thresholds = {"item-mean": (lambda u, i: b.item(i), "models/ratings_none.bin"),
                  "MF": (mf_predictor(factors), "models/ratings_none.bin")}
    for kind, m in hybrids.items():
        thresholds[f"hybrid-{kind}"] = (m.predict, f"models/ratings_{kind}.bin")
    for row, (fn, model) in thresholds.items():
        prov.record(t, row, "error", evaluate_error(RatingThresholdClassifier(fn), te),
                    "evaluate_error", data="data/test.jsonl", model=model)

    for kind, m in hybrids.items():
        clf, _ = select_lambda(tr, va, s.lambdas, s.epochs, seed, m.predict, s.center_f)
        path = f"models/sentiment_combined_{kind}.bin"
        save_classifier(out / path, clf, raw_dict, f"ratings_{kind}.bin")
        prov.record(t, f"text-svm+hybrid-{kind}", "error", evaluate_error(clf, te), "evaluate_error",
                    data="data/test.jsonl", model=path, ratings=f"models/ratings_{kind}.bin", lam=clf.lam)
    return t


def _gains(tables: dict[str, ResultTable]) -> ResultTable:
    """Percent gains of every system over the task baseline, flattened."""
    out = ResultTable("gains", ["gain_pct"], meta=dict(tables["mse"].meta))
    specs = [("mse", "MF", False)]
    specs += [(name, "MF", True) for name in tables if name.startswith("rouge_")]
    specs += [("sentiment", "text-svm", False)]
    for name, baseline, higher in specs:
        t = tables[name]
        for col in t.columns:
            g = compute_gains([t], baseline, col, higher)
            label = name if len(t.columns) == 1 else f"{name}:{col}"
            for row in g.rows:
                if row != baseline:
                    out.set(f"{label}/{row}", "gain_pct", g.get(row, "mean"))
    return out
