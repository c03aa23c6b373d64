"""Command-line harness: ingest, split, train, degrade, sample, evaluate, run, sweep.

Experiments are described by one JSON config file; command-line flags
override individual keys. Example::

    {
      "corpus": {"toy": {"n_tunes": 500, "seed": 0}},
      "split_seed": 0,
      "model": {"order": 4, "alpha": 0.01},
      "degradations": [
        {"mode": "none"},
        {"mode": "temperature", "r": 1.5},
        {"mode": "noise", "k": 0.175, "seed": 7}
      ],
      "strategies": ["conventional", "nucleus", "typical"],
      "taus": [0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
      "samples_per_cell": 200,
      "seed": 0,
      "max_len": null,
      "max_lag": 38,
      "output_dir": "runs/example"
    }

``corpus`` is either a list of JSON-lines score files or ``{"toy": {...}}``.
A bare ``nucleus`` or ``typical`` strategy expands over ``taus``; an explicit
``nucleus:0.9`` or ``topk:8`` is a single cell. ``max_len`` null means the
80th percentile of training sequence lengths.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Sequence

from musictrunc import __version__
from musictrunc.corpus import (
    ABCParseError,
    FormSpec,
    Score,
    ValidationError,
    generate_toy_corpus,
    load_scores,
    split_corpus,
    write_scores,
)
from musictrunc.corpus.abc import iter_tune_blocks, parse_tune
from musictrunc.corpus.io import SchemaError, load_token_sequences, score_from_dict, write_token_sequences
from musictrunc.lm import degrade_noise, degrade_temperature, evaluate_nll, load_model, save_model, train_ngram
from musictrunc.metrics import DEFAULT_MAX_LAG, csv_rows, evaluate_sample_set
from musictrunc.rng import stable_hash
from musictrunc.sampling import (
    CONVENTIONAL,
    NUCLEUS,
    TYPICAL,
    GenerationOutcome,
    SamplingStrategy,
    default_max_len,
    generate_batch,
)
from musictrunc.tokenizer import Vocabulary, build_vocabulary, encode

log = logging.getLogger("musictrunc")

DEFAULT_TAUS = (0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


# ---------------------------------------------------------------- config


@dataclass
class ExperimentConfig:
    corpus: object = field(default_factory=lambda: {"toy": {"n_tunes": 500, "seed": 0}})
    split_seed: int = 0
    model: dict = field(default_factory=lambda: {"order": 4, "alpha": 0.01})
    degradations: list = field(default_factory=lambda: [{"mode": "none"}])
    strategies: list = field(default_factory=lambda: [CONVENTIONAL, NUCLEUS, TYPICAL])
    taus: list = field(default_factory=lambda: list(DEFAULT_TAUS))
    samples_per_cell: int = 200
    seed: int = 0
    max_len: Optional[int] = None
    max_lag: int = DEFAULT_MAX_LAG
    output_dir: str = "musictrunc-run"

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(obj) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**obj).validate()

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def validate(self) -> "ExperimentConfig":
        for name in ("split_seed", "seed"):
            if not isinstance(getattr(self, name), int):
                raise ValueError(f"{name} must be an explicit integer")
        if not isinstance(self.samples_per_cell, int) or self.samples_per_cell < 1:
            raise ValueError("samples_per_cell must be >= 1")
        if self.max_len is not None and self.max_len < 1:
            raise ValueError("max_len must be >= 1 or null")
        if self.max_lag < 1:
            raise ValueError("max_lag must be >= 1")
        if not self.degradations or not self.strategies:
            raise ValueError("the grid needs at least one degradation and one strategy")
        for spec in self.degradations:
            degradation_tag(spec)
        if not self.grid():
            raise ValueError("the strategy grid is empty")
        return self

    def grid(self) -> list[tuple[int, SamplingStrategy]]:
        """(tau_index, strategy) pairs in output order."""
        cells = []
        for text in self.strategies:
            if text in (NUCLEUS, TYPICAL):
                cells.extend((i, SamplingStrategy(text, float(t))) for i, t in enumerate(self.taus))
            else:
                cells.append((0, SamplingStrategy.parse(text)))
        return cells


def degradation_tag(spec: dict) -> str:
    mode = spec.get("mode")
    if mode == "none":
        return "none"
    if mode == "temperature":
        return f"temperature:r={float(spec['r']):g}"
    if mode == "noise":
        if not isinstance(spec.get("seed"), int):
            raise ValueError("noise degradation needs an explicit integer seed")
        return f"noise:k={float(spec['k']):g}:seed={spec['seed']}"
    raise ValueError(f"unknown degradation {spec!r}; mode must be none, temperature or noise")


def cell_seed(master_seed: int, degradation: str, strategy: str, tau_index: int) -> int:
    """Independent per-cell seed: adding a cell never changes the others."""
    return stable_hash(master_seed, degradation, strategy, tau_index)


def apply_degradation(model, spec: dict):
    mode = spec["mode"]
    if mode == "temperature":
        return degrade_temperature(model, float(spec["r"]))
    if mode == "noise":
        return degrade_noise(model, float(spec["k"]), int(spec["seed"]))
    return model


# ---------------------------------------------------------------- pipeline helpers


def ingest_file(path: Path, fmt: str) -> tuple[list[Score], list[str]]:
    """Parse one input file, collecting per-tune errors instead of stopping."""
    scores, errors = [], []
    text = path.read_text(encoding="utf-8")
    if fmt == "abc":
        for block in iter_tune_blocks(text):
            try:
                scores.append(parse_tune(block))
            except (ABCParseError, ValidationError) as exc:
                errors.append(f"{path}: tune at line {block.first_line}: {exc}")
    else:
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                scores.append(score_from_dict(json.loads(line), where=f"line {lineno}"))
            except json.JSONDecodeError as exc:
                errors.append(f"{path}: line {lineno}: invalid JSON ({exc.msg})")
            except (SchemaError, ValidationError) as exc:
                errors.append(f"{path}: {exc}")
    return scores, errors


def load_corpus(spec) -> list[Score]:
    if isinstance(spec, dict) and "toy" in spec:
        toy = dict(spec["toy"])
        n, seed = int(toy.pop("n_tunes", 500)), int(toy.pop("seed", 0))
        for key in ("keys", "time_signatures", "time_signature_weights", "bar_start_weights"):
            if key in toy:
                toy[key] = tuple(tuple(x) if isinstance(x, list) else x for x in toy[key])
        return generate_toy_corpus(n, seed, FormSpec(**toy))
    paths = [spec] if isinstance(spec, str) else list(spec)
    scores = []
    for path in paths:
        scores.extend(load_scores(path))
    return scores


def token_sequences(scores: Sequence[Score], vocab: Vocabulary) -> list[list[int]]:
    return [encode(s, vocab) for s in scores]


def sample_cell(model, strategy: SamplingStrategy, n: int, max_len: int, seed: int):
    outputs = generate_batch(model, strategy, n, max_len, seed)
    seqs = [tokens for tokens, _ in outputs]
    eos_rate = sum(o is GenerationOutcome.EOS_TERMINATED for _, o in outputs) / n
    return seqs, eos_rate


def run_grid(cfg: ExperimentConfig, base, reference: list[Score], max_len: int, out_dir: Path, model_tag: str) -> Path:
    """Sample and evaluate every cell; CSV rows follow grid order.

    Rows are appended to ``results.csv.partial`` which is renamed to
    ``results.csv`` only when every cell has finished.
    """
    cells_dir = out_dir / "cells"
    cells_dir.mkdir(parents=True, exist_ok=True)
    partial = out_dir / "results.csv.partial"
    final = out_dir / "results.csv"
    final.unlink(missing_ok=True)
    rows: list[dict] = []
    status = {"status": "incomplete", "completed_cells": 0, "version": __version__}
    grid = cfg.grid()
    try:
        for spec in cfg.degradations:
            dtag = degradation_tag(spec)
            try:
                model = apply_degradation(base, spec)
            except Exception as exc:
                raise StageError("degrade", f"{dtag}: {exc}") from exc
            for tau_index, strategy in grid:
                stag = strategy.kind if strategy.tau is not None else str(strategy)
                seed = cell_seed(cfg.seed, dtag, stag, tau_index)
                try:
                    seqs, eos_rate = sample_cell(model, strategy, cfg.samples_per_cell, max_len, seed)
                except Exception as exc:
                    raise StageError("sample", f"{dtag} / {strategy}: {exc}") from exc
                try:
                    report = evaluate_sample_set(base, reference, seqs, cfg.max_lag)
                except Exception as exc:
                    raise StageError("evaluate", f"{dtag} / {strategy}: {exc}") from exc
                report.eos_rate = eos_rate
                row = {
                    "model": model_tag, "degradation": dtag, "strategy": stag, "tau": strategy.tau,
                    "seed": seed, "n": cfg.samples_per_cell, "mean_ic": report.mean_ic, "ss": report.ss,
                    "se": report.se, "scale_consistency_mean": report.scale_consistency_mean,
                    "eos_rate": eos_rate, "wellformed_rate": report.wellformed_rate,
                }
                rows.append(row)
                detail = {"cell": row, "max_len": max_len, "report": asdict(report), "status": "complete"}
                name = f"{len(rows) - 1:03d}.json"
                (cells_dir / name).write_text(json.dumps(detail, indent=1, sort_keys=True) + "\n", encoding="utf-8")
                partial.write_text(csv_rows(rows), encoding="utf-8", newline="")
                status["completed_cells"] = len(rows)
        partial.replace(final)
        status["status"] = "complete"
        return final
    except StageError as exc:
        status["failed_stage"] = exc.stage
        status["error"] = str(exc)
        raise
    finally:
        status["total_cells"] = len(grid) * len(cfg.degradations)
        (out_dir / "status.json").write_text(json.dumps(status, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def model_tag_of(cfg_model: dict) -> str:
    return f"ngram:order={cfg_model.get('order', 4)}:alpha={float(cfg_model.get('alpha', 0.01)):g}"


def run_pipeline(cfg: ExperimentConfig) -> Path:
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(json.dumps(asdict(cfg), indent=1, sort_keys=True) + "\n", encoding="utf-8")
    try:
        scores = load_corpus(cfg.corpus)
    except Exception as exc:
        raise StageError("ingest", str(exc)) from exc
    try:
        split = split_corpus(scores, cfg.split_seed)
    except Exception as exc:
        raise StageError("split", str(exc)) from exc
    split_dir = out_dir / "split"
    split_dir.mkdir(exist_ok=True)
    for part in ("train", "validation", "test", "discarded"):
        write_scores(getattr(split, part), split_dir / f"{part}.jsonl")
    try:
        vocab = build_vocabulary(scores)
        model = train_ngram(
            token_sequences(split.train, vocab),
            order=int(cfg.model.get("order", 4)),
            alpha=float(cfg.model.get("alpha", 0.01)),
            vocab=vocab,
        )
        save_model(model, out_dir / "model.json")
    except Exception as exc:
        raise StageError("train", str(exc)) from exc
    max_len = cfg.max_len or default_max_len(split.train)
    log.info("trained %s on %d tunes; max_len=%d", model_tag_of(cfg.model), len(split.train), max_len)
    return run_grid(cfg, model, list(split.test), max_len, out_dir, model_tag_of(cfg.model))


# ---------------------------------------------------------------- subcommands


def cmd_ingest(args) -> int:
    scores, errors = [], []
    for path in args.inputs:
        try:
            got, bad = ingest_file(Path(path), args.format)
        except OSError as exc:
            raise StageError("ingest", f"cannot read {path}: {exc.strerror}") from exc
        scores.extend(got)
        errors.extend(bad)
    for message in errors:
        print(f"musictrunc: warning [ingest]: {message}", file=sys.stderr)
    print(f"{len(scores)} ok, {len(errors)} failed", file=sys.stderr)
    if not scores:
        raise StageError("ingest", "no tunes could be parsed from the input")
    write_scores(scores, args.output)
    return 0


def cmd_toy(args) -> int:
    write_scores(generate_toy_corpus(args.n_tunes, args.seed), args.output)
    return 0


def cmd_split(args) -> int:
    try:
        split = split_corpus(load_scores(args.scores), args.seed)
    except (ValueError, OSError) as exc:
        raise StageError("split", str(exc)) from exc
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for part in ("train", "validation", "test", "discarded"):
        write_scores(getattr(split, part), out / f"{part}.jsonl")
        print(f"{part}: {len(getattr(split, part))}", file=sys.stderr)
    return 0


def cmd_train(args) -> int:
    try:
        train = load_scores(args.train)
        vocab_scores = list(train)
        for path in args.vocab_from:
            vocab_scores.extend(load_scores(path))
        vocab = build_vocabulary(vocab_scores)
        model = train_ngram(token_sequences(train, vocab), order=args.order, alpha=args.alpha, vocab=vocab)
        save_model(model, args.output)
        if args.validation:
            nll = evaluate_nll(model, token_sequences(load_scores(args.validation), vocab))
            print(f"validation nll: {nll:.6f}", file=sys.stderr)
    except (ValueError, OSError) as exc:
        raise StageError("train", str(exc)) from exc
    return 0


def cmd_degrade(args) -> int:
    try:
        base = load_model(args.model)
        if args.temperature is not None:
            model = degrade_temperature(base, args.temperature)
        else:
            model = degrade_noise(base, args.noise, args.seed)
        save_model(model, args.output, base_path=args.model)
    except (ValueError, OSError) as exc:
        raise StageError("degrade", str(exc)) from exc
    return 0


def cmd_sample(args) -> int:
    try:
        model = load_model(args.model)
        strategy = SamplingStrategy.parse(args.strategy)
        max_len = args.max_len
        if max_len is None:
            if args.train is None:
                raise ValueError("pass --max-len or --train to derive it")
            max_len = default_max_len(load_scores(args.train))
        seqs, eos_rate = sample_cell(model, strategy, args.n, max_len, args.seed)
        write_token_sequences(seqs, args.output)
    except (ValueError, OSError) as exc:
        raise StageError("sample", str(exc)) from exc
    print(f"{len(seqs)} samples, eos rate {eos_rate:.3f}", file=sys.stderr)
    return 0


def cmd_evaluate(args) -> int:
    try:
        oracle = load_model(args.oracle)
        reference = load_scores(args.reference) if args.reference else []
        report = evaluate_sample_set(oracle, reference, load_token_sequences(args.samples), args.max_lag)
    except (ValueError, OSError) as exc:
        raise StageError("evaluate", str(exc)) from exc
    text = report.to_json() + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def config_from_args(args) -> ExperimentConfig:
    try:
        cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
        overrides = {
            "seed": args.seed, "split_seed": args.split_seed, "samples_per_cell": args.samples,
            "max_len": args.max_len, "max_lag": args.max_lag, "output_dir": args.output_dir,
            "strategies": args.strategies, "taus": args.taus,
        }
        cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
        if getattr(args, "corpus", None):
            cfg = replace(cfg, corpus=list(args.corpus))
        return cfg.validate()
    except (ValueError, TypeError, OSError, json.JSONDecodeError) as exc:
        raise StageError("config", str(exc)) from exc


def cmd_run(args) -> int:
    path = run_pipeline(config_from_args(args))
    print(path, file=sys.stderr)
    return 0


def cmd_sweep(args) -> int:
    cfg = config_from_args(args)
    try:
        base = load_model(args.model)
        reference = load_scores(args.reference)
    except (ValueError, OSError) as exc:
        raise StageError("sweep", str(exc)) from exc
    max_len = cfg.max_len
    if max_len is None:
        if args.train is None:
            raise StageError("sweep", "pass --max-len, set max_len in the config, or give --train")
        max_len = default_max_len(load_scores(args.train))
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tag = f"ngram:order={base.order}:alpha={base.alpha:g}" if hasattr(base, "order") else Path(args.model).stem
    print(run_grid(cfg, base, reference, max_len, out_dir, tag), file=sys.stderr)
    return 0


def _add_grid_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment config; flags below override its keys")
    p.add_argument("--seed", type=int, help="master generation seed")
    p.add_argument("--samples", type=int, help="samples per cell")
    p.add_argument("--max-len", type=int)
    p.add_argument("--max-lag", type=int)
    p.add_argument("--output-dir")
    p.add_argument("--strategies", nargs="+", help="e.g. conventional nucleus typical topk:8")
    p.add_argument("--taus", type=float, nargs="+")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="musictrunc", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="convert ABC or JSON-lines tunes into a score file")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--format", choices=("abc", "jsonl"), required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("toy", help="write a synthetic corpus")
    p.add_argument("-n", "--n-tunes", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_toy)

    p = sub.add_parser("split", help="length-filter and partition a score file")
    p.add_argument("scores")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("-o", "--output-dir", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="fit an n-gram model")
    p.add_argument("train")
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--vocab-from", nargs="*", default=[], help="extra score files whose tokens join the vocabulary")
    p.add_argument("--validation", help="report held-out NLL on this score file")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("degrade", help="write a temperature or noise variant of a model")
    p.add_argument("model")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--temperature", type=float)
    mode.add_argument("--noise", type=float)
    p.add_argument("--seed", type=int, default=0, help="noise seed")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("sample", help="generate token sequences")
    p.add_argument("model")
    p.add_argument("--strategy", default=CONVENTIONAL)
    p.add_argument("-n", type=int, default=200)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--max-len", type=int)
    p.add_argument("--train", help="score file for the default max length")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("evaluate", help="metrics report for a sample file")
    p.add_argument("--oracle", required=True)
    p.add_argument("--samples", required=True)
    p.add_argument("--reference")
    p.add_argument("--max-lag", type=int, default=DEFAULT_MAX_LAG)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="full pipeline from a config")
    _add_grid_flags(p)
    p.add_argument("--split-seed", type=int)
    p.add_argument("--corpus", nargs="+", help="score files replacing the config's corpus")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="degrade/sample/evaluate grid over a trained model")
    _add_grid_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--reference", required=True, help="held-out score file")
    p.add_argument("--train", help="score file for the default max length")
    p.set_defaults(func=cmd_sweep, split_seed=None)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except StageError as exc:
        print(f"musictrunc: error {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
