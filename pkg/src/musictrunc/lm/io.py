"""JSON model files.

An n-gram file stores its hyper-parameters, the vocabulary (token
descriptors in id order) and the raw counts; log-probability tables are
rebuilt on load. A degraded-model file stores only the degradation and a
path to the base model file, relative to its own directory; the noise draw
is regenerated from the seed.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from musictrunc.lm.degrade import NoisyModel, TemperatureModel
from musictrunc.lm.ngram import NGramModel

FORMAT = "musictrunc-model"
VERSION = 1


def ngram_to_dict(model: NGramModel) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "type": "ngram",
        "order": model.order,
        "alpha": model.alpha,
        "vocab_size": model.vocab_size,
        "eos_id": model.eos_id,
        "pad_id": model.pad_id,
        "vocab": None if model.vocab is None else [t.describe() for t in model.vocab.tokens],
        "counts": [
            [[list(ctx), sorted(dist.items())] for ctx, dist in sorted(level.items())]
            for level in model.counts
        ],
    }


def ngram_from_dict(obj: dict) -> NGramModel:
    from musictrunc.tokenizer import Token, Vocabulary

    vocab = None
    if obj.get("vocab") is not None:
        vocab = Vocabulary(tuple(Token.from_descriptor(d) for d in obj["vocab"]))
    counts = [
        {tuple(ctx): {int(tok): int(c) for tok, c in dist} for ctx, dist in level}
        for level in obj["counts"]
    ]
    if len(counts) != obj["order"]:
        raise ValueError("model file: count tables do not match the order")
    return NGramModel(
        obj["order"], float(obj["alpha"]), obj["vocab_size"], obj["eos_id"], obj["pad_id"], counts, vocab
    )


def save_model(model, path: str | Path, base_path: str | Path | None = None) -> None:
    """Write ``model``; degraded models need ``base_path`` pointing at the saved base."""
    path = Path(path)
    if isinstance(model, NGramModel):
        obj = ngram_to_dict(model)
    elif isinstance(model, (TemperatureModel, NoisyModel)):
        if base_path is None:
            raise ValueError("saving a degraded model requires the base model's path")
        rel = os.path.relpath(Path(base_path).resolve(), path.resolve().parent)
        obj = {"format": FORMAT, "version": VERSION, "type": "degraded", "base": rel, **model.describe()}
    else:
        raise TypeError(f"cannot serialize model of type {type(model).__name__}")
    path.write_text(json.dumps(obj, separators=(",", ":")) + "\n", encoding="utf-8")


def load_model(path: str | Path):
    path = Path(path)
    obj = json.loads(path.read_text(encoding="utf-8"))
    if obj.get("format") != FORMAT:
        raise ValueError(f"{path}: not a {FORMAT} file")
    if obj["type"] == "ngram":
        return ngram_from_dict(obj)
    if obj["type"] == "degraded":
        base = load_model(path.parent / obj["base"])
        if obj["mode"] == "temperature":
            return TemperatureModel(base, obj["r"])
        if obj["mode"] == "noise":
            return NoisyModel(base, obj["k"], obj["seed"])
        raise ValueError(f"{path}: unknown degradation mode {obj['mode']!r}")
    raise ValueError(f"{path}: unknown model type {obj['type']!r}")
