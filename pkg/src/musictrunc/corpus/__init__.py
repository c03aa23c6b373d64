from musictrunc.corpus.abc import ABCParseError, UnsupportedConstruct, parse_abc, render_abc
from musictrunc.corpus.io import SchemaError, load_scores, write_scores
from musictrunc.corpus.score import (
    MAX_DURATION,
    TICKS_PER_BEAT,
    Bar,
    Note,
    Score,
    TimeSignature,
    ValidationError,
    make_bar,
)
from musictrunc.corpus.split import CorpusSplit, split_corpus
from musictrunc.corpus.toy import FormSpec, generate_toy_corpus

__all__ = [
    "ABCParseError", "Bar", "CorpusSplit", "FormSpec", "MAX_DURATION", "Note",
    "SchemaError", "Score", "TICKS_PER_BEAT", "TimeSignature", "UnsupportedConstruct",
    "ValidationError", "generate_toy_corpus", "load_scores", "make_bar", "parse_abc",
    "render_abc", "split_corpus", "write_scores",
]
