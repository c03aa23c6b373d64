from musictrunc.lm.base import LanguageModel, evaluate_nll, sequence_ic
from musictrunc.lm.degrade import NoisyModel, TemperatureModel, degrade_noise, degrade_temperature
from musictrunc.lm.dist import (
    CategoricalDistribution,
    DistributionError,
    entropy,
    information_content,
    log_softmax,
    softmax,
)
from musictrunc.lm.io import load_model, save_model
from musictrunc.lm.ngram import NGramModel, train_ngram

__all__ = [
    "CategoricalDistribution", "DistributionError", "LanguageModel", "NGramModel",
    "NoisyModel", "TemperatureModel", "degrade_noise", "degrade_temperature", "entropy",
    "evaluate_nll", "information_content", "load_model", "log_softmax", "save_model",
    "sequence_ic", "softmax", "train_ngram",
]
