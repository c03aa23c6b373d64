import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from musictrunc.lm import (
    CategoricalDistribution,
    DistributionError,
    NGramModel,
    degrade_noise,
    degrade_temperature,
    entropy,
    evaluate_nll,
    information_content,
    load_model,
    log_softmax,
    save_model,
    sequence_ic,
    softmax,
    train_ngram,
)
from musictrunc.lm.degrade import describe_degradation

PAD, EOS, A, B = 0, 1, 2, 3


class FixedModel:
    """Returns the same log-probabilities for every context."""

    pad_id = None
    eos_id = 0
    context_window = 0

    def __init__(self, logp):
        self.logp = np.asarray(logp, dtype=np.float64)
        self.vocab_size = len(self.logp)

    def next_dist(self, context):
        return self.logp


def all_contexts(model, length):
    return itertools.product(range(model.vocab_size), repeat=length)


class TestDistribution:
    def test_entropy_examples(self):
        assert entropy(np.full(4, 0.25)) == pytest.approx(math.log(4))
        assert entropy(np.array([0.0, 1.0, 0.0])) == 0.0
        assert entropy(np.array([0.5, 0.25, 0.125, 0.125])) == pytest.approx(1.21301, abs=5e-6)

    @pytest.mark.parametrize("p, expected", [(1.0, 0.0), (1 / math.e, 1.0), (0.25, math.log(4))])
    def test_information_content(self, p, expected):
        dist = np.array([p, 1 - p]) if p < 1 else np.array([1.0, 0.0])
        assert information_content(dist, 0) == pytest.approx(expected, abs=1e-12)

    def test_zero_probability_is_infinite(self):
        assert information_content(np.array([1.0, 0.0]), 1) == math.inf

    def test_entropy_is_expected_ic(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            p = rng.dirichlet(np.ones(int(rng.integers(2, 30))))
            expected = sum(p[i] * information_content(p, i) for i in range(len(p)) if p[i] > 0)
            assert entropy(p) == pytest.approx(expected, abs=1e-9)

    def test_entropy_bounds(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            n = int(rng.integers(1, 40))
            h = entropy(rng.dirichlet(np.ones(n)))
            assert -1e-12 <= h <= math.log(n) + 1e-12

    def test_categorical_validation(self):
        with pytest.raises(DistributionError):
            CategoricalDistribution(np.array([0.0, 0.0]))
        with pytest.raises(DistributionError):
            CategoricalDistribution(np.array([-np.inf, -np.inf]))
        with pytest.raises(DistributionError):
            CategoricalDistribution(np.array([np.nan, 0.0]))

    def test_log_softmax_handles_neg_inf(self):
        out = log_softmax(np.array([0.0, -np.inf, 0.0]))
        assert out[1] == -np.inf
        np.testing.assert_allclose(softmax(np.array([0.0, -np.inf, 0.0])), [0.5, 0, 0.5])


class TestNGram:
    def test_bigram_hand_count(self):
        model = train_ngram([[A, B, EOS]], order=2, alpha=1.0, vocab_size=4, eos_id=EOS, pad_id=PAD)
        assert math.exp(model.next_dist([A])[B]) == pytest.approx(0.5, abs=1e-12)

    def test_pad_never_predicted(self):
        model = train_ngram([[A, B, EOS]], order=2, alpha=1.0, vocab_size=4, eos_id=EOS, pad_id=PAD)
        assert model.next_dist([A])[PAD] == -np.inf
        assert model.next_dist([])[PAD] == -np.inf

    def test_unigram_approaches_frequencies(self):
        seqs = [[A, A, B, EOS]] * 50
        model = train_ngram(seqs, order=1, alpha=1e-9, vocab_size=4, eos_id=EOS, pad_id=PAD)
        np.testing.assert_allclose(np.exp(model.next_dist([]))[1:], [0.25, 0.5, 0.25], atol=1e-6)

    def test_deterministic(self):
        seqs = [[A, B, A, EOS], [B, B, EOS]]
        m1 = train_ngram(seqs, order=3, alpha=0.1, vocab_size=4, eos_id=EOS)
        m2 = train_ngram(seqs, order=3, alpha=0.1, vocab_size=4, eos_id=EOS)
        for t1, t2 in zip(m1.parameter_groups(), m2.parameter_groups()):
            assert np.array_equal(t1, t2)

    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_every_context_normalized(self, order):
        model = train_ngram([[A, B, A, EOS], [B, EOS]], order=order, alpha=0.5, vocab_size=4, eos_id=EOS)
        for length in range(order + 1):
            for ctx in all_contexts(model, length):
                assert np.exp(model.next_dist(list(ctx))).sum() == pytest.approx(1.0, abs=1e-12)

    def test_back_off_to_shorter_context(self):
        model = train_ngram([[A, B, EOS], [B, A, EOS]], order=3, alpha=0.01, vocab_size=4, eos_id=EOS)
        # (B, B) never seen; the bigram row for B decides
        np.testing.assert_array_equal(model.next_dist([B, B]), model._tables[1][model._index[1][(B,)]])

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            train_ngram([[A, EOS]], order=0, vocab_size=4, eos_id=EOS)
        with pytest.raises(ValueError):
            train_ngram([[A, EOS]], alpha=0.0, vocab_size=4, eos_id=EOS)
        with pytest.raises(ValueError):
            train_ngram([[A, 9, EOS]], vocab_size=4, eos_id=EOS)


class TestNLL:
    def test_uniform_model(self):
        model = FixedModel(np.full(5, -math.log(5)))
        assert evaluate_nll(model, [[1, 2, 3, 0]]) == pytest.approx(math.log(5))

    def test_deterministic_model(self):
        model = FixedModel(np.array([0.0, -np.inf]))
        assert evaluate_nll(model, [[0, 0, 0]]) == 0.0

    def test_out_of_vocabulary(self):
        with pytest.raises(ValueError, match="outside the vocabulary"):
            evaluate_nll(FixedModel(np.full(3, -math.log(3))), [[0, 7]])

    def test_pad_positions_skipped(self):
        model = train_ngram([[A, B, EOS]], order=2, alpha=1.0, vocab_size=4, eos_id=EOS, pad_id=PAD)
        assert sequence_ic(model, [PAD, A, B, EOS]).size == 3


class TestTemperature:
    def test_closed_form(self):
        model = degrade_temperature(FixedModel(log_softmax(np.array([2.0, 0.0]))), 2.0)
        e = math.e
        np.testing.assert_allclose(np.exp(model.next_dist([])), [e / (e + 1), 1 / (e + 1)], atol=1e-12)

    def test_identity_at_one(self):
        base = FixedModel(log_softmax(np.array([1.0, 0.3, -2.0])))
        assert np.array_equal(degrade_temperature(base, 1.0).next_dist([]), base.logp)

    def test_large_r_is_uniform(self):
        base = FixedModel(log_softmax(np.array([3.0, 0.3, -2.0, 1.0])))
        np.testing.assert_allclose(np.exp(degrade_temperature(base, 1e6).next_dist([])), 0.25, atol=1e-6)

    @pytest.mark.parametrize("r", [0.0, -1.0])
    def test_invalid(self, r):
        with pytest.raises(ValueError):
            degrade_temperature(FixedModel([0.0]), r)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=2, max_size=20), st.floats(0.1, 5), st.floats(0.1, 5))
    def test_monotone_and_order_preserving(self, logits, r1, r2):
        logits = np.asarray(logits)
        if np.ptp(logits) < 1e-3 or abs(r1 - r2) < 1e-3:
            return
        r1, r2 = sorted((r1, r2))
        base = FixedModel(log_softmax(logits))
        p1 = np.exp(degrade_temperature(base, r1).next_dist([]))
        p2 = np.exp(degrade_temperature(base, r2).next_dist([]))
        assert entropy(p2) > entropy(p1)
        # order preserved wherever the base ranking is not a rounding-level tie
        above = logits[:, None] > logits[None, :] + 1e-9
        assert np.all((p2[:, None] >= p2[None, :])[above])


class TestNoise:
    @pytest.fixture
    def model(self):
        seqs = [[A, B, A, EOS], [B, B, A, EOS], [A, A, EOS]]
        return train_ngram(seqs, order=2, alpha=0.1, vocab_size=4, eos_id=EOS, pad_id=PAD)

    def test_zero_noise_is_identity(self, model):
        noisy = degrade_noise(model, 0.0, seed=3)
        for length in range(3):
            for ctx in all_contexts(model, length):
                assert np.array_equal(noisy.next_dist(list(ctx)), model.next_dist(list(ctx)))

    def test_fixed_seed_reproducible(self, model):
        a = degrade_noise(model, 0.5, seed=11)
        b = degrade_noise(model, 0.5, seed=11)
        c = degrade_noise(model, 0.5, seed=12)
        assert np.array_equal(a.next_dist([A]), b.next_dist([A]))
        assert not np.array_equal(a.next_dist([A]), c.next_dist([A]))

    def test_rows_renormalized(self, model):
        noisy = degrade_noise(model, 2.0, seed=1)
        for table in noisy.parameter_groups():
            np.testing.assert_allclose(np.exp(table).sum(axis=1), 1.0, atol=1e-12)
            assert np.all(table[:, PAD] == -np.inf)

    def test_perturbation_scale(self, model):
        # renormalization shifts each row by a constant; the centred residual keeps the noise
        k = 0.3
        noisy = degrade_noise(model, k, seed=5)
        for old, new in zip(model.parameter_groups(), noisy.parameter_groups()):
            finite = np.isfinite(old)
            diff = new[finite].reshape(old.shape[0], -1) - old[finite].reshape(old.shape[0], -1)
            centred = diff - diff.mean(axis=1, keepdims=True)
            assert np.all(np.isfinite(new[finite]))
            assert 0 < centred.std() < 3 * k * np.std(old[finite], ddof=1)

    def test_negative_k(self, model):
        with pytest.raises(ValueError):
            degrade_noise(model, -0.1, seed=0)

    def test_describe(self, model):
        assert describe_degradation(degrade_noise(model, 0.2, 4)) == {"mode": "noise", "k": 0.2, "seed": 4}
        assert describe_degradation(model) is None


class TestModelFiles:
    def test_round_trip(self, tmp_path):
        model = train_ngram([[A, B, EOS], [B, A, A, EOS]], order=3, alpha=0.05, vocab_size=4, eos_id=EOS)
        save_model(model, tmp_path / "m.json")
        loaded = load_model(tmp_path / "m.json")
        assert isinstance(loaded, NGramModel)
        for t1, t2 in zip(model.parameter_groups(), loaded.parameter_groups()):
            assert np.array_equal(t1, t2)

    def test_degraded_round_trip(self, tmp_path):
        model = train_ngram([[A, B, EOS], [B, A, A, EOS]], order=2, alpha=0.05, vocab_size=4, eos_id=EOS)
        save_model(model, tmp_path / "base.json")
        (tmp_path / "deg").mkdir()
        noisy = degrade_noise(model, 0.4, 9)
        save_model(noisy, tmp_path / "deg" / "noisy.json", base_path=tmp_path / "base.json")
        loaded = load_model(tmp_path / "deg" / "noisy.json")
        assert np.array_equal(loaded.next_dist([A]), noisy.next_dist([A]))

        save_model(degrade_temperature(model, 1.5), tmp_path / "t.json", base_path=tmp_path / "base.json")
        assert load_model(tmp_path / "t.json").r == 1.5

    def test_degraded_needs_base_path(self, tmp_path):
        model = train_ngram([[A, EOS]], order=1, vocab_size=4, eos_id=EOS)
        with pytest.raises(ValueError):
            save_model(degrade_temperature(model, 2.0), tmp_path / "t.json")

    def test_rejects_foreign_file(self, tmp_path):
        (tmp_path / "x.json").write_text('{"format": "other"}')
        with pytest.raises(ValueError):
            load_model(tmp_path / "x.json")
