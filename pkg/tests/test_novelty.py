import numpy as np
import pytest

from planu.novelty import (
    HashEmbedding,
    Mlp,
    RndModel,
    RunningNormalizer,
    StateBuffer,
    hash_embed,
)


class TestHashEmbed:
    def test_deterministic(self):
        np.testing.assert_array_equal(hash_embed("state-a"), hash_embed("state-a"))

    def test_unit_norm_for_nonempty(self):
        assert np.linalg.norm(hash_embed("hello world")) == pytest.approx(1.0)

    def test_empty_string_is_zero_vector(self):
        np.testing.assert_array_equal(hash_embed(""), np.zeros(384))

    def test_distinct_text_distinct_vector(self):
        assert not np.array_equal(hash_embed("abc"), hash_embed("xyz"))

    def test_dimension_parameter(self):
        assert hash_embed("abc", 16).shape == (16,)

    def test_provider_memoizes_same_object(self):
        provider = HashEmbedding()
        assert provider.embed("s") is provider.embed("s")


class TestMlp:
    def test_output_shape(self):
        net = Mlp((8, 4, 3), np.random.default_rng(0))
        out = net.forward(np.zeros(8))
        assert out.shape == (1, 3)
        out = net.forward(np.zeros((5, 8)))
        assert out.shape == (5, 3)

    def test_distinct_seeds_distinct_weights(self):
        a = Mlp((8, 4), np.random.default_rng(0))
        b = Mlp((8, 4), np.random.default_rng(1))
        assert a.parameter_bytes() != b.parameter_bytes()

    def test_sgd_step_reduces_regression_loss(self):
        rng = np.random.default_rng(0)
        net = Mlp((4, 8, 2), rng)
        x = rng.normal(size=(16, 4))
        y = rng.normal(size=(16, 2))

        def loss():
            d = net.forward(x) - y
            return float((d * d).sum(axis=1).mean())

        before = loss()
        for _ in range(200):
            p, cache = net.forward_cached(x)
            net.sgd_step(cache, 2.0 * (p - y) / len(x), lr=0.01)
        assert loss() < before

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        net = Mlp((3, 5, 2), rng)
        x = rng.normal(size=(4, 3))
        y = rng.normal(size=(4, 2))
        p, cache = net.forward_cached(x)
        # capture analytic parameter gradients via a unit-lr step delta
        w_before = [w.copy() for w in net.weights]
        b_before = [b.copy() for b in net.biases]
        net.sgd_step(cache, 2.0 * (p - y), lr=1.0)
        analytic_w = [wb - w for wb, w in zip(w_before, net.weights)]
        net.weights = [w.copy() for w in w_before]
        net.biases = [b.copy() for b in b_before]

        def loss():
            d = net.forward(x) - y
            return float((d * d).sum())

        eps = 1e-6
        for k in range(len(net.weights)):
            for idx in [(0, 0), (1, 1)]:
                net.weights[k][idx] += eps
                up = loss()
                net.weights[k][idx] -= 2 * eps
                down = loss()
                net.weights[k][idx] += eps
                fd = (up - down) / (2 * eps)
                assert analytic_w[k][idx] == pytest.approx(fd, rel=1e-4, abs=1e-6)


class TestRunningNormalizer:
    def test_standardizes_gaussian_data(self):
        rng = np.random.default_rng(0)
        norm = RunningNormalizer(3, clamp=10.0)
        data = rng.normal(loc=[1.0, -2.0, 5.0], scale=[0.5, 2.0, 1.0], size=(5000, 3))
        for row in data:
            norm.update(row)
        z = np.stack([norm.normalize(row) for row in data[:500]])
        np.testing.assert_allclose(z.mean(axis=0), 0.0, atol=0.15)
        np.testing.assert_allclose(z.std(axis=0), 1.0, atol=0.15)

    def test_clamps_outliers(self):
        norm = RunningNormalizer(1)
        for v in (0.0, 1.0, 0.5, 0.4):
            norm.update(np.array([v]))
        assert norm.normalize(np.array([1e9]))[0] == 1.0
        assert norm.normalize(np.array([-1e9]))[0] == -1.0

    def test_works_on_batches(self):
        norm = RunningNormalizer(2)
        norm.update(np.array([0.0, 0.0]))
        norm.update(np.array([1.0, 2.0]))
        out = norm.normalize(np.zeros((4, 2)))
        assert out.shape == (4, 2)


class TestStateBuffer:
    def test_fifo_eviction(self):
        buf = StateBuffer(capacity=3)
        for i in range(5):
            buf.add(np.array([float(i)]))
        assert len(buf) == 3
        rows = buf.sample(100, np.random.default_rng(0))
        assert set(rows.ravel()) <= {2.0, 3.0, 4.0}

    def test_empty_sample_raises(self):
        with pytest.raises(ValueError):
            StateBuffer().sample(1, np.random.default_rng(0))
        with pytest.raises(ValueError):
            StateBuffer().sample_weighted(1, np.random.default_rng(0))

    def test_bad_capacity_raises(self):
        with pytest.raises(ValueError):
            StateBuffer(capacity=0)

    def test_sample_weighted_weights_sum_to_one(self):
        buf = StateBuffer()
        shared = np.array([1.0, 2.0])
        for _ in range(10):
            buf.add(shared)
        buf.add(np.array([3.0, 4.0]))
        rows, weights = buf.sample_weighted(64, np.random.default_rng(0))
        assert weights.sum() == pytest.approx(1.0)
        assert rows.shape[0] == weights.shape[0] <= 2

    def test_sample_weighted_matches_sample_distribution(self):
        buf = StateBuffer()
        shared = np.array([1.0])
        buf.add(shared)
        buf.add(shared)
        buf.add(np.array([2.0]))
        rng = np.random.default_rng(5)
        rows, weights = buf.sample_weighted(3000, rng)
        w = dict(zip(rows.ravel().tolist(), weights.tolist()))
        assert w[1.0] == pytest.approx(2 / 3, abs=0.05)
        assert w[2.0] == pytest.approx(1 / 3, abs=0.05)


class TestRndModel:
    def make_model(self, **kwargs):
        kwargs.setdefault("embed_dim", 16)
        kwargs.setdefault("hidden_sizes", (8, 8))
        return RndModel(**kwargs)

    def test_novelty_nonnegative_and_deterministic(self):
        model = self.make_model(seed=0)
        x = hash_embed("some state", 16)
        assert model.novelty_reward(x) >= 0.0
        assert model.novelty_reward(x) == model.novelty_reward(x)

    def test_target_and_predictor_differ(self):
        model = self.make_model(seed=0)
        assert model.target.parameter_bytes() != model.predictor.parameter_bytes()

    def test_dimension_mismatch_raises(self):
        model = self.make_model()
        with pytest.raises(ValueError):
            model.novelty_reward(np.zeros(7))

    def test_training_reduces_novelty_on_seen_states(self):
        rng = np.random.default_rng(0)
        model = self.make_model(seed=1, learning_rate=1e-3)
        buf = StateBuffer()
        states = [rng.normal(size=16) for _ in range(20)]
        for x in states:
            model.observe(x)
            buf.add(x)
        before = np.mean([model.novelty_reward(x) for x in states])
        for _ in range(200):
            model.train_predictor(buf, batch_size=20, steps=5)
        after = np.mean([model.novelty_reward(x) for x in states])
        assert after < before

    def test_output_gain_scales_novelty_quadratically(self):
        x = hash_embed("state", 16)
        lo = self.make_model(seed=2, output_gain=1.0)
        hi = self.make_model(seed=2, output_gain=10.0)
        lo.observe(x)
        hi.observe(x)
        assert hi.novelty_reward(x) == pytest.approx(100.0 * lo.novelty_reward(x))

    def test_intrinsic_weight_scales_novelty_linearly(self):
        x = hash_embed("state", 16)
        a = self.make_model(seed=2, intrinsic_reward_weight=0.01)
        b = self.make_model(seed=2, intrinsic_reward_weight=0.02)
        assert b.novelty_reward(x) == pytest.approx(2.0 * a.novelty_reward(x))

    def test_train_on_empty_buffer_raises(self):
        with pytest.raises(ValueError):
            self.make_model().train_predictor(StateBuffer())

    def test_training_does_not_change_target(self):
        model = self.make_model(seed=3)
        buf = StateBuffer()
        buf.add(np.ones(16))
        frozen = model.target.parameter_bytes()
        model.train_predictor(buf)
        assert model.target.parameter_bytes() == frozen
