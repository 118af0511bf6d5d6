import math

import numpy as np
import pytest

from verbtensor.data import IMPLAUSIBLE, PLAUSIBLE
from verbtensor.evaluation import _holdout_halves, roc_auc
from verbtensor.tensor_model import (
    TrainConfig,
    VerbTensorModel,
    adagrad_step,
    forward,
    gradients,
    init_model,
    load_model,
    objective,
    predict,
    save_model,
    train,
)
from verbtensor.util import TrainingDiverged

ONE_HOT_TOP = np.array([1.0, 0.0])
ONE_HOT_BOT = np.array([0.0, 1.0])


def zero_model(k=2):
    return VerbTensorModel(np.zeros((k, k, 2)), np.zeros((2, 3)))


def random_model(rng, k=5, scale=0.5):
    return VerbTensorModel(
        rng.uniform(-scale, scale, (k, k, 2)), rng.uniform(-scale, scale, (2, 3))
    )


def random_example(rng, k=5):
    s = rng.standard_normal(k)
    o = rng.standard_normal(k)
    t = ONE_HOT_TOP if rng.random() < 0.5 else ONE_HOT_BOT
    return (s, o, t)


def finite_difference_grads(model, example, lam, h=1e-5):
    """Central differences of the single-example regularized objective."""

    def value(m):
        return objective(m, [example], lam)

    g_tensor = np.zeros_like(model.tensor)
    for idx in np.ndindex(*model.tensor.shape):
        plus, minus = model.copy(), model.copy()
        plus.tensor[idx] += h
        minus.tensor[idx] -= h
        g_tensor[idx] = (value(plus) - value(minus)) / (2 * h)
    g_theta = np.zeros_like(model.theta)
    for idx in np.ndindex(*model.theta.shape):
        plus, minus = model.copy(), model.copy()
        plus.theta[idx] += h
        minus.theta[idx] -= h
        g_theta[idx] = (value(plus) - value(minus)) / (2 * h)
    return g_tensor, g_theta


def max_relative_error(analytic, numeric):
    """Per-coordinate relative error, floored at 1e-4 of the gradient scale.

    The floor keeps coordinates that are orders of magnitude below the
    gradient's own scale from amplifying finite-difference rounding noise.
    """
    scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), 1e-12)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-4 * scale)
    return float(np.max(np.abs(analytic - numeric) / denom))


class TestForward:
    def test_symmetric_zero_model(self):
        trace = forward(zero_model(), [0.3, -0.7], [1.0, 2.0])
        np.testing.assert_allclose(trace.a, [0.5, 0.5])
        np.testing.assert_allclose(trace.p, [0.5, 0.5])

    def test_identical_class_parameters(self):
        rng = np.random.default_rng(0)
        model = random_model(rng, k=3)
        model.theta[1] = model.theta[0]
        trace = forward(model, rng.standard_normal(3), rng.standard_normal(3))
        np.testing.assert_allclose(trace.p, [0.5, 0.5], atol=1e-12)

    def test_scalar_chain_oracle(self):
        model = VerbTensorModel(
            np.array([[[0.8, -1.2]]]), np.array([[0.5, -0.3, 0.1], [-0.2, 0.7, -0.4]])
        )
        s, o = 1.5, -0.6
        trace = forward(model, [s], [o])
        z0, z1 = s * 0.8 * o, s * -1.2 * o
        a0 = 1.0 / (1.0 + math.exp(-z0))
        a1 = 1.0 / (1.0 + math.exp(-z1))
        l0 = 0.5 * a0 - 0.3 * a1 + 0.1
        l1 = -0.2 * a0 + 0.7 * a1 - 0.4
        denominator = math.exp(l0) + math.exp(l1)
        np.testing.assert_allclose(trace.z, [z0, z1], atol=1e-14)
        np.testing.assert_allclose(trace.a, [a0, a1], atol=1e-14)
        np.testing.assert_allclose(
            trace.p, [math.exp(l0) / denominator, math.exp(l1) / denominator], atol=1e-14
        )

    def test_distribution_invariants(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            model = random_model(rng, k=4, scale=1.5)
            trace = forward(model, rng.standard_normal(4), rng.standard_normal(4))
            assert np.all(trace.a > 0) and np.all(trace.a < 1)
            assert np.all(trace.p > 0) and np.all(trace.p < 1)
            assert abs(trace.p.sum() - 1.0) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="axis"):
            forward(zero_model(2), [1.0, 2.0, 3.0], [1.0, 2.0])


class TestObjective:
    def test_zero_model_single_example(self):
        value = objective(zero_model(), [([1.0, 0.0], [0.0, 1.0], ONE_HOT_TOP)], 0.0)
        assert value == pytest.approx(math.log(2.0), abs=1e-12)

    def test_perfect_prediction_is_zero_loss(self):
        # enormous class margins drive -log p below any tolerance
        model = zero_model()
        model.theta[0] = [80.0, 80.0, 80.0]
        model.theta[1] = [-80.0, -80.0, -80.0]
        value = objective(model, [([1.0, 0.0], [0.0, 1.0], ONE_HOT_TOP)], 0.0)
        assert value == pytest.approx(0.0, abs=1e-12)

    def test_regularizer_additivity(self):
        rng = np.random.default_rng(1)
        model = random_model(rng)
        batch = [random_example(rng) for _ in range(4)]
        lam = 0.37
        data_term = objective(model, batch, 0.0)
        full = objective(model, batch, lam)
        params_sq = float(np.sum(model.tensor**2) + np.sum(model.theta**2))
        assert full - data_term == pytest.approx(0.5 * lam * params_sq, rel=1e-12)

    def test_theta_regularization_switch(self):
        rng = np.random.default_rng(2)
        model = random_model(rng)
        batch = [random_example(rng)]
        lam = 0.5
        with_theta = objective(model, batch, lam, regularize_theta=True)
        without_theta = objective(model, batch, lam, regularize_theta=False)
        theta_sq = float(np.sum(model.theta**2))
        assert with_theta - without_theta == pytest.approx(0.5 * lam * theta_sq, rel=1e-12)

    def test_empty_batch_rejected(self):
        with pytest.raises(ValueError, match="non-empty"):
            objective(zero_model(), [], 0.0)

    def test_non_finite_reported_as_divergence(self):
        model = zero_model()
        model.theta[0] = [1e308, 1e308, 1e308]
        model.theta[1] = [-1e308, -1e308, -1e308]
        with pytest.raises(TrainingDiverged):
            objective(model, [([1.0, 0.0], [0.0, 1.0], ONE_HOT_BOT)], 0.0)


class TestGradients:
    def test_optimum_has_tiny_data_gradient(self):
        model = zero_model()
        model.theta[0] = [50.0, 50.0, 50.0]
        model.theta[1] = [-50.0, -50.0, -50.0]
        grads = gradients(model, ([1.0, 0.0], [0.0, 1.0], ONE_HOT_TOP), 0.0)
        assert np.max(np.abs(grads.tensor)) < 1e-12
        assert np.max(np.abs(grads.theta)) < 1e-12

    @pytest.mark.parametrize("k", [2, 5])
    def test_matches_finite_differences(self, k):
        rng = np.random.default_rng(42 + k)
        lam = 1e-4
        for _ in range(10):
            model = random_model(rng, k=k)
            example = random_example(rng, k=k)
            analytic = gradients(model, example, lam)
            fd_tensor, fd_theta = finite_difference_grads(model, example, lam)
            assert max_relative_error(analytic.tensor, fd_tensor) <= 1e-4
            assert max_relative_error(analytic.theta, fd_theta) <= 1e-4

    def test_regularizer_linearity(self):
        rng = np.random.default_rng(3)
        model = random_model(rng)
        example = random_example(rng)
        lam = 0.25
        with_reg = gradients(model, example, lam)
        without_reg = gradients(model, example, 0.0)
        np.testing.assert_allclose(
            with_reg.tensor - without_reg.tensor, lam * model.tensor, atol=1e-12
        )
        np.testing.assert_allclose(
            with_reg.theta - without_reg.theta, lam * model.theta, atol=1e-12
        )

    def test_single_adagrad_step_decreases_loss(self):
        rng = np.random.default_rng(8)
        lam = 1e-4
        checked = 0
        for _ in range(20):
            model = random_model(rng, k=3)
            example = random_example(rng, k=3)
            grads = gradients(model, example, lam)
            norm = math.sqrt(float(np.sum(grads.tensor**2) + np.sum(grads.theta**2)))
            if norm < 1e-10:
                continue
            before = objective(model, [example], lam)
            stepped = model.copy()
            adagrad_step(stepped.tensor, grads.tensor, np.zeros_like(stepped.tensor), 1e-3, 1e-8)
            adagrad_step(stepped.theta, grads.theta, np.zeros_like(stepped.theta), 1e-3, 1e-8)
            after = objective(stepped, [example], lam)
            assert after < before
            checked += 1
        assert checked >= 10


class TestTrain:
    def test_learns_separable_data(self, planted):
        dataset, embeddings = planted
        config = TrainConfig(epochs=30, seed=5)
        result = train(dataset, embeddings, config)
        assert result.objective_trace[-1] < result.objective_trace[0]
        correct = 0
        for t in dataset.triples:
            label, _ = predict(
                result.model, embeddings.vector(t.subject), embeddings.vector(t.object)
            )
            correct += label == t.label
        assert correct / len(dataset) >= 0.95

    def test_zero_learning_rate_is_identity(self, planted):
        dataset, embeddings = planted
        config = TrainConfig(learning_rate=0.0, epochs=3, seed=9)
        result = train(dataset, embeddings, config)
        reference = init_model(embeddings.dim, config, dataset.verb)
        np.testing.assert_array_equal(result.model.tensor, reference.tensor)
        np.testing.assert_array_equal(result.model.theta, reference.theta)

    def test_bit_identical_under_seed(self, planted):
        dataset, embeddings = planted
        config = TrainConfig(epochs=5, seed=21)
        a = train(dataset, embeddings, config)
        b = train(dataset, embeddings, config)
        assert a.objective_trace == b.objective_trace
        assert np.array_equal(a.model.tensor, b.model.tensor)
        assert np.array_equal(a.model.theta, b.model.theta)
        c = train(dataset, embeddings, TrainConfig(epochs=5, seed=22))
        assert not np.array_equal(a.model.tensor, c.model.tensor)

    def test_final_objective_not_worse_than_init(self, planted):
        dataset, embeddings = planted
        config = TrainConfig(epochs=12, seed=2, l2_lambda=1e-3)
        result = train(dataset, embeddings, config)
        assert result.objective_trace[-1] <= result.objective_trace[0]
        assert math.isfinite(result.objective_trace[-1])

    def test_batch_mode_also_learns(self, planted):
        dataset, embeddings = planted
        config = TrainConfig(epochs=60, seed=5, update_mode="batch", learning_rate=0.5)
        result = train(dataset, embeddings, config)
        assert result.objective_trace[-1] < result.objective_trace[0]

    def test_divergence_reports_epoch(self, planted):
        dataset, embeddings = planted
        config = TrainConfig(init_scale=1e300, epochs=2, seed=1)
        with pytest.raises(TrainingDiverged) as excinfo:
            train(dataset, embeddings, config)
        assert excinfo.value.epoch is not None

    def test_missing_embedding_rejected(self, planted):
        dataset, embeddings = planted
        from verbtensor.data import LabeledTriple, VerbDataset

        bad = VerbDataset(
            "vex", dataset.triples + [LabeledTriple("ghost", "vex", "sp000", PLAUSIBLE)]
        )
        with pytest.raises(ValueError, match="without embeddings"):
            train(bad, embeddings, TrainConfig(epochs=1))


class TestPredict:
    def test_tie_breaks_plausible(self):
        label, p = predict(zero_model(), [1.0, 0.0], [0.0, 1.0])
        assert p == pytest.approx(0.5)
        assert label == PLAUSIBLE

    def test_swapping_theta_flips_probability(self):
        rng = np.random.default_rng(4)
        model = random_model(rng, k=3)
        s, o = rng.standard_normal(3), rng.standard_normal(3)
        _, p = predict(model, s, o)
        swapped = model.copy()
        swapped.theta = swapped.theta[::-1].copy()
        _, p_swapped = predict(swapped, s, o)
        assert p_swapped == pytest.approx(1.0 - p, abs=1e-12)

    def test_held_out_auc_on_separable_data(self, planted):
        dataset, embeddings = planted
        pool, held = _holdout_halves(dataset, seed=123)
        result = train(pool, embeddings, TrainConfig(epochs=30, seed=7))
        scores = [
            predict(result.model, embeddings.vector(t.subject), embeddings.vector(t.object))[1]
            for t in held.triples
        ]
        assert roc_auc(scores, [t.label for t in held.triples]) > 0.9

    def test_implausible_label(self):
        model = zero_model()
        model.theta[1] = [3.0, 3.0, 3.0]  # push mass to the implausible class
        label, p = predict(model, [1.0, 0.0], [0.0, 1.0])
        assert label == IMPLAUSIBLE
        assert p < 0.5


class TestConfigValidation:
    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=-0.1)
        with pytest.raises(ValueError):
            TrainConfig(adagrad_epsilon=0.0)
        with pytest.raises(ValueError):
            TrainConfig(epochs=0)
        with pytest.raises(ValueError):
            TrainConfig(l2_lambda=-1.0)
        with pytest.raises(ValueError):
            TrainConfig(init_scale=0.0)
        with pytest.raises(ValueError):
            TrainConfig(update_mode="minibatch")


class TestModelIo:
    def test_round_trip(self, tmp_path, planted):
        dataset, embeddings = planted
        config = TrainConfig(epochs=2, seed=3)
        result = train(dataset, embeddings, config)
        base = tmp_path / "vex_k5"
        save_model(base, result.model, config, result.objective_trace)
        loaded = load_model(base)
        np.testing.assert_array_equal(loaded.tensor, result.model.tensor)
        np.testing.assert_array_equal(loaded.theta, result.model.theta)
        assert loaded.verb == "vex"
        meta = (tmp_path / "vex_k5.meta").read_text()
        assert "epoch,objective" in meta
        assert f"k = {embeddings.dim}" in meta
