"""Tests for contrastive training: gradients, ADAM steps and the epoch loop."""

from collections import Counter

import numpy as np
import pytest

from contactless_fingerprint.errors import NonFiniteError, ParameterError, TrainingError
from contactless_fingerprint.network import AdamConfig, ContrastiveConfig, NetworkParams, NetworkSpec, init_params
from contactless_fingerprint.network.loss import contrastive_loss_batch
from contactless_fingerprint.network.optim import AdamState, adam_update
from contactless_fingerprint.network.siamese import backward, batch_statistics, forward
from contactless_fingerprint.network.trainer import (
    backward_and_step,
    genuine_pairs,
    pair_distances,
    sample_epoch_pairs,
    train,
    train_from_scratch,
)
from contactless_fingerprint.synthetic import random_finger_spec, render_impression
from contactless_fingerprint.synthetic.generator import draw_perturbations


def batch_loss(params: NetworkParams, left, right, same) -> float:
    embeddings, _ = forward(params, np.concatenate([left, right]), training=True)
    loss, _, _ = contrastive_loss_batch(embeddings[: len(left)], embeddings[len(left) :], same)
    return loss


def analytic_gradients(params: NetworkParams, left, right, same):
    embeddings, tape = forward(params, np.concatenate([left, right]), training=True)
    _, d_left, d_right = contrastive_loss_batch(embeddings[: len(left)], embeddings[len(left) :], same)
    return backward(params, tape, np.concatenate([d_left, d_right]))


def toy_images(fingers: int = 4, impressions: int = 4, shape=(31, 24)):
    """Small rendered impressions labelled by finger."""
    images, labels = [], []
    for finger in range(fingers):
        spec = random_finger_spec(seed=finger, image_shape=shape, wavelength=5.0, planted=0)
        for perturbation in draw_perturbations(spec, impressions):
            images.append(render_impression(spec, perturbation))
            labels.append(f"finger{finger}")
    return images, labels


@pytest.fixture
def tiny_params():
    return init_params(NetworkSpec.tiny(), seed=2, dtype=np.float64)


@pytest.fixture
def tiny_pairs():
    rng = np.random.default_rng(8)
    left = rng.random((2, 8, 8, 3))
    right = rng.random((2, 8, 8, 3))
    return left, right, np.array([True, False])


class TestGradients:
    """Finite-difference checks of the hand-written backward pass."""

    @pytest.mark.parametrize(
        "labels", [(True, True), (False, False), (True, False)], ids=["genuine", "impostor", "mixed"]
    )
    def test_matches_central_differences(self, tiny_params, tiny_pairs, labels):
        """Every trainable parameter of the tiny network, float64, step 1e-4."""
        left, right, _ = tiny_pairs
        same = np.array(labels)
        grads = analytic_gradients(tiny_params, left, right, same)
        step = 1e-4
        worst = 0.0
        for name in tiny_params.trainable_names():
            tensor = tiny_params.tensors[name]
            assert grads[name].shape == tensor.shape
            for index in np.ndindex(tensor.shape):
                original = tensor[index]
                tensor[index] = original + step
                plus = batch_loss(tiny_params, left, right, same)
                tensor[index] = original - step
                minus = batch_loss(tiny_params, left, right, same)
                tensor[index] = original
                numeric = (plus - minus) / (2 * step)
                analytic = grads[name][index]
                error = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-5)
                worst = max(worst, error)
        assert worst < 1e-3

    def test_every_trainable_tensor_has_a_gradient(self, tiny_params, tiny_pairs):
        grads = analytic_gradients(tiny_params, *tiny_pairs)
        assert set(tiny_params.trainable_names()) <= set(grads)
        assert not any(name.endswith(("running_mean", "running_var")) for name in grads)

    def test_branches_share_gradients(self, tiny_params, tiny_pairs):
        """Swapping the branch inputs leaves the summed gradient unchanged."""
        left, right, same = tiny_pairs
        forward_order = analytic_gradients(tiny_params, left, right, same)
        swapped = analytic_gradients(tiny_params, right, left, same)
        for name in tiny_params.trainable_names():
            np.testing.assert_allclose(forward_order[name], swapped[name], atol=1e-10)


class TestBackwardAndStep:
    """Tests for a single optimization step."""

    def test_zero_loss_pair_only_moves_running_statistics(self, tiny_params):
        """An impostor pair already beyond the margin has zero loss and zero gradient."""
        rng = np.random.default_rng(1)
        left, right = rng.random((1, 8, 8, 3)), rng.random((1, 8, 8, 3))
        beyond = ContrastiveConfig(margin=1e-9)
        result = backward_and_step(tiny_params, AdamState(), left, right, np.array([False]), contrastive=beyond)
        assert result.loss == 0.0
        for name in tiny_params.trainable_names():
            np.testing.assert_array_equal(result.params.tensors[name], tiny_params.tensors[name])
        assert not np.array_equal(result.params.tensors["bn1.running_mean"], tiny_params.tensors["bn1.running_mean"])

    def test_running_statistics_use_momentum(self, tiny_params, tiny_pairs):
        left, right, same = tiny_pairs
        _, tape = forward(tiny_params, np.concatenate([left, right]), training=True)
        mean, var = batch_statistics(tape)["bn1"]
        result = backward_and_step(tiny_params, AdamState(), left, right, same)
        np.testing.assert_allclose(result.params.tensors["bn1.running_mean"], 0.1 * mean)
        np.testing.assert_allclose(result.params.tensors["bn1.running_var"], 0.9 + 0.1 * var)

    def test_input_params_untouched(self, tiny_params, tiny_pairs):
        before = {name: value.copy() for name, value in tiny_params.tensors.items()}
        backward_and_step(tiny_params, AdamState(), *tiny_pairs)
        for name, value in before.items():
            np.testing.assert_array_equal(tiny_params.tensors[name], value)

    def test_repeated_steps_reduce_loss(self, tiny_params, tiny_pairs):
        state = AdamState()
        params = tiny_params
        losses = []
        for _ in range(30):
            step = backward_and_step(params, state, *tiny_pairs, adam=AdamConfig(learning_rate=1e-2))
            params = step.params
            losses.append(step.loss)
        assert losses[-1] < losses[0]
        assert state.step == 30

    def test_non_finite_activation_names_layer(self, tiny_params, tiny_pairs):
        tiny_params.tensors["conv1.weight"][0, 0, 0, 0] = np.nan
        with pytest.raises(NonFiniteError, match="conv1") as excinfo:
            backward_and_step(tiny_params, AdamState(), *tiny_pairs)
        assert excinfo.value.tensor_name == "conv1"


class TestAdam:
    """Tests for the ADAM update."""

    def test_first_step_moves_by_learning_rate(self):
        """Bias correction makes the first step lr * sign(grad)."""
        tensors = {"w": np.array([1.0, -2.0, 0.5])}
        grads = {"w": np.array([0.3, -4.0, 1e-3])}
        cfg = AdamConfig(learning_rate=0.01, epsilon=1e-12)
        updated = adam_update(tensors, grads, AdamState(), cfg)
        np.testing.assert_allclose(updated["w"], [0.99, -1.99, 0.49], rtol=1e-9)

    def test_state_accumulates(self):
        state = AdamState()
        tensors = {"w": np.zeros(2)}
        for _ in range(3):
            tensors.update(adam_update(tensors, {"w": np.ones(2)}, state, AdamConfig()))
        assert state.step == 3
        np.testing.assert_allclose(state.first_moment["w"], 1 - 0.9**3)

    def test_invalid_config(self):
        with pytest.raises(ParameterError, match="betas"):
            AdamConfig(beta1=1.0)
        with pytest.raises(ParameterError, match="learning rate"):
            AdamConfig(learning_rate=0.0)
        with pytest.raises(ParameterError, match="batch size"):
            AdamConfig(batch_size=0)


class TestPairSampling:
    """Tests for per-epoch pair sampling."""

    def test_genuine_pairs(self):
        assert genuine_pairs(["a", "a", "b", "a"]) == [(0, 1), (0, 3), (1, 3)]

    def test_balanced_and_labelled(self):
        labels = [f"f{k // 3}" for k in range(12)]
        left, right, same = sample_epoch_pairs(labels, np.random.default_rng(0))
        counts = Counter(same.tolist())
        assert counts[True] == counts[False] == 12
        for a, b, s in zip(left, right, same):
            assert (labels[a] == labels[b]) == s

    def test_seeded(self):
        labels = [f"f{k // 2}" for k in range(8)]
        first = sample_epoch_pairs(labels, np.random.default_rng(4))
        second = sample_epoch_pairs(labels, np.random.default_rng(4))
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a, b)

    def test_needs_genuine_pairs(self):
        with pytest.raises(TrainingError, match="no genuine pairs"):
            sample_epoch_pairs(["a", "b", "c"], np.random.default_rng(0))

    def test_needs_two_fingers(self):
        with pytest.raises(TrainingError, match="at least 2 fingers"):
            sample_epoch_pairs(["a", "a", "a"], np.random.default_rng(0))


class TestTrainingLoop:
    """Tests for train and train_from_scratch."""

    def test_label_count_mismatch(self, tiny_params):
        with pytest.raises(TrainingError, match="labels"):
            train([np.zeros((8, 8, 3), dtype=np.uint8)], ["a", "b"], tiny_params)

    def test_zero_epochs_keeps_initial_parameters(self, tiny_params):
        images = [np.zeros((8, 8, 3), dtype=np.uint8)] * 4
        result = train(images, ["a", "a", "b", "b"], tiny_params, adam=AdamConfig(epochs=0))
        assert result.params is tiny_params
        assert result.epoch_losses == []
        assert result.genuine_pairs == 2

    def test_epoch_callback_and_determinism(self):
        images, labels = toy_images(fingers=2, impressions=3, shape=(8, 8))
        adam = AdamConfig(epochs=3, batch_size=4, seed=11)
        seen = []
        first = train_from_scratch(
            images, labels, NetworkSpec.tiny(), adam=adam, on_epoch=lambda epoch, loss: seen.append(epoch)
        )
        second = train_from_scratch(images, labels, NetworkSpec.tiny(), adam=adam)
        assert seen == [1, 2, 3]
        assert first.epoch_losses == second.epoch_losses
        for name, value in first.params.tensors.items():
            np.testing.assert_array_equal(second.params.tensors[name], value)

    def test_toy_set_separates_fingers(self):
        """Forty epochs on four synthetic fingers pull genuine pairs closer than impostors."""
        images, labels = toy_images()
        adam = AdamConfig(epochs=40, batch_size=16, seed=0)
        result = train_from_scratch(images, labels, NetworkSpec.desk(), ContrastiveConfig(margin=1.0), adam)
        assert len(result.epoch_losses) == 40
        assert all(np.isfinite(result.epoch_losses))
        genuine, impostor = pair_distances(result.params, images, labels)
        assert genuine < impostor

