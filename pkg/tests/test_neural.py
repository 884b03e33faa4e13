"""
Tests for the from-scratch neural map.
"""
import unittest

import numpy as np

from src.models import neural
from src.models.neural import Activation, AffineScaler, MlpConfig, NeuralMap
from src.utils.errors import TrainingDivergenceError


def identity_map(config, weights, biases):
    return NeuralMap(config, weights, biases, AffineScaler.identity(config.input_dim),
                     AffineScaler.identity(config.output_dim))


class TestActivation(unittest.TestCase):
    """Test the snake activation."""

    def test_values(self):
        self.assertEqual(neural.snake(1.0, 0.0), 0.0)
        self.assertAlmostEqual(neural.snake(1.0, np.pi), np.pi, places=14)

    def test_derivative(self):
        x = np.pi / 4
        self.assertAlmostEqual(neural.snake_derivative(1.0, x), 2.0, places=14)
        h = 1e-6
        for a in (0.5, 1.0, 3.0):
            for x in (-1.3, 0.2, 2.7):
                fd = (neural.snake(a, x + h) - neural.snake(a, x - h)) / (2 * h)
                self.assertAlmostEqual(neural.snake_derivative(a, x), fd, delta=1e-6)

    def test_monotone(self):
        x = np.linspace(-10, 10, 2001)
        self.assertTrue(np.all(np.diff(neural.snake(1.0, x)) >= 0))


class TestForward(unittest.TestCase):
    """Test the forward pass."""

    def test_zero_parameters_give_zero_output(self):
        config = MlpConfig(3, 2, hidden_layers=[4, 5])
        weights = [np.zeros((4, 3)), np.zeros((5, 4)), np.zeros((2, 5))]
        biases = [np.zeros(4), np.zeros(5), np.zeros(2)]
        np.testing.assert_array_equal(identity_map(config, weights, biases).forward([0.3, -2.0, 7.0]), np.zeros(2))

    def test_single_linear_layer_identity(self):
        config = MlpConfig(3, 3, hidden_layers=[])
        network = identity_map(config, [np.eye(3)], [np.zeros(3)])
        mu = np.array([0.5, -1.5, 2.0])
        np.testing.assert_array_equal(network.forward(mu), mu)

    def test_matches_straight_line_reimplementation(self):
        rng = np.random.default_rng(0)
        config = MlpConfig(2, 3, hidden_layers=[16], activation=Activation.SNAKE, snake_frequency=1.0)
        weights, biases = neural.initialize_parameters(config, rng)
        biases = [rng.normal(size=b.shape) for b in biases]
        scaler_in = AffineScaler(np.array([0.1, -0.2]), np.array([2.0, 0.5]))
        scaler_out = AffineScaler(np.array([1.0, 2.0, 3.0]), np.array([0.5, 1.5, 4.0]))
        network = NeuralMap(config, weights, biases, scaler_in, scaler_out)
        for _ in range(5):
            mu = rng.normal(size=2)
            z = (mu - scaler_in.shift) / scaler_in.scale
            hidden = [sum(weights[0][i, j] * z[j] for j in range(2)) + biases[0][i] for i in range(16)]
            hidden = [h + np.sin(h) ** 2 for h in hidden]
            out = [sum(weights[1][k, i] * hidden[i] for i in range(16)) + biases[1][k] for k in range(3)]
            expected = np.array(out) * scaler_out.scale + scaler_out.shift
            np.testing.assert_allclose(network.forward(mu), expected, rtol=1e-12, atol=1e-12)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(1)
        config = MlpConfig(2, 2, hidden_layers=[5], activation=Activation.TANH)
        weights, biases = neural.initialize_parameters(config, rng)
        network = identity_map(config, weights, biases)
        batch = rng.normal(size=(4, 2))
        outputs = network.forward(batch)
        for i in range(4):
            np.testing.assert_allclose(outputs[i], network.forward(batch[i]), rtol=1e-14)

    def test_dimension_mismatch(self):
        config = MlpConfig(2, 1, hidden_layers=[])
        network = identity_map(config, [np.ones((1, 2))], [np.zeros(1)])
        with self.assertRaises(ValueError):
            network.forward([1.0, 2.0, 3.0])


class TestGradients(unittest.TestCase):
    """Test backpropagation against central finite differences."""

    def test_gradient_check(self):
        rng = np.random.default_rng(2)
        config = MlpConfig(2, 2, hidden_layers=[8, 8], activation=Activation.SNAKE)
        weights, biases = neural.initialize_parameters(config, rng)
        biases = [0.1 * rng.normal(size=b.shape) for b in biases]
        inputs, targets = rng.uniform(-1, 1, size=(6, 2)), rng.normal(size=(6, 2))
        _, grad_w, grad_b = neural.loss_and_gradients(weights, biases, config, inputs, targets)
        parameters = weights + biases
        gradients = grad_w + grad_b
        h = 1e-5
        for _ in range(20):
            layer = int(rng.integers(len(parameters)))
            index = tuple(int(rng.integers(n)) for n in parameters[layer].shape)
            original = parameters[layer][index]
            parameters[layer][index] = original + h
            plus, _, _ = neural.loss_and_gradients(weights, biases, config, inputs, targets)
            parameters[layer][index] = original - h
            minus, _, _ = neural.loss_and_gradients(weights, biases, config, inputs, targets)
            parameters[layer][index] = original
            numeric = (plus - minus) / (2 * h)
            analytic = gradients[layer][index]
            self.assertLessEqual(abs(numeric - analytic), 1e-4 * max(abs(numeric), abs(analytic), 1e-6))

    def test_relu_and_tanh_gradients(self):
        rng = np.random.default_rng(3)
        for activation in (Activation.RELU, Activation.TANH):
            config = MlpConfig(3, 1, hidden_layers=[6], activation=activation)
            weights, biases = neural.initialize_parameters(config, rng)
            inputs, targets = rng.uniform(-1, 1, size=(4, 3)), rng.normal(size=(4, 1))
            _, grad_w, _ = neural.loss_and_gradients(weights, biases, config, inputs, targets)
            h = 1e-6
            weights[1][0, 2] += h
            plus, _, _ = neural.loss_and_gradients(weights, biases, config, inputs, targets)
            weights[1][0, 2] -= 2 * h
            minus, _, _ = neural.loss_and_gradients(weights, biases, config, inputs, targets)
            self.assertAlmostEqual(grad_w[1][0, 2], (plus - minus) / (2 * h), delta=1e-6)


class TestTraining(unittest.TestCase):
    """Test Adam training with early stopping."""

    def setUp(self):
        rng = np.random.default_rng(4)
        self.B = np.array([[2.0, -1.0], [0.5, 3.0]])
        self.c = np.array([1.0, -2.0])
        self.train_mu = rng.uniform(0, 1, size=(20, 2))
        self.valid_mu = rng.uniform(0, 1, size=(8, 2))
        self.train_y = self.train_mu @ self.B.T + self.c
        self.valid_y = self.valid_mu @ self.B.T + self.c

    def test_realizable_linear_data(self):
        config = MlpConfig(2, 2, hidden_layers=[], learning_rate=1e-2, max_epochs=5000,
                           patience=5000, batch_size=20, seed=0)
        network = neural.train(self.train_mu, self.train_y, config, self.valid_mu, self.valid_y)
        self.assertLessEqual(network.best_valid_loss, 1e-8)

    def test_interpolates_between_training_pairs(self):
        config = MlpConfig(1, 2, hidden_layers=[16], learning_rate=1e-2, max_epochs=3000, patience=3000)
        mu = np.linspace(0.0, 1.0, 9)[:, None]
        y = np.hstack([np.sin(2.0 * mu), mu ** 2])
        network = neural.train(mu, y, config)
        self.assertLess(network.best_valid_loss, 1e-2)
        for query in (0.0625, 0.4375, 0.8125):
            expected = [np.sin(2.0 * query), query ** 2]
            np.testing.assert_allclose(network.forward([query]), expected, atol=5e-2)

    def test_returns_best_validation_epoch(self):
        config = MlpConfig(2, 2, hidden_layers=[6], max_epochs=300, patience=20, seed=1)
        network = neural.train(self.train_mu, self.train_y, config, self.valid_mu, self.valid_y)
        losses = [valid for _, valid in network.train_history]
        self.assertEqual(network.best_epoch, int(np.argmin(losses)) + 1)
        scaled = network.output_scaler.transform(network.forward(self.valid_mu))
        target = network.output_scaler.transform(self.valid_y)
        loss = np.sum((scaled - target) ** 2) / len(self.valid_mu)
        self.assertAlmostEqual(loss, min(losses), delta=1e-10)

    def test_seed_determinism(self):
        config = MlpConfig(2, 2, hidden_layers=[5], max_epochs=20, patience=20, seed=3)
        a = neural.train(self.train_mu, self.train_y, config, self.valid_mu, self.valid_y)
        b = neural.train(self.train_mu, self.train_y, config, self.valid_mu, self.valid_y)
        for wa, wb in zip(a.weights, b.weights):
            np.testing.assert_array_equal(wa, wb)

    def test_divergence(self):
        config = MlpConfig(2, 2, hidden_layers=[4], learning_rate=1e200, max_epochs=5, patience=5)
        with self.assertRaises(TrainingDivergenceError) as ctx:
            neural.train(self.train_mu, self.train_y, config)
        self.assertGreaterEqual(ctx.exception.epoch, 1)

    def test_dict_roundtrip(self):
        config = MlpConfig(2, 2, hidden_layers=[5], max_epochs=10, patience=10)
        network = neural.train(self.train_mu, self.train_y, config, t_star=2.5)
        restored = NeuralMap.from_dict(network.to_dict())
        np.testing.assert_array_equal(restored.forward(self.valid_mu), network.forward(self.valid_mu))
        self.assertEqual(restored.t_star, 2.5)
        self.assertEqual(restored.best_epoch, network.best_epoch)


class TestConfigAndScalers(unittest.TestCase):
    """Test configuration validation and scalers."""

    def test_presets(self):
        lv = MlpConfig.from_preset("lv", 1, 2)
        self.assertEqual(lv.layer_sizes, [1, 32, 32, 32, 2])
        pde = MlpConfig.from_preset("pde", 2, 10, max_epochs=100, patience=10)
        self.assertEqual(pde.hidden_layers, [110] * 4)
        self.assertEqual(pde.activation, Activation.SNAKE)
        with self.assertRaises(ValueError):
            MlpConfig.from_preset("huge", 1, 1)

    def test_invalid_config(self):
        with self.assertRaises(ValueError):
            MlpConfig(1, 1, hidden_layers=[0])
        with self.assertRaises(ValueError):
            MlpConfig(1, 1, max_epochs=10, patience=20)
        with self.assertRaises(ValueError):
            MlpConfig(1, 1, snake_frequency=0.0)

    def test_scaler_roundtrip(self):
        rng = np.random.default_rng(5)
        data = rng.normal(size=(10, 3)) * [1.0, 100.0, 1e-3]
        for scaler in (AffineScaler.fit_range(data), AffineScaler.fit_standard(data)):
            y = rng.normal(size=(4, 3))
            np.testing.assert_allclose(scaler.transform(scaler.inverse(y)), y, atol=1e-12)

    def test_range_scaler_maps_box_to_unit_interval(self):
        data = np.array([[0.015], [0.1], [0.05]])
        scaled = AffineScaler.fit_range(data).transform(data)
        np.testing.assert_allclose(scaled.min(axis=0), [-1.0])
        np.testing.assert_allclose(scaled.max(axis=0), [1.0])


if __name__ == '__main__':
    unittest.main()
