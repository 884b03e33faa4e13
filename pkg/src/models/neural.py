"""
From-scratch multilayer perceptron for the parameter-to-state map mu -> x(t*, mu).

Hidden layers apply an activation (snake by default), the output layer is
linear. Training minimises the mean squared error with mini-batch Adam and
keeps the parameters of the epoch with the lowest validation loss.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..utils.config import Config
from ..utils.errors import TrainingDivergenceError
from ..utils.protocol import encode_matrix, decode_matrix


logger = logging.getLogger("NeuralMap")


class Activation(Enum):
    """Hidden-layer activations."""
    SNAKE = "snake"
    RELU = "relu"
    TANH = "tanh"


def snake(a: float, x):
    """Snake activation x + sin^2(a x) / a."""
    return x + np.sin(a * x) ** 2 / a


def snake_derivative(a: float, x):
    return 1.0 + np.sin(2.0 * a * x)


def _activate(activation: Activation, a: float, z: np.ndarray) -> np.ndarray:
    if activation is Activation.SNAKE:
        return snake(a, z)
    if activation is Activation.RELU:
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _activate_derivative(activation: Activation, a: float, z: np.ndarray) -> np.ndarray:
    if activation is Activation.SNAKE:
        return snake_derivative(a, z)
    if activation is Activation.RELU:
        return (z > 0.0).astype(float)
    return 1.0 - np.tanh(z) ** 2


@dataclass
class MlpConfig:
    """Network architecture and optimiser settings."""

    input_dim: int
    output_dim: int
    hidden_layers: List[int] = field(default_factory=lambda: [32, 32, 32])
    activation: Activation = Activation.SNAKE
    snake_frequency: float = Config.SNAKE_FREQUENCY
    learning_rate: float = Config.LEARNING_RATE
    max_epochs: int = Config.MAX_EPOCHS
    patience: int = Config.PATIENCE
    batch_size: int = Config.BATCH_SIZE
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.activation, Activation):
            self.activation = Activation(self.activation)
        self.hidden_layers = [int(width) for width in self.hidden_layers]
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("input_dim and output_dim must be >= 1")
        if any(width < 1 for width in self.hidden_layers):
            raise ValueError(f"hidden layer widths must be >= 1, got {self.hidden_layers}")
        if not self.snake_frequency > 0:
            raise ValueError("snake frequency must be > 0")
        if not self.learning_rate > 0:
            raise ValueError("learning rate must be > 0")
        if self.max_epochs < 1 or self.batch_size < 1:
            raise ValueError("max_epochs and batch_size must be >= 1")
        if not 1 <= self.patience <= self.max_epochs:
            raise ValueError("patience must lie in [1, max_epochs]")

    @property
    def layer_sizes(self) -> List[int]:
        return [self.input_dim, *self.hidden_layers, self.output_dim]

    @classmethod
    def from_preset(cls, preset: str, input_dim: int, output_dim: int, **overrides) -> 'MlpConfig':
        """Architecture preset ('lv' or 'pde') with optional field overrides."""
        if preset not in Config.MLP_PRESETS:
            raise ValueError(f"unknown MLP preset '{preset}'")
        settings = {**Config.MLP_PRESETS[preset], **overrides}
        return cls(input_dim=input_dim, output_dim=output_dim, **settings)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'input_dim': self.input_dim,
            'output_dim': self.output_dim,
            'hidden_layers': list(self.hidden_layers),
            'activation': self.activation.value,
            'snake_frequency': self.snake_frequency,
            'learning_rate': self.learning_rate,
            'max_epochs': self.max_epochs,
            'patience': self.patience,
            'batch_size': self.batch_size,
            'seed': self.seed
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'MlpConfig':
        return cls(**data)


@dataclass(frozen=True)
class AffineScaler:
    """Per-dimension affine map z = (y - shift) / scale."""

    shift: np.ndarray
    scale: np.ndarray

    @classmethod
    def identity(cls, dim: int) -> 'AffineScaler':
        return cls(np.zeros(dim), np.ones(dim))

    @classmethod
    def fit_range(cls, data: np.ndarray) -> 'AffineScaler':
        """Map the per-column [min, max] box onto [-1, 1]."""
        low, high = data.min(axis=0), data.max(axis=0)
        scale = (high - low) / 2.0
        scale[scale == 0.0] = 1.0
        return cls((high + low) / 2.0, scale)

    @classmethod
    def fit_standard(cls, data: np.ndarray) -> 'AffineScaler':
        """Standardise each column to zero mean and unit variance."""
        scale = data.std(axis=0)
        scale[scale == 0.0] = 1.0
        return cls(data.mean(axis=0), scale)

    def transform(self, y: np.ndarray) -> np.ndarray:
        return (y - self.shift) / self.scale

    def inverse(self, z: np.ndarray) -> np.ndarray:
        return z * self.scale + self.shift

    def to_dict(self) -> Dict[str, Any]:
        return {'shift': self.shift.tolist(), 'scale': self.scale.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'AffineScaler':
        return cls(np.asarray(data['shift'], dtype=float), np.asarray(data['scale'], dtype=float))


def initialize_parameters(config: MlpConfig, rng: np.random.Generator) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """Xavier-uniform weights (out x in) and zero biases."""
    weights, biases = [], []
    sizes = config.layer_sizes
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def network_forward(weights: List[np.ndarray], biases: List[np.ndarray], config: MlpConfig,
                    inputs: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray], List[np.ndarray]]:
    """Forward pass in scaled coordinates; rows of ``inputs`` are samples.

    Returns:
        (outputs, layer inputs, pre-activations) for backpropagation
    """
    activations = [inputs]
    pre_activations = []
    a = inputs
    last = len(weights) - 1
    for index, (W, b) in enumerate(zip(weights, biases)):
        z = a @ W.T + b
        pre_activations.append(z)
        a = z if index == last else _activate(config.activation, config.snake_frequency, z)
        activations.append(a)
    return a, activations, pre_activations


def loss_and_gradients(weights: List[np.ndarray], biases: List[np.ndarray], config: MlpConfig,
                       inputs: np.ndarray, targets: np.ndarray) -> Tuple[float, List[np.ndarray], List[np.ndarray]]:
    """Loss (1/B) sum_i ||y_i - M(mu_i)||^2 and its gradients by backpropagation."""
    outputs, activations, pre_activations = network_forward(weights, biases, config, inputs)
    residual = outputs - targets
    batch = inputs.shape[0]
    loss = float(np.sum(residual ** 2) / batch)

    grad_weights = [None] * len(weights)
    grad_biases = [None] * len(biases)
    delta = 2.0 * residual / batch
    for index in range(len(weights) - 1, -1, -1):
        if index != len(weights) - 1:
            delta = delta * _activate_derivative(config.activation, config.snake_frequency,
                                                 pre_activations[index])
        grad_weights[index] = delta.T @ activations[index]
        grad_biases[index] = delta.sum(axis=0)
        delta = delta @ weights[index]
    return loss, grad_weights, grad_biases


class AdamOptimizer:
    """Adam update over a flat list of parameter arrays."""

    def __init__(self, parameters: List[np.ndarray], learning_rate: float):
        self.learning_rate = learning_rate
        self.beta1 = Config.ADAM_BETA1
        self.beta2 = Config.ADAM_BETA2
        self.epsilon = Config.ADAM_EPSILON
        self.m = [np.zeros_like(p) for p in parameters]
        self.v = [np.zeros_like(p) for p in parameters]
        self.t = 0

    def step(self, parameters: List[np.ndarray], gradients: List[np.ndarray]) -> None:
        """Update ``parameters`` in place."""
        self.t += 1
        correction1 = 1.0 - self.beta1 ** self.t
        correction2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(parameters, gradients, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + self.epsilon)


@dataclass(frozen=True)
class NeuralMap:
    """Trained parameter-to-state network with its scalers."""

    config: MlpConfig
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    input_scaler: AffineScaler
    output_scaler: AffineScaler
    train_history: List[Tuple[float, float]] = field(default_factory=list)
    t_star: Optional[float] = None
    best_epoch: int = 0

    @property
    def best_valid_loss(self) -> float:
        if not self.train_history:
            return float('nan')
        return min(valid for _, valid in self.train_history)

    def forward(self, mu) -> np.ndarray:
        """Network output for one parameter vector or a batch of rows."""
        mu = np.asarray(mu, dtype=float)
        single = mu.ndim == 1
        batch = np.atleast_2d(mu)
        if batch.ndim != 2 or batch.shape[1] != self.config.input_dim:
            raise ValueError(f"parameter has shape {mu.shape}, network input dimension is {self.config.input_dim}")
        scaled, _, _ = network_forward(self.weights, self.biases, self.config,
                                       self.input_scaler.transform(batch))
        outputs = self.output_scaler.inverse(scaled)
        return outputs[0] if single else outputs

    def to_dict(self) -> Dict[str, Any]:
        return {
            'config': self.config.to_dict(),
            'weights': [encode_matrix(W) for W in self.weights],
            'biases': [b.tolist() for b in self.biases],
            'input_scaler': self.input_scaler.to_dict(),
            'output_scaler': self.output_scaler.to_dict(),
            'train_history': [list(entry) for entry in self.train_history],
            't_star': self.t_star,
            'best_epoch': self.best_epoch,
            'best_valid_loss': self.best_valid_loss
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'NeuralMap':
        return cls(
            MlpConfig.from_dict(data['config']),
            [decode_matrix(W) for W in data['weights']],
            [np.asarray(b, dtype=float) for b in data['biases']],
            AffineScaler.from_dict(data['input_scaler']),
            AffineScaler.from_dict(data['output_scaler']),
            [tuple(entry) for entry in data['train_history']],
            data.get('t_star'),
            int(data.get('best_epoch', 0))
        )


def _as_rows(array, dim: int, name: str) -> np.ndarray:
    array = np.asarray(array, dtype=float)
    if array.ndim == 1:
        array = array[:, None] if dim == 1 else array[None, :]
    if array.ndim != 2 or array.shape[1] != dim:
        raise ValueError(f"{name} has shape {array.shape}, expected rows of length {dim}")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} contains non-finite entries")
    return array


def train(train_inputs, train_targets, config: MlpConfig, valid_inputs=None, valid_targets=None,
          t_star: Optional[float] = None) -> NeuralMap:
    """Fit the network to (mu_i, y_i) pairs with mini-batch Adam and early stopping.

    Args:
        train_inputs: Parameters, one row per training sample
        train_targets: States (or reduced states), one row per training sample
        config: Architecture and optimiser settings
        valid_inputs: Validation parameters; training loss drives early stopping when absent
        valid_targets: Validation targets
        t_star: Time instant the map represents

    Returns:
        NeuralMap holding the parameters of the best validation epoch
    """
    mu = _as_rows(train_inputs, config.input_dim, 'training inputs')
    y = _as_rows(train_targets, config.output_dim, 'training targets')
    if mu.shape[0] != y.shape[0] or mu.shape[0] < 1:
        raise ValueError(f"need matching non-empty training pairs, got {mu.shape[0]} inputs and {y.shape[0]} targets")
    has_valid = valid_inputs is not None and len(valid_inputs) > 0
    if has_valid:
        mu_valid = _as_rows(valid_inputs, config.input_dim, 'validation inputs')
        y_valid = _as_rows(valid_targets, config.output_dim, 'validation targets')
        if mu_valid.shape[0] != y_valid.shape[0]:
            raise ValueError("validation inputs and targets differ in length")

    input_scaler = AffineScaler.fit_range(mu)
    output_scaler = AffineScaler.fit_standard(y)
    inputs, targets = input_scaler.transform(mu), output_scaler.transform(y)
    if has_valid:
        inputs_valid, targets_valid = input_scaler.transform(mu_valid), output_scaler.transform(y_valid)

    rng = np.random.default_rng(config.seed)
    weights, biases = initialize_parameters(config, rng)
    parameters = [*weights, *biases]
    optimizer = AdamOptimizer(parameters, config.learning_rate)

    history: List[Tuple[float, float]] = []
    best_loss = float('inf')
    best_state = ([W.copy() for W in weights], [b.copy() for b in biases])
    best_epoch = 0
    wait = 0
    n_samples = inputs.shape[0]

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n_samples)
        for start in range(0, n_samples, config.batch_size):
            batch = order[start:start + config.batch_size]
            _, grad_w, grad_b = loss_and_gradients(weights, biases, config, inputs[batch], targets[batch])
            optimizer.step(parameters, [*grad_w, *grad_b])

        train_loss, _, _ = loss_and_gradients(weights, biases, config, inputs, targets)
        if has_valid:
            outputs, _, _ = network_forward(weights, biases, config, inputs_valid)
            valid_loss = float(np.sum((outputs - targets_valid) ** 2) / inputs_valid.shape[0])
        else:
            valid_loss = train_loss
        if not (np.isfinite(train_loss) and np.isfinite(valid_loss)):
            raise TrainingDivergenceError(epoch)
        history.append((train_loss, valid_loss))

        if valid_loss < best_loss:
            best_loss = valid_loss
            best_state = ([W.copy() for W in weights], [b.copy() for b in biases])
            best_epoch = epoch
            wait = 0
        else:
            wait += 1
            if wait >= config.patience:
                logger.debug(f"early stopping at epoch {epoch}")
                break
        if epoch % 500 == 0:
            logger.debug(f"epoch {epoch}: train {train_loss:.3e}, valid {valid_loss:.3e}")

    logger.info(f"trained {'-'.join(map(str, config.layer_sizes))} network: best valid loss "
                f"{best_loss:.3e} at epoch {best_epoch}/{len(history)}")
    return NeuralMap(config, best_state[0], best_state[1], input_scaler, output_scaler,
                     history, t_star, best_epoch)
