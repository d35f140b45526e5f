"""Dense ReLU classifier with softmax output and hand-written backpropagation.

Layers follow z_l = W^[l] g^[l-1](z_{l-1}) + b^[l] with W^[l] of shape
(fan_out, fan_in). Inputs are batched row-wise: x has shape (S, fan_in) and
all gradients are summed over the S rows.
"""
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np

from fl_emph.errors import InputError, InternalError
from fl_emph.utils import random_seed

PROBABILITY_FLOOR = 1e-12


@dataclass
class DenseNet:
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise InputError("a network needs one bias vector per weight matrix")
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.ndim != 2 or b.shape != (W.shape[0],):
                raise InputError(f"layer {l + 1}: weight {W.shape} and bias {b.shape} do not match")
            if l and W.shape[1] != self.weights[l - 1].shape[0]:
                raise InputError(
                    f"layer {l + 1} expects {W.shape[1]} inputs but layer {l} has "
                    f"{self.weights[l - 1].shape[0]} outputs"
                )

    @property
    def widths(self) -> List[int]:
        return [self.weights[0].shape[1]] + [W.shape[0] for W in self.weights]

    @property
    def n_classes(self) -> int:
        return self.weights[-1].shape[0]

    def copy(self) -> "DenseNet":
        return DenseNet([W.copy() for W in self.weights], [b.copy() for b in self.biases])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "widths": self.widths,
            "weights": [W.tolist() for W in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "DenseNet":
        net = cls(
            [np.asarray(W, dtype=float) for W in d["weights"]],
            [np.asarray(b, dtype=float) for b in d["biases"]],
        )
        if net.widths != list(d["widths"]):
            raise InputError(f"checkpoint widths {d['widths']} disagree with its weights {net.widths}")
        return net


@dataclass
class ForwardCache:
    inputs: np.ndarray
    pre_activations: List[np.ndarray]
    activations: List[np.ndarray]
    probabilities: np.ndarray


@dataclass
class NetGradients:
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    input_gradient: np.ndarray


def init_dense_net(widths: Sequence[int], seed: Union[int, np.random.Generator] = 0) -> DenseNet:
    """glorot-uniform weights and zero biases

    Args:
        widths (Sequence[int]): [input width, hidden widths..., number of classes]
        seed (Union[int, np.random.Generator], optional): seed or generator. Defaults to 0.

    Raises:
        InputError: fewer than two widths, or a non-positive width

    Returns:
        DenseNet: freshly initialised network
    """
    widths = [int(w) for w in widths]
    if len(widths) < 2 or min(widths) < 1:
        raise InputError(f"network widths must be at least [input, classes], all positive; got {widths}")
    rng = seed if isinstance(seed, np.random.Generator) else random_seed(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return DenseNet(weights, biases)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def forward(net: DenseNet, x: np.ndarray) -> Tuple[np.ndarray, ForwardCache]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.ndim != 2 or x.shape[1] != net.widths[0]:
        raise InputError(f"network expects inputs of width {net.widths[0]}, got shape {x.shape}")

    pre_activations, activations = [], [x]
    h = x
    for l, (W, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ W.T + b
        pre_activations.append(z)
        if l < len(net.weights) - 1:
            h = np.maximum(z, 0.0)
            activations.append(h)
    probabilities = softmax(pre_activations[-1])
    cache = ForwardCache(x, pre_activations, activations, probabilities)
    return (probabilities[0] if single else probabilities), cache


def _check_labels(labels: np.ndarray, n_classes: int) -> np.ndarray:
    labels = np.atleast_1d(np.asarray(labels))
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise InputError(f"labels must lie in 0..{n_classes - 1}, got {np.unique(labels).tolist()}")
    return labels.astype(int)


def loss(probabilities: np.ndarray, label: Union[int, np.ndarray]) -> float:
    """Cross-entropy -log p[label], summed over rows for a batch."""
    probabilities = np.atleast_2d(probabilities)
    labels = _check_labels(label, probabilities.shape[1])
    if labels.size != probabilities.shape[0]:
        raise InputError(f"{labels.size} labels for {probabilities.shape[0]} probability rows")
    picked = probabilities[np.arange(labels.size), labels]
    return float(-np.log(np.maximum(picked, PROBABILITY_FLOOR)).sum())


def _check_cache(net: DenseNet, cache: ForwardCache) -> None:
    if len(cache.pre_activations) != len(net.weights) or len(cache.activations) != len(net.weights):
        raise InternalError("forward cache was produced by a network with a different depth")
    for l, W in enumerate(net.weights):
        if cache.activations[l].shape[1] != W.shape[1] or cache.pre_activations[l].shape[1] != W.shape[0]:
            raise InternalError(f"forward cache is stale at layer {l + 1}")


def backward(net: DenseNet, cache: ForwardCache, labels: Union[int, np.ndarray]) -> NetGradients:
    """Summed cross-entropy gradients, plus delta^[1] W^[1] per input row."""
    _check_cache(net, cache)
    labels = _check_labels(labels, net.n_classes)
    if labels.size != cache.inputs.shape[0]:
        raise InputError(f"{labels.size} labels for {cache.inputs.shape[0]} cached inputs")

    delta = cache.probabilities.copy()
    delta[np.arange(labels.size), labels] -= 1.0
    weight_grads: List[np.ndarray] = [None] * len(net.weights)
    bias_grads: List[np.ndarray] = [None] * len(net.weights)
    for l in reversed(range(len(net.weights))):
        weight_grads[l] = delta.T @ cache.activations[l]
        bias_grads[l] = delta.sum(axis=0)
        upstream = delta @ net.weights[l]
        if l:
            # ReLU'(0) = 0
            delta = upstream * (cache.pre_activations[l - 1] > 0)
    return NetGradients(weight_grads, bias_grads, upstream)


def apply_gradients(net: DenseNet, grads: NetGradients, learning_rate: float) -> None:
    for W, b, dW, db in zip(net.weights, net.biases, grads.weights, grads.biases):
        W -= learning_rate * dW
        b -= learning_rate * db


def predict(net: DenseNet, x: np.ndarray) -> np.ndarray:
    probabilities, _ = forward(net, np.atleast_2d(x))
    return probabilities.argmax(axis=1)
