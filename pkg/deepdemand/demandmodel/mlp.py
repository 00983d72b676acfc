"""A small numpy multilayer perceptron with manual backpropagation."""
from typing import Dict, Iterator, List, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatch, InvalidModelConfig
from .types import ACTIVATIONS

__all__ = ("MLP",)

# per layer: (input, pre-activation)
Cache = List[Tuple[np.ndarray, np.ndarray]]


class MLP:
    """Fully connected layers with a hidden activation and a linear last layer.

    Output nonlinearities are applied by callers.

    Attributes
    ----------
    dims : List[int]
        Layer widths, input first.
    weights : List[np.ndarray]
        ``(dims[i], dims[i + 1])`` per layer.
    biases : List[np.ndarray]
        ``(dims[i + 1],)`` per layer.
    activation : str
        ``relu`` or ``tanh``.

    """

    __slots__ = ("dims", "weights", "biases", "activation")

    def __init__(
        self,
        dims: Sequence[int],
        weights: Sequence[np.ndarray],
        biases: Sequence[np.ndarray],
        activation: str = "relu",
    ):
        if activation not in ACTIVATIONS:
            raise InvalidModelConfig(f"Unknown activation {activation!r}.")
        if len(dims) < 2 or len(weights) != len(dims) - 1 or len(biases) != len(weights):
            raise InvalidModelConfig(f"Inconsistent layer list for dims {list(dims)}.")
        for i, (w, b) in enumerate(zip(weights, biases)):
            if w.shape != (dims[i], dims[i + 1]) or b.shape != (dims[i + 1],):
                raise InvalidModelConfig(f"Layer {i} shape does not chain for dims {list(dims)}.")
        self.dims: List[int] = [int(d) for d in dims]
        self.weights: List[np.ndarray] = list(weights)
        self.biases: List[np.ndarray] = list(biases)
        self.activation = activation

    @classmethod
    def init(
        cls, dims: Sequence[int], rng: np.random.Generator, activation: str = "relu"
    ) -> "MLP":
        """Initialize uniformly in ``±1/sqrt(fan_in)``, weights and biases alike."""
        weights, biases = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(rng.uniform(-bound, bound, size=fan_out))
        return cls(dims, weights, biases, activation)

    @classmethod
    def zeros(cls, dims: Sequence[int], activation: str = "relu") -> "MLP":
        return cls(
            dims,
            [np.zeros((a, b)) for a, b in zip(dims[:-1], dims[1:])],
            [np.zeros(b) for b in dims[1:]],
            activation,
        )

    @property
    def in_dim(self) -> int:
        return self.dims[0]

    @property
    def out_dim(self) -> int:
        return self.dims[-1]

    def named_arrays(self, prefix: str) -> Iterator[Tuple[str, np.ndarray]]:
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            yield f"{prefix}.W{i}", w
            yield f"{prefix}.b{i}", b

    def copy(self) -> "MLP":
        return MLP(
            self.dims,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.activation,
        )

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Cache]:
        """Run the network on ``(N, in_dim)`` inputs."""
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise DimensionMismatch(
                f"Expected inputs of width {self.in_dim}, got shape {x.shape}."
            )
        cache: Cache = []
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            pre = x @ w + b
            cache.append((x, pre))
            x = pre if i == last else self._activate(pre)
        return x, cache

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(
        self, cache: Cache, grad_out: np.ndarray
    ) -> Tuple[np.ndarray, Dict[int, Tuple[np.ndarray, np.ndarray]]]:
        """Backpropagate ``grad_out`` through a cached forward pass.

        Returns
        -------
        Tuple[np.ndarray, Dict[int, Tuple[np.ndarray, np.ndarray]]]
            Gradient w.r.t. the input, and ``(dW, db)`` per layer index.

        """
        grads: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}
        grad = grad_out
        last = len(self.weights) - 1
        for i in range(last, -1, -1):
            x, pre = cache[i]
            if i != last:
                grad = grad * self._derivative(pre)
            grads[i] = (x.T @ grad, grad.sum(axis=0))
            grad = grad @ self.weights[i].T
        return grad, grads

    def _activate(self, pre: np.ndarray) -> np.ndarray:
        if self.activation == "relu":
            return np.maximum(pre, 0.0)
        return np.tanh(pre)

    def _derivative(self, pre: np.ndarray) -> np.ndarray:
        if self.activation == "relu":
            return (pre > 0).astype(float)
        return 1.0 - np.tanh(pre) ** 2

    def __repr__(self) -> str:
        return f"<MLP dims={self.dims} activation={self.activation}>"
