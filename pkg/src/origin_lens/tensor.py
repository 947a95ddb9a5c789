"""Tensor conventions and parameter containers.

Tensors are plain numpy arrays in row-major batch x height x width x channel
(BHWC) layout. The scalar kind is selectable per run: float32 for training
speed, float64 for finite-difference gradient checks.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError

SCALAR_KINDS = {"f32": np.float32, "f64": np.float64}


def resolve_dtype(kind):
    """Map a scalar-kind name ("f32" or "f64") to a numpy dtype."""
    try:
        return SCALAR_KINDS[kind]
    except KeyError:
        raise ConfigError(f"unknown scalar kind {kind!r}; expected one of {sorted(SCALAR_KINDS)}")


def scalar_kind_of(dtype):
    for name, dt in SCALAR_KINDS.items():
        if np.dtype(dtype) == dt:
            return name
    raise ConfigError(f"unsupported tensor dtype {dtype!r}")


def require_shape(name, array, expected):
    """Raise ShapeError naming the first offending dimension.

    ``expected`` entries may be None to accept any extent.
    """
    if array.ndim != len(expected):
        raise ShapeError(f"{name}: expected rank {len(expected)}, got rank {array.ndim}")
    for axis, (got, want) in enumerate(zip(array.shape, expected)):
        if want is not None and got != want:
            raise ShapeError(f"{name}: dimension {axis} is {got}, expected {want}")


@dataclass
class LayerParams:
    """A trainable weight/bias pair with accumulated gradients.

    ``frozen`` parameters are never modified by an optimizer step.
    """

    name: str
    weights: np.ndarray
    bias: np.ndarray
    grad_w: np.ndarray = None
    grad_b: np.ndarray = None
    frozen: bool = False

    def __post_init__(self):
        if self.grad_w is None:
            self.grad_w = np.zeros_like(self.weights)
        if self.grad_b is None:
            self.grad_b = np.zeros_like(self.bias)
        if self.grad_w.shape != self.weights.shape:
            raise ShapeError(f"{self.name}: grad_w shape {self.grad_w.shape} != weights shape {self.weights.shape}")
        if self.grad_b.shape != self.bias.shape:
            raise ShapeError(f"{self.name}: grad_b shape {self.grad_b.shape} != bias shape {self.bias.shape}")

    def zero_grads(self):
        self.grad_w[...] = 0
        self.grad_b[...] = 0

    @property
    def dtype(self):
        return self.weights.dtype


@dataclass
class BatchNormState:
    """Per-channel batch normalization parameters and running statistics."""

    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    epsilon: float = 1e-5
    momentum: float = 0.9

    def __post_init__(self):
        n = self.gamma.shape[0]
        for name in ("beta", "running_mean", "running_var"):
            arr = getattr(self, name)
            if arr.shape != (n,):
                raise ShapeError(f"batchnorm {name}: shape {arr.shape}, expected ({n},)")
        if np.any(self.running_var < 0):
            raise ShapeError("batchnorm running_var has negative entries")
        if not 0 < self.momentum < 1:
            raise ConfigError(f"batchnorm momentum {self.momentum} not in (0,1)")
        if self.epsilon <= 0:
            raise ConfigError(f"batchnorm epsilon {self.epsilon} must be positive")

    @classmethod
    def create(cls, channels, dtype, epsilon=1e-5, momentum=0.9):
        return cls(
            gamma=np.ones(channels, dtype=dtype),
            beta=np.zeros(channels, dtype=dtype),
            running_mean=np.zeros(channels, dtype=dtype),
            running_var=np.ones(channels, dtype=dtype),
            epsilon=epsilon,
            momentum=momentum,
        )
