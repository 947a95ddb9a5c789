"""Forward and backward kernels for every layer the patch classifier uses.

Each functional op validates shapes and delegates heavy loops to the selected
kernel backend; the thin layer classes below cache whatever the backward pass
needs. All arrays are BHWC (or B x features for dense layers).
"""

import numpy as np

from . import kernels
from .errors import ConfigError, ShapeError
from .tensor import BatchNormState, LayerParams

TRAIN = "train"
INFER = "infer"


def _check_mode(mode):
    if mode not in (TRAIN, INFER):
        raise ConfigError(f"unknown mode {mode!r}; expected 'train' or 'infer'")


# ---------------------------------------------------------------------------
# convolution


def conv2d_forward(x, params):
    """3x3 stride-1 zero-padded ("same") cross-correlation plus bias."""
    if x.ndim != 4:
        raise ShapeError(f"conv input: expected rank 4 (BHWC), got rank {x.ndim}")
    if x.shape[1] < 1 or x.shape[2] < 1:
        raise ShapeError(f"conv input: spatial extents {x.shape[1]}x{x.shape[2]} must be >= 1")
    ci = params.weights.shape[2]
    if x.shape[3] != ci:
        raise ShapeError(
            f"{params.name}: input channel dimension is {x.shape[3]}, filter expects {ci}"
        )
    return kernels.conv2d_forward(np.ascontiguousarray(x), params.weights, params.bias)


def conv2d_backward(x, params, grad_out, need_input_grad=True):
    """Accumulate grad_w/grad_b into params and return the input gradient."""
    expect = (x.shape[0], x.shape[1], x.shape[2], params.weights.shape[3])
    if grad_out.shape != expect:
        raise ShapeError(
            f"{params.name}: grad_out shape {grad_out.shape}, expected {expect}"
        )
    gx, gw, gb = kernels.conv2d_backward(
        np.ascontiguousarray(x), params.weights, np.ascontiguousarray(grad_out),
        need_input_grad=need_input_grad,
    )
    params.grad_w += gw
    params.grad_b += gb
    return gx


# ---------------------------------------------------------------------------
# pooling


def maxpool2x2(x):
    """2x2 stride-2 max pool. Returns (output, argmax indices for backward)."""
    if x.shape[1] % 2 or x.shape[2] % 2:
        raise ShapeError(
            f"maxpool: spatial extents {x.shape[1]}x{x.shape[2]} must be even"
        )
    return kernels.maxpool2x2_forward(np.ascontiguousarray(x))


def maxpool2x2_backward(grad_out, idx):
    return kernels.maxpool2x2_backward(np.ascontiguousarray(grad_out), idx)


# ---------------------------------------------------------------------------
# batch normalization


def batchnorm_forward(x, state, mode):
    """Normalize per channel; train mode uses minibatch statistics and updates
    the running ones, infer mode uses the running statistics.

    Returns (y, cache); pass cache to batchnorm_backward.
    """
    _check_mode(mode)
    c = state.gamma.shape[0]
    if x.shape[-1] != c:
        raise ShapeError(f"batchnorm: input has {x.shape[-1]} channels, state has {c}")
    axes = tuple(range(x.ndim - 1))
    if mode == TRAIN:
        mean = x.mean(axis=axes)
        var = x.var(axis=axes)
        m = state.momentum
        state.running_mean *= m
        state.running_mean += (1 - m) * mean
        state.running_var *= m
        state.running_var += (1 - m) * var
    else:
        mean = state.running_mean
        var = state.running_var
    inv_std = 1.0 / np.sqrt(var + state.epsilon)
    x_hat = (x - mean) * inv_std
    y = state.gamma * x_hat
    y += state.beta
    cache = (x_hat, inv_std, mode)
    return y, cache


def batchnorm_backward(grad_out, cache, state):
    """Returns (gx, g_gamma, g_beta)."""
    x_hat, inv_std, mode = cache
    axes = tuple(range(grad_out.ndim - 1))
    g_beta = grad_out.sum(axis=axes)
    g_gamma = (grad_out * x_hat).sum(axis=axes)
    if mode == TRAIN:
        n = grad_out.size // grad_out.shape[-1]
        gx = (state.gamma * inv_std / n) * (
            n * grad_out - g_beta - x_hat * g_gamma
        )
    else:
        gx = grad_out * (state.gamma * inv_std)
    return gx.astype(grad_out.dtype, copy=False), g_gamma, g_beta


# ---------------------------------------------------------------------------
# activations, dense, dropout, loss


def relu(x):
    return np.maximum(x, 0)


def relu_backward(grad_out, x):
    return grad_out * (x > 0)


def linear_forward(x, params):
    if x.shape[1] != params.weights.shape[0]:
        raise ShapeError(
            f"{params.name}: input feature dimension is {x.shape[1]}, "
            f"weights expect {params.weights.shape[0]}"
        )
    return x @ params.weights + params.bias


def linear_backward(x, params, grad_out):
    params.grad_w += x.T @ grad_out
    params.grad_b += grad_out.sum(axis=0)
    return grad_out @ params.weights.T


def dropout(x, retention_prob, mode, rng_seed):
    """Inverted dropout: the mask is a pure function of rng_seed.

    Returns (y, mask); mask is None in infer mode or at retention 1.0.
    """
    _check_mode(mode)
    if not 0 < retention_prob <= 1:
        raise ConfigError(f"retention probability {retention_prob} not in (0, 1]")
    if mode == INFER or retention_prob == 1.0:
        return x, None
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    mask = rng.random(x.shape) < retention_prob
    scale = np.asarray(1.0 / retention_prob, dtype=x.dtype)
    return x * (mask * scale), mask


def dropout_backward(grad_out, mask, retention_prob):
    if mask is None:
        return grad_out
    scale = np.asarray(1.0 / retention_prob, dtype=grad_out.dtype)
    return grad_out * (mask * scale)


def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_crossentropy(logits, labels):
    """Mean cross-entropy over the minibatch and its gradient w.r.t. logits.

    Numerically stable via max subtraction; labels must lie in {0,1,2}.
    """
    if logits.ndim != 2 or logits.shape[1] != 3:
        raise ShapeError(f"logits: expected shape (B, 3), got {logits.shape}")
    labels = np.asarray(labels)
    if labels.shape != (logits.shape[0],):
        raise ShapeError(f"labels: expected shape ({logits.shape[0]},), got {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() > 2):
        raise ShapeError("labels must lie in {0, 1, 2}")
    b = logits.shape[0]
    z = logits - logits.max(axis=1, keepdims=True)
    log_probs = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = -log_probs[np.arange(b), labels].mean()
    grad = np.exp(log_probs)
    grad[np.arange(b), labels] -= 1.0
    grad /= b
    return loss, grad.astype(logits.dtype, copy=False)


# ---------------------------------------------------------------------------
# layer objects (cache-carrying wrappers used to assemble the network)


def he_normal(shape, fan_in, rng, dtype):
    std = np.sqrt(2.0 / fan_in)
    return (rng.standard_normal(shape) * std).astype(dtype)


class Conv2D:
    def __init__(self, name, c_in, c_out, dtype, rng, frozen=False, need_input_grad=True):
        w = he_normal((3, 3, c_in, c_out), 9 * c_in, rng, dtype)
        b = np.zeros(c_out, dtype=dtype)
        self.params = LayerParams(name, w, b, frozen=frozen)
        self.need_input_grad = need_input_grad
        self._x = None

    def forward(self, x, mode):
        self._x = x
        return conv2d_forward(x, self.params)

    def backward(self, grad_out):
        return conv2d_backward(
            self._x, self.params, grad_out, need_input_grad=self.need_input_grad
        )

    def param_list(self):
        return [self.params]


class BatchNorm:
    def __init__(self, name, channels, dtype, epsilon=1e-5, momentum=0.9):
        self.state = BatchNormState.create(channels, dtype, epsilon, momentum)
        # gamma/beta alias the state arrays so the optimizer updates them in place
        self.params = LayerParams(name, self.state.gamma, self.state.beta)
        self._cache = None

    def forward(self, x, mode):
        y, self._cache = batchnorm_forward(x, self.state, mode)
        return y

    def backward(self, grad_out):
        gx, g_gamma, g_beta = batchnorm_backward(grad_out, self._cache, self.state)
        self.params.grad_w += g_gamma
        self.params.grad_b += g_beta
        return gx

    def param_list(self):
        return [self.params]


class ReLU:
    def __init__(self):
        self._x = None

    def forward(self, x, mode):
        self._x = x
        return relu(x)

    def backward(self, grad_out):
        return relu_backward(grad_out, self._x)

    def param_list(self):
        return []


class MaxPool2x2:
    def __init__(self):
        self._idx = None

    def forward(self, x, mode):
        y, self._idx = maxpool2x2(x)
        return y

    def backward(self, grad_out):
        return maxpool2x2_backward(grad_out, self._idx)

    def param_list(self):
        return []


class Flatten:
    def __init__(self):
        self._shape = None

    def forward(self, x, mode):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad_out):
        return grad_out.reshape(self._shape)

    def param_list(self):
        return []


class Dense:
    def __init__(self, name, n_in, n_out, dtype, rng):
        w = he_normal((n_in, n_out), n_in, rng, dtype)
        b = np.zeros(n_out, dtype=dtype)
        self.params = LayerParams(name, w, b)
        self._x = None

    def forward(self, x, mode):
        self._x = x
        return linear_forward(x, self.params)

    def backward(self, grad_out):
        return linear_backward(self._x, self.params, grad_out)

    def param_list(self):
        return [self.params]


class Dropout:
    def __init__(self, retention_prob):
        if not 0 < retention_prob <= 1:
            raise ConfigError(f"retention probability {retention_prob} not in (0, 1]")
        self.retention_prob = retention_prob
        self.seed = 0
        self._mask = None

    def forward(self, x, mode):
        y, self._mask = dropout(x, self.retention_prob, mode, self.seed)
        return y

    def backward(self, grad_out):
        return dropout_backward(grad_out, self._mask, self.retention_prob)

    def param_list(self):
        return []
