"""Finite-difference verification of analytic gradients.

The loss used for layer checks is a fixed random projection of the layer
output, so every output element contributes to every checked derivative.
Checks run in float64; central differences with the given step.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .layers import TRAIN, softmax_crossentropy

DEFAULT_STEP = 1e-5


def relative_error(analytic, numeric, floor=1e-8):
    """|a - n| / max(|a|, |n|), treating values below ``floor`` as zero.

    A sign-flipped gradient scores 2.0; agreement scores near 0.
    """
    denom = max(abs(analytic), abs(numeric))
    if denom < floor:
        return 0.0
    return abs(analytic - numeric) / denom


@dataclass
class GradCheckReport:
    tolerance: float
    max_errors: dict = field(default_factory=dict)  # tensor name -> max relative error
    checked: dict = field(default_factory=dict)  # tensor name -> elements checked

    @property
    def max_error(self):
        return max(self.max_errors.values()) if self.max_errors else 0.0

    @property
    def passed(self):
        return self.max_error <= self.tolerance

    def failures(self):
        return {k: v for k, v in self.max_errors.items() if v > self.tolerance}

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        rows = ", ".join(f"{k}={v:.3e}" for k, v in sorted(self.max_errors.items()))
        return f"grad check {status} (tol {self.tolerance:g}): {rows}"


def _sample_indices(size, samples, rng):
    if samples is None or samples >= size:
        return np.arange(size)
    return rng.choice(size, size=samples, replace=False)


def _check_tensor(name, array, analytic_grad, loss_fn, report, step, samples, rng):
    flat = array.reshape(-1)
    grad_flat = analytic_grad.reshape(-1)
    worst = 0.0
    idx = _sample_indices(flat.size, samples, rng)
    for i in idx:
        orig = flat[i]
        flat[i] = orig + step
        up = loss_fn()
        flat[i] = orig - step
        down = loss_fn()
        flat[i] = orig
        numeric = (up - down) / (2.0 * step)
        worst = max(worst, relative_error(grad_flat[i], numeric))
    report.max_errors[name] = worst
    report.checked[name] = len(idx)


def grad_check(layer, input_shape, rng, tolerance=1e-5, step=DEFAULT_STEP,
               samples_per_tensor=None, mode=TRAIN):
    """Compare a layer's backward pass against central differences.

    The layer must hold float64 parameters. Returns a GradCheckReport with the
    max relative error per parameter tensor and per input.
    """
    x = rng.standard_normal(input_shape)
    y = layer.forward(x, mode)
    if y.dtype != np.float64:
        raise ConfigError("grad_check requires the f64 scalar kind")
    projection = rng.standard_normal(y.shape)

    def loss_fn():
        return float((layer.forward(x, mode) * projection).sum())

    for p in layer.param_list():
        p.zero_grads()
    layer.forward(x, mode)
    gx = layer.backward(projection)

    report = GradCheckReport(tolerance=tolerance)
    if gx is not None:
        _check_tensor("input", x, gx, loss_fn, report, step, samples_per_tensor, rng)
    for p in layer.param_list():
        _check_tensor(f"{p.name}.w", p.weights, p.grad_w, loss_fn, report, step,
                      samples_per_tensor, rng)
        _check_tensor(f"{p.name}.b", p.bias, p.grad_b, loss_fn, report, step,
                      samples_per_tensor, rng)
    return report


def grad_check_network(net, batch, labels, rng, tolerance=1e-4, step=DEFAULT_STEP,
                       samples_per_tensor=12):
    """End-to-end check of the full network loss against central differences.

    Checks a random subset of entries of every trainable parameter tensor
    (exhaustive finite differences over ~10^5 parameters would be pointless
    and slow). Frozen parameters are skipped.
    """

    def loss_fn():
        logits = net.forward(batch, TRAIN)
        loss, _ = softmax_crossentropy(logits, labels)
        return float(loss)

    net.zero_grads()
    logits = net.forward(batch, TRAIN)
    if logits.dtype != np.float64:
        raise ConfigError("grad_check_network requires the f64 scalar kind")
    _, grad = softmax_crossentropy(logits, labels)
    net.backward(grad)

    report = GradCheckReport(tolerance=tolerance)
    for p in net.params():
        if p.frozen:
            continue
        _check_tensor(f"{p.name}.w", p.weights, p.grad_w, loss_fn, report, step,
                      samples_per_tensor, rng)
        _check_tensor(f"{p.name}.b", p.bias, p.grad_b, loss_fn, report, step,
                      samples_per_tensor, rng)
    return report
