"""ADAM optimizer with bias correction and frozen-parameter support."""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .tensor import LayerParams


@dataclass
class AdamState:
    """First/second moment estimates for one parameter tensor."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_tensor(cls, tensor, lr=1e-4, beta1=0.9, beta2=0.999, epsilon=1e-8):
        return cls(
            m=np.zeros_like(tensor),
            v=np.zeros_like(tensor),
            lr=lr,
            beta1=beta1,
            beta2=beta2,
            epsilon=epsilon,
        )


def _update(theta, grad, state):
    if state.m.shape != theta.shape:
        raise ShapeError(
            f"adam state shape {state.m.shape} does not match parameter shape {theta.shape}"
        )
    state.t += 1
    state.m *= state.beta1
    state.m += (1.0 - state.beta1) * grad
    state.v *= state.beta2
    state.v += (1.0 - state.beta2) * (grad * grad)
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    theta -= (state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)).astype(
        theta.dtype, copy=False
    )


def adam_step(params, states):
    """One ADAM step over parallel lists of LayerParams and (weight, bias) states.

    Frozen parameters are untouched and their states do not advance; all
    gradients (including frozen ones) are zeroed afterward -- the optimizer
    owns the accumulate/clear cycle.
    """
    if len(params) != len(states):
        raise ShapeError(f"{len(params)} params but {len(states)} states")
    for p, (sw, sb) in zip(params, states):
        if not p.frozen:
            _update(p.weights, p.grad_w, sw)
            _update(p.bias, p.grad_b, sb)
        p.zero_grads()


class Adam:
    """Owns per-tensor states for a fixed parameter list."""

    def __init__(self, params, lr=1e-4, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.params = list(params)
        self.states = [
            (
                AdamState.for_tensor(p.weights, lr, beta1, beta2, epsilon),
                AdamState.for_tensor(p.bias, lr, beta1, beta2, epsilon),
            )
            for p in self.params
        ]

    def step(self):
        adam_step(self.params, self.states)

    def named_states(self):
        """(name, AdamState) pairs, weights then bias per parameter."""
        for p, (sw, sb) in zip(self.params, self.states):
            yield f"{p.name}.w", sw
            yield f"{p.name}.b", sb
