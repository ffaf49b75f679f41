"""Minimal numpy training utilities shared by the tiny desk-scale models.

Real deployments plug pretrained encoders/decoders in behind the adapter
interfaces; these pieces exist so the full pipeline can train and run in
tests without any ML framework.
"""

from __future__ import annotations

import hashlib

import numpy as np

Params = dict[str, np.ndarray]


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=float)))


def softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max()
    ex = np.exp(shifted)
    return ex / ex.sum()


def stable_token_hash(token: str, buckets: int, salt: int = 0) -> int:
    """Platform-stable token-to-bucket hash (python's hash() is salted)."""
    digest = hashlib.sha256(f"{salt}\x00{token}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") % buckets


class AdamW:
    """Adam with decoupled weight decay over a dict of numpy parameters."""

    def __init__(self, params: Params, lr: float, weight_decay: float = 0.0,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.step_count = 0
        self._m = {k: np.zeros_like(v) for k, v in params.items()}
        self._v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, grads: Params) -> None:
        self.step_count += 1
        t = self.step_count
        for key, param in self.params.items():
            g = grads[key]
            m = self._m[key]
            v = self._v[key]
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            m_hat = m / (1 - self.beta1 ** t)
            v_hat = v / (1 - self.beta2 ** t)
            param -= self.lr * (m_hat / (np.sqrt(v_hat) + self.eps)
                                + self.weight_decay * param)
