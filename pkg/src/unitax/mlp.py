"""Small fully-connected ReLU network with manual backprop and Adam."""

from __future__ import annotations

import numpy as np

from .rng import SplitMix64


class MlpModel:
    """Two hidden ReLU layers: sizes [2, 64, 64, K] by default."""

    def __init__(self, sizes, rng: SplitMix64):
        self.sizes = list(sizes)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(self.sizes, self.sizes[1:]):
            scale = np.sqrt(2.0 / fan_in)
            w = np.array(rng.normals(fan_in * fan_out), dtype=np.float64)
            self.weights.append(scale * w.reshape(fan_in, fan_out))
            self.biases.append(np.zeros(fan_out, dtype=np.float64))

    def parameters(self):
        return self.weights + self.biases

    def forward(self, x: np.ndarray, cache: list = None) -> np.ndarray:
        """Logits for inputs of shape (N, in_dim).  When ``cache`` is given,
        the pre-ReLU activations needed by backward() are appended to it."""
        h = np.asarray(x, dtype=np.float64)
        if cache is not None:
            cache.append(h)
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = np.maximum(h, 0.0)
            if cache is not None and i < last:
                cache.append(h)
        return h

    def backward(self, cache: list, grad_logits: np.ndarray):
        """Parameter gradients given upstream dL/dlogits.

        ``cache`` holds [input, hidden1, hidden2, ...] post-ReLU activations
        from forward().  Returns (weight grads, bias grads).
        """
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.biases)
        delta = np.asarray(grad_logits, dtype=np.float64)
        for i in range(len(self.weights) - 1, -1, -1):
            a = cache[i]
            grads_w[i] = a.T @ delta
            grads_b[i] = np.sum(delta, axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (a > 0.0)
        return grads_w, grads_b

    def to_dict(self) -> dict:
        return {
            "sizes": self.sizes,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MlpModel":
        model = cls.__new__(cls)
        model.sizes = list(data["sizes"])
        model.weights = [np.asarray(w, dtype=np.float64) for w in data["weights"]]
        model.biases = [np.asarray(b, dtype=np.float64) for b in data["biases"]]
        return model


class Adam:
    """Full-batch Adam with fixed learning rate."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            m_hat = m / (1 - b1 ** self.t)
            v_hat = v / (1 - b2 ** self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
