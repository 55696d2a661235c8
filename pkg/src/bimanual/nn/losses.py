"""Loss functions: binary cross-entropy, unit-variance cloning, mixture NLL.

Every loss returns (scalar, gradient) with the gradient taken w.r.t. the
first argument, averaged over the batch dimension when one is present.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS_CLAMP = 1e-7


def bce_loss(pred: np.ndarray, label: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy; labels may be soft values in [0, 1]."""
    pred = np.asarray(pred, dtype=np.float64)
    label = np.asarray(label, dtype=np.float64)
    p = np.clip(pred, EPS_CLAMP, 1.0 - EPS_CLAMP)
    loss = float(np.mean(-(label * np.log(p) + (1.0 - label) * np.log(1.0 - p))))
    grad = (p - label) / (p * (1.0 - p)) / p.size
    return loss, grad


def bc_loss(mu: np.ndarray, action: np.ndarray) -> tuple[float, np.ndarray]:
    """Unit-variance Gaussian NLL up to a constant: half squared error."""
    mu = np.atleast_2d(np.asarray(mu, dtype=np.float64))
    action = np.atleast_2d(np.asarray(action, dtype=np.float64))
    diff = mu - action
    b = diff.shape[0]
    loss = float(0.5 * np.sum(diff ** 2) / b)
    return loss, diff / b


@dataclass(frozen=True)
class MixtureHead:
    """Two-component diagonal Gaussian mixture over 3-dim actions."""

    n_components: int = 2
    n_dims: int = 3

    @property
    def n_outputs(self) -> int:
        return self.n_components * (1 + 2 * self.n_dims)

    def unpack(self, flat: np.ndarray):
        """Split a (B, n_outputs) net output into logits, means, log-scales."""
        k, d = self.n_components, self.n_dims
        flat = np.atleast_2d(flat)
        logits = flat[:, :k]
        means = flat[:, k:k + k * d].reshape(-1, k, d)
        log_scales = flat[:, k + k * d:].reshape(-1, k, d)
        return logits, means, log_scales

    def pack_grad(self, dlogits, dmeans, dlog_scales) -> np.ndarray:
        b = dlogits.shape[0]
        return np.concatenate(
            [dlogits, dmeans.reshape(b, -1), dlog_scales.reshape(b, -1)], axis=1)

    def sample(self, flat: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        logits, means, log_scales = self.unpack(flat)
        out = np.empty((logits.shape[0], self.n_dims))
        for i in range(logits.shape[0]):
            p = _softmax(logits[i])
            k = rng.choice(self.n_components, p=p)
            out[i] = means[i, k] + np.exp(log_scales[i, k]) * rng.standard_normal(self.n_dims)
        return out

    def mean(self, flat: np.ndarray) -> np.ndarray:
        logits, means, _ = self.unpack(flat)
        w = _softmax(logits)
        return np.einsum("bk,bkd->bd", w, means)


def _softmax(x: np.ndarray) -> np.ndarray:
    z = x - x.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def mdn_loss(head: MixtureHead, flat: np.ndarray, target: np.ndarray):
    """Mixture negative log-likelihood via log-sum-exp.

    Returns (scalar, gradient w.r.t. the flat head output).
    """
    flat = np.atleast_2d(np.asarray(flat, dtype=np.float64))
    target = np.atleast_2d(np.asarray(target, dtype=np.float64))
    logits, means, log_scales = head.unpack(flat)
    b, k, d = means.shape

    pi = _softmax(logits)                                  # (B, K)
    var = np.exp(2.0 * log_scales)                         # (B, K, D)
    diff = target[:, None, :] - means                      # (B, K, D)
    log_norm = -0.5 * np.sum(
        np.log(2.0 * np.pi) + 2.0 * log_scales + diff ** 2 / var, axis=2)
    comp = np.log(np.clip(pi, 1e-300, None)) + log_norm    # (B, K)
    cmax = comp.max(axis=1, keepdims=True)
    lse = cmax[:, 0] + np.log(np.exp(comp - cmax).sum(axis=1))
    loss = float(np.mean(-lse))

    resp = np.exp(comp - lse[:, None])                     # responsibilities
    dlogits = (pi - resp) / b
    dmeans = -resp[:, :, None] * (diff / var) / b
    dlog_scales = -resp[:, :, None] * (diff ** 2 / var - 1.0) / b
    return loss, head.pack_grad(dlogits, dmeans, dlog_scales)
