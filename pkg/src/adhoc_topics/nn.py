"""Bag-of-embeddings feed-forward classifier with hand-rolled backprop.

Architecture: trainable word embeddings (64-dim, randomly initialized),
element-wise max-pooling over token positions, batch normalization of the
pooled vector, a 64-unit rectified-linear layer, and a 20-unit sigmoid output
layer. Losses are binary cross-entropy over the 20 independent topic outputs.

Everything is double-precision numpy so gradients can be verified against
central finite differences, and training is bit-reproducible for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .labels import NUM_TOPICS

EMBED_DIM = 64
HIDDEN_DIM = 64
BN_EPS = 1e-5
BN_MOMENTUM = 0.9

PARAM_NAMES = ("emb", "bn_gamma", "bn_beta", "w1", "b1", "w2", "b2")


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class NnModel:
    params: dict[str, np.ndarray]
    running_mean: np.ndarray = field(default_factory=lambda: np.zeros(EMBED_DIM))
    running_var: np.ndarray = field(default_factory=lambda: np.ones(EMBED_DIM))

    @classmethod
    def init(cls, vocab_size: int, seed: int = 0,
             n_outputs: int = NUM_TOPICS) -> "NnModel":
        """Uniform(-0.05, 0.05) embeddings; fan-in-scaled dense layers."""
        rng = np.random.default_rng(seed)
        params = {
            "emb": rng.uniform(-0.05, 0.05, size=(vocab_size, EMBED_DIM)),
            "bn_gamma": np.ones(EMBED_DIM),
            "bn_beta": np.zeros(EMBED_DIM),
            "w1": rng.normal(0.0, np.sqrt(2.0 / EMBED_DIM),
                             size=(EMBED_DIM, HIDDEN_DIM)),
            "b1": np.zeros(HIDDEN_DIM),
            "w2": rng.normal(0.0, np.sqrt(2.0 / HIDDEN_DIM),
                             size=(HIDDEN_DIM, n_outputs)),
            "b2": np.zeros(n_outputs),
        }
        return cls(params=params)

    @property
    def n_outputs(self) -> int:
        return self.params["b2"].shape[0]

    def copy(self) -> "NnModel":
        return NnModel(
            params={k: v.copy() for k, v in self.params.items()},
            running_mean=self.running_mean.copy(),
            running_var=self.running_var.copy(),
        )

    def pool(self, batch: list[list[int]]) -> np.ndarray:
        """Element-wise max over token embeddings; zeros when nothing is
        in-vocabulary (documented fallback, not an error)."""
        emb = self.params["emb"]
        pooled = np.zeros((len(batch), EMBED_DIM))
        for i, ids in enumerate(batch):
            if ids:
                pooled[i] = emb[ids].max(axis=0)
        return pooled

    def forward(self, batch: list[list[int]], training: bool = False,
                update_running: bool = False):
        """Probabilities in (0,1)^n_outputs for each sample.

        Training mode normalizes with batch statistics (and optionally folds
        them into the running averages); inference mode uses running averages.
        """
        p, _ = self._forward_cached(batch, training, update_running)
        return p

    def _forward_cached(self, batch, training, update_running):
        pooled = self.pool(batch)
        g = self.params
        if training:
            mu = pooled.mean(axis=0)
            var = pooled.var(axis=0)
            if update_running:
                self.running_mean = (
                    BN_MOMENTUM * self.running_mean + (1 - BN_MOMENTUM) * mu
                )
                self.running_var = (
                    BN_MOMENTUM * self.running_var + (1 - BN_MOMENTUM) * var
                )
        else:
            mu = self.running_mean
            var = self.running_var
        inv_std = 1.0 / np.sqrt(var + BN_EPS)
        xhat = (pooled - mu) * inv_std
        bn_out = g["bn_gamma"] * xhat + g["bn_beta"]
        z1 = bn_out @ g["w1"] + g["b1"]
        h = np.maximum(z1, 0.0)
        z2 = h @ g["w2"] + g["b2"]
        probs = sigmoid(z2)
        cache = (pooled, mu, var, inv_std, xhat, bn_out, z1, h, probs)
        return probs, cache

    def loss(self, batch: list[list[int]], targets: np.ndarray,
             training: bool = True) -> float:
        probs, _ = self._forward_cached(batch, training, update_running=False)
        return float(_bce(probs, targets))

    def loss_and_grads(self, batch: list[list[int]], targets: np.ndarray,
                       update_running: bool = False):
        """Batch-mode BCE loss and gradients for every parameter tensor."""
        targets = np.asarray(targets, dtype=float)
        probs, cache = self._forward_cached(batch, training=True,
                                            update_running=update_running)
        pooled, mu, var, inv_std, xhat, bn_out, z1, h, _ = cache
        g = self.params
        n_batch, n_out = probs.shape

        # d(bce)/d(z2) for sigmoid outputs collapses to (p - y) / (B*C)
        dz2 = (probs - targets) / (n_batch * n_out)
        grads = {
            "w2": h.T @ dz2,
            "b2": dz2.sum(axis=0),
        }
        dh = dz2 @ g["w2"].T
        dz1 = dh * (z1 > 0)
        grads["w1"] = bn_out.T @ dz1
        grads["b1"] = dz1.sum(axis=0)
        dbn = dz1 @ g["w1"].T

        grads["bn_gamma"] = (dbn * xhat).sum(axis=0)
        grads["bn_beta"] = dbn.sum(axis=0)
        dxhat = dbn * g["bn_gamma"]
        centered = pooled - mu
        dvar = (dxhat * centered).sum(axis=0) * (-0.5) * inv_std**3
        dmu = (-dxhat * inv_std).sum(axis=0) + dvar * (-2.0 * centered).sum(axis=0) / n_batch
        dpooled = dxhat * inv_std + dvar * 2.0 * centered / n_batch + dmu / n_batch

        demb = np.zeros_like(g["emb"])
        emb = g["emb"]
        for i, ids in enumerate(batch):
            if not ids:
                continue
            rows = emb[ids]
            winners = rows.argmax(axis=0)
            token_rows = np.asarray(ids)[winners]
            np.add.at(demb, (token_rows, np.arange(EMBED_DIM)), dpooled[i])
        grads["emb"] = demb
        return float(_bce(probs, targets)), grads


def _bce(probs: np.ndarray, targets: np.ndarray) -> float:
    eps = 1e-12
    p = np.clip(probs, eps, 1.0 - eps)
    return float(-np.mean(targets * np.log(p) + (1.0 - targets) * np.log(1.0 - p)))


def save_model(model: NnModel, path) -> None:
    arrays = dict(model.params)
    arrays["running_mean"] = model.running_mean
    arrays["running_var"] = model.running_var
    with open(path, "wb") as fh:
        np.savez(fh, **{k: arrays[k] for k in sorted(arrays)})


def load_model(path) -> NnModel:
    with np.load(path) as data:
        arrays = {k: data[k] for k in data.files}
    running_mean = arrays.pop("running_mean")
    running_var = arrays.pop("running_var")
    return NnModel(params=arrays, running_mean=running_mean,
                   running_var=running_var)


def model_digest(model: NnModel) -> str:
    """Stable content hash over parameters and running statistics."""
    import hashlib

    h = hashlib.sha256()
    for name in sorted(model.params):
        h.update(name.encode())
        h.update(np.ascontiguousarray(model.params[name]).tobytes())
    h.update(np.ascontiguousarray(model.running_mean).tobytes())
    h.update(np.ascontiguousarray(model.running_var).tobytes())
    return h.hexdigest()
