"""Dense scorers trained by plain gradient descent.

Every model carries the standardizer fitted on its training rows, so callers
always pass raw features.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatch, InvalidConfig, NonFiniteLoss

DEFAULT_HIDDEN = (32, 32, 32, 32)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 500
    learning_rate: float = 0.05
    l2: float = 0.0
    batch_size: Optional[int] = None  # None means full batch
    seed: int = 0

    def __post_init__(self):
        if not (isinstance(self.epochs, (int, np.integer)) and 0 <= self.epochs <= 10**6):
            raise InvalidConfig(f"epochs must be an integer in [0, 1e6], got {self.epochs}")
        if not 0 < self.learning_rate < 10:
            raise InvalidConfig(f"learning_rate must lie in (0, 10), got {self.learning_rate}")
        if self.l2 < 0:
            raise InvalidConfig("l2 must be non-negative")
        if self.batch_size is not None and self.batch_size < 1:
            raise InvalidConfig("batch_size must be positive")


def _std_params(X, w=None):
    if w is None:
        mean = X.mean(axis=0)
        var = X.var(axis=0)
    else:
        tot = w.sum()
        mean = (w @ X) / tot
        var = (w @ (X - mean) ** 2) / tot
    scale = np.sqrt(var)
    scale[~(scale > 1e-12)] = 1.0
    return mean, scale


def _check_xy(X, y=None, w=None):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if y is not None:
        y = np.asarray(y, dtype=float)
        if y.shape != (X.shape[0],):
            raise DimensionMismatch(f"X has {X.shape[0]} rows but y has shape {y.shape}")
    if w is not None:
        w = np.asarray(w, dtype=float)
        if w.shape != (X.shape[0],):
            raise DimensionMismatch("sample_weights length does not match X")
        if (w < 0).any() or not w.sum() > 0:
            raise InvalidConfig("sample_weights must be non-negative with a positive sum")
    return X, y, w


def bce_with_logits(z, y, w=None):
    losses = np.logaddexp(0.0, z) - y * z
    if w is None:
        return float(losses.mean())
    return float((w * losses).sum() / w.sum())


# -- linear ----------------------------------------------------------------

@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: float = 0.0
    mean: Optional[np.ndarray] = None
    scale: Optional[np.ndarray] = None

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float)).copy()
        d = w.shape[0]
        mean = np.zeros(d) if self.mean is None else np.asarray(self.mean, dtype=float).copy()
        scale = np.ones(d) if self.scale is None else np.asarray(self.scale, dtype=float).copy()
        for a in (w, mean, scale):
            a.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "scale", scale)
        if not (np.isfinite(w).all() and np.isfinite(self.bias)):
            raise NonFiniteLoss("linear model parameters are not finite")

    @property
    def d(self) -> int:
        return self.weights.shape[0]

    def logits(self, X) -> np.ndarray:
        X, _, _ = _check_xy(X)
        if X.shape[1] != self.d:
            raise DimensionMismatch(f"model expects {self.d} columns, got {X.shape[1]}")
        return ((X - self.mean) / self.scale) @ self.weights + self.bias

    def params(self) -> np.ndarray:
        return np.concatenate([self.weights, [self.bias]])

    def with_params(self, theta) -> "LinearModel":
        return LinearModel(theta[:-1], theta[-1], self.mean, self.scale)

    def loss_grad(self, X, y):
        """Mean logistic loss and its gradient w.r.t. ``params()``."""
        X, y, _ = _check_xy(X, y)
        Z = (X - self.mean) / self.scale
        z = Z @ self.weights + self.bias
        g = (expit(z) - y) / len(y)
        return bce_with_logits(z, y), np.concatenate([Z.T @ g, [g.sum()]])

    def __eq__(self, other):
        if not isinstance(other, LinearModel):
            return NotImplemented
        return (np.array_equal(self.weights, other.weights) and self.bias == other.bias
                and np.array_equal(self.mean, other.mean)
                and np.array_equal(self.scale, other.scale))

    __hash__ = None


def _batches(n, batch_size, rng):
    if batch_size is None or batch_size >= n:
        yield slice(None)
        return
    perm = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield perm[start:start + batch_size]


def fit_logreg(X, y, sample_weights=None, cfg: TrainConfig = TrainConfig(),
               callback: Optional[Callable[[int, float], None]] = None) -> LinearModel:
    """Weighted logistic regression with an L2 penalty ``l2 * ||w||^2``.

    Starts from zero, so the result only depends on ``cfg.seed`` through
    mini-batch order. ``callback(epoch, loss)`` sees the full-data loss before
    each update and once after training.
    """
    X, y, w = _check_xy(X, y, sample_weights)
    if w is None:
        w = np.ones(len(y))
    mean, scale = _std_params(X, w)
    Z = (X - mean) / scale
    rng = np.random.default_rng(cfg.seed)
    coef = np.zeros(Z.shape[1])
    b = 0.0
    lr = cfg.learning_rate

    def full_loss():
        z = Z @ coef + b
        return bce_with_logits(z, y, w) + cfg.l2 * float(coef @ coef)

    # overflow shows up as a non-finite logit and is reported as NonFiniteLoss
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(cfg.epochs):
            if callback is not None:
                callback(epoch, full_loss())
            for idx in _batches(len(y), cfg.batch_size, rng):
                Zb, yb, wb = Z[idx], y[idx], w[idx]
                tot = wb.sum()
                if tot <= 0:
                    continue
                z = Zb @ coef + b
                if not np.isfinite(z).all():
                    raise NonFiniteLoss("logistic regression diverged; lower the learning rate")
                g = wb * (expit(z) - yb) / tot
                coef = coef - lr * (Zb.T @ g + 2.0 * cfg.l2 * coef)
                b = b - lr * g.sum()
    with np.errstate(over="ignore", invalid="ignore"):
        final = full_loss()
    if not np.isfinite(final) or not np.isfinite(coef).all():
        raise NonFiniteLoss("logistic regression diverged; lower the learning rate")
    if callback is not None:
        callback(cfg.epochs, final)
    return LinearModel(coef, b, mean, scale)


# -- multilayer perceptron -------------------------------------------------

@dataclass(frozen=True)
class MlpModel:
    """ReLU hidden layers, logistic output. ``weights[l]`` has shape (in, out)."""

    layer_sizes: tuple
    weights: tuple
    biases: tuple
    mean: Optional[np.ndarray] = None
    scale: Optional[np.ndarray] = None
    activation: str = "relu"

    def __post_init__(self):
        sizes = tuple(int(k) for k in self.layer_sizes)
        if len(sizes) < 2 or sizes[-1] != 1 or min(sizes) < 1:
            raise InvalidConfig(f"bad layer_sizes {sizes}")
        Ws, bs = [], []
        for l, (W, bvec) in enumerate(zip(self.weights, self.biases)):
            W = np.asarray(W, dtype=float).reshape(sizes[l], sizes[l + 1]).copy()
            bvec = np.asarray(bvec, dtype=float).reshape(sizes[l + 1]).copy()
            W.setflags(write=False)
            bvec.setflags(write=False)
            Ws.append(W)
            bs.append(bvec)
        if len(Ws) != len(sizes) - 1:
            raise InvalidConfig("number of weight matrices does not match layer_sizes")
        d = sizes[0]
        mean = np.zeros(d) if self.mean is None else np.asarray(self.mean, dtype=float).copy()
        scale = np.ones(d) if self.scale is None else np.asarray(self.scale, dtype=float).copy()
        object.__setattr__(self, "layer_sizes", sizes)
        object.__setattr__(self, "weights", tuple(Ws))
        object.__setattr__(self, "biases", tuple(bs))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "scale", scale)
        if not all(np.isfinite(a).all() for a in Ws + bs):
            raise NonFiniteLoss("MLP parameters are not finite")

    @property
    def d(self) -> int:
        return self.layer_sizes[0]

    def logits(self, X) -> np.ndarray:
        X, _, _ = _check_xy(X)
        if X.shape[1] != self.d:
            raise DimensionMismatch(f"model expects {self.d} columns, got {X.shape[1]}")
        z, _ = _mlp_forward(self.weights, self.biases, (X - self.mean) / self.scale)
        return z

    def params(self) -> np.ndarray:
        return np.concatenate([a.ravel() for pair in zip(self.weights, self.biases) for a in pair])

    def with_params(self, theta) -> "MlpModel":
        Ws, bs = _unflatten(theta, self.layer_sizes)
        return MlpModel(self.layer_sizes, Ws, bs, self.mean, self.scale)

    def loss_grad(self, X, y):
        X, y, _ = _check_xy(X, y)
        Z = (X - self.mean) / self.scale
        z, cache = _mlp_forward(self.weights, self.biases, Z)
        gW, gb = _mlp_backward(self.weights, cache, (expit(z) - y) / len(y))
        flat = np.concatenate([a.ravel() for pair in zip(gW, gb) for a in pair])
        return bce_with_logits(z, y), flat

    def __eq__(self, other):
        if not isinstance(other, MlpModel):
            return NotImplemented
        return (self.layer_sizes == other.layer_sizes
                and all(np.array_equal(a, b) for a, b in zip(self.weights, other.weights))
                and all(np.array_equal(a, b) for a, b in zip(self.biases, other.biases))
                and np.array_equal(self.mean, other.mean)
                and np.array_equal(self.scale, other.scale))

    __hash__ = None


def _unflatten(theta, sizes):
    Ws, bs, k = [], [], 0
    for a, b in zip(sizes[:-1], sizes[1:]):
        Ws.append(np.asarray(theta[k:k + a * b]).reshape(a, b))
        k += a * b
        bs.append(np.asarray(theta[k:k + b]))
        k += b
    return Ws, bs


def _mlp_forward(Ws, bs, Z):
    acts = [Z]
    pre = []
    a = Z
    for W, b in zip(Ws[:-1], bs[:-1]):
        h = a @ W + b
        pre.append(h)
        a = np.maximum(h, 0.0)
        acts.append(a)
    z = (a @ Ws[-1] + bs[-1])[:, 0]
    return z, (acts, pre)


def _mlp_backward(Ws, cache, dz):
    acts, pre = cache
    gW = [None] * len(Ws)
    gb = [None] * len(Ws)
    delta = dz[:, None]
    for l in range(len(Ws) - 1, -1, -1):
        gW[l] = acts[l].T @ delta
        gb[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ Ws[l].T) * (pre[l - 1] > 0)
    return gW, gb


def init_mlp(layer_sizes: Sequence[int], rng) -> tuple:
    """Glorot-uniform weights, zero biases."""
    Ws, bs = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        a = np.sqrt(6.0 / (fan_in + fan_out))
        Ws.append(rng.uniform(-a, a, size=(fan_in, fan_out)))
        bs.append(np.zeros(fan_out))
    return Ws, bs


class _MlpTrainer:
    """Mutable training state shared by plain and adversarial MLP training."""

    def __init__(self, X, y, hidden, cfg: TrainConfig):
        X, y, _ = _check_xy(X, y)
        self.cfg = cfg
        self.y = y
        self.mean, self.scale = _std_params(X)
        self.Z = (X - self.mean) / self.scale
        self.sizes = (X.shape[1], *[int(h) for h in hidden], 1)
        self.rng = np.random.default_rng(cfg.seed)
        self.Ws, self.bs = init_mlp(self.sizes, self.rng)

    def logits(self):
        return _mlp_forward(self.Ws, self.bs, self.Z)[0]

    def loss(self):
        l2 = self.cfg.l2 * sum(float((W * W).sum()) for W in self.Ws)
        return bce_with_logits(self.logits(), self.y) + l2

    def epoch(self, extra_dz=None):
        """One pass over the data. ``extra_dz(idx, z)`` adds to the logit gradient."""
        lr, l2 = self.cfg.learning_rate, self.cfg.l2
        for idx in _batches(len(self.y), self.cfg.batch_size, self.rng):
            Zb, yb = self.Z[idx], self.y[idx]
            z, cache = _mlp_forward(self.Ws, self.bs, Zb)
            if not np.isfinite(z).all():
                raise NonFiniteLoss("MLP training diverged; lower the learning rate")
            dz = (expit(z) - yb) / len(yb)
            if extra_dz is not None:
                dz = dz + extra_dz(idx, z)
            gW, gb = _mlp_backward(self.Ws, cache, dz)
            for l in range(len(self.Ws)):
                if l2:
                    gW[l] = gW[l] + 2.0 * l2 * self.Ws[l]
                self.Ws[l] = self.Ws[l] - lr * gW[l]
                self.bs[l] = self.bs[l] - lr * gb[l]

    def model(self) -> MlpModel:
        if not all(np.isfinite(W).all() for W in self.Ws):
            raise NonFiniteLoss("MLP training diverged; lower the learning rate")
        return MlpModel(self.sizes, self.Ws, self.bs, self.mean, self.scale)


def fit_mlp(X, y, cfg: TrainConfig = TrainConfig(), hidden=DEFAULT_HIDDEN,
            callback: Optional[Callable[[int, float], None]] = None) -> MlpModel:
    """Binary cross-entropy MLP; bitwise deterministic given ``cfg.seed``."""
    trainer = _MlpTrainer(X, y, hidden, cfg)
    for epoch in range(cfg.epochs):
        if callback is not None:
            callback(epoch, trainer.loss())
        trainer.epoch()
    if callback is not None:
        callback(cfg.epochs, trainer.loss())
    return trainer.model()


# -- prediction ------------------------------------------------------------

def predict_soft(model, X) -> np.ndarray:
    return expit(model.logits(X))


def predict_hard(model, X, tau: float = 0.5) -> np.ndarray:
    """Labels ``1[score >= tau]``; the threshold is inclusive."""
    if not 0.0 <= tau <= 1.0:
        raise InvalidConfig(f"tau must lie in [0, 1], got {tau}")
    return (predict_soft(model, X) >= tau).astype(np.int64)


# -- gradient check --------------------------------------------------------

def grad_check(model, X, y, h: float = 1e-4, grad_fn=None) -> float:
    """Largest relative gap between analytic and central-difference gradients.

    The per-parameter error is ``|ga - gf| / max(1e-8, |ga| + |gf|)``.
    ``grad_fn(model, X, y)`` overrides the analytic gradient (used to plant bugs).
    """
    theta = model.params()
    if grad_fn is None:
        _, ga = model.loss_grad(X, y)
    else:
        ga = np.asarray(grad_fn(model, X, y), dtype=float)
    gf = np.empty_like(theta)
    for k in range(theta.size):
        up, down = theta.copy(), theta.copy()
        up[k] += h
        down[k] -= h
        gf[k] = (model.with_params(up).loss_grad(X, y)[0]
                 - model.with_params(down).loss_grad(X, y)[0]) / (2 * h)
    rel = np.abs(ga - gf) / np.maximum(1e-8, np.abs(ga) + np.abs(gf))
    return float(rel.max())


# -- serialization ---------------------------------------------------------

def model_to_dict(model) -> dict:
    if isinstance(model, LinearModel):
        return {"kind": "linear", "layer_sizes": [model.d, 1],
                "weights": [model.weights.tolist()], "biases": [[model.bias]],
                "standardizer": {"mean": model.mean.tolist(), "scale": model.scale.tolist()}}
    return {"kind": "mlp", "layer_sizes": list(model.layer_sizes),
            "activation": {"hidden": "relu", "output": "logistic"},
            "weights": [W.ravel().tolist() for W in model.weights],
            "biases": [b.tolist() for b in model.biases],
            "standardizer": {"mean": model.mean.tolist(), "scale": model.scale.tolist()}}


def model_from_dict(d: dict):
    std = d.get("standardizer") or {}
    if d.get("kind") == "linear":
        return LinearModel(d["weights"][0], d["biases"][0][0], std.get("mean"), std.get("scale"))
    return MlpModel(tuple(d["layer_sizes"]), d["weights"], d["biases"],
                    std.get("mean"), std.get("scale"))


def save_model(model, path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(model_to_dict(model)), encoding="utf-8")
    tmp.replace(path)


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
