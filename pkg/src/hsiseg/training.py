"""Supervised training: cross-entropy, backpropagation, Adam, gradient checking.

Backpropagation covers every layer kind the engine executes.  The softmax
output and the cross-entropy loss are fused, so the gradient at the logits
is simply (probabilities - one-hot) / positions.  Batch-norm layers train
on batch statistics; their moving statistics are excluded from gradients
and updated by an exponential moving average inside `fit`.

Training is deterministic: (seed, config, data) fully determine the
resulting weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import nn
from .architectures import init_weights
from .errors import ShapeError
from .nn import ModelSpec, WeightBundle

LOG_CLAMP = 1e-12
BN_MOMENTUM = 0.99


@dataclass(frozen=True)
class TrainConfig:
    """Epoch/batch schedule plus Adam hyperparameters (Keras defaults)."""

    epochs: int
    batch_size: int
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")


@dataclass
class AdamState:
    """First/second moment accumulators mirroring the trainable tensors."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def init(cls, weights: WeightBundle) -> "AdamState":
        names = weights.trainable_names()
        return cls(
            m={n: np.zeros_like(weights[n]) for n in names},
            v={n: np.zeros_like(weights[n]) for n in names},
        )


@dataclass
class TrainHistory:
    losses: list[float] = field(default_factory=list)
    train_acc: list[float] = field(default_factory=list)
    val_acc: list[float] = field(default_factory=list)


def xent_loss(probs: np.ndarray, target: np.ndarray | int) -> float:
    """Mean categorical cross-entropy -ln p[target], clamped at 1e-12."""
    probs = np.asarray(probs)
    target = np.asarray(target)
    if probs.ndim == 1:
        probs = probs[None]
        target = target.reshape(1)
    classes = probs.shape[-1]
    flat_p = probs.reshape(-1, classes)
    flat_t = target.reshape(-1)
    if flat_t.shape[0] != flat_p.shape[0]:
        raise ValueError("targets do not align with probability rows")
    if flat_t.min() < 0 or flat_t.max() >= classes:
        raise ValueError(f"target indices must lie in [0, {classes})")
    picked = flat_p[np.arange(len(flat_t)), flat_t]
    return float(-np.log(np.maximum(picked, LOG_CLAMP)).mean())


# ---------------------------------------------------------------------------
# Forward with caches (training mode) and layer-by-layer backward.
# ---------------------------------------------------------------------------


def _forward_train(
    spec: ModelSpec, weights: WeightBundle, x: np.ndarray
) -> tuple[np.ndarray, list[dict]]:
    """Run to the logits (pre-softmax), caching what backward needs."""
    a, _ = nn._canonical_input(spec, x)
    caches: list[dict] = []
    last = len(spec.layers) - 1
    for i, layer in enumerate(spec.layers):
        prefix = f"L{i:02d}.{layer.kind}"
        cache: dict = {}
        kind = layer.kind
        if kind == nn.CONV1D:
            cache["x"] = a
            a = nn.conv1d_valid(a, weights[f"{prefix}.kernel"], weights[f"{prefix}.bias"])
        elif kind == nn.MAXPOOL1D:
            n, length, c = a.shape
            half = length // 2
            cache["length"] = length
            pairs = a[:, : 2 * half].reshape(n, half, 2, c)
            idx = pairs.argmax(axis=2)
            cache["idx"] = idx
            a = np.take_along_axis(pairs, idx[:, :, None, :], axis=2)[:, :, 0, :]
        elif kind == nn.CONV2D:
            cache["x"] = a
            a = nn.conv2d_same(a, weights[f"{prefix}.kernel"], weights[f"{prefix}.bias"])
        elif kind == nn.MAXPOOL2D:
            n, h, w, c = a.shape
            blocks = a.reshape(n, h // 2, 2, w // 2, 2, c)
            blocks = blocks.transpose(0, 1, 3, 5, 2, 4).reshape(n, h // 2, w // 2, c, 4)
            idx = blocks.argmax(axis=-1)
            cache["idx"] = idx
            cache["hw"] = (h, w)
            a = np.take_along_axis(blocks, idx[..., None], axis=-1)[..., 0]
        elif kind == nn.UPSAMPLE2D:
            a = nn.upsample2d(a)
        elif kind == nn.BATCHNORM:
            axes = tuple(range(a.ndim - 1))
            mu = a.mean(axis=axes)
            var = a.var(axis=axes)
            invstd = 1.0 / np.sqrt(var + nn.BN_EPS)
            xhat = (a - mu) * invstd
            cache.update(xhat=xhat, invstd=invstd, mu=mu, var=var, axes=axes)
            a = (weights[f"{prefix}.gamma"] * xhat + weights[f"{prefix}.beta"]).astype(
                a.dtype, copy=False
            )
        elif kind == nn.FLATTEN:
            cache["shape"] = a.shape
            a = a.reshape(a.shape[0], -1)
        elif kind == nn.DENSE:
            cache["x"] = a
            a = nn.dense(a, weights[f"{prefix}.weight"], weights[f"{prefix}.bias"])
        if layer.activation == nn.SOFTMAX:
            if i != last:
                raise ShapeError("softmax is only supported as the final activation")
        else:
            a = nn.apply_activation(a, layer.activation)
        cache["out"] = a
        caches.append(cache)
    return a, caches


def _training_loss(spec: ModelSpec, weights: WeightBundle, x: np.ndarray, y: np.ndarray) -> float:
    """The exact loss whose gradients `backward` produces (train-mode batch norm)."""
    logits, _ = _forward_train(spec, weights, x)
    return xent_loss(nn.softmax(logits, axis=-1), y)


def backward(
    spec: ModelSpec, weights: WeightBundle, x: np.ndarray, y: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean-batch loss and its gradients w.r.t. every trainable tensor."""
    loss, grads, _ = _backward_full(spec, weights, x, y)
    return loss, grads


def _backward_full(
    spec: ModelSpec, weights: WeightBundle, x: np.ndarray, y: np.ndarray
) -> tuple[float, dict[str, np.ndarray], dict[str, tuple[np.ndarray, np.ndarray]]]:
    logits, caches = _forward_train(spec, weights, x)
    probs = nn.softmax(logits, axis=-1)
    y = np.asarray(y)
    classes = probs.shape[-1]
    flat_p = probs.reshape(-1, classes)
    flat_t = y.reshape(-1)
    positions = flat_p.shape[0]
    loss = xent_loss(probs, y)

    onehot = np.zeros_like(flat_p)
    onehot[np.arange(positions), flat_t] = 1.0
    g = ((flat_p - onehot) / positions).reshape(probs.shape)

    grads: dict[str, np.ndarray] = {}
    bn_stats: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    last = len(spec.layers) - 1
    for i in range(last, -1, -1):
        layer = spec.layers[i]
        cache = caches[i]
        prefix = f"L{i:02d}.{layer.kind}"
        if layer.activation == nn.RELU:
            g = g * (cache["out"] > 0)
        elif layer.activation == nn.TANH:
            g = g * (1.0 - cache["out"] ** 2)
        # softmax (final) is fused into g already; "none" passes through

        kind = layer.kind
        if kind == nn.CONV1D:
            g = _conv1d_backward(cache["x"], weights[f"{prefix}.kernel"], g, grads, prefix)
        elif kind == nn.MAXPOOL1D:
            g = _maxpool1d_backward(cache, g)
        elif kind == nn.CONV2D:
            g = _conv2d_backward(cache["x"], weights[f"{prefix}.kernel"], g, grads, prefix)
        elif kind == nn.MAXPOOL2D:
            g = _maxpool2d_backward(cache, g)
        elif kind == nn.UPSAMPLE2D:
            n, h2, w2, c = g.shape
            g = g.reshape(n, h2 // 2, 2, w2 // 2, 2, c).sum(axis=(2, 4))
        elif kind == nn.BATCHNORM:
            g = _batchnorm_backward(cache, weights, g, grads, prefix)
            bn_stats[prefix] = (cache["mu"], cache["var"])
        elif kind == nn.FLATTEN:
            g = g.reshape(cache["shape"])
        elif kind == nn.DENSE:
            xin = cache["x"]
            grads[f"{prefix}.weight"] = (g.T @ xin).astype(xin.dtype)
            grads[f"{prefix}.bias"] = g.sum(axis=0).astype(xin.dtype)
            g = g @ weights[f"{prefix}.weight"]
    return loss, grads, bn_stats


def _conv1d_backward(x, kernel, g, grads, prefix):
    k = kernel.shape[2]
    win = sliding_window_view(x, k, axis=1)
    grads[f"{prefix}.kernel"] = np.einsum("nlck,nlo->ock", win, g, optimize=True).astype(x.dtype)
    grads[f"{prefix}.bias"] = g.sum(axis=(0, 1)).astype(x.dtype)
    gpad = np.pad(g, ((0, 0), (k - 1, k - 1), (0, 0)))
    gwin = sliding_window_view(gpad, k, axis=1)          # (N, L, Cout, K)
    flipped = kernel[:, :, ::-1]
    return np.einsum("nsok,ock->nsc", gwin, flipped, optimize=True).astype(x.dtype)


def _conv2d_backward(x, kernel, g, grads, prefix):
    k = kernel.shape[2]
    p = k // 2
    xp = np.pad(x, ((0, 0), (p, p), (p, p), (0, 0)))
    win = sliding_window_view(xp, (k, k), axis=(1, 2))
    grads[f"{prefix}.kernel"] = np.einsum("nyxcij,nyxo->ocij", win, g, optimize=True).astype(x.dtype)
    grads[f"{prefix}.bias"] = g.sum(axis=(0, 1, 2)).astype(x.dtype)
    gpad = np.pad(g, ((0, 0), (p, p), (p, p), (0, 0)))
    gwin = sliding_window_view(gpad, (k, k), axis=(1, 2))
    flipped = kernel[:, :, ::-1, ::-1]
    return np.einsum("nyxoij,ocij->nyxc", gwin, flipped, optimize=True).astype(x.dtype)


def _maxpool1d_backward(cache, g):
    n, half, c = g.shape
    length = cache["length"]
    dpairs = np.zeros((n, half, 2, c), dtype=g.dtype)
    np.put_along_axis(dpairs, cache["idx"][:, :, None, :], g[:, :, None, :], axis=2)
    dx = np.zeros((n, length, c), dtype=g.dtype)
    dx[:, : 2 * half] = dpairs.reshape(n, 2 * half, c)
    return dx


def _maxpool2d_backward(cache, g):
    n, h2, w2, c = g.shape
    h, w = cache["hw"]
    dblocks = np.zeros((n, h2, w2, c, 4), dtype=g.dtype)
    np.put_along_axis(dblocks, cache["idx"][..., None], g[..., None], axis=-1)
    dblocks = dblocks.reshape(n, h2, w2, c, 2, 2).transpose(0, 1, 4, 2, 5, 3)
    return dblocks.reshape(n, h, w, c)


def _batchnorm_backward(cache, weights, g, grads, prefix):
    xhat, invstd, axes = cache["xhat"], cache["invstd"], cache["axes"]
    m = np.prod([xhat.shape[a] for a in axes])
    dgamma = (g * xhat).sum(axis=axes)
    dbeta = g.sum(axis=axes)
    grads[f"{prefix}.gamma"] = dgamma.astype(xhat.dtype)
    grads[f"{prefix}.beta"] = dbeta.astype(xhat.dtype)
    gamma = weights[f"{prefix}.gamma"]
    return (gamma * invstd) * (g - dbeta / m - xhat * (dgamma / m))


# ---------------------------------------------------------------------------
# Adam and the training loop.
# ---------------------------------------------------------------------------


def adam_step(
    weights: WeightBundle,
    grads: dict[str, np.ndarray],
    state: AdamState,
    config: TrainConfig,
) -> tuple[WeightBundle, AdamState]:
    """One bias-corrected Adam update, applied in weight-bundle order."""
    state.t += 1
    b1, b2 = config.beta1, config.beta2
    bc1 = 1.0 - b1 ** state.t
    bc2 = 1.0 - b2 ** state.t
    for name in weights.trainable_names():
        gr = grads[name]
        state.m[name] = b1 * state.m[name] + (1 - b1) * gr
        state.v[name] = b2 * state.v[name] + (1 - b2) * gr * gr
        mhat = state.m[name] / bc1
        vhat = state.v[name] / bc2
        weights[name] = (
            weights[name] - config.lr * mhat / (np.sqrt(vhat) + config.epsilon)
        ).astype(weights[name].dtype)
    return weights, state


def _accuracy(spec: ModelSpec, weights: WeightBundle, x: np.ndarray, y: np.ndarray) -> float:
    probs = nn.forward(spec, weights, x)
    pred = probs.argmax(axis=-1)
    return float((pred == np.asarray(y)).mean())


def fit(
    spec: ModelSpec,
    inputs: np.ndarray,
    labels: np.ndarray,
    config: TrainConfig,
    validation: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[WeightBundle, TrainHistory]:
    """Train from a fresh initialization; returns final weights and history.

    Shuffling is reseeded from config.seed; the last partial batch runs at
    its true size; there is no early stopping.  Validation accuracy is NaN
    when no validation pair is given.
    """
    inputs = np.asarray(inputs)
    labels = np.asarray(labels)
    n = inputs.shape[0]
    if n == 0:
        raise ValueError("training dataset is empty")
    if labels.shape[0] != n:
        raise ValueError("inputs and labels disagree on sample count")

    weights = init_weights(spec, config.seed)
    state = AdamState.init(weights)
    rng = np.random.default_rng(config.seed)
    history = TrainHistory()
    for _ in range(config.epochs):
        order = rng.permutation(n) if config.shuffle else np.arange(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            sel = order[start : start + config.batch_size]
            loss, grads, bn_stats = _backward_full(spec, weights, inputs[sel], labels[sel])
            for prefix, (mu, var) in bn_stats.items():
                for stat, value in (("moving_mean", mu), ("moving_variance", var)):
                    name = f"{prefix}.{stat}"
                    weights[name] = (
                        BN_MOMENTUM * weights[name] + (1 - BN_MOMENTUM) * value
                    ).astype(weights[name].dtype)
            adam_step(weights, grads, state, config)
            epoch_loss += loss * len(sel)
        history.losses.append(epoch_loss / n)
        history.train_acc.append(_accuracy(spec, weights, inputs, labels))
        if validation is not None:
            history.val_acc.append(_accuracy(spec, weights, *validation))
        else:
            history.val_acc.append(float("nan"))
    return weights, history


# ---------------------------------------------------------------------------
# Finite-difference verification.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GradCheckReport:
    per_tensor: dict[str, float]
    max_rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def relative_errors(
    analytic: dict[str, np.ndarray], numeric: dict[str, np.ndarray]
) -> dict[str, float]:
    """Per-tensor max of |a - b| / max(|a|, |b|, 1e-8)."""
    out = {}
    for name in analytic:
        a, b = analytic[name], numeric[name]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-8)
        out[name] = float((np.abs(a - b) / denom).max())
    return out


def finite_difference_grads(
    spec: ModelSpec,
    weights: WeightBundle,
    x: np.ndarray,
    y: np.ndarray,
    h: float = 1e-3,
) -> dict[str, np.ndarray]:
    """Central differences of the training loss over every trainable coordinate."""
    grads = {}
    for name in weights.trainable_names():
        tensor = weights[name]
        grad = np.zeros_like(tensor, dtype=np.float64)
        flat = tensor.reshape(-1)
        gflat = grad.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            up = _training_loss(spec, weights, x, y)
            flat[j] = orig - h
            down = _training_loss(spec, weights, x, y)
            flat[j] = orig
            gflat[j] = (up - down) / (2 * h)
        grads[name] = grad
    return grads


def _fd_coordinate(spec, weights, x, y, name: str, j: int, h: float) -> float:
    flat = weights[name].reshape(-1)
    orig = flat[j]
    flat[j] = orig + h
    up = _training_loss(spec, weights, x, y)
    flat[j] = orig - h
    down = _training_loss(spec, weights, x, y)
    flat[j] = orig
    return (up - down) / (2 * h)


def grad_check(
    spec: ModelSpec,
    seed: int = 0,
    tolerance: float = 1e-3,
    h: float = 1e-3,
    batch: int = 4,
    spatial: int = 8,
) -> GradCheckReport:
    """Compare analytic and central finite-difference gradients in float64.

    Coordinates that miss the tolerance at the base step are re-differenced
    at smaller steps: max/pool and relu kinks inside the stencil shrink with
    the step, while a genuine gradient bug does not, so refinement never
    masks one.  The model must be small enough to difference every
    coordinate (<= 50k parameters).
    """
    if nn.param_count(spec) > 50_000:
        raise ValueError("grad_check is limited to specs with <= 50k parameters")
    rng = np.random.default_rng(seed)
    weights = init_weights(spec, seed)
    weights = WeightBundle({k: v.astype(np.float64) for k, v in weights.tensors.items()})
    if spec.is_2d:
        x = rng.normal(size=(batch, spatial, spatial, spec.in_channels))
        y = rng.integers(0, spec.classes, size=(batch, spatial, spatial))
    else:
        x = rng.normal(size=(batch, spec.in_channels))
        y = rng.integers(0, spec.classes, size=batch)
    _, analytic = backward(spec, weights, x, y)
    numeric = finite_difference_grads(spec, weights, x, y, h=h)
    for name, an in analytic.items():
        fd = numeric[name].reshape(-1)
        anf = an.reshape(-1)
        for j in range(fd.size):
            err = abs(anf[j] - fd[j]) / max(abs(anf[j]), abs(fd[j]), 1e-8)
            for refine in (h / 8, h / 64, h / 512, h / 4096):
                if err < tolerance:
                    break
                cand = _fd_coordinate(spec, weights, x, y, name, j, refine)
                cand_err = abs(anf[j] - cand) / max(abs(anf[j]), abs(cand), 1e-8)
                if cand_err < err:
                    fd[j], err = cand, cand_err
    per_tensor = relative_errors(analytic, numeric)
    return GradCheckReport(per_tensor, max(per_tensor.values()), tolerance)
