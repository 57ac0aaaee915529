"""Tiny trainable ReLU networks with exact per-example gradients.

Architecture: x -> a(x) -> W_1 -> a -> W_2 -> ... -> W_K, activation first,
all layers square of width m. The classification score is the first output
coordinate. Both supported losses have unit Lipschitz constant with respect
to the network output, which the trainer records on the returned weights.

Besides plain backprop the module exposes the normalized forward/backward
signal decomposition: the layer-k gradient factors as the scaled outer
product of a unit-ball backward signal and a unit-ball forward signal. The
two code paths for the same gradient back the dual-route correctness check.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import AccuracyError, InvalidInputError
from .nn_cert import NetworkWeights, spectral_stats
from .worlds import GaussianBlobTask

__all__ = [
    "LOSSES",
    "SignalDecomposition",
    "network_output",
    "per_example_gradient",
    "per_example_gradients",
    "empirical_loss",
    "zero_one_risk",
    "signal_decomposition",
    "gradient_from_signals",
    "train_toy_mlp",
]

LOSSES = ("hinge", "logistic")


def _check_loss(loss):
    if loss not in LOSSES:
        raise InvalidInputError(f"loss must be one of {LOSSES}, got {loss!r}")


def _as_batch(x, width):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != width:
        raise InvalidInputError(
            f"inputs must have width {width}, got shape {x.shape}"
        )
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("inputs must be finite")
    return x, single


def _batch_forward(layers, x):
    """Forward pass; returns (activations u_1..u_K, final pre-activation)."""
    activations = []
    h = x
    for w in layers:
        u = np.maximum(h, 0.0)
        activations.append(u)
        h = u @ w.T
    return activations, h


def _score_gradient(scores, y, loss):
    """d(loss)/d(score) per example; both losses are 1-Lipschitz."""
    if loss == "hinge":
        return np.where(y * scores < 1.0, -y, 0.0)
    # logistic: ln(1 + exp(-y s)); derivative -y * sigmoid(-y s)
    return -y / (1.0 + np.exp(y * scores))


def _loss_values(scores, y, loss):
    margin = y * scores
    if loss == "hinge":
        return np.maximum(0.0, 1.0 - margin)
    # stable ln(1 + e^-margin)
    return np.logaddexp(0.0, -margin)


def _batch_backward(layers, activations, output, y, loss):
    """Mean layer gradients over the batch plus per-example loss values."""
    count = output.shape[0]
    scores = output[:, 0]
    delta = np.zeros_like(output)
    delta[:, 0] = _score_gradient(scores, y, loss)
    grads = [None] * len(layers)
    for k in range(len(layers) - 1, -1, -1):
        grads[k] = delta.T @ activations[k] / count
        if k > 0:
            delta = (delta @ layers[k]) * (activations[k] > 0)
    return grads, _loss_values(scores, y, loss)


def network_output(w, x):
    """Final-layer output vector(s); a single input gives a single vector."""
    if not isinstance(w, NetworkWeights):
        raise InvalidInputError("w must be NetworkWeights")
    batch, single = _as_batch(x, w.width)
    _, out = _batch_forward(w.layers, batch)
    return out[0] if single else out


def per_example_gradient(w, x, y, loss="hinge"):
    """Backprop gradient of the loss at one example, one matrix per layer."""
    _check_loss(loss)
    if not isinstance(w, NetworkWeights):
        raise InvalidInputError("w must be NetworkWeights")
    batch, single = _as_batch(x, w.width)
    if not single:
        raise InvalidInputError("per_example_gradient takes a single input")
    activations, out = _batch_forward(w.layers, batch)
    grads, _ = _batch_backward(w.layers, activations, out, float(y), loss)
    return tuple(grads)


def per_example_gradients(w, xs, ys, loss="hinge"):
    """Gradients of every example, shape (count, K, m, m)."""
    _check_loss(loss)
    if not isinstance(w, NetworkWeights):
        raise InvalidInputError("w must be NetworkWeights")
    batch, single = _as_batch(xs, w.width)
    if single:
        raise InvalidInputError("expected a batch of inputs")
    y = np.asarray(ys, dtype=float)
    if y.shape != (batch.shape[0],):
        raise InvalidInputError("labels must match the batch length")
    activations, out = _batch_forward(w.layers, batch)
    scores = out[:, 0]
    delta = np.zeros_like(out)
    delta[:, 0] = _score_gradient(scores, y, loss)
    count, m = batch.shape
    result = np.empty((count, w.depth, m, m))
    for k in range(w.depth - 1, -1, -1):
        result[:, k] = delta[:, :, None] * activations[k][:, None, :]
        if k > 0:
            delta = (delta @ w.layers[k]) * (activations[k] > 0)
    return result


def empirical_loss(w, xs, ys, loss="hinge"):
    _check_loss(loss)
    out = network_output(w, np.asarray(xs, dtype=float))
    y = np.asarray(ys, dtype=float)
    return float(np.mean(_loss_values(out[:, 0], y, loss)))


def zero_one_risk(w, xs, ys):
    """Misclassification rate of the sign of the score; a zero score counts
    as an error so the estimate never flatters the classifier."""
    out = network_output(w, np.asarray(xs, dtype=float))
    y = np.asarray(ys, dtype=float)
    return float(np.mean(out[:, 0] * y <= 0.0))


@dataclass(frozen=True)
class SignalDecomposition:
    """Normalized forward signals (one vector per layer, Euclidean norm at
    most 1) and normalized backward signals (same normalization) whose
    scaled outer products reassemble the per-layer loss gradients."""

    forward: tuple
    backward: tuple


def signal_decomposition(w, x, y, loss="hinge"):
    _check_loss(loss)
    if not isinstance(w, NetworkWeights):
        raise InvalidInputError("w must be NetworkWeights")
    stats = spectral_stats(w)
    if stats.degenerate:
        raise InvalidInputError("signals undefined for a zero layer")
    batch, single = _as_batch(x, w.width)
    if not single:
        raise InvalidInputError("signal_decomposition takes a single input")
    activations, out = _batch_forward(w.layers, batch)
    delta = np.zeros_like(out)
    delta[:, 0] = _score_gradient(out[:, 0], float(y), loss)
    lams = stats.layer_norms
    depth = w.depth
    backward_raw = [None] * depth
    for k in range(depth - 1, -1, -1):
        backward_raw[k] = delta[0].copy()
        if k > 0:
            delta = (delta @ w.layers[k]) * (activations[k] > 0)
    forward = []
    backward = []
    for k in range(depth):
        fwd_scale = w.input_radius * math.prod(lams[:k])
        bwd_scale = w.lipschitz_loss * math.prod(lams[k + 1 :])
        forward.append(activations[k][0] / fwd_scale)
        backward.append(backward_raw[k] / bwd_scale)
    return SignalDecomposition(forward=tuple(forward), backward=tuple(backward))


def gradient_from_signals(stats, signals):
    """Reassemble the per-layer gradients as (R / lambda_k) times the outer
    product of backward and forward signals; the second code path for the
    quantity per_example_gradient computes directly."""
    if not isinstance(signals, SignalDecomposition):
        raise InvalidInputError("signals must be a SignalDecomposition")
    if stats.degenerate:
        raise InvalidInputError("gradient undefined for a zero layer")
    if len(signals.forward) != stats.depth:
        raise InvalidInputError("signal depth mismatch")
    out = []
    for k in range(stats.depth):
        scale = stats.total_radius / stats.layer_norms[k]
        out.append(scale * np.outer(signals.backward[k], signals.forward[k]))
    return tuple(out)


def train_toy_mlp(
    width,
    depth,
    dataset=None,
    count=256,
    epochs=60,
    seed=0,
    learning_rate=0.5,
    loss="hinge",
    loss_history=None,
):
    """Plain full-batch gradient descent on a synthetic two-class task.

    The dataset defaults to the Gaussian blob task at the network width;
    inputs live in the unit ball, so the returned weights carry input
    radius 1 and the unit loss Lipschitz constant. Training that produces a
    non-finite loss raises with the last finite epoch in the message. Pass
    a list as ``loss_history`` to receive the per-epoch training losses.
    """
    _check_loss(loss)
    if not (1 <= width <= 64):
        raise InvalidInputError("width must be in [1, 64] at desk scale")
    if not (1 <= depth <= 4):
        raise InvalidInputError("depth must be in [1, 4] at desk scale")
    if not isinstance(epochs, (int, np.integer)) or epochs < 1:
        raise InvalidInputError("epochs must be an integer >= 1")
    if count < 2:
        raise InvalidInputError("need at least 2 training examples")
    if not (learning_rate > 0 and math.isfinite(learning_rate)):
        raise InvalidInputError("learning_rate must be positive and finite")
    if dataset is None:
        dataset = GaussianBlobTask(width)
    rng = np.random.default_rng(seed)
    xs, ys = dataset.sample(int(count), rng)
    if xs.shape[1] != width:
        raise InvalidInputError(
            f"dataset inputs have width {xs.shape[1]}, network expects {width}"
        )
    layers = [
        math.sqrt(2.0 / width) * rng.standard_normal((width, width))
        for _ in range(depth)
    ]
    last_finite_epoch = 0
    last_finite_loss = math.nan
    for epoch in range(1, epochs + 1):
        activations, out = _batch_forward(layers, xs)
        grads, losses = _batch_backward(layers, activations, out, ys, loss)
        mean_loss = float(np.mean(losses))
        finite = math.isfinite(mean_loss) and all(
            np.all(np.isfinite(g)) for g in grads
        )
        if not finite:
            raise AccuracyError(
                f"training diverged at epoch {epoch}; last finite epoch "
                f"{last_finite_epoch} with loss {last_finite_loss}",
                best_estimate=last_finite_loss,
            )
        last_finite_epoch, last_finite_loss = epoch, mean_loss
        if loss_history is not None:
            loss_history.append(mean_loss)
        for k in range(depth):
            layers[k] = layers[k] - learning_rate * grads[k]
    if not all(np.all(np.isfinite(w)) for w in layers):
        raise AccuracyError(
            f"weights left the finite range after epoch {last_finite_epoch} "
            f"with loss {last_finite_loss}",
            best_estimate=last_finite_loss,
        )
    return NetworkWeights(
        layers=tuple(layers), lipschitz_loss=1.0, input_radius=1.0
    )
