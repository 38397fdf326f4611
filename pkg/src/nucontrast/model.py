"""Embedding network and classifier head with manual backpropagation.

The embedding network is a small MLP with tanh hidden layers. The output
layer is configurable: "linear" leaves the embedding free to occupy all of
R^D; "softplus" maps it into the nonnegative orthant, which keeps rank
compaction of same-class rows on a single ray instead of a sign-mixed line
through the origin (a linear classifier can only exploit the former). Both
choices are smooth, so finite-difference gradient checks stay clean. The
classifier is a single linear layer producing one logit per class. Gradients
are exact reverse-mode; the structure loss feeds its gradient in at the
embedding output, the classification loss at the logits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import DimensionError


OUTPUT_ACTIVATIONS = ("linear", "softplus", "softplus_unit")


@dataclass
class ModelParams:
    """Embedding-layer weights/biases plus the classifier weight/bias.

    ``layer_dims`` is (F, H1, ..., D): feature width, hidden widths,
    embedding width. ``weights[i]`` maps layer_dims[i] -> layer_dims[i+1].
    """

    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    classifier_weight: np.ndarray  # D x C
    classifier_bias: np.ndarray    # C
    output_activation: str = "linear"

    @property
    def n_classes(self) -> int:
        return self.classifier_weight.shape[1]

    def arrays(self) -> list[np.ndarray]:
        """All parameter arrays in the fixed serialization order."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        out.append(self.classifier_weight)
        out.append(self.classifier_bias)
        return out

    def copy(self) -> "ModelParams":
        return ModelParams(
            self.layer_dims,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.classifier_weight.copy(),
            self.classifier_bias.copy(),
            self.output_activation,
        )


@dataclass
class ForwardCache:
    """Activations retained for the backward pass."""

    x: np.ndarray
    activations: list[np.ndarray]  # output of each embedding layer; last is z
    prenorm: np.ndarray | None = None  # pre-normalization output (softplus_unit)


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0


def init_params(
    layer_dims,
    n_classes: int,
    rng: np.random.Generator,
    output_activation: str = "linear",
) -> ModelParams:
    """Uniform +-sqrt(6 / (fan_in + fan_out)) embedding weights, zero biases.

    The classifier head starts at exactly zero so an untrained model predicts
    probability 0.5 everywhere: label correction then stays inert until the
    head has learned genuine confidence, instead of flipping labels off the
    random spread of an arbitrary initial logit.
    """
    dims = tuple(int(d) for d in layer_dims)
    if len(dims) < 2 or any(d < 1 for d in dims) or n_classes < 1:
        raise ValueError("layer_dims needs >= 2 positive entries and n_classes >= 1")
    if output_activation not in OUTPUT_ACTIVATIONS:
        raise ValueError(f"output_activation must be one of {OUTPUT_ACTIVATIONS}")
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    cw = np.zeros((dims[-1], n_classes))
    return ModelParams(dims, weights, biases, cw, np.zeros(n_classes), output_activation)


def embed_forward(params: ModelParams, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Run the embedding network; returns (z, cache) with z of shape N x D."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.layer_dims[0]:
        raise DimensionError(
            f"input must be N x {params.layer_dims[0]}, got {x.shape}"
        )
    acts: list[np.ndarray] = []
    a = x
    prenorm = None
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = a @ w + b
        if i != last:
            a = np.tanh(h)
        elif params.output_activation in ("softplus", "softplus_unit"):
            a = np.logaddexp(0.0, h)
            if params.output_activation == "softplus_unit":
                prenorm = a
                a = a / np.linalg.norm(a, axis=1, keepdims=True)
        else:
            a = h
        acts.append(a)
    return a, ForwardCache(x, acts, prenorm)


def classify(params: ModelParams, z: np.ndarray) -> np.ndarray:
    """Logits ``z @ W + b``; apply a sigmoid to get per-class probabilities."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[1] != params.classifier_weight.shape[0]:
        raise DimensionError(
            f"embedding must be N x {params.classifier_weight.shape[0]}, got {z.shape}"
        )
    return z @ params.classifier_weight + params.classifier_bias


def backward(
    params: ModelParams,
    cache: ForwardCache,
    grad_logits: np.ndarray,
    grad_z: np.ndarray | None = None,
) -> list[np.ndarray]:
    """Exact gradients for every parameter array, in ``params.arrays()`` order.

    ``grad_logits`` is the loss gradient at the logits (flows through the
    classifier into the embedding network); ``grad_z`` is an extra gradient
    injected directly at the embedding output (the structure-loss path, which
    never touches the classifier).
    """
    z = cache.activations[-1]
    if grad_logits.shape != (z.shape[0], params.n_classes):
        raise DimensionError("grad_logits shape mismatch")
    grad_cw = z.T @ grad_logits
    grad_cb = grad_logits.sum(axis=0)

    g = grad_logits @ params.classifier_weight.T
    if grad_z is not None:
        if grad_z.shape != z.shape:
            raise DimensionError("grad_z shape mismatch")
        g = g + grad_z

    grads_w: list[np.ndarray] = [None] * len(params.weights)
    grads_b: list[np.ndarray] = [None] * len(params.weights)
    last = len(params.weights) - 1
    for i in range(last, -1, -1):
        if i != last:  # undo the tanh
            g = g * (1.0 - cache.activations[i] ** 2)
        else:
            a = cache.activations[i]
            if params.output_activation == "softplus_unit":
                # undo the row normalization z = a / |a|, then the softplus
                norms = np.linalg.norm(cache.prenorm, axis=1, keepdims=True)
                z = a
                g = (g - z * (z * g).sum(axis=1, keepdims=True)) / norms
                g = g * -np.expm1(-cache.prenorm)
            elif params.output_activation == "softplus":
                # softplus'(h) recovered from the activation: sigmoid(h) = 1 - exp(-a)
                g = g * -np.expm1(-a)
        prev = cache.x if i == 0 else cache.activations[i - 1]
        grads_w[i] = prev.T @ g
        grads_b[i] = g.sum(axis=0)
        if i > 0:
            g = g @ params.weights[i].T
    out = []
    for gw, gb in zip(grads_w, grads_b):
        out.append(gw)
        out.append(gb)
    out.append(grad_cw)
    out.append(grad_cb)
    return out


def init_adam(params: ModelParams) -> AdamState:
    arrays = params.arrays()
    return AdamState(
        m=[np.zeros_like(a) for a in arrays],
        v=[np.zeros_like(a) for a in arrays],
    )


def adam_step(
    params: ModelParams,
    grads: list[np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One bias-corrected Adam update, in place on ``params`` and ``state``."""
    state.step += 1
    t = state.step
    correction1 = 1.0 - beta1**t
    correction2 = 1.0 - beta2**t
    for p, g, m, v in zip(params.arrays(), grads, state.m, state.v):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p -= lr * (m / correction1) / (np.sqrt(v / correction2) + eps)


def ema_update(ema_params: ModelParams, params: ModelParams, decay: float) -> None:
    """ema <- decay * ema + (1 - decay) * params, elementwise in place."""
    if not 0.0 <= decay < 1.0:
        raise ValueError("decay must be in [0, 1)")
    for e, p in zip(ema_params.arrays(), params.arrays()):
        e *= decay
        e += (1.0 - decay) * p


def _format_array(name: str, a: np.ndarray) -> str:
    return name + " " + " ".join(repr(float(x)) for x in a.ravel())


def checkpoint_text(params: ModelParams, ema_params: ModelParams | None = None) -> str:
    """Render a checkpoint: header with the architecture, then one named line
    per parameter array. Floats use shortest round-trip decimals, so parsing
    reproduces every parameter bit-exactly."""
    lines = [
        "layer_dims " + " ".join(str(d) for d in params.layer_dims),
        f"classes {params.n_classes}",
        f"activation {params.output_activation}",
    ]
    lines += [_format_array(n, a) for n, a in zip(_array_names(params), params.arrays())]
    if ema_params is not None:
        lines.append("ema")
        lines += [
            _format_array(n, a)
            for n, a in zip(_array_names(ema_params), ema_params.arrays())
        ]
    return "\n".join(lines) + "\n"


def save_checkpoint(path, params: ModelParams, ema_params: ModelParams | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(checkpoint_text(params, ema_params))


def _array_names(params: ModelParams) -> list[str]:
    names = []
    for i in range(len(params.weights)):
        names += [f"w{i}", f"b{i}"]
    names += ["wc", "bc"]
    return names


def _parse_array(line: str, expected_name: str, shape: tuple[int, ...]) -> np.ndarray:
    fields = line.split()
    if not fields or fields[0] != expected_name:
        raise ValueError(f"checkpoint: expected array {expected_name!r}")
    n = int(np.prod(shape))
    if len(fields) - 1 != n:
        raise ValueError(
            f"checkpoint: array {expected_name!r} needs {n} values, got {len(fields) - 1}"
        )
    return np.array([float(f) for f in fields[1:]]).reshape(shape)


def load_checkpoint(path) -> tuple[ModelParams, ModelParams | None]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    try:
        head = lines[0].split()
        if head[0] != "layer_dims" or len(head) < 3:
            raise ValueError("checkpoint: bad layer_dims header")
        dims = tuple(int(d) for d in head[1:])
        chead = lines[1].split()
        if chead[0] != "classes" or len(chead) != 2:
            raise ValueError("checkpoint: bad classes header")
        n_classes = int(chead[1])
        ahead = lines[2].split()
        if ahead[0] != "activation" or len(ahead) != 2 or ahead[1] not in OUTPUT_ACTIVATIONS:
            raise ValueError("checkpoint: bad activation header")
        activation = ahead[1]
    except (IndexError, ValueError) as exc:
        raise ValueError(f"checkpoint: malformed header ({exc})") from None

    def read_params(start: int) -> tuple[ModelParams, int]:
        shapes: list[tuple[int, ...]] = []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            shapes += [(fan_in, fan_out), (fan_out,)]
        shapes += [(dims[-1], n_classes), (n_classes,)]
        names = [f"w{i // 2}" if i % 2 == 0 else f"b{i // 2}" for i in range(2 * (len(dims) - 1))]
        names += ["wc", "bc"]
        if start + len(shapes) > len(lines):
            raise ValueError("checkpoint: truncated parameter section")
        arrays = [
            _parse_array(lines[start + i], names[i], shapes[i])
            for i in range(len(shapes))
        ]
        n_layers = len(dims) - 1
        params = ModelParams(
            dims,
            [arrays[2 * i] for i in range(n_layers)],
            [arrays[2 * i + 1] for i in range(n_layers)],
            arrays[-2],
            arrays[-1],
            activation,
        )
        return params, start + len(shapes)

    params, pos = read_params(3)
    ema = None
    if pos < len(lines):
        if lines[pos].strip() != "ema":
            raise ValueError("checkpoint: unexpected trailing content")
        ema, pos = read_params(pos + 1)
        if pos != len(lines):
            raise ValueError("checkpoint: unexpected trailing content")
    return params, ema
