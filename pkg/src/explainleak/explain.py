"""Feature-attribution methods for the classifiers in this package.

Every method explains the model's *predicted* class at the query point and
returns a signed `Explanation` whose values align with the input features.
Methods that only need probabilities and input gradients (gradient,
gradient-times-input, integrated gradients, smoothgrad, local surrogate)
accept any model exposing `forward`/`forward_batch`/`input_gradient_batch`;
the structural methods (guided backprop, layer-wise relevance) walk MlpModel
internals and require one.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .models import MlpModel, _activation_deriv


@dataclass
class Explanation:
    method: str
    values: np.ndarray
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)

    def to_json(self) -> str:
        return json.dumps(
            {"method": self.method, "params": self.params, "values": self.values.tolist()},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "Explanation":
        payload = json.loads(text)
        return cls(
            method=payload["method"],
            values=np.array(payload["values"], dtype=np.float64),
            params=payload["params"],
        )


@dataclass
class IgConfig:
    steps: int = 50
    baseline: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.baseline is not None:
            self.baseline = np.asarray(self.baseline, dtype=np.float64)


@dataclass
class SmoothGradConfig:
    sigma: float | np.ndarray = 0.1
    samples: int = 25
    seed: int = 0

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise ValueError("samples must be at least 1")
        if np.any(np.asarray(self.sigma) < 0):
            raise ValueError("sigma must be non-negative")


@dataclass
class SurrogateConfig:
    num_samples: int = 500
    kernel_width: float | None = None
    ridge_lambda: float = 1e-3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_samples < 1:
            raise ValueError("num_samples must be at least 1")
        if self.kernel_width is not None and self.kernel_width <= 0:
            raise ValueError("kernel_width must be positive")
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be non-negative")


def _predicted_class(model, x: np.ndarray) -> int:
    return int(np.argmax(model.forward(x)))


def explain_gradient(model, x: np.ndarray) -> Explanation:
    """Signed gradient of the predicted-class probability at x."""
    x = np.asarray(x, dtype=np.float64)
    cls = _predicted_class(model, x)
    values = model.input_gradient(x, cls)
    return Explanation("gradient", values, {"target_class": cls})


def explain_grad_times_input(model, x: np.ndarray) -> Explanation:
    x = np.asarray(x, dtype=np.float64)
    grad = explain_gradient(model, x)
    return Explanation(
        "grad_times_input", x * grad.values, {"target_class": grad.params["target_class"]}
    )


def explain_integrated_gradients(
    model, x: np.ndarray, cfg: IgConfig | None = None
) -> Explanation:
    """Path-integrated gradient from a baseline to x.

    The integral is approximated by a right-endpoint Riemann sum over
    `steps` points (the sampled path includes x and excludes the baseline),
    then multiplied coordinatewise by (x - baseline). The target class is
    the predicted class at x, held fixed along the path.
    """
    cfg = cfg if cfg is not None else IgConfig()
    x = np.asarray(x, dtype=np.float64)
    baseline = np.zeros_like(x) if cfg.baseline is None else cfg.baseline
    if baseline.shape != x.shape:
        raise ValueError("baseline shape must match x")
    cls = _predicted_class(model, x)
    alphas = (np.arange(cfg.steps) + 1.0) / cfg.steps
    path = baseline[None, :] + alphas[:, None] * (x - baseline)[None, :]
    grads = model.input_gradient_batch(path, np.full(cfg.steps, cls))
    values = (x - baseline) * grads.mean(axis=0)
    return Explanation(
        "integrated_gradients", values, {"target_class": cls, "steps": cfg.steps}
    )


def ig_completeness_gap(model, x: np.ndarray, cfg: IgConfig | None = None) -> float:
    """|sum of attributions - (c(x) - c(baseline))| for the predicted class."""
    cfg = cfg if cfg is not None else IgConfig()
    x = np.asarray(x, dtype=np.float64)
    baseline = np.zeros_like(x) if cfg.baseline is None else cfg.baseline
    cls = _predicted_class(model, x)
    total = explain_integrated_gradients(model, x, cfg).values.sum()
    delta = model.forward(x)[cls] - model.forward(baseline)[cls]
    return float(abs(total - delta))


def explain_guided_backprop(model: MlpModel, x: np.ndarray) -> Explanation:
    """Gradient backward pass with double gating at every ReLU layer.

    At a ReLU the flowing gradient is zeroed both where the forward
    pre-activation was non-positive and where the gradient arriving from
    above is negative; all other activations contribute their ordinary local
    derivative.
    """
    if not isinstance(model, MlpModel):
        raise TypeError("guided backprop walks MlpModel layers")
    x = np.asarray(x, dtype=np.float64)
    zs, acts, probs = model.forward_stack(x[None, :])
    cls = int(np.argmax(probs[0]))
    if model.final == "softmax":
        pc = probs[0, cls]
        delta = (-probs * pc)
        delta[0, cls] += pc
    else:
        p = probs[0, 1]
        sign = 1.0 if cls == 1 else -1.0
        delta = np.array([[sign * p * (1.0 - p)]])
    for l in range(len(model.layers) - 1, -1, -1):
        spec = model.layers[l]
        if spec.activation == "relu":
            dz = delta * (zs[l] > 0.0) * (delta > 0.0)
        else:
            dz = delta * _activation_deriv(spec.activation, zs[l], acts[l + 1])
        delta = dz @ model.weights[l].T
    return Explanation("guided_backprop", delta[0], {"target_class": cls})


def explain_lrp(model: MlpModel, x: np.ndarray, epsilon: float = 1e-7) -> Explanation:
    """Epsilon-rule relevance propagation through the affine layers.

    The predicted-class output probability seeds the relevance at the last
    layer's unit; each affine layer then redistributes relevance by signed
    contribution share a_j*w_ji / (z_i + eps*sign(z_i)), with sign(0) taken
    as +1 so dead units divide by +eps.
    """
    if not isinstance(model, MlpModel):
        raise TypeError("relevance propagation walks MlpModel layers")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    x = np.asarray(x, dtype=np.float64)
    zs, acts, probs = model.forward_stack(x[None, :])
    cls = int(np.argmax(probs[0]))
    relevance = np.zeros(model.layers[-1].width)
    relevance[cls if model.final == "softmax" else 0] = probs[0, cls]
    for l in range(len(model.layers) - 1, -1, -1):
        z = zs[l][0]
        stabilized = z + epsilon * np.where(z >= 0.0, 1.0, -1.0)
        relevance = acts[l][0] * (model.weights[l] @ (relevance / stabilized))
    return Explanation("lrp", relevance, {"target_class": cls, "epsilon": epsilon})


def explain_smoothgrad(
    model, x: np.ndarray, cfg: SmoothGradConfig | None = None
) -> Explanation:
    """Mean of explain_gradient over seeded Gaussian perturbations of x.

    sigma may be a scalar or a per-feature vector. sigma = 0 degenerates to
    the plain gradient (returned directly, so the equality is bit-exact).
    """
    cfg = cfg if cfg is not None else SmoothGradConfig()
    x = np.asarray(x, dtype=np.float64)
    sigma = np.asarray(cfg.sigma, dtype=np.float64)
    params = {"sigma": sigma.tolist() if sigma.ndim else float(sigma),
              "samples": cfg.samples, "seed": cfg.seed}
    if np.all(sigma == 0.0):
        grad = explain_gradient(model, x)
        return Explanation("smoothgrad", grad.values, params)
    rng = np.random.default_rng(cfg.seed)
    noise = rng.standard_normal((cfg.samples, x.shape[0]))
    points = x[None, :] + sigma * noise
    grads = model.input_gradient_batch(points, None)
    return Explanation("smoothgrad", grads.mean(axis=0), params)


def explain_local_surrogate(
    model, x: np.ndarray, cfg: SurrogateConfig | None = None
) -> Explanation:
    """Weighted ridge fit of a local linear surrogate around x.

    Perturbations are unit Gaussians centred at x; sample j receives weight
    exp(-||z_j - x||^2 / kernel_width^2), and a ridge-penalized weighted
    least squares (intercept unpenalized) predicts the model's probability
    for the class predicted at x. The surrogate's coefficients are the
    explanation. A singular normal system is re-solved with the lambda floor
    1e-8.
    """
    cfg = cfg if cfg is not None else SurrogateConfig()
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    kernel_width = cfg.kernel_width if cfg.kernel_width is not None else 0.75 * np.sqrt(n)
    rng = np.random.default_rng(cfg.seed)
    samples = x[None, :] + rng.standard_normal((cfg.num_samples, n))
    cls = _predicted_class(model, x)
    target = model.forward_batch(samples)[:, cls]
    sq_dist = ((samples - x[None, :]) ** 2).sum(axis=1)
    weights = np.exp(-sq_dist / kernel_width**2)

    design = np.hstack([samples, np.ones((cfg.num_samples, 1))])
    sqrt_w = np.sqrt(weights)[:, None]
    gram = (design * sqrt_w).T @ (design * sqrt_w)
    rhs = (design * sqrt_w).T @ (target * sqrt_w[:, 0])
    penalty = np.diag(np.append(np.ones(n), 0.0))
    lam = cfg.ridge_lambda
    try:
        beta = np.linalg.solve(gram + lam * penalty, rhs)
    except np.linalg.LinAlgError:
        lam = max(lam, 1e-8)
        beta = np.linalg.solve(gram + lam * penalty, rhs)
    return Explanation(
        "local_surrogate",
        beta[:n],
        {
            "target_class": cls,
            "kernel_width": float(kernel_width),
            "ridge_lambda": float(lam),
            "num_samples": cfg.num_samples,
            "seed": cfg.seed,
            "intercept": float(beta[n]),
        },
    )


def explain(model, x: np.ndarray, method: str, params: dict | None = None) -> Explanation:
    """Dispatch by method name; params feed the method's config."""
    params = dict(params or {})
    if method == "gradient":
        return explain_gradient(model, x)
    if method == "grad_times_input":
        return explain_grad_times_input(model, x)
    if method == "integrated_gradients":
        return explain_integrated_gradients(model, x, IgConfig(**params))
    if method == "guided_backprop":
        return explain_guided_backprop(model, x)
    if method == "lrp":
        return explain_lrp(model, x, **params)
    if method == "smoothgrad":
        return explain_smoothgrad(model, x, SmoothGradConfig(**params))
    if method == "local_surrogate":
        return explain_local_surrogate(model, x, SurrogateConfig(**params))
    raise ValueError(f"unknown explanation method {method!r}")


EXPLANATION_METHODS = (
    "gradient",
    "grad_times_input",
    "integrated_gradients",
    "guided_backprop",
    "lrp",
    "smoothgrad",
    "local_surrogate",
)
