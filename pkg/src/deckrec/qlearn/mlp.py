"""One-hidden-layer ReLU perceptron with a scalar linear output."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from deckrec.errors import InvalidArgument, TrainingDiverged


@dataclass
class MlpParams:
    """Weights of ``q(phi) = w2 . relu(W1 phi + b1) + b2``.

    Also used to hold gradients, which have the same structure.
    """

    W1: np.ndarray  # (hidden, n_in)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden,)
    b2: float

    @property
    def n_in(self) -> int:
        return self.W1.shape[1]

    @property
    def hidden(self) -> int:
        return self.W1.shape[0]

    @property
    def layer_sizes(self) -> list:
        return [self.n_in, self.hidden, 1]

    def copy(self) -> "MlpParams":
        return MlpParams(self.W1.copy(), self.b1.copy(), self.w2.copy(), float(self.b2))

    def flat(self) -> np.ndarray:
        return np.concatenate([self.W1.ravel(), self.b1, self.w2, [self.b2]])

    @classmethod
    def from_flat(cls, v: np.ndarray, n_in: int, hidden: int) -> "MlpParams":
        v = np.asarray(v, dtype=float)
        i = hidden * n_in
        return cls(v[:i].reshape(hidden, n_in).copy(), v[i:i + hidden].copy(),
                   v[i + hidden:i + 2 * hidden].copy(), float(v[-1]))

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.flat()).all())

    def check_shapes(self) -> None:
        h, n = self.W1.shape
        if self.b1.shape != (h,) or self.w2.shape != (h,):
            raise InvalidArgument("inconsistent MLP parameter shapes")

    def to_dict(self) -> dict:
        return {
            "layer_sizes": self.layer_sizes,
            "weights": [self.W1.tolist(), [self.w2.tolist()]],
            "biases": [self.b1.tolist(), [float(self.b2)]],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpParams":
        W1, W2 = d["weights"]
        b1, b2 = d["biases"]
        p = cls(np.array(W1, dtype=float), np.array(b1, dtype=float),
                np.array(W2[0], dtype=float), float(b2[0]))
        p.check_shapes()
        return p


def init_mlp(n_in: int, hidden: int, rng: np.random.Generator) -> MlpParams:
    """Fan-in scaled uniform initialisation; output layer starts at zero bias."""
    lim1 = 1.0 / np.sqrt(n_in)
    lim2 = 1.0 / np.sqrt(hidden)
    return MlpParams(
        W1=rng.uniform(-lim1, lim1, size=(hidden, n_in)),
        b1=rng.uniform(-lim1, lim1, size=hidden),
        w2=rng.uniform(-lim2, lim2, size=hidden),
        b2=0.0,
    )


def zeros_like(theta: MlpParams) -> MlpParams:
    return MlpParams(np.zeros_like(theta.W1), np.zeros_like(theta.b1), np.zeros_like(theta.w2), 0.0)


def _check_input(theta: MlpParams, phi: np.ndarray) -> None:
    if phi.shape[-1] != theta.n_in:
        raise InvalidArgument(f"feature length {phi.shape[-1]} does not match network input {theta.n_in}")


def q_forward(theta: MlpParams, phi) -> float:
    phi = np.asarray(phi, dtype=float)
    if phi.ndim != 1:
        raise InvalidArgument("q_forward takes a single feature vector")
    _check_input(theta, phi)
    hidden = np.maximum(0.0, theta.W1 @ phi + theta.b1)
    return float(theta.w2 @ hidden + theta.b2)


def q_forward_batch(theta: MlpParams, phis) -> np.ndarray:
    """Row-wise forward pass over a (batch, n_in) matrix."""
    phis = np.asarray(phis, dtype=float)
    _check_input(theta, phis)
    hidden = np.maximum(0.0, phis @ theta.W1.T + theta.b1)
    return hidden @ theta.w2 + theta.b2


def q_gradient(theta: MlpParams, phi) -> MlpParams:
    """Exact gradient of q_forward(theta, phi) with respect to every parameter."""
    phi = np.asarray(phi, dtype=float)
    _check_input(theta, phi)
    pre = theta.W1 @ phi + theta.b1
    active = (pre > 0).astype(float)
    hidden = pre * active
    d_pre = theta.w2 * active
    return MlpParams(W1=np.outer(d_pre, phi), b1=d_pre, w2=hidden, b2=1.0)


def weighted_gradient(theta: MlpParams, phis, coeffs) -> MlpParams:
    """sum_i coeffs[i] * q_gradient(theta, phis[i]) without forming each term."""
    phis = np.asarray(phis, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    pre = phis @ theta.W1.T + theta.b1
    active = pre > 0
    hidden = np.where(active, pre, 0.0)
    d_pre = np.where(active, theta.w2, 0.0) * coeffs[:, None]
    return MlpParams(W1=d_pre.T @ phis, b1=d_pre.sum(axis=0), w2=coeffs @ hidden,
                     b2=float(coeffs.sum()))


def apply_update(theta: MlpParams, delta: float, grad: MlpParams, learning_rate: float) -> MlpParams:
    """theta + learning_rate * delta * grad, refusing non-finite results."""
    if not np.isfinite(delta):
        raise TrainingDiverged(f"non-finite TD error {delta}", checkpoint=theta.copy())
    step = learning_rate * delta
    new = MlpParams(theta.W1 + step * grad.W1, theta.b1 + step * grad.b1,
                    theta.w2 + step * grad.w2, theta.b2 + step * grad.b2)
    if not new.is_finite():
        raise TrainingDiverged("parameters became non-finite", checkpoint=theta.copy())
    return new
