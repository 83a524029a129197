"""Single-hidden-layer sparse linear decoder: model, objective, training.

The decoder maps a patch column P to hidden responses

    s = sigmoid(W1^T P + b1)

and reconstructs the input with a purely affine layer (no sigmoid)

    P~ = W2^T s + b2.

Training minimizes

    J = scale * sum_cols ||P~ - P||^2
        + beta * sum_j KL(rho || rho_hat_j)
        + lambda * (||W1||^2 + ||W2||^2)

where rho_hat_j is the mean response of hidden unit j over the batch,
KL(r||q) = r ln(r/q) + (1-r) ln((1-r)/(1-q)), and `scale` is 1/N by
default ("mean" loss scale) so that beta and lambda keep their published
magnitudes regardless of the batch size; the raw summed form is available
as loss_scale="sum". Biases are excluded from the decay term.

Optimization is full-batch limited-memory quasi-Newton (L-BFGS with a
strong-Wolfe line search, via scipy); "epochs" counts outer iterations.
The whole procedure is deterministic given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
import scipy.optimize
from scipy.special import expit

from msunique.patches import PatchMatrix

__all__ = [
    "DecoderModel",
    "TrainingConfig",
    "Gradients",
    "init_model",
    "forward_responses",
    "reconstruct",
    "objective_and_gradient",
    "train_decoder",
]

# mean activations are clamped away from {0, 1} before the KL term so a
# fully saturated unit cannot produce log(0)
RHO_HAT_CLAMP = 1e-10


@dataclass(frozen=True, eq=False)
class DecoderModel:
    """Forward/backward weights and biases of one decoder."""

    w1: np.ndarray  # (d, h) forward weights
    b1: np.ndarray  # (h,) forward bias
    w2: np.ndarray  # (h, d) backward weights
    b2: np.ndarray  # (d,) backward bias

    def __post_init__(self):
        d, h = self.w1.shape
        if self.b1.shape != (h,) or self.w2.shape != (h, d) or self.b2.shape != (d,):
            raise ValueError("inconsistent decoder parameter shapes")
        for arr in (self.w1, self.b1, self.w2, self.b2):
            if not np.all(np.isfinite(arr)):
                raise ValueError("decoder parameters must be finite")

    @property
    def input_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def hidden(self) -> int:
        return self.w1.shape[1]


@dataclass(frozen=True)
class TrainingConfig:
    """Hyperparameters of the sparse objective and the training run."""

    rho: float = 0.035  # desired average activation
    beta: float = 5.0  # sparsity penalty weight
    lam: float = 3e-3  # weight decay
    epochs: int = 400  # outer quasi-Newton iterations
    seed: int = 0
    loss_scale: str = "mean"  # "mean" (1/N) or "sum" reconstruction term

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")
        if self.beta < 0 or self.lam < 0:
            raise ValueError("beta and lambda must be >= 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.loss_scale not in ("mean", "sum"):
            raise ValueError("loss_scale must be 'mean' or 'sum'")


class Gradients(NamedTuple):
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray


def init_model(d: int, h: int, seed: int) -> DecoderModel:
    """Random initial model: weights i.i.d. uniform on [-r, r], zero biases.

    r = sqrt(6 / (d + h + 1)), the usual fan-based scaling for sigmoid
    hidden units.
    """
    if d < 1 or h < 1:
        raise ValueError("dimensions must be positive")
    rng = np.random.default_rng(seed)
    r = np.sqrt(6.0 / (d + h + 1))
    return DecoderModel(
        w1=rng.uniform(-r, r, size=(d, h)),
        b1=np.zeros(h),
        w2=rng.uniform(-r, r, size=(h, d)),
        b2=np.zeros(d),
    )


def _as_columns(p) -> np.ndarray:
    return p.data if isinstance(p, PatchMatrix) else np.asarray(p, dtype=np.float64)


def forward_responses(m: DecoderModel, p) -> np.ndarray:
    """Hidden responses sigmoid(W1^T P + b1), shape (h, count).

    The sigmoid is evaluated in a numerically stable branch form, so large
    whitened inputs saturate to 0/1 without overflow.
    """
    x = _as_columns(p)
    if x.shape[0] != m.input_dim:
        raise ValueError(f"dimension mismatch: patches {x.shape[0]}, model {m.input_dim}")
    return expit(m.w1.T @ x + m.b1[:, None])


def reconstruct(m: DecoderModel, s: np.ndarray) -> np.ndarray:
    """Affine reconstruction W2^T s + b2 (no output nonlinearity)."""
    s = np.asarray(s, dtype=np.float64)
    if s.shape[0] != m.hidden:
        raise ValueError(f"dimension mismatch: responses {s.shape[0]}, hidden {m.hidden}")
    return m.w2.T @ s + m.b2[:, None]


def objective_and_gradient(
    m: DecoderModel, p, cfg: TrainingConfig
) -> tuple[float, Gradients]:
    """Evaluate the sparse reconstruction objective and its exact gradient.

    Backpropagates through the affine reconstruction and the sigmoid layer,
    including the sparsity term's contribution to the hidden-layer delta.
    The returned gradients match central finite differences of the scalar
    objective coordinate by coordinate.
    """
    x = _as_columns(p)
    if x.shape[0] != m.input_dim:
        raise ValueError(f"dimension mismatch: patches {x.shape[0]}, model {m.input_dim}")
    n = x.shape[1]
    if n < 1:
        raise ValueError("need at least one patch")
    scale = 1.0 / n if cfg.loss_scale == "mean" else 1.0

    s = forward_responses(m, x)
    diff = reconstruct(m, s) - x

    rho_hat = np.clip(s.mean(axis=1), RHO_HAT_CLAMP, 1.0 - RHO_HAT_CLAMP)
    rho = cfg.rho
    kl = rho * np.log(rho / rho_hat) + (1.0 - rho) * np.log((1.0 - rho) / (1.0 - rho_hat))

    j = (
        scale * float(np.sum(diff * diff))
        + cfg.beta * float(np.sum(kl))
        + cfg.lam * (float(np.sum(m.w1 * m.w1)) + float(np.sum(m.w2 * m.w2)))
    )

    d_recon = (2.0 * scale) * diff  # dJ/dP~
    g_w2 = s @ d_recon.T + (2.0 * cfg.lam) * m.w2
    g_b2 = d_recon.sum(axis=1)

    d_s = m.w2 @ d_recon
    d_s += (cfg.beta / n) * (-rho / rho_hat + (1.0 - rho) / (1.0 - rho_hat))[:, None]
    d_z = d_s * s * (1.0 - s)
    g_w1 = x @ d_z.T + (2.0 * cfg.lam) * m.w1
    g_b1 = d_z.sum(axis=1)

    return j, Gradients(g_w1, g_b1, g_w2, g_b2)


def _pack(w1, b1, w2, b2) -> np.ndarray:
    return np.concatenate([w1.ravel(), b1, w2.ravel(), b2])


def _unpack(theta: np.ndarray, d: int, h: int):
    i0 = d * h
    i1 = i0 + h
    i2 = i1 + h * d
    return (
        theta[:i0].reshape(d, h),
        theta[i0:i1],
        theta[i1:i2].reshape(h, d),
        theta[i2:],
    )


def train_decoder(
    p: PatchMatrix,
    hidden: int,
    cfg: TrainingConfig,
    on_iteration: Callable[[int, float], None] | None = None,
) -> DecoderModel:
    """Train one decoder on a (whitened) patch matrix.

    Runs cfg.epochs L-BFGS iterations from init_model(dim, hidden,
    cfg.seed); the line search enforces decrease, so the objective trace is
    non-increasing and the final objective never exceeds the initial one.
    `on_iteration(iteration, J)` is invoked with the initial objective at
    iteration 0 and after every accepted iterate.

    Raises ValueError("training diverged") if a non-finite objective or
    gradient is encountered.
    """
    if p.count < 1:
        raise ValueError("need at least one patch")
    d = p.dim
    model0 = init_model(d, hidden, cfg.seed)

    def fun(theta):
        if not np.all(np.isfinite(theta)):
            raise ValueError("training diverged: non-finite parameters")
        m = DecoderModel(*_unpack(theta, d, hidden))
        # overflow here is handled by the divergence check below
        with np.errstate(over="ignore", invalid="ignore"):
            j, g = objective_and_gradient(m, p, cfg)
        grad = _pack(*g)
        if not np.isfinite(j) or not np.all(np.isfinite(grad)):
            raise ValueError("training diverged: non-finite objective")
        return j, grad

    theta0 = _pack(model0.w1, model0.b1, model0.w2, model0.b2)
    if on_iteration is not None:
        on_iteration(0, fun(theta0)[0])
    if cfg.epochs == 0:
        return model0

    iteration = 0

    def callback(theta):
        nonlocal iteration
        iteration += 1
        if on_iteration is not None:
            on_iteration(iteration, fun(theta)[0])

    result = scipy.optimize.minimize(
        fun,
        theta0,
        jac=True,
        method="L-BFGS-B",
        callback=callback,
        # zero tolerances: run the full epoch budget unless the line
        # search genuinely cannot decrease any further
        options={
            "maxiter": cfg.epochs,
            "ftol": 0.0,
            "gtol": 0.0,
            "maxfun": max(15000, 50 * cfg.epochs),
        },
    )
    return DecoderModel(*_unpack(result.x, d, hidden))
