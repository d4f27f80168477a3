"""Exact gradients of the node prediction and of the per-sample loss.

The prediction f(x|theta) = sigma(delta_x^T g X^(K) w) is differentiated
with a hand-derived recursion over layers:

    grad_w f      = sigma'(z_x) [delta_x^T g X^(K)]^T
    df/dX^(K)     = sigma'(z_x) [delta_x^T g]^T w^T
    df/dX^(k-1)   = g^T (df/dX^(k) . R^(k)) W^(k)^T
    grad_W^(k) f  = [g X^(k-1)]^T (df/dX^(k) . R^(k))

where z_x is the readout pre-activation at node x, R^(k) is sigma' of the
k-th layer pre-activation, and "." is the entrywise product. Loss gradients
are the scalar chain factor dloss/dyhat times the prediction gradients.

A central finite-difference fallback over every scalar parameter coordinate
serves as the independent test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import linalg
from .activations import get_activation
from .errors import DimensionError, DomainError, NonFiniteError
from .losses import get_loss
from .model import ForwardTape, ModelParams, forward, _filter_operand

__all__ = ["GradientSet", "prediction_gradients", "loss_gradients",
           "finite_diff_gradients"]


@dataclass(frozen=True)
class GradientSet:
    """Gradient blocks shaped exactly like ModelParams."""

    grad_weights: tuple
    grad_w: np.ndarray
    wrt: str  # "prediction" or "loss"

    def __post_init__(self):
        for k, gm in enumerate(self.grad_weights, start=1):
            if not np.all(np.isfinite(gm)):
                raise NonFiniteError(f"gradient for W^({k}) is non-finite")
        if not np.all(np.isfinite(self.grad_w)):
            raise NonFiniteError("gradient for w is non-finite")

    def blocks(self) -> tuple:
        return self.grad_weights + (self.grad_w,)

    def scaled(self, factor: float, wrt: str | None = None) -> "GradientSet":
        return GradientSet(
            grad_weights=tuple(factor * gm for gm in self.grad_weights),
            grad_w=factor * self.grad_w,
            wrt=wrt or self.wrt,
        )


def _filter_row(filt, node: int) -> np.ndarray:
    g = _filter_operand(filt)
    if sp.issparse(g):
        return np.asarray(g[[node], :].todense()).ravel()
    return np.asarray(g[node, :], dtype=np.float64)


def prediction_gradients(params: ModelParams, filt, features, node: int,
                         tape: ForwardTape | None = None) -> GradientSet:
    """Gradients of the node prediction with respect to every parameter block.

    Accepts a precomputed ForwardTape; recomputing internally yields
    bit-identical results because the forward pass is deterministic.
    """
    x = linalg.as_matrix(features)
    if not (0 <= node < x.shape[0]):
        raise DimensionError(f"node {node} out of range for {x.shape[0]} nodes")
    if tape is None:
        tape = forward(params, filt, features)
    act = get_activation(params.activation)
    g = _filter_operand(filt)
    depth = params.depth

    z_node = float(tape.output_preact[node])
    sp_out = float(act.deriv(z_node))
    # delta_x^T g X^(K) is row `node` of the propagated readout input
    grad_w = sp_out * tape.propagated[depth][node, :]

    grad_weights = [None] * depth
    if depth > 0:
        g_row = _filter_row(filt, node)
        dx = sp_out * np.outer(g_row, params.w)  # df/dX^(K)
        for k in range(depth, 0, -1):
            r = act.deriv(tape.pre_activations[k - 1])
            masked = dx * r
            grad_weights[k - 1] = tape.propagated[k - 1].T @ masked
            if k > 1:
                dx = (g.T @ masked) @ params.weights[k - 1].T
    return GradientSet(grad_weights=tuple(grad_weights), grad_w=np.asarray(grad_w),
                       wrt="prediction")


def loss_gradients(params: ModelParams, filt, features, sample, loss: str,
                   y_min: float = -1.0, y_max: float = 1.0,
                   tape: ForwardTape | None = None) -> GradientSet:
    """Gradient of loss(f(x|theta), y) for one (node, label) sample.

    Equals the scalar dloss/dyhat at the node prediction times the
    prediction gradients.
    """
    node, label = sample
    if not (y_min <= label <= y_max):
        raise DomainError(f"label {label} outside configured range [{y_min}, {y_max}]")
    loss_def = get_loss(loss)
    if tape is None:
        tape = forward(params, filt, features)
    grads = prediction_gradients(params, filt, features, node, tape=tape)
    scale = float(loss_def.deriv(tape.predictions[node], label))
    return grads.scaled(scale, wrt="loss")


def finite_diff_gradients(params: ModelParams, filt, features, target,
                          h: float = 1e-5) -> GradientSet:
    """Central differences (f(theta + h e_i) - f(theta - h e_i)) / 2h per
    scalar parameter coordinate.

    ``target`` selects the scalar being differentiated:
      ("prediction", node)                   the node prediction
      ("loss", (node, label, loss_kind))     the per-sample loss

    Step size is tuned for O(1)-scale parameters; rescale h with the
    parameters if they are far from unit scale.
    """
    if h <= 0:
        raise DomainError(f"finite-difference step must be positive, got {h}")
    kind = target[0]
    if kind == "prediction":
        node = target[1]

        def evaluate(p):
            return float(forward(p, filt, features).predictions[node])
    elif kind == "loss":
        node, label, loss_kind = target[1]
        loss_def = get_loss(loss_kind)

        def evaluate(p):
            return float(loss_def.value(forward(p, filt, features).predictions[node], label))
    else:
        raise DomainError(f"unknown finite-difference target {kind!r}")

    def perturbed(block_idx, flat_idx, delta):
        blocks = [m.copy() for m in params.weights] + [params.w.copy()]
        blocks[block_idx].ravel()[flat_idx] += delta
        return ModelParams(weights=tuple(blocks[:-1]), w=blocks[-1],
                           activation=params.activation)

    grad_blocks = []
    n_blocks = params.depth + 1
    for bi in range(n_blocks):
        template = params.weights[bi] if bi < params.depth else params.w
        grad = np.zeros_like(template, dtype=np.float64)
        flat = grad.ravel()
        for i in range(template.size):
            f_plus = evaluate(perturbed(bi, i, +h))
            f_minus = evaluate(perturbed(bi, i, -h))
            flat[i] = (f_plus - f_minus) / (2.0 * h)
        grad_blocks.append(grad)
    return GradientSet(grad_weights=tuple(grad_blocks[:-1]), grad_w=grad_blocks[-1],
                       wrt=kind)
