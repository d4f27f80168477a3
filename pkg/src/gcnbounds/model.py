"""The deep graph convolutional model.

Layer update: X^(k) = sigma(g X^(k-1) W^(k)) for k = 1..K on node features
X^(0) = X, followed by a single real readout per node,
yhat = sigma(g X^(K) w). With K = 0 (no hidden layers) the model reduces to
yhat = sigma(g X w).

Parameters are theta = {W^(1), ..., W^(K), w}. The composite norm used for
coupled-trajectory analysis is the sum of blockwise spectral norms,
||dtheta||_* = ||dw||_2 + sum_k ||dW^(k)||_2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import linalg
from .activations import get_activation
from .errors import DimensionError, DomainError, NonFiniteError
from .filters import FilterMatrix

__all__ = [
    "ModelParams", "ForwardTape", "init_params", "forward", "predict_node",
    "param_norm_star", "measured_B", "save_params", "load_params",
]

PARAMS_FORMAT_TAG = "gcn-params-v1"


@dataclass(frozen=True)
class ModelParams:
    """Immutable parameter container.

    ``weights`` holds W^(1)..W^(K) with W^(k) of shape (d_{k-1}, d_k);
    ``w`` is the readout vector of length d_K (d_0 when K = 0).
    """

    weights: tuple
    w: np.ndarray
    activation: str = "tanh"

    def __post_init__(self):
        weights = tuple(np.asarray(m, dtype=np.float64) for m in self.weights)
        w = np.asarray(self.w, dtype=np.float64)
        if w.ndim != 1 or w.size < 1:
            raise DimensionError(f"readout w must be a 1-D vector, got shape {w.shape}")
        prev = None
        for k, m in enumerate(weights, start=1):
            if m.ndim != 2:
                raise DimensionError(f"W^({k}) must be 2-D, got shape {m.shape}")
            if prev is not None and m.shape[0] != prev:
                raise DimensionError(
                    f"shape chain broken at W^({k}): expected {prev} rows, got {m.shape[0]}")
            if not np.all(np.isfinite(m)):
                raise NonFiniteError(f"W^({k}) contains non-finite entries")
            prev = m.shape[1]
        if prev is not None and w.shape[0] != prev:
            raise DimensionError(
                f"readout w has length {w.shape[0]} but last hidden width is {prev}")
        if not np.all(np.isfinite(w)):
            raise NonFiniteError("readout w contains non-finite entries")
        get_activation(self.activation)  # must be registered
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "w", w)

    @property
    def depth(self) -> int:
        """Number of hidden layers K."""
        return len(self.weights)

    @property
    def widths(self) -> tuple:
        """(d_0, d_1, ..., d_K); equals (len(w),) when K = 0."""
        if not self.weights:
            return (self.w.shape[0],)
        return tuple(m.shape[0] for m in self.weights) + (self.weights[-1].shape[1],)

    def blocks(self) -> tuple:
        """All parameter blocks, hidden weights first, readout last."""
        return self.weights + (self.w,)

    def same_architecture(self, other: "ModelParams") -> bool:
        return self.widths == other.widths and self.activation == other.activation


@dataclass(frozen=True)
class ForwardTape:
    """All intermediates of one forward pass.

    ``layer_outputs``  X^(0)..X^(K)
    ``propagated``     g X^(k-1) for k = 1..K+1 (the last entry feeds the readout)
    ``pre_activations`` g X^(k-1) W^(k) for k = 1..K
    ``output_preact``  g X^(K) w, one value per node
    ``predictions``    sigma(output_preact)
    """

    layer_outputs: tuple
    propagated: tuple
    pre_activations: tuple
    output_preact: np.ndarray
    predictions: np.ndarray


def init_params(widths, activation: str = "tanh", rng: np.random.Generator | None = None,
                scale: float = 1.0) -> ModelParams:
    """Seeded uniform(-s, s) initialization with s = scale / sqrt(fan_in) per block.

    ``widths`` is (d_0, ..., d_K); the readout block uses fan_in d_K.
    """
    widths = tuple(int(d) for d in widths)
    if len(widths) < 1 or any(d < 1 for d in widths):
        raise DimensionError(f"widths must be positive, got {widths}")
    if rng is None:
        rng = np.random.default_rng(0)
    weights = []
    for d_in, d_out in zip(widths[:-1], widths[1:]):
        s = scale / np.sqrt(d_in)
        weights.append(rng.uniform(-s, s, size=(d_in, d_out)))
    s = scale / np.sqrt(widths[-1])
    w = rng.uniform(-s, s, size=widths[-1])
    return ModelParams(weights=tuple(weights), w=w, activation=activation)


def _filter_operand(filt):
    if isinstance(filt, FilterMatrix):
        return filt.matrix
    return filt


def forward(params: ModelParams, filt, features) -> ForwardTape:
    """Full forward pass over all nodes, keeping every intermediate."""
    g = _filter_operand(filt)
    x = linalg.as_matrix(features)
    n = x.shape[0]
    if g.shape != (n, n):
        raise DimensionError(f"filter is {g.shape}, features have {n} nodes")
    d0 = params.widths[0]
    if x.shape[1] != d0:
        raise DimensionError(f"features have dim {x.shape[1]}, model expects {d0}")
    act = get_activation(params.activation)

    layer_outputs = [x]
    propagated = []
    pre_activations = []
    cur = x
    for wk in params.weights:
        p = g @ cur
        z = p @ wk
        cur = act.fn(z)
        propagated.append(p)
        pre_activations.append(z)
        layer_outputs.append(cur)
    p_out = g @ cur
    z_out = p_out @ params.w
    propagated.append(p_out)
    preds = act.fn(z_out)
    return ForwardTape(
        layer_outputs=tuple(layer_outputs),
        propagated=tuple(propagated),
        pre_activations=tuple(pre_activations),
        output_preact=np.asarray(z_out, dtype=np.float64),
        predictions=np.asarray(preds, dtype=np.float64),
    )


def predict_node(params: ModelParams, filt, features, node: int) -> float:
    """Prediction for a single node; equals forward(...).predictions[node]."""
    x = linalg.as_matrix(features)
    if not (0 <= node < x.shape[0]):
        raise DimensionError(f"node {node} out of range for {x.shape[0]} nodes")
    return float(forward(params, filt, features).predictions[node])


def block_spectral_norms(params: ModelParams, tol: float = linalg.DEFAULT_TOL) -> tuple:
    """Spectral norm of every block, hidden weights first, readout last.

    The readout block is a vector, so its spectral norm is its Euclidean norm.
    """
    norms = [linalg.spectral_norm(wk, tol=tol) for wk in params.weights]
    norms.append(float(np.linalg.norm(params.w)))
    return tuple(norms)


def param_norm_star(a: ModelParams, b: ModelParams) -> float:
    """Sum over blocks of spectral norms of the blockwise differences."""
    if not a.same_architecture(b):
        raise DimensionError(
            f"architecture mismatch: {a.widths}/{a.activation} vs {b.widths}/{b.activation}")
    total = float(np.linalg.norm(a.w - b.w))
    for wa, wb in zip(a.weights, b.weights):
        total += linalg.spectral_norm(wa - wb)
    return total


def measured_B(history) -> float:
    """Max over parameter snapshots and blocks of the block spectral norm."""
    history = list(history)
    if not history:
        raise DimensionError("measured_B needs a non-empty parameter history")
    first = history[0]
    best = 0.0
    for snap in history:
        if not snap.same_architecture(first):
            raise DimensionError("measured_B: inconsistent architectures in history")
        best = max(best, max(block_spectral_norms(snap)))
    return best


# snapshot file format --------------------------------------------------------
#
# Line-oriented text, stable across versions:
#
#   gcn-params-v1
#   K <int>
#   activation <tag>
#   widths <d_0> ... <d_K>
#   block W1 <rows> <cols>
#   <rows lines of cols C-style hex floats>
#   ...
#   block w <len>
#   <one line of len hex floats>
#
# Hex floats (float.hex()) round-trip exactly, so save/load is lossless and
# the byte content is deterministic for identical parameters.


def save_params(params: ModelParams, path) -> None:
    widths = params.widths
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{PARAMS_FORMAT_TAG}\n")
        fh.write(f"K {params.depth}\n")
        fh.write(f"activation {params.activation}\n")
        fh.write("widths " + " ".join(str(d) for d in widths) + "\n")
        for k, wk in enumerate(params.weights, start=1):
            fh.write(f"block W{k} {wk.shape[0]} {wk.shape[1]}\n")
            for row in wk:
                fh.write(" ".join(float(v).hex() for v in row) + "\n")
        fh.write(f"block w {params.w.shape[0]}\n")
        fh.write(" ".join(float(v).hex() for v in params.w) + "\n")


def load_params(path) -> ModelParams:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    def fail(msg):
        raise DomainError(f"{path}: {msg}")

    if not lines or lines[0] != PARAMS_FORMAT_TAG:
        fail(f"missing format tag {PARAMS_FORMAT_TAG!r}")
    try:
        depth = int(lines[1].split()[1])
        activation = lines[2].split()[1]
        widths = [int(t) for t in lines[3].split()[1:]]
    except (IndexError, ValueError):
        fail("malformed header")
    if len(widths) != depth + 1:
        fail(f"K={depth} but widths has {len(widths)} entries")
    pos = 4
    weights = []
    for k in range(1, depth + 1):
        head = lines[pos].split()
        if head[:2] != ["block", f"W{k}"]:
            fail(f"expected 'block W{k}' at line {pos + 1}")
        rows, cols = int(head[2]), int(head[3])
        block = [[float.fromhex(t) for t in lines[pos + 1 + r].split()] for r in range(rows)]
        weights.append(np.array(block, dtype=np.float64).reshape(rows, cols))
        pos += 1 + rows
    head = lines[pos].split()
    if head[:2] != ["block", "w"]:
        fail(f"expected 'block w' at line {pos + 1}")
    w = np.array([float.fromhex(t) for t in lines[pos + 1].split()], dtype=np.float64)
    return ModelParams(weights=tuple(weights), w=w, activation=activation)
