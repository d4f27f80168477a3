"""Randomized gradient-check harness.

Draws small random instances (graph, filter, features, parameters), then
compares the analytic gradients of the node prediction and of the sample
loss against central finite differences, coordinate by coordinate. A
coordinate passes when |analytic - numeric| is at most
max(tolerance * max(|analytic|, |numeric|), abs_floor).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .filters import build_filter
from .gradients import (GradientSet, finite_diff_gradients, loss_gradients,
                        prediction_gradients)
from .graphs import Graph
from .model import init_params
from .rng import substream

__all__ = ["GradCheckResult", "run_gradcheck", "random_instance"]

_FILTER_CYCLE = ("sym_selfloop", "rw_plus_id")
_ACTIVATION_CYCLE = ("tanh", "elu")


@dataclass(frozen=True)
class GradCheckResult:
    trials: int
    worst_rel_err: float
    failures: int

    @property
    def passed(self) -> bool:
        return self.failures == 0


def _random_graph(rng: np.random.Generator, n: int) -> Graph:
    # random spanning tree guarantees min degree >= 1, then extra edges
    edges = {(int(rng.integers(0, i)), i) for i in range(1, n)}
    extra = rng.integers(0, n, size=(n, 2))
    for u, v in extra:
        if u != v:
            edges.add((min(int(u), int(v)), max(int(u), int(v))))
    return Graph(num_nodes=n, edges=tuple(edges))


def random_instance(seed: int, trial: int, max_nodes: int = 10, max_depth: int = 3,
                    max_width: int = 4):
    """One seeded instance; filter kind and activation cycle over trials so
    every combination is exercised."""
    rng = substream(seed, "gradcheck", str(trial))
    n = int(rng.integers(2, max_nodes + 1))
    depth = trial % (max_depth + 1)
    widths = tuple(int(d) for d in rng.integers(1, max_width + 1, size=depth + 1))
    graph = _random_graph(rng, n)
    kind = _FILTER_CYCLE[trial % len(_FILTER_CYCLE)]
    activation = _ACTIVATION_CYCLE[(trial // 2) % len(_ACTIVATION_CYCLE)]
    filt = build_filter(graph, kind)
    features = rng.standard_normal((n, widths[0]))
    params = init_params(widths, activation=activation, rng=rng)
    node = int(rng.integers(0, n))
    label = float(rng.choice([-1.0, 1.0]))
    return params, filt, features, node, label


def _worst_error(analytic, numeric, tolerance: float, abs_floor: float):
    worst = 0.0
    for a_blk, n_blk in zip(analytic.blocks(), numeric.blocks()):
        a = np.asarray(a_blk, dtype=np.float64).ravel()
        b = np.asarray(n_blk, dtype=np.float64).ravel()
        denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), abs_floor / tolerance)
        err = np.abs(a - b) / denom
        if err.size:
            worst = max(worst, float(err.max()))
    return worst


def run_gradcheck(seed: int = 0, trials: int = 100, max_nodes: int = 10,
                  max_depth: int = 3, max_width: int = 4, tolerance: float = 1e-6,
                  abs_floor: float = 1e-9, step: float = 1e-5,
                  inject_sign_flip: bool = False) -> GradCheckResult:
    """Run the full suite; ``inject_sign_flip`` corrupts the analytic readout
    gradient on purpose so the harness itself can be fault-tested."""
    if trials < 1:
        raise UsageError(f"trials must be >= 1, got {trials}")
    worst = 0.0
    failures = 0
    for trial in range(trials):
        params, filt, features, node, label = random_instance(
            seed, trial, max_nodes=max_nodes, max_depth=max_depth, max_width=max_width)

        pred = prediction_gradients(params, filt, features, node)
        if inject_sign_flip:
            pred = GradientSet(grad_weights=pred.grad_weights, grad_w=-pred.grad_w,
                               wrt=pred.wrt)
        pred_fd = finite_diff_gradients(params, filt, features, ("prediction", node),
                                        h=step)
        err = _worst_error(pred, pred_fd, tolerance, abs_floor)

        lss = loss_gradients(params, filt, features, (node, label), "squared")
        lss_fd = finite_diff_gradients(params, filt, features,
                                       ("loss", (node, label, "squared")), h=step)
        err = max(err, _worst_error(lss, lss_fd, tolerance, abs_floor))

        worst = max(worst, err)
        if err > tolerance:
            failures += 1
    return GradCheckResult(trials=trials, worst_rel_err=worst, failures=failures)
