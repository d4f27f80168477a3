"""Single-sample SGD, the coupled twin-run harness and the inequality audit.

A twin run trains two models from the same initialization on the same
seeded index sequence; the second run substitutes one replaced training
sample whenever its index is drawn. The recorded trace supports a pure,
step-by-step audit of every closed-form inequality the bound derivation
rests on: layer-output variation, prediction variation, same-sample and
cross-sample gradient variation, the final loss gap, and the per-step
drift envelope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bounds as bnd
from . import linalg
from .activations import get_activation
from .data import Dataset
from .errors import DomainError, NonFiniteError, TrainingError
from .filters import filter_norm
from .gradients import loss_gradients
from .losses import get_loss
from .model import ModelParams, block_spectral_norms, forward, init_params
from .rng import substream

__all__ = [
    "TrainConfig", "TrainSummary", "TwinTrace", "TwinAuditReport",
    "sgd_step", "project_params", "train", "twin_train", "audit_twin",
    "write_trace_csv",
]

TRACE_CSV_HEADER = "t,i_t,hit,delta_theta_star,B_running,loss_a,loss_b"


@dataclass(frozen=True)
class TrainConfig:
    """Configuration of one SGD run (and of each half of a twin run)."""

    lr: float = 0.05
    steps: int = 200
    loss: str = "squared"
    seed: int = 0
    projection_cap: float | None = None
    record_every: int = 1
    hidden_widths: tuple = ()
    activation: str = "tanh"
    init_scale: float = 1.0

    def __post_init__(self):
        if not (self.lr > 0):
            raise DomainError(f"lr must be positive, got {self.lr}")
        if self.steps < 0:
            raise DomainError(f"steps must be >= 0, got {self.steps}")
        if self.record_every < 1:
            raise DomainError(f"record_every must be >= 1, got {self.record_every}")
        if self.projection_cap is not None and self.projection_cap <= 0:
            raise DomainError(f"projection_cap must be positive, got {self.projection_cap}")
        get_loss(self.loss)
        get_activation(self.activation)
        object.__setattr__(self, "hidden_widths",
                           tuple(int(d) for d in self.hidden_widths))

    @property
    def depth(self) -> int:
        return len(self.hidden_widths)


@dataclass(frozen=True)
class TrainSummary:
    measured_b: float
    step_losses: tuple
    final_empirical_risk: float
    snapshots: tuple          # ModelParams at the recorded steps
    recorded_steps: tuple     # which t each snapshot belongs to (0 and T always)
    index_sequence: tuple     # drawn training-set positions, length T


def sgd_step(params: ModelParams, filt, features, sample, eta: float, loss: str,
             y_min: float = -1.0, y_max: float = 1.0, tape=None) -> ModelParams:
    """One update theta <- theta - eta * grad loss(f(x|theta), y)."""
    try:
        grads = loss_gradients(params, filt, features, sample, loss,
                               y_min=y_min, y_max=y_max, tape=tape)
    except NonFiniteError as e:
        raise TrainingError(f"non-finite gradient at sample {sample}: {e}") from e
    new_weights = tuple(wk - eta * gk for wk, gk in zip(params.weights, grads.grad_weights))
    return ModelParams(weights=new_weights, w=params.w - eta * grads.grad_w,
                       activation=params.activation)


def project_params(params: ModelParams, cap: float) -> ModelParams:
    """Rescale any block whose spectral norm exceeds ``cap`` back onto it."""
    if cap <= 0:
        raise DomainError(f"projection cap must be positive, got {cap}")
    norms = block_spectral_norms(params)
    blocks = list(params.weights) + [params.w]
    changed = False
    for i, (blk, nrm) in enumerate(zip(blocks, norms)):
        if nrm > cap:
            blocks[i] = blk * (cap / nrm)
            changed = True
    if not changed:
        return params
    return ModelParams(weights=tuple(blocks[:-1]), w=blocks[-1],
                       activation=params.activation)


def _initial_params(dataset: Dataset, config: TrainConfig) -> ModelParams:
    widths = (dataset.features.shape[1],) + config.hidden_widths
    rng = substream(config.seed, "init")
    return init_params(widths, activation=config.activation, rng=rng,
                       scale=config.init_scale)


def _draw_indices(config: TrainConfig, m: int) -> np.ndarray:
    rng = substream(config.seed, "sgd-draws")
    return rng.integers(0, m, size=config.steps)


def train(dataset: Dataset, filt, config: TrainConfig):
    """Train one model; returns (final params, TrainSummary).

    Index draws are uniform with replacement over the training set from the
    seeded stream, so identical inputs give bit-identical results.
    """
    samples = dataset.train_samples()
    if not samples:
        raise TrainingError("dataset has no training samples")
    params = _initial_params(dataset, config)
    draws = _draw_indices(config, len(samples))
    loss_def = get_loss(config.loss)

    snapshots = [params]
    recorded = [0]
    step_losses = []
    for t, pos in enumerate(draws, start=1):
        node, label = samples[int(pos)]
        tape = forward(params, filt, dataset.features)
        step_losses.append(float(loss_def.value(tape.predictions[node], label)))
        try:
            params = sgd_step(params, filt, dataset.features, (node, label),
                              config.lr, config.loss,
                              y_min=dataset.y_min, y_max=dataset.y_max, tape=tape)
        except TrainingError as e:
            raise TrainingError(f"step {t}: {e}") from e
        if config.projection_cap is not None:
            params = project_params(params, config.projection_cap)
        if t % config.record_every == 0 or t == config.steps:
            snapshots.append(params)
            recorded.append(t)

    final_tape = forward(params, filt, dataset.features)
    train_idx = list(dataset.train_indices)
    risks = loss_def.value(final_tape.predictions[train_idx], dataset.labels[train_idx])
    measured_b = max(max(block_spectral_norms(s)) for s in snapshots)
    summary = TrainSummary(
        measured_b=measured_b,
        step_losses=tuple(step_losses),
        final_empirical_risk=float(np.mean(risks)),
        snapshots=tuple(snapshots),
        recorded_steps=tuple(recorded),
        index_sequence=tuple(int(p) for p in draws),
    )
    return params, summary


@dataclass(frozen=True)
class TwinTrace:
    """Complete per-step record of one coupled pair of SGD runs."""

    config: TrainConfig
    replaced_index: int           # position in the training set
    replacement_sample: tuple     # (node, label) used by run B on hits
    index_sequence: tuple         # drawn positions, shared by both runs
    hits: tuple                   # hits[t-1]: step t drew the replaced index
    delta_norms: tuple            # ||dtheta_t||_* for t = 0..T
    delta_block_norms: tuple      # per step t=0..T: per-block spectral norms of the difference
    block_norms_a: tuple          # per step t=0..T: per-block norms of run A
    block_norms_b: tuple
    losses_a: tuple               # loss at the drawn sample, steps 1..T
    losses_b: tuple
    snapshots_a: tuple            # ModelParams at recorded steps
    snapshots_b: tuple
    recorded_steps: tuple
    measured_b: float             # max block norm over both runs, all steps

    @property
    def final_a(self) -> ModelParams:
        return self.snapshots_a[-1]

    @property
    def final_b(self) -> ModelParams:
        return self.snapshots_b[-1]

    @property
    def steps(self) -> int:
        return len(self.index_sequence)


def twin_train(dataset: Dataset, filt, config: TrainConfig, replaced_index: int,
               replacement_sample) -> TwinTrace:
    """Run the coupled pair and record the full trace.

    Both runs start from the identical seeded initialization and consume the
    same index sequence; run B substitutes ``replacement_sample`` whenever
    the drawn index equals ``replaced_index``.
    """
    samples = dataset.train_samples()
    m = len(samples)
    if not (0 <= replaced_index < m):
        raise DomainError(f"replaced_index {replaced_index} out of range for m={m}")
    rep_node, rep_label = replacement_sample
    if not (0 <= int(rep_node) < dataset.num_nodes):
        raise DomainError(f"replacement node {rep_node} out of range")
    if not (dataset.y_min <= rep_label <= dataset.y_max):
        raise DomainError(f"replacement label {rep_label} outside "
                          f"[{dataset.y_min}, {dataset.y_max}]")
    replacement = (int(rep_node), float(rep_label))

    params_a = _initial_params(dataset, config)
    params_b = params_a
    draws = _draw_indices(config, m)
    loss_def = get_loss(config.loss)

    delta_norms = [0.0]
    delta_block_norms = [tuple(0.0 for _ in range(config.depth + 1))]
    block_norms_a = [block_spectral_norms(params_a)]
    block_norms_b = [block_spectral_norms(params_b)]
    losses_a, losses_b, hits = [], [], []
    snapshots_a, snapshots_b = [params_a], [params_b]
    recorded = [0]

    for t, pos in enumerate(draws, start=1):
        pos = int(pos)
        hit = pos == replaced_index
        sample_a = samples[pos]
        sample_b = replacement if hit else sample_a
        tape_a = forward(params_a, filt, dataset.features)
        tape_b = forward(params_b, filt, dataset.features)
        losses_a.append(float(loss_def.value(tape_a.predictions[sample_a[0]], sample_a[1])))
        losses_b.append(float(loss_def.value(tape_b.predictions[sample_b[0]], sample_b[1])))
        try:
            params_a = sgd_step(params_a, filt, dataset.features, sample_a,
                                config.lr, config.loss, dataset.y_min, dataset.y_max,
                                tape=tape_a)
            params_b = sgd_step(params_b, filt, dataset.features, sample_b,
                                config.lr, config.loss, dataset.y_min, dataset.y_max,
                                tape=tape_b)
        except TrainingError as e:
            raise TrainingError(f"twin step {t}: {e}") from e
        if config.projection_cap is not None:
            params_a = project_params(params_a, config.projection_cap)
            params_b = project_params(params_b, config.projection_cap)

        hits.append(hit)
        per_block = [linalg.spectral_norm(wa - wb)
                     for wa, wb in zip(params_a.weights, params_b.weights)]
        per_block.append(float(np.linalg.norm(params_a.w - params_b.w)))
        delta_block_norms.append(tuple(per_block))
        delta_norms.append(float(sum(per_block)))
        block_norms_a.append(block_spectral_norms(params_a))
        block_norms_b.append(block_spectral_norms(params_b))
        if t % config.record_every == 0 or t == config.steps:
            snapshots_a.append(params_a)
            snapshots_b.append(params_b)
            recorded.append(t)

    measured_b = 0.0
    for norms in block_norms_a + block_norms_b:
        measured_b = max(measured_b, max(norms))
    return TwinTrace(
        config=config,
        replaced_index=replaced_index,
        replacement_sample=replacement,
        index_sequence=tuple(int(p) for p in draws),
        hits=tuple(hits),
        delta_norms=tuple(delta_norms),
        delta_block_norms=tuple(delta_block_norms),
        block_norms_a=tuple(block_norms_a),
        block_norms_b=tuple(block_norms_b),
        losses_a=tuple(losses_a),
        losses_b=tuple(losses_b),
        snapshots_a=tuple(snapshots_a),
        snapshots_b=tuple(snapshots_b),
        recorded_steps=tuple(recorded),
        measured_b=measured_b,
    )


def write_trace_csv(trace: TwinTrace, path) -> None:
    """Per-step CSV export with the stable column set."""
    b_running = max(max(trace.block_norms_a[0]), max(trace.block_norms_b[0]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(TRACE_CSV_HEADER + "\n")
        for t in range(1, trace.steps + 1):
            b_running = max(b_running, max(trace.block_norms_a[t]),
                            max(trace.block_norms_b[t]))
            fh.write(",".join([
                str(t),
                str(trace.index_sequence[t - 1]),
                "1" if trace.hits[t - 1] else "0",
                repr(trace.delta_norms[t]),
                repr(b_running),
                repr(trace.losses_a[t - 1]),
                repr(trace.losses_b[t - 1]),
            ]) + "\n")


def _ratio(measured: float, bound: float) -> float:
    if measured == 0.0:
        return 0.0
    if bound == 0.0:
        return float("inf")
    return measured / bound


@dataclass(frozen=True)
class TwinAuditReport:
    """Max slack ratio (measured / bound) per audited inequality."""

    ratios: dict
    constants: bnd.AssumptionConstants
    raw_loss_gap: float       # max per-node final loss gap as measured
    doubled_loss_gap: float   # the same gap doubled (removal-style accounting)
    notes: tuple = ()

    @property
    def max_ratio(self) -> float:
        return max(self.ratios.values()) if self.ratios else 0.0

    @property
    def passed(self) -> bool:
        return self.max_ratio <= 1.0

    def to_text(self) -> str:
        lines = [f"{name} {repr(val)}" for name, val in sorted(self.ratios.items())]
        lines.append(f"max_ratio {repr(self.max_ratio)}")
        lines.append(f"passed {int(self.passed)}")
        lines.append(f"raw_loss_gap {repr(self.raw_loss_gap)}")
        lines.append(f"doubled_loss_gap {repr(self.doubled_loss_gap)}")
        for note in self.notes:
            lines.append(f"note {note}")
        return "\n".join(lines) + "\n"


def trace_constants(trace: TwinTrace, filt, dataset: Dataset) -> bnd.AssumptionConstants:
    """Assumption constants measured from a completed trace."""
    act = get_activation(trace.config.activation)
    return bnd.constants_for(
        act, trace.config.loss, dataset.y_min, dataset.y_max,
        param_norm_cap=trace.measured_b,
        filter_norm=filter_norm(filt),
        feature_norm=dataset.c_x,
        depth=trace.config.depth,
        lr=trace.config.lr,
        steps=trace.steps,
        train_size=dataset.num_train,
    )


def audit_twin(trace: TwinTrace, filt, dataset: Dataset,
               constants: bnd.AssumptionConstants | None = None,
               audit_nodes=None) -> TwinAuditReport:
    """Check every closed-form inequality against the recorded twin pair.

    Requires a complete trace (record_every == 1). ``audit_nodes`` defaults
    to all test nodes; gradients are evaluated per node, so a subset can be
    passed to trade coverage for speed.
    """
    if trace.config.record_every != 1:
        raise DomainError("audit needs a complete trace recorded with record_every=1")
    if len(trace.recorded_steps) != trace.steps + 1:
        raise DomainError("incomplete trace: missing per-step snapshots")
    c = constants if constants is not None else trace_constants(trace, filt, dataset)
    act = get_activation(trace.config.activation)
    loss_def = get_loss(trace.config.loss)
    depth = trace.config.depth
    nodes = list(dataset.test_indices if audit_nodes is None else audit_nodes)
    if not nodes:
        raise DomainError("no nodes to audit")

    alpha_s, cg, cx = c.act_lipschitz, c.filter_norm, c.feature_norm
    b_cap = c.param_norm_cap
    kappa_base = (bnd.grad_variation_base_k0(c) if depth == 0
                  else bnd.grad_variation_base(c))
    rho = [bnd.grad_variation_extra(c, k) for k in range(1, depth + 1)]
    pred_coeff = bnd.prediction_gap_coefficient(c)
    loss_coeff = bnd.loss_gap_coefficient(c)
    cross_bound = 2.0 * loss_coeff

    layer_coeffs = [b_cap ** (k - 1) * alpha_s ** k * cg ** k * cx
                    for k in range(1, depth + 1)]

    ratios = {
        "layer_output_variation": 0.0,
        "prediction_variation": 0.0,
        "grad_variation_readout": 0.0,
        "grad_variation_hidden": 0.0,
        "cross_sample_grad_gap": 0.0,
        "final_loss_gap": 0.0,
        "drift_envelope": 0.0,
    }

    samples = dataset.train_samples()
    envelope = bnd.drift_envelope(c, trace.hits)
    for t in range(trace.steps + 1):
        pa, pb = trace.snapshots_a[t], trace.snapshots_b[t]
        dtheta = trace.delta_norms[t]
        dblocks = trace.delta_block_norms[t]
        tape_a = forward(pa, filt, dataset.features)
        tape_b = forward(pb, filt, dataset.features)

        # hidden-layer output variation against the cumulative weight gap
        for k in range(1, depth + 1):
            dx = linalg.frobenius_norm(tape_a.layer_outputs[k] - tape_b.layer_outputs[k])
            bound = layer_coeffs[k - 1] * sum(dblocks[:k])
            ratios["layer_output_variation"] = max(
                ratios["layer_output_variation"], _ratio(dx, bound))

        # per-node prediction variation
        dpred = np.abs(tape_a.predictions[nodes] - tape_b.predictions[nodes])
        ratios["prediction_variation"] = max(
            ratios["prediction_variation"], _ratio(float(dpred.max()), pred_coeff * dtheta))

        # drift envelope against the measured parameter gap
        ratios["drift_envelope"] = max(ratios["drift_envelope"],
                                       _ratio(dtheta, envelope[t]))

        # gradient variation, same sample under both parameter sets
        for node in nodes:
            sample = (node, float(dataset.labels[node]))
            ga = loss_gradients(pa, filt, dataset.features, sample, trace.config.loss,
                                dataset.y_min, dataset.y_max, tape=tape_a)
            gb = loss_gradients(pb, filt, dataset.features, sample, trace.config.loss,
                                dataset.y_min, dataset.y_max, tape=tape_b)
            d_read = float(np.linalg.norm(ga.grad_w - gb.grad_w))
            ratios["grad_variation_readout"] = max(
                ratios["grad_variation_readout"], _ratio(d_read, kappa_base * dtheta))
            ratios["cross_sample_grad_gap"] = max(
                ratios["cross_sample_grad_gap"], _ratio(d_read, cross_bound))
            for k in range(depth):
                d_hid = linalg.frobenius_norm(ga.grad_weights[k] - gb.grad_weights[k])
                ratios["grad_variation_hidden"] = max(
                    ratios["grad_variation_hidden"],
                    _ratio(d_hid, (kappa_base + rho[k]) * dtheta))
                ratios["cross_sample_grad_gap"] = max(
                    ratios["cross_sample_grad_gap"], _ratio(d_hid, cross_bound))

        # gradient gap across the two realized samples of the next step
        if t < trace.steps:
            pos = trace.index_sequence[t]
            sample_a = samples[pos]
            sample_b = trace.replacement_sample if trace.hits[t] else sample_a
            ga = loss_gradients(pa, filt, dataset.features, sample_a, trace.config.loss,
                                dataset.y_min, dataset.y_max, tape=tape_a)
            gb = loss_gradients(pb, filt, dataset.features, sample_b, trace.config.loss,
                                dataset.y_min, dataset.y_max, tape=tape_b)
            for da, db in zip(ga.blocks(), gb.blocks()):
                gap = float(np.linalg.norm((da - db).ravel()))
                ratios["cross_sample_grad_gap"] = max(
                    ratios["cross_sample_grad_gap"], _ratio(gap, cross_bound))

    # final per-node loss gap against the drift coefficient
    tape_a = forward(trace.final_a, filt, dataset.features)
    tape_b = forward(trace.final_b, filt, dataset.features)
    label_arr = dataset.labels[nodes]
    gaps = np.abs(loss_def.value(tape_a.predictions[nodes], label_arr)
                  - loss_def.value(tape_b.predictions[nodes], label_arr))
    raw_gap = float(gaps.max())
    ratios["final_loss_gap"] = _ratio(raw_gap, loss_coeff * trace.delta_norms[-1])

    notes = []
    if depth == 0:
        notes.append("depth=0: base gradient-variation coefficient uses the "
                     "single-layer specialization")
    return TwinAuditReport(ratios=ratios, constants=c, raw_loss_gap=raw_gap,
                           doubled_loss_gap=2.0 * raw_gap, notes=tuple(notes))
