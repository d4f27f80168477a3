"""Generalization-gap estimation and trend sweeps over filters, depth and width.

A sweep is the Cartesian product of filter kinds, hidden-layer counts,
widths and seeds. Each cell generates (or loads) its dataset, trains one
model with single-sample SGD, measures the empirical/test risks and
evaluates every theoretical bound from the measured constants. For CSBM
sweeps the dataset depends only on the seed axis, so cells that differ in
filter, depth or width are paired on identical data.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, replace

import numpy as np

from . import bounds as bnd
from .activations import get_activation
from .data import CsbmParams, Dataset, gen_csbm, load_dataset
from .errors import DomainError, GcnBoundsError
from .filters import build_filter, filter_norm
from .losses import get_loss
from .model import ModelParams, forward
from .training import TrainConfig, train

__all__ = ["SweepConfig", "GapRecord", "estimate_gap", "run_sweep",
           "write_sweep_csv", "SWEEP_CSV_HEADER", "DEFAULT_PROFILE"]

SWEEP_CSV_HEADER = "filter,K,d,seed,R_emp,R_test,gap,C_g,B,C_X,kappa1,kappa2,mu_m,gap_bound,status"

#: desk-scale CSBM profile used by the trend experiments
DEFAULT_PROFILE = CsbmParams(num_nodes=300, p_in=0.1, p_out=0.02, feature_dim=16,
                             mean_separation=1.0, noise_scale=0.5, train_fraction=0.1)


def estimate_gap(params: ModelParams, filt, dataset: Dataset, loss: str):
    """(empirical risk, test risk, |difference|) of a trained model."""
    if not dataset.train_indices or not dataset.test_indices:
        raise DomainError("gap estimation needs non-empty train and test sets")
    loss_def = get_loss(loss)
    preds = forward(params, filt, dataset.features).predictions
    tr = list(dataset.train_indices)
    te = list(dataset.test_indices)
    r_emp = float(np.mean(loss_def.value(preds[tr], dataset.labels[tr])))
    r_test = float(np.mean(loss_def.value(preds[te], dataset.labels[te])))
    return r_emp, r_test, abs(r_test - r_emp)


@dataclass(frozen=True)
class SweepConfig:
    """Axes and base configuration of one sweep."""

    train: TrainConfig = TrainConfig()
    csbm: CsbmParams | None = DEFAULT_PROFILE
    dataset_paths: tuple | None = None  # (edges, features, labels, split)
    filter_kinds: tuple = ("sym_selfloop",)
    depths: tuple = (1,)
    widths: tuple = (16,)
    seeds: tuple = (0,)
    delta: float = 0.1

    def __post_init__(self):
        if not self.filter_kinds or not self.depths or not self.widths or not self.seeds:
            raise DomainError("every sweep axis must be non-empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise DomainError("sweep seeds must be distinct")
        if (self.csbm is None) == (self.dataset_paths is None):
            raise DomainError("provide exactly one of csbm params or dataset paths")
        if not (0.0 < self.delta < 1.0):
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")

    def cells(self) -> tuple:
        return tuple((f, k, d, s)
                     for f in self.filter_kinds
                     for k in self.depths
                     for d in self.widths
                     for s in self.seeds)


@dataclass(frozen=True)
class GapRecord:
    """One sweep cell: measured risks plus every theoretical quantity."""

    filter_kind: str
    depth: int
    width: int
    seed: int
    status: str = "ok"
    r_emp: float = float("nan")
    r_test: float = float("nan")
    gap: float = float("nan")
    c_g: float = float("nan")
    b: float = float("nan")
    c_x: float = float("nan")
    kappa1: bnd.BoundValue | None = None
    kappa2: bnd.BoundValue | None = None
    mu_m: bnd.BoundValue | None = None
    gap_bound: bnd.BoundValue | None = None
    drift_bound: bnd.BoundValue | None = None

    def csv_row(self) -> str:
        def num(x):
            return repr(x)

        def metric(bv):
            return bv.fmt() if bv is not None else "nan"

        return ",".join([
            self.filter_kind, str(self.depth), str(self.width), str(self.seed),
            num(self.r_emp), num(self.r_test), num(self.gap),
            num(self.c_g), num(self.b), num(self.c_x),
            metric(self.kappa1), metric(self.kappa2), metric(self.mu_m),
            metric(self.gap_bound), self.status,
        ])


def _cell_dataset(cfg: SweepConfig, seed: int) -> Dataset:
    if cfg.csbm is not None:
        return gen_csbm(cfg.csbm, seed)
    return load_dataset(*cfg.dataset_paths)


def run_cell(cfg: SweepConfig, cell) -> GapRecord:
    """Train and evaluate one (filter, depth, width, seed) cell."""
    kind, depth, width, seed = cell
    dataset = _cell_dataset(cfg, seed)
    filt = build_filter(dataset.graph, kind)
    tc = replace(cfg.train, seed=seed, hidden_widths=(width,) * depth)
    params, summary = train(dataset, filt, tc)
    r_emp, r_test, gap = estimate_gap(params, filt, dataset, tc.loss)
    act = get_activation(tc.activation)
    constants = bnd.constants_for(
        act, tc.loss, dataset.y_min, dataset.y_max,
        param_norm_cap=summary.measured_b,
        filter_norm=filter_norm(filt),
        feature_norm=dataset.c_x,
        depth=depth, lr=tc.lr, steps=tc.steps, train_size=dataset.num_train)
    report = bnd.bound_report(constants, cfg.delta,
                              provenance={"B": "measured", "C_g": "measured",
                                          "C_X": "measured"})
    return GapRecord(
        filter_kind=kind, depth=depth, width=width, seed=seed,
        r_emp=r_emp, r_test=r_test, gap=gap,
        c_g=filter_norm(filt), b=summary.measured_b, c_x=dataset.c_x,
        kappa1=report.kappa_base, kappa2=report.kappa_extra_sum,
        mu_m=report.mu_m, gap_bound=report.gap_bound,
        drift_bound=report.drift_bound,
    )


def run_sweep(cfg: SweepConfig, jobs: int = 1) -> list:
    """All cells in deterministic coordinate order.

    Cell failures are recorded in the ``status`` column and the sweep
    continues; a sweep where every cell failed raises.
    """
    cells = cfg.cells()

    def safe(cell):
        try:
            return run_cell(cfg, cell)
        except GcnBoundsError as e:
            kind, depth, width, seed = cell
            return GapRecord(filter_kind=kind, depth=depth, width=width, seed=seed,
                             status=f"error: {e}")

    if jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(safe, cells))
    else:
        records = [safe(c) for c in cells]
    if all(r.status != "ok" for r in records):
        raise DomainError(f"sweep failed in every cell; first error: {records[0].status}")
    return records


def write_sweep_csv(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(SWEEP_CSV_HEADER + "\n")
        for rec in records:
            fh.write(rec.csv_row() + "\n")
