"""gcnbounds: deep graph convolutional networks with exact hand-derived
backpropagation, coupled-SGD stability audits and closed-form
stability/generalization bounds, evaluated and stress-tested at desk scale."""

__version__ = "0.1.0"

from . import activations, bounds, data, experiments, filters, gradients
from . import graphs, linalg, losses, model, training
from .activations import Activation, get_activation, register_activation
from .bounds import (AssumptionConstants, BoundReport, BoundValue, bound_report,
                     drift_envelope, generalization_gap_bound, geometric_sum,
                     grad_variation_base, grad_variation_base_k0,
                     grad_variation_extra, grad_variation_extra_sum,
                     loss_constants, loss_gap_coefficient, param_drift_bound,
                     prediction_gap_coefficient, stability_bound,
                     step_growth_rate, width_norm_cap)
from .data import CsbmParams, Dataset, gen_csbm, load_dataset, split
from .experiments import (GapRecord, SweepConfig, estimate_gap, run_sweep,
                          write_sweep_csv)
from .filters import FILTER_KINDS, FilterMatrix, build_filter, filter_norm
from .gradcheck import run_gradcheck
from .gradients import (GradientSet, finite_diff_gradients, loss_gradients,
                        prediction_gradients)
from .graphs import Graph, load_edge_list, save_edge_list
from .linalg import frobenius_norm, hadamard, spectral_norm
from .losses import Loss, LossConstants, get_loss, register_loss
from .model import (ForwardTape, ModelParams, forward, init_params, load_params,
                    measured_B, param_norm_star, predict_node, save_params)
from .training import (TrainConfig, TrainSummary, TwinAuditReport, TwinTrace,
                       audit_twin, project_params, sgd_step, train, twin_train,
                       write_trace_csv)
