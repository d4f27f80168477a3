"""Closed-form stability and generalization bounds.

Everything here is an exact finite formula in the assumption constants:
the activation moduli (alpha_s, nu_s), the loss moduli and ceiling
(alpha_l, nu_l, M), the parameter-norm cap B, the filter norm C_g, the
feature norm C_X, the hidden-layer count K, the learning rate eta, the
iteration count T and the training-set size m.

Writing q = B * alpha_s * C_g for the per-layer gain:

* gradient-variation base coefficient (readout block; K >= 1)
      (nu_l alpha_s^2 + alpha_l nu_s) q^{2K} C_g^2 C_X^2
          + alpha_l q^{K-1} alpha_s^2 C_g^2 C_X
  For K = 0 the hidden-output variation term vanishes identically (the
  input features are shared), leaving the documented single-layer
  specialization (nu_l alpha_s^2 + alpha_l nu_s) C_g^2 C_X^2.
* per-hidden-block extra coefficient (1 <= k <= K)
      nu_s q^{K+k-1} C_g^2 C_X^2 sum_{j=0}^{K-k} q^j
  whose sum over k equals nu_s q^K C_g^2 C_X^2 sum_{j=0}^{K-1} (j+1) q^j.
* per-step growth ratio of the coupled-run parameter gap
      r = 1 + (K+1) eta kappa_base + eta kappa_extra_sum
* uniform-stability bound
      mu_m <= (C / m) sum_{t=1}^{T} r^{t-1},
      C = (K+1) eta alpha_l^2 q^{2K} alpha_s^2 C_g^2 C_X^2
* generalization-gap bound at confidence delta
      2 mu_m + (4 m mu_m + M) sqrt(log(1/delta) / (2m))
* expected parameter-drift bound after T steps
      (2 (K+1) eta alpha_l B^K alpha_s^{K+1} C_g^{K+1} C_X / m)
          * sum_{t=1}^{T} r^{t-1}

Quantities such as C_g^{2K+2} explode for unnormalized filters; every
potentially huge metric is therefore carried as a (value, log10) pair and
reports print the log-scale magnitude instead of silently saturating.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DomainError
from .losses import get_loss

__all__ = [
    "AssumptionConstants", "BoundValue", "BoundReport",
    "grad_variation_base", "grad_variation_base_k0", "grad_variation_extra",
    "grad_variation_extra_sum", "step_growth_rate", "geometric_sum",
    "stability_bound", "generalization_gap_bound", "param_drift_bound",
    "prediction_gap_coefficient", "loss_gap_coefficient", "drift_envelope",
    "width_norm_cap", "loss_constants", "bound_report",
]

_LOG10_MAX = math.log10(float.fromhex("0x1.fffffffffffffp+1023"))


@dataclass(frozen=True)
class AssumptionConstants:
    """Every constant the bound formulas consume.

    ``act_lipschitz``/``act_smoothness`` describe the activation,
    ``loss_lipschitz``/``loss_smoothness``/``loss_sup`` the loss on the
    configured label box, ``param_norm_cap`` is B, ``filter_norm`` C_g,
    ``feature_norm`` C_X, ``depth`` K, ``lr`` eta, ``steps`` T and
    ``train_size`` m.
    """

    act_lipschitz: float
    act_smoothness: float
    loss_lipschitz: float
    loss_smoothness: float
    loss_sup: float
    param_norm_cap: float
    filter_norm: float
    feature_norm: float
    depth: int
    lr: float
    steps: int
    train_size: int

    def __post_init__(self):
        positive = {
            "act_lipschitz": self.act_lipschitz,
            "act_smoothness": self.act_smoothness,
            "loss_lipschitz": self.loss_lipschitz,
            "loss_smoothness": self.loss_smoothness,
            "loss_sup": self.loss_sup,
            "filter_norm": self.filter_norm,
            "feature_norm": self.feature_norm,
        }
        for name, value in positive.items():
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be positive and finite, got {value}")
        if not (self.param_norm_cap >= 0 and math.isfinite(self.param_norm_cap)):
            raise DomainError(f"param_norm_cap must be >= 0, got {self.param_norm_cap}")
        if self.depth < 0:
            raise DomainError(f"depth must be >= 0, got {self.depth}")
        if not (self.lr >= 0 and math.isfinite(self.lr)):
            raise DomainError(f"lr must be >= 0, got {self.lr}")
        if self.steps < 0:
            raise DomainError(f"steps must be >= 0, got {self.steps}")
        if self.train_size < 1:
            raise DomainError(f"train_size must be >= 1, got {self.train_size}")

    @property
    def layer_gain(self) -> float:
        """q = B * alpha_s * C_g, the per-layer amplification factor."""
        return self.param_norm_cap * self.act_lipschitz * self.filter_norm


def constants_for(activation, loss: str, y_min: float, y_max: float, *,
                  param_norm_cap: float, filter_norm: float, feature_norm: float,
                  depth: int, lr: float, steps: int, train_size: int) -> AssumptionConstants:
    """Assemble constants from an activation object and a registered loss."""
    lc = loss_constants(loss, y_min, y_max)
    return AssumptionConstants(
        act_lipschitz=activation.lipschitz,
        act_smoothness=activation.smoothness,
        loss_lipschitz=lc.lipschitz,
        loss_smoothness=lc.smoothness,
        loss_sup=lc.sup,
        param_norm_cap=param_norm_cap,
        filter_norm=filter_norm,
        feature_norm=feature_norm,
        depth=depth,
        lr=lr,
        steps=steps,
        train_size=train_size,
    )


def loss_constants(kind: str, y_min: float, y_max: float):
    """(Lipschitz, smoothness, sup) of the registered loss on the box.

    Tightness is verified numerically against a grid supremum in the test
    suite; the returned values always upper-bound the true moduli.
    """
    return get_loss(kind).constants(y_min, y_max)


# log-scale helpers -----------------------------------------------------------

def _log10(x: float) -> float:
    return math.log10(x) if x > 0 else -math.inf


def _log10_sum(terms) -> float:
    """log10 of a sum of non-negative terms given their log10 values."""
    terms = [t for t in terms if t != -math.inf]
    if not terms:
        return -math.inf
    top = max(terms)
    return top + math.log10(sum(10.0 ** (t - top) for t in terms))


def _from_log10(lg: float) -> float:
    if lg == -math.inf:
        return 0.0
    if lg > _LOG10_MAX:
        return math.inf
    return 10.0 ** lg


@dataclass(frozen=True)
class BoundValue:
    """A non-negative metric carried as (linear value, log10).

    ``value`` is math.inf when the true quantity exceeds the double range;
    ``log10`` stays finite so reports can show the magnitude faithfully.
    """

    value: float
    log10: float

    @property
    def overflow(self) -> bool:
        return math.isinf(self.value) and math.isfinite(self.log10)

    def fmt(self) -> str:
        """Linear repr when representable, mantissa/exponent text otherwise."""
        if not self.overflow:
            return repr(self.value)
        exponent = math.floor(self.log10)
        mantissa = 10.0 ** (self.log10 - exponent)
        return f"{mantissa:.6f}e+{exponent:d}"

    @staticmethod
    def of(value: float) -> "BoundValue":
        return BoundValue(value=value, log10=_log10(value))


# coefficient formulas ---------------------------------------------------------

def grad_variation_base(c: AssumptionConstants) -> float:
    """Base coefficient bounding the same-sample loss-gradient variation per
    unit of parameter perturbation (readout block). Needs K >= 1."""
    if c.depth < 1:
        raise DomainError(
            "the base gradient-variation coefficient is defined for depth >= 1; "
            "use grad_variation_base_k0 for the single-readout-layer case")
    q = c.layer_gain
    first = ((c.loss_smoothness * c.act_lipschitz ** 2
              + c.loss_lipschitz * c.act_smoothness)
             * q ** (2 * c.depth) * c.filter_norm ** 2 * c.feature_norm ** 2)
    second = (c.loss_lipschitz * q ** (c.depth - 1)
              * c.act_lipschitz ** 2 * c.filter_norm ** 2 * c.feature_norm)
    return first + second


def grad_variation_base_k0(c: AssumptionConstants) -> float:
    """Single-layer (K = 0) specialization of the base coefficient.

    With no hidden layers both runs see the same layer input, so the
    hidden-output variation term drops and only
    (nu_l alpha_s^2 + alpha_l nu_s) C_g^2 C_X^2 remains.
    """
    return ((c.loss_smoothness * c.act_lipschitz ** 2
             + c.loss_lipschitz * c.act_smoothness)
            * c.filter_norm ** 2 * c.feature_norm ** 2)


def _grad_variation_base_auto(c: AssumptionConstants) -> float:
    return grad_variation_base_k0(c) if c.depth == 0 else grad_variation_base(c)


def grad_variation_extra(c: AssumptionConstants, k: int) -> float:
    """Extra gradient-variation coefficient for hidden block k (1 <= k <= K)."""
    if not (1 <= k <= c.depth):
        raise DomainError(f"hidden block index {k} out of range 1..{c.depth}")
    q = c.layer_gain
    tail = sum(q ** j for j in range(c.depth - k + 1))
    return (c.act_smoothness * q ** (c.depth + k - 1)
            * c.filter_norm ** 2 * c.feature_norm ** 2 * tail)


def grad_variation_extra_sum(c: AssumptionConstants) -> float:
    """Sum over hidden blocks of the extra coefficients; 0 when K = 0."""
    if c.depth == 0:
        return 0.0
    q = c.layer_gain
    tail = sum((j + 1) * q ** j for j in range(c.depth))
    return (c.act_smoothness * q ** c.depth
            * c.filter_norm ** 2 * c.feature_norm ** 2 * tail)


def step_growth_rate(c: AssumptionConstants) -> float:
    """x such that the coupled-run gap contracts as gap_t <= (1+x) gap_{t-1}
    on steps where both runs draw the same sample."""
    return ((c.depth + 1) * c.lr * _grad_variation_base_auto(c)
            + c.lr * grad_variation_extra_sum(c))


def geometric_sum(x: float, steps: int) -> float:
    """sum_{t=1}^{steps} (1+x)^{t-1}, computed without cancellation.

    Uses expm1/log1p so the closed form stays accurate when x is tiny;
    returns steps exactly at x = 0 and inf on overflow.
    """
    if steps <= 0:
        return 0.0
    if x == 0.0:
        return float(steps)
    if math.isinf(x):
        return math.inf
    return math.expm1(steps * math.log1p(x)) / x


def prediction_gap_coefficient(c: AssumptionConstants) -> float:
    """Bound on |f(x|theta) - f(x|theta')| per unit of ||dtheta||_*."""
    return (c.param_norm_cap ** c.depth * c.act_lipschitz ** (c.depth + 1)
            * c.filter_norm ** (c.depth + 1) * c.feature_norm)


def loss_gap_coefficient(c: AssumptionConstants) -> float:
    """Bound on the per-sample loss gap per unit of ||dtheta||_*."""
    return c.loss_lipschitz * prediction_gap_coefficient(c)


def stability_bound(c: AssumptionConstants) -> float:
    """Uniform-stability level mu_m after T steps of single-sample SGD."""
    coeff = ((c.depth + 1) * c.lr * c.loss_lipschitz ** 2
             * c.layer_gain ** (2 * c.depth)
             * c.act_lipschitz ** 2 * c.filter_norm ** 2 * c.feature_norm ** 2)
    return coeff / c.train_size * geometric_sum(step_growth_rate(c), c.steps)


def generalization_gap_bound(mu_m: float, loss_sup: float, train_size: int,
                             delta: float) -> float:
    """High-probability generalization-gap bound at confidence 1 - delta."""
    if not (0.0 < delta < 1.0):
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if train_size < 1:
        raise DomainError(f"train_size must be >= 1, got {train_size}")
    if mu_m < 0:
        raise DomainError(f"mu_m must be >= 0, got {mu_m}")
    if loss_sup <= 0:
        raise DomainError(f"loss_sup must be positive, got {loss_sup}")
    tail = math.sqrt(math.log(1.0 / delta) / (2.0 * train_size))
    return 2.0 * mu_m + (4.0 * train_size * mu_m + loss_sup) * tail


def param_drift_bound(c: AssumptionConstants) -> float:
    """Bound on the expected coupled-run parameter gap ||dtheta_T||_*."""
    coeff = 2.0 * (c.depth + 1) * c.lr * loss_gap_coefficient(c) / c.train_size
    return coeff * geometric_sum(step_growth_rate(c), c.steps)


def drift_envelope(c: AssumptionConstants, hit_schedule) -> list:
    """Per-trajectory drift bound b_0..b_T for a realized hit schedule.

    b_0 = 0; a step that misses the replaced index multiplies by the growth
    ratio 1 + x; a step that hits adds the sample-swap jump
    2 (K+1) eta * loss_gap_coefficient. The result dominates the measured
    ||dtheta_t||_* of any coupled pair consistent with the schedule.
    """
    ratio = 1.0 + step_growth_rate(c)
    jump = 2.0 * (c.depth + 1) * c.lr * loss_gap_coefficient(c)
    out = [0.0]
    b = 0.0
    for hit in hit_schedule:
        b = b + jump if hit else b * ratio
        out.append(b)
    return out


def width_norm_cap(xi: float, widths) -> float:
    """Parameter-norm cap implied by entrywise-bounded blocks.

    If every entry of a (d_in, d_out) block is at most xi in magnitude,
    its spectral norm is at most xi * sqrt(d_in * d_out); the cap is the
    max over all blocks including the (d_K, 1) readout.
    """
    if xi <= 0:
        raise DomainError(f"xi must be positive, got {xi}")
    widths = tuple(int(d) for d in widths)
    if len(widths) < 1 or any(d < 1 for d in widths):
        raise DomainError(f"widths must be positive, got {widths}")
    caps = [xi * math.sqrt(d_in * d_out) for d_in, d_out in zip(widths[:-1], widths[1:])]
    caps.append(xi * math.sqrt(widths[-1]))
    return max(caps)


# log-scale companions --------------------------------------------------------

def _log10_powsum_weighted(log10_q: float, depth: int) -> float:
    """log10 of sum_{j=0}^{depth-1} (j+1) q^j."""
    return _log10_sum(_log10(j + 1.0) + j * log10_q for j in range(depth))


def grad_variation_base_log10(c: AssumptionConstants) -> float:
    if c.depth == 0:
        return _log10(grad_variation_base_k0(c))
    lq = _log10(c.layer_gain)
    l_first = (_log10(c.loss_smoothness * c.act_lipschitz ** 2
                      + c.loss_lipschitz * c.act_smoothness)
               + 2 * c.depth * lq + 2 * _log10(c.filter_norm) + 2 * _log10(c.feature_norm))
    l_second = (_log10(c.loss_lipschitz) + (c.depth - 1) * lq
                + 2 * _log10(c.act_lipschitz) + 2 * _log10(c.filter_norm)
                + _log10(c.feature_norm))
    return _log10_sum([l_first, l_second])


def grad_variation_extra_sum_log10(c: AssumptionConstants) -> float:
    if c.depth == 0:
        return -math.inf
    lq = _log10(c.layer_gain)
    return (_log10(c.act_smoothness) + c.depth * lq + 2 * _log10(c.filter_norm)
            + 2 * _log10(c.feature_norm) + _log10_powsum_weighted(lq, c.depth))


def step_growth_rate_log10(c: AssumptionConstants) -> float:
    return _log10_sum([
        _log10((c.depth + 1) * c.lr) + grad_variation_base_log10(c),
        _log10(c.lr) + grad_variation_extra_sum_log10(c),
    ])


def geometric_sum_log10(log10_x: float, steps: int) -> float:
    """log10 of sum_{t=1}^{steps} (1+x)^{t-1} from log10(x)."""
    if steps <= 0:
        return -math.inf
    x = _from_log10(log10_x)
    if math.isfinite(x):
        lin = geometric_sum(x, steps)
        if math.isfinite(lin):
            return _log10(lin)
        # overflow only through (1+x)^steps; fall through to log form
        log1p_x = math.log1p(x)
        return steps * log1p_x / math.log(10.0) - _log10(x)
    # x itself beyond double range: sum ~ x^{steps-1}
    return (steps - 1) * log10_x


def stability_bound_log10(c: AssumptionConstants) -> float:
    l_coeff = (_log10((c.depth + 1) * c.lr) + 2 * _log10(c.loss_lipschitz)
               + 2 * c.depth * _log10(c.layer_gain) + 2 * _log10(c.act_lipschitz)
               + 2 * _log10(c.filter_norm) + 2 * _log10(c.feature_norm))
    return (l_coeff - _log10(float(c.train_size))
            + geometric_sum_log10(step_growth_rate_log10(c), c.steps))


def param_drift_bound_log10(c: AssumptionConstants) -> float:
    l_coeff = (_log10(2.0 * (c.depth + 1) * c.lr) + _log10(loss_gap_coefficient(c))
               - _log10(float(c.train_size)))
    return l_coeff + geometric_sum_log10(step_growth_rate_log10(c), c.steps)


def _bound_value(linear_fn, log10_fn, c) -> BoundValue:
    lin = linear_fn(c)
    if math.isfinite(lin):
        return BoundValue(value=lin, log10=_log10(lin))
    return BoundValue(value=math.inf, log10=log10_fn(c))


# full report -----------------------------------------------------------------

@dataclass(frozen=True)
class BoundReport:
    """Every evaluated bound together with the constants that produced it.

    ``provenance`` records where B / C_g / C_X came from ("measured",
    "width-derived" or "user"); ``k0_specialized`` flags reports whose
    base coefficient used the single-layer specialization.
    """

    constants: AssumptionConstants
    delta: float
    kappa_base: BoundValue
    kappa_extra: tuple
    kappa_extra_sum: BoundValue
    mu_m: BoundValue
    gap_bound: BoundValue
    drift_bound: BoundValue
    loss_gap_coeff: BoundValue
    k0_specialized: bool
    provenance: dict = field(default_factory=dict)

    # serialized field names follow the results-table conventions documented
    # in the README (kappa1, kappa2, rho_k, mu_m, gap_bound, drift_bound)
    def as_dict(self) -> dict:
        c = self.constants
        out = {
            "alpha_sigma": c.act_lipschitz,
            "nu_sigma": c.act_smoothness,
            "alpha_ell": c.loss_lipschitz,
            "nu_ell": c.loss_smoothness,
            "M": c.loss_sup,
            "B": c.param_norm_cap,
            "C_g": c.filter_norm,
            "C_X": c.feature_norm,
            "K": c.depth,
            "eta": c.lr,
            "T": c.steps,
            "m": c.train_size,
            "delta": self.delta,
            "k0_specialized": self.k0_specialized,
        }
        for name, src in sorted(self.provenance.items()):
            out[f"provenance_{name}"] = src
        metrics = {
            "kappa1": self.kappa_base,
            "kappa2": self.kappa_extra_sum,
            "mu_m": self.mu_m,
            "gap_bound": self.gap_bound,
            "drift_bound": self.drift_bound,
            "loss_gap_coeff": self.loss_gap_coeff,
        }
        for k, rho in enumerate(self.kappa_extra, start=1):
            metrics[f"rho_{k}"] = rho
        for name, bv in metrics.items():
            out[name] = bv.fmt()
            if bv.overflow:
                out[f"{name}_log10"] = bv.log10
                out[f"{name}_overflow"] = True
        return out

    def to_text(self) -> str:
        lines = [f"{k} {v}" for k, v in self.as_dict().items()]
        return "\n".join(lines) + "\n"


def bound_report(c: AssumptionConstants, delta: float,
                 provenance: dict | None = None) -> BoundReport:
    """Evaluate every bound for the given constants at confidence delta."""
    if not (0.0 < delta < 1.0):
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    kappa_base = _bound_value(_grad_variation_base_auto, grad_variation_base_log10, c)
    rho = tuple(BoundValue.of(grad_variation_extra(c, k)) for k in range(1, c.depth + 1))
    kappa_extra_sum = _bound_value(grad_variation_extra_sum,
                                   grad_variation_extra_sum_log10, c)
    mu = _bound_value(stability_bound, stability_bound_log10, c)
    if math.isfinite(mu.value):
        gap = BoundValue.of(generalization_gap_bound(mu.value, c.loss_sup,
                                                     c.train_size, delta))
    else:
        # gap ~ mu_m * (2 + 4 m sqrt(log(1/delta) / 2m)); the M term is negligible
        tail = math.sqrt(math.log(1.0 / delta) / (2.0 * c.train_size))
        gap = BoundValue(value=math.inf,
                         log10=mu.log10 + _log10(2.0 + 4.0 * c.train_size * tail))
    drift = _bound_value(param_drift_bound, param_drift_bound_log10, c)
    return BoundReport(
        constants=c,
        delta=delta,
        kappa_base=kappa_base,
        kappa_extra=rho,
        kappa_extra_sum=kappa_extra_sum,
        mu_m=mu,
        gap_bound=gap,
        drift_bound=drift,
        loss_gap_coeff=BoundValue.of(loss_gap_coefficient(c)),
        k0_specialized=(c.depth == 0),
        provenance=dict(provenance or {}),
    )
