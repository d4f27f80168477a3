"""Loss registry: values, derivatives in the prediction, and the
(Lipschitz, smoothness, sup) constants on a label/prediction box.

Each loss maps a (prediction, label) pair from [y_min, y_max]^2 to a
non-negative value and is continuously differentiable in the prediction.
The constants returned by ``Loss.constants`` are upper bounds that are
tight on boxes containing 0 (the shipped default is [-1, 1]).

Registered kinds:

* ``squared``       (default): (yhat - y)^2
* ``smoothed_hinge``: margin loss on z = yhat * y, quadratically smoothed
  around the hinge point (0 for z >= 1, (1 - z)^2 / 2 for 0 <= z < 1,
  1/2 - z for z < 0)
* ``logistic``      : log(1 + exp(-yhat * y))

Cross-entropy over a softmax is deliberately absent: the model head is a
single real output and the bound formulas need a loss that is bounded and
smooth in that scalar on a bounded box.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError

__all__ = ["Loss", "LossConstants", "LOSSES", "get_loss", "register_loss"]


@dataclass(frozen=True)
class LossConstants:
    lipschitz: float   # sup |d loss / d yhat| on the box
    smoothness: float  # Lipschitz modulus of d loss / d yhat
    sup: float         # upper bound of the loss on the box


@dataclass(frozen=True)
class Loss:
    name: str
    value: Callable    # (yhat, y) -> loss, elementwise over arrays
    deriv: Callable    # (yhat, y) -> d loss / d yhat
    constants: Callable  # (y_min, y_max) -> LossConstants


def _check_box(y_min: float, y_max: float) -> None:
    if not (np.isfinite(y_min) and np.isfinite(y_max) and y_min < y_max):
        raise DomainError(f"invalid label box [{y_min}, {y_max}]")


# squared loss ---------------------------------------------------------------

def _sq_value(yhat, y):
    d = np.asarray(yhat, dtype=np.float64) - y
    return d * d


def _sq_deriv(yhat, y):
    return 2.0 * (np.asarray(yhat, dtype=np.float64) - y)


def _sq_constants(y_min: float, y_max: float) -> LossConstants:
    _check_box(y_min, y_max)
    width = y_max - y_min
    return LossConstants(lipschitz=2.0 * width, smoothness=2.0, sup=width * width)


# smoothed hinge -------------------------------------------------------------

def _hinge_z(z):
    z = np.asarray(z, dtype=np.float64)
    return np.where(z >= 1.0, 0.0,
                    np.where(z >= 0.0, 0.5 * (1.0 - z) ** 2, 0.5 - z))


def _hinge_gz(z):
    # d/dz of the piecewise loss; 1-Lipschitz, values in [-1, 0]
    z = np.asarray(z, dtype=np.float64)
    return np.where(z >= 1.0, 0.0, np.where(z >= 0.0, z - 1.0, -1.0))


def _smoothed_hinge_value(yhat, y):
    return _hinge_z(np.asarray(yhat, dtype=np.float64) * y)


def _smoothed_hinge_deriv(yhat, y):
    y = np.asarray(y, dtype=np.float64)
    return y * _hinge_gz(np.asarray(yhat, dtype=np.float64) * y)


def _z_min(y_min: float, y_max: float) -> float:
    # smallest product yhat * y over the box
    if y_min <= 0.0 <= y_max:
        return y_min * y_max
    return min(y_min * y_min, y_max * y_max)


def _max_abs_deriv_over_box(dz_abs: Callable, y_min: float, y_max: float) -> float:
    # For losses of z = yhat * y with |d loss/dz| non-increasing in z, the
    # supremum over yhat at fixed y sits at z = min(y_min * y, y_max * y);
    # the remaining 1-D maximum over y is taken on a fine grid with corner
    # points included.
    ys = np.linspace(y_min, y_max, 4097)
    z_lo = np.minimum(y_min * ys, y_max * ys)
    return float(np.max(np.abs(ys) * dz_abs(z_lo)))


def _smoothed_hinge_constants(y_min: float, y_max: float) -> LossConstants:
    _check_box(y_min, y_max)
    c = max(abs(y_min), abs(y_max))
    alpha = _max_abs_deriv_over_box(lambda z: np.abs(_hinge_gz(z)), y_min, y_max)
    return LossConstants(lipschitz=alpha, smoothness=c * c, sup=float(_hinge_z(_z_min(y_min, y_max))))


# logistic -------------------------------------------------------------------

def _logistic_value(yhat, y):
    z = np.asarray(yhat, dtype=np.float64) * y
    # log(1 + e^{-z}) computed without overflow for large |z|
    return np.logaddexp(0.0, -z)


def _sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _logistic_deriv(yhat, y):
    y = np.asarray(y, dtype=np.float64)
    z = np.asarray(yhat, dtype=np.float64) * y
    return -y * _sigmoid(-z)


def _logistic_constants(y_min: float, y_max: float) -> LossConstants:
    _check_box(y_min, y_max)
    c = max(abs(y_min), abs(y_max))
    alpha = _max_abs_deriv_over_box(lambda z: _sigmoid(-z), y_min, y_max)
    return LossConstants(lipschitz=alpha, smoothness=c * c / 4.0,
                         sup=float(np.logaddexp(0.0, -_z_min(y_min, y_max))))


LOSSES: dict[str, Loss] = {}


def register_loss(loss: Loss) -> None:
    LOSSES[loss.name] = loss


def get_loss(name: str) -> Loss:
    try:
        return LOSSES[name]
    except KeyError:
        raise DomainError(f"unknown loss {name!r}; registered: {sorted(LOSSES)}") from None


register_loss(Loss("squared", _sq_value, _sq_deriv, _sq_constants))
register_loss(Loss("smoothed_hinge", _smoothed_hinge_value, _smoothed_hinge_deriv,
                   _smoothed_hinge_constants))
register_loss(Loss("logistic", _logistic_value, _logistic_deriv, _logistic_constants))
