"""Activation registry with Lipschitz and smoothness constants.

Every registered activation satisfies sigma(0) = 0, |sigma(x) - sigma(y)|
<= lipschitz * |x - y| and |sigma'(x) - sigma'(y)| <= smoothness * |x - y|.
The constants feed the bound formulas, so they are kept tight:

* tanh: lipschitz = 1 (sup sech^2 = 1). The exact smoothness modulus is
  sup |tanh''| = 4 / (3 sqrt(3)) ~= 0.7698004 (maximize 2 t (1 - t^2) over
  t = tanh x in [0, 1]; the optimum is t = 1/sqrt(3)). Stored with a safety
  ceiling of 0.7699 so the registered constant is a valid upper bound.
* elu (alpha = 1): lipschitz = 1, smoothness = 1 (sigma'' = e^x on x < 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError

__all__ = ["Activation", "ACTIVATIONS", "get_activation", "register_activation",
           "TANH_SMOOTHNESS"]

TANH_SMOOTHNESS = 0.7699  # ceiling above 4/(3*sqrt(3))


@dataclass(frozen=True)
class Activation:
    name: str
    fn: Callable
    deriv: Callable
    lipschitz: float
    smoothness: float


def _tanh_deriv(x):
    t = np.tanh(x)
    return 1.0 - t * t


def _elu(x):
    x = np.asarray(x, dtype=np.float64)
    return np.where(x >= 0.0, x, np.expm1(np.minimum(x, 0.0)))


def _elu_deriv(x):
    x = np.asarray(x, dtype=np.float64)
    return np.where(x >= 0.0, 1.0, np.exp(np.minimum(x, 0.0)))


ACTIVATIONS: dict[str, Activation] = {}


def register_activation(act: Activation) -> None:
    ACTIVATIONS[act.name] = act


def get_activation(name: str) -> Activation:
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise DomainError(
            f"unknown activation {name!r}; registered: {sorted(ACTIVATIONS)}") from None


register_activation(Activation("tanh", np.tanh, _tanh_deriv, 1.0, TANH_SMOOTHNESS))
register_activation(Activation("elu", _elu, _elu_deriv, 1.0, 1.0))
