"""Independent exact-arithmetic evaluation of every closed-form bound.

These mirrors are written against rational arithmetic (fractions.Fraction)
and mpmath, deliberately not sharing any code with the package, so the
float implementations can be checked to tight relative tolerances.
"""

from fractions import Fraction

import mpmath as mp


def q_gain(c) -> Fraction:
    return c["B"] * c["alpha_s"] * c["C_g"]


def kappa_base_exact(c) -> Fraction:
    q = q_gain(c)
    K = c["K"]
    if K == 0:
        return (c["nu_l"] * c["alpha_s"] ** 2 + c["alpha_l"] * c["nu_s"]) \
            * c["C_g"] ** 2 * c["C_X"] ** 2
    first = (c["nu_l"] * c["alpha_s"] ** 2 + c["alpha_l"] * c["nu_s"]) \
        * q ** (2 * K) * c["C_g"] ** 2 * c["C_X"] ** 2
    second = c["alpha_l"] * q ** (K - 1) * c["alpha_s"] ** 2 * c["C_g"] ** 2 * c["C_X"]
    return first + second


def rho_exact(c, k: int) -> Fraction:
    q = q_gain(c)
    K = c["K"]
    tail = sum((q ** j for j in range(K - k + 1)), Fraction(0))
    return c["nu_s"] * q ** (K + k - 1) * c["C_g"] ** 2 * c["C_X"] ** 2 * tail


def kappa_extra_sum_exact(c) -> Fraction:
    q = q_gain(c)
    K = c["K"]
    if K == 0:
        return Fraction(0)
    tail = sum(((j + 1) * q ** j for j in range(K)), Fraction(0))
    return c["nu_s"] * q ** K * c["C_g"] ** 2 * c["C_X"] ** 2 * tail


def growth_x_exact(c) -> Fraction:
    return (c["K"] + 1) * c["eta"] * kappa_base_exact(c) \
        + c["eta"] * kappa_extra_sum_exact(c)


def geom_sum_exact(x: Fraction, steps: int) -> Fraction:
    r = 1 + x
    return sum((r ** (t - 1) for t in range(1, steps + 1)), Fraction(0))


def stability_exact(c) -> Fraction:
    q = q_gain(c)
    coeff = (c["K"] + 1) * c["eta"] * c["alpha_l"] ** 2 * q ** (2 * c["K"]) \
        * c["alpha_s"] ** 2 * c["C_g"] ** 2 * c["C_X"] ** 2
    return coeff / c["m"] * geom_sum_exact(growth_x_exact(c), c["T"])


def loss_gap_coeff_exact(c) -> Fraction:
    return c["alpha_l"] * c["B"] ** c["K"] * c["alpha_s"] ** (c["K"] + 1) \
        * c["C_g"] ** (c["K"] + 1) * c["C_X"]


def drift_exact(c) -> Fraction:
    coeff = 2 * (c["K"] + 1) * c["eta"] * loss_gap_coeff_exact(c) / c["m"]
    return coeff * geom_sum_exact(growth_x_exact(c), c["T"])


def gap_bound_mp(mu_m, sup_loss, m, delta, dps: int = 50):
    """High-precision evaluation of the generalization-gap bound."""
    with mp.workdps(dps):
        mu = mp.mpf(repr(float(mu_m)))
        tail = mp.sqrt(mp.log(1 / mp.mpf(repr(float(delta)))) / (2 * m))
        return float(2 * mu + (4 * m * mu + mp.mpf(repr(float(sup_loss)))) * tail)


def envelope_exact(c, hits) -> list:
    ratio = 1 + growth_x_exact(c)
    jump = 2 * (c["K"] + 1) * c["eta"] * loss_gap_coeff_exact(c)
    out = [Fraction(0)]
    b = Fraction(0)
    for hit in hits:
        b = b + jump if hit else b * ratio
        out.append(b)
    return out
