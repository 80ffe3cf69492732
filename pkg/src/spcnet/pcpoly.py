"""Series coefficients of the cross-receptive spectral response.

The response (1-lambda)^k * exp(t*lambda) expands as
sum_n C_n(k, t) * (-lambda)^n / n!, where the coefficients follow the
three-term recurrence

    C_0 = 1
    C_1 = k - t
    C_n = (k - n - t + 1) * C_{n-1} - (n - 1) * t * C_{n-2},   n >= 2.

The filter order k is a continuous real; t >= 0 (t = 0 is admitted as the
degenerate pure-low-pass case). The model is defined by the truncated
series at finite N, not by its analytic limit.
"""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PcCoefficients:
    order_k: float
    time_t: float
    truncation_n: int
    values: np.ndarray              # [C_0 .. C_N]
    dvalues_dk: np.ndarray | None = None  # [dC_0/dk .. dC_N/dk]


def pc_coefficients(k: float, t: float, n: int) -> PcCoefficients:
    """Coefficients C_0..C_n by one forward pass of the recurrence."""
    if n < 0:
        raise ValueError("truncation order must be >= 0")
    if t < 0:
        raise ValueError("t must be >= 0")
    values = np.empty(n + 1)
    values[0] = 1.0
    if n >= 1:
        values[1] = k - t
    for i in range(2, n + 1):
        values[i] = (k - i - t + 1.0) * values[i - 1] \
            - (i - 1.0) * t * values[i - 2]
    return PcCoefficients(float(k), float(t), int(n), values)


def pc_coefficients_grad_k(k: float, t: float, n: int) -> PcCoefficients:
    """Coefficients plus their derivative in the order parameter k.

    Differentiating the recurrence term by term:
    dC_0 = 0, dC_1 = 1,
    dC_n = C_{n-1} + (k - n - t + 1) dC_{n-1} - (n - 1) t dC_{n-2}.
    """
    coeffs = pc_coefficients(k, t, n)
    values = coeffs.values
    dvalues = np.empty(n + 1)
    dvalues[0] = 0.0
    if n >= 1:
        dvalues[1] = 1.0
    for i in range(2, n + 1):
        dvalues[i] = values[i - 1] \
            + (k - i - t + 1.0) * dvalues[i - 1] \
            - (i - 1.0) * t * dvalues[i - 2]
    return PcCoefficients(float(k), float(t), int(n), values, dvalues)


def frequency_response(coeffs: PcCoefficients, lam):
    """Truncated scalar response 1 + sum_n C_n (-lam)^n / n!.

    The leading 1 is the identity mapping. Accepts a scalar or an array
    of frequencies; the 1/n! factor is folded into the term recurrence so
    no factorial is ever materialized.
    """
    lam_arr = np.asarray(lam, dtype=np.float64)
    term = np.ones_like(lam_arr)
    acc = 1.0 + coeffs.values[0] * term
    for i in range(1, coeffs.truncation_n + 1):
        term = term * (-lam_arr) / i
        acc = acc + coeffs.values[i] * term
    if np.isscalar(lam) or np.ndim(lam) == 0:
        return float(acc)
    return acc
