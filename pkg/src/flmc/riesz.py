"""Truncated fractional centered-difference operator and its coefficients.

The operator approximates the Riesz derivative of order gamma:

    D_{h,K}^gamma f(x) = h^(-gamma) * sum_{k=-K..K} g_{gamma,k} f(x - k*h)

with g_{gamma,k} = (-1)^k Gamma(gamma+1) / (Gamma(gamma/2-k+1) * Gamma(gamma/2+k+1)).

Coefficients are generated from g_0 by a two-term recurrence instead of the
raw Gamma formula: the raw form hits Gamma poles at gamma in {0, 2} (where
the true coefficients are exactly zero) and loses precision for large k.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gamma as _gamma_fn

import numpy as np

__all__ = [
    "RieszStencil",
    "coeff",
    "build_stencil",
    "truncated_centered_difference",
    "c_alpha",
    "NodeEvaluationError",
]


class NodeEvaluationError(ValueError):
    """A stencil node produced a non-finite function value."""

    def __init__(self, node: float, value: float):
        self.node = node
        self.value = value
        super().__init__(f"non-finite value {value!r} at stencil node x={node!r}")


def _check_gamma(gamma: float):
    if not (-1.0 < gamma <= 2.0):
        raise ValueError(f"gamma must be in (-1, 2], got {gamma}")


def _half_coeffs(gamma: float, K: int) -> np.ndarray:
    """g_{gamma,0..K} via the recurrence g_{k+1} = g_k*(k-gamma/2)/(k+1+gamma/2)."""
    g = np.empty(K + 1)
    g[0] = _gamma_fn(gamma + 1.0) / _gamma_fn(gamma / 2.0 + 1.0) ** 2
    for k in range(K):
        g[k + 1] = g[k] * (k - gamma / 2.0) / (k + 1.0 + gamma / 2.0)
    return g


def coeff(gamma: float, k: int) -> float:
    """Centered-difference coefficient g_{gamma,k} (symmetric in k)."""
    _check_gamma(gamma)
    return float(_half_coeffs(gamma, abs(int(k)))[-1])


@dataclass(frozen=True, eq=False)
class RieszStencil:
    """Precomputed half-stencil: coeffs[k] = g_{gamma,k} for k = 0..K."""

    gamma: float
    h: float
    K: int
    coeffs: np.ndarray = field(repr=False)


def build_stencil(gamma: float, h: float, K: int) -> RieszStencil:
    _check_gamma(gamma)
    if not h > 0.0:
        raise ValueError(f"h must be positive, got {h}")
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    return RieszStencil(gamma=gamma, h=h, K=int(K), coeffs=_half_coeffs(gamma, int(K)))


def truncated_centered_difference(stencil: RieszStencil, f, x: float) -> float:
    """Evaluate D_{h,K}^gamma f at x.

    f is called at the 2K+1 nodes x - k*h; any non-finite value raises
    NodeEvaluationError naming the node. The symmetric half-stencil is
    applied as g_0*f(x) + sum_k g_k*(f(x-kh) + f(x+kh)).
    """
    g = stencil.coeffs
    h = stencil.h
    acc = 0.0
    fx = float(f(x))
    if not np.isfinite(fx):
        raise NodeEvaluationError(x, fx)
    acc = g[0] * fx
    for k in range(1, stencil.K + 1):
        lo, hi = x - k * h, x + k * h
        flo, fhi = float(f(lo)), float(f(hi))
        if not np.isfinite(flo):
            raise NodeEvaluationError(lo, flo)
        if not np.isfinite(fhi):
            raise NodeEvaluationError(hi, fhi)
        acc += g[k] * (flo + fhi)
    return acc / h**stencil.gamma


def c_alpha(alpha: float) -> float:
    """Gradient weight of the simplified drift: Gamma(alpha-1)/Gamma(alpha/2)^2.

    Equals coeff(alpha-2, 0); 1 at alpha=2; strictly decreasing in alpha
    on (1, 2], so the gradient gets more weight as tails get heavier.
    """
    if not (1.0 < alpha <= 2.0):
        raise ValueError(f"alpha must be in (1, 2], got {alpha}")
    return _gamma_fn(alpha - 1.0) / _gamma_fn(alpha / 2.0) ** 2
