"""Drift evaluators for the Levy-driven Langevin dynamics.

Three variants. The full centered drift divides a truncated fractional
derivative of f(x) = -exp(-U(x)) U'(x) by exp(-U(x)); computed naively the
exponentials overflow, so everything runs in the factored form with the
largest exponent pulled out. The simplified drift is -c_alpha * grad U and
works in any dimension. The reference drift is the full drift at a large
truncation K_star, used as the stand-in for the untruncated operator.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .riesz import _half_coeffs, c_alpha
from .targets import Target

__all__ = [
    "DriftOverflowError",
    "UndefinedDiagnosticError",
    "Simplified",
    "FullCentered",
    "Reference",
    "full_drift",
    "full_drift_multi",
    "simplified_drift",
    "r_diagnostic",
    "kappa",
    "KappaResult",
]

log = logging.getLogger(__name__)

# exp() overflows just above this exponent
_EXP_MAX = 709.0


class DriftOverflowError(ArithmeticError):
    """The factored exponent exceeds the representable range at x."""

    def __init__(self, x, ell_star, axis=None):
        self.x = x
        self.ell_star = ell_star
        self.axis = axis
        where = f", axis {axis}" if axis is not None else ""
        super().__init__(
            f"drift overflow at x={x!r}{where}: exponent {ell_star!r}")


class UndefinedDiagnosticError(ValueError):
    """r is undefined where U'(x) = 0."""


@dataclass(frozen=True)
class Simplified:
    pass


@dataclass(frozen=True)
class FullCentered:
    h: float
    K: int

    def __post_init__(self):
        if not self.h > 0.0:
            raise ValueError(f"h must be positive, got {self.h}")
        if self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K}")


@dataclass(frozen=True)
class Reference:
    """Full centered drift at the reference truncation K_star."""

    h: float
    K_star: int

    def as_full(self) -> FullCentered:
        return FullCentered(self.h, self.K_star)


def _check_alpha(alpha: float) -> float:
    if not (1.0 < alpha <= 2.0):
        raise ValueError(f"alpha must lie in (1, 2], got {alpha}")
    return alpha - 2.0


def simplified_drift(target: Target, x, alpha: float):
    """-c_alpha * grad U(x); the only drift available for D > 1 at scale."""
    return -c_alpha(alpha) * target.gradient(x)


def _eval_nodes(fn, nodes: np.ndarray) -> np.ndarray:
    # vectorized call when the target supports it, per-node otherwise
    try:
        out = np.asarray(fn(nodes), dtype=float)
        if out.shape == nodes.shape:
            return out
    except Exception:
        pass
    return np.array([float(fn(v)) for v in nodes])


def _scaled_terms(u_of, du_of, x: float, h: float, K: int, gamma: float):
    """Signed stencil terms with the max exponent factored out.

    Returns (ell_star, terms) where terms[i] corresponds to node order
    k = 0, -1, +1, -2, +2, ... and the true drift is
    exp(ell_star) / h**gamma times the term sum.
    """
    g = _half_coeffs(gamma, K)
    u_x = float(u_of(x))
    ks = np.empty(2 * K + 1, dtype=int)
    ks[0] = 0
    ks[1::2] = -np.arange(1, K + 1)
    ks[2::2] = np.arange(1, K + 1)
    nodes = x - ks * h
    ells = u_x - _eval_nodes(u_of, nodes)
    grads = _eval_nodes(du_of, nodes)
    ell_star = float(np.max(ells))
    if ell_star > _EXP_MAX:
        raise DriftOverflowError(x, ell_star)
    terms = g[np.abs(ks)] * (-grads) * np.exp(ells - ell_star)
    return ell_star, terms


def _ascending_sum(terms: np.ndarray) -> float:
    # sequential left-to-right accumulation in ascending magnitude; ties keep
    # node order, so symmetric stencils cancel +-k pairs exactly
    order = np.argsort(np.abs(terms), kind="stable")
    total = 0.0
    for v in terms[order]:
        total += float(v)
    return total


def full_drift(target: Target, x: float, spec: FullCentered, alpha: float) -> float:
    """Truncated centered-difference drift at a scalar state.

    With ell_k = U(x) - U(x - k h) and ell* their max, evaluates
    (exp(ell*) / h**gamma) * sum_k g_k * (-U'(x - k h)) * exp(ell_k - ell*),
    summing the signed terms in ascending magnitude. gamma = alpha - 2.
    """
    gamma = _check_alpha(alpha)
    if gamma == 0.0:
        # zeroth-order operator is the identity: drift is exactly -U'(x)
        return float(-target.gradient(x))
    ell_star, terms = _scaled_terms(target.potential, target.gradient,
                                    float(x), spec.h, spec.K, gamma)
    out = math.exp(ell_star) / spec.h**gamma * _ascending_sum(terms)
    if not math.isfinite(out):
        raise DriftOverflowError(x, ell_star)
    return out


def full_drift_multi(target: Target, x, spec: FullCentered, alpha: float) -> np.ndarray:
    """Per-axis full drift: axis d sees the 1D operator along e_d."""
    gamma = _check_alpha(alpha)
    x = np.asarray(x, dtype=float)
    if gamma == 0.0:
        return -np.asarray(target.gradient(x), dtype=float)
    out = np.empty_like(x)
    for d in range(x.size):
        def u_of(v, d=d):
            p = x.copy()
            p[d] = v
            return float(np.squeeze(target.potential(p)))

        def du_of(v, d=d):
            p = x.copy()
            p[d] = v
            return float(np.asarray(target.gradient(p))[d])

        try:
            ell_star, terms = _scaled_terms(u_of, du_of, float(x[d]),
                                            spec.h, spec.K, gamma)
        except DriftOverflowError as e:
            raise DriftOverflowError(x, e.ell_star, axis=d) from None
        val = math.exp(ell_star) / spec.h**gamma * _ascending_sum(terms)
        if not math.isfinite(val):
            raise DriftOverflowError(x, ell_star, axis=d)
        out[d] = val
    return out


def r_diagnostic(target: Target, x: float, alpha: float, h: float, K_x: int) -> float:
    """Truncation-quality diagnostic at x.

    |1 + sum_{k != 0} (g_k / g_0) f(x - k h) / f(x)| ** (1 / gamma) with
    f = -exp(-U) U', evaluated as exp(m / gamma) * |S| ** (1 / gamma) so the
    exponentials stay in range. Undefined at stationary points of U.
    """
    gamma = _check_alpha(alpha)
    if gamma == 0.0:
        raise ValueError("diagnostic needs alpha < 2 (exponent 1/gamma)")
    du_x = float(target.gradient(x))
    if du_x == 0.0:
        raise UndefinedDiagnosticError(f"U'(x) = 0 at x={x!r}")
    g = _half_coeffs(gamma, K_x)
    u_x = float(target.potential(x))
    ks = np.concatenate([-np.arange(1, K_x + 1), np.arange(1, K_x + 1)])
    nodes = x - ks * h
    ells = u_x - _eval_nodes(target.potential, nodes)
    ratios = _eval_nodes(target.gradient, nodes) / du_x
    m = max(float(np.max(ells)), 0.0)
    terms = np.append((g[np.abs(ks)] / g[0]) * ratios * np.exp(ells - m),
                      math.exp(-m))  # the +1 inside the bracket, rescaled
    s = _ascending_sum(terms)
    if s == 0.0:
        return math.inf
    return math.exp(m / gamma) * abs(s) ** (1.0 / gamma)


@dataclass(frozen=True)
class KappaResult:
    kappa_hat: float
    per_point: np.ndarray  # NaN where a grid point was skipped
    skipped: int


def kappa(target: Target, alpha: float, h: float, K_star: int, grid) -> KappaResult:
    """Mean matched-truncation index over a grid.

    At each grid point: b_K for K = 1..K_star by widening the stencil one
    pair at a time, b* = b_{K_star}, e(K) = |b_K - b*|, e_hat = |b_hat - b*|
    for the simplified drift b_hat, and kappa = the smallest K minimizing
    |e(K) - e_hat|. Grid points where the drift overflows are skipped and
    counted.
    """
    gamma = _check_alpha(alpha)
    if not (1.0 < alpha < 2.0):
        raise ValueError("kappa needs alpha in (1, 2)")
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty grid")
    ca = c_alpha(alpha)
    per_point = np.full(grid.size, np.nan)
    skipped = 0
    for i, x in enumerate(grid):
        x = float(x)
        try:
            ell_star, terms = _scaled_terms(target.potential, target.gradient,
                                            x, h, K_star, gamma)
            scale = math.exp(ell_star) / h**gamma
        except (DriftOverflowError, OverflowError) as e:
            log.warning("kappa: skipping grid point %r (%s)", x, e)
            skipped += 1
            continue
        # terms are ordered (0, -1, +1, -2, +2, ...): widen center-outward
        s0 = terms[0]
        pair_sums = terms[1::2] + terms[2::2]
        b = scale * (s0 + np.cumsum(pair_sums))  # b[K-1] = b_{K}, K = 1..K_star
        b_star = b[-1]
        b_hat = -ca * float(target.gradient(x))
        e = np.abs(b - b_star)
        e_hat = abs(b_hat - b_star)
        per_point[i] = 1 + int(np.argmin(np.abs(e - e_hat)))  # first min: smallest K
    valid = per_point[~np.isnan(per_point)]
    if valid.size == 0:
        raise DriftOverflowError(grid, math.inf)
    return KappaResult(float(np.mean(valid)), per_point, skipped)
