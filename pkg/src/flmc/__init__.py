"""Langevin-type MCMC driven by heavy-tailed alpha-stable noise.

The package splits into noise generation (stable), the fractional
centered-difference operator (riesz), potential targets (targets), drift
evaluators (drift), Euler-Maruyama chains and estimators (sampler),
independent numerical references (oracle), and the experiment CLI (cli).
"""

__version__ = "0.1.0"

from .drift import FullCentered, Reference, Simplified, full_drift, kappa, simplified_drift
from .riesz import build_stencil, c_alpha, coeff, truncated_centered_difference
from .sampler import (Constant, Polynomial, SamplerConfig, Trace, run_chain,
                      run_repeats, step)
from .stable import StableNoise, sample_sas, sample_sas_vector
from .targets import (Minibatch, Target, double_well_target, gaussian_target,
                      sg_gradient, synthetic_mf_target)

__all__ = [
    "__version__",
    "StableNoise", "sample_sas", "sample_sas_vector",
    "build_stencil", "c_alpha", "coeff", "truncated_centered_difference",
    "Target", "Minibatch", "double_well_target", "gaussian_target",
    "synthetic_mf_target", "sg_gradient",
    "Simplified", "FullCentered", "Reference", "full_drift",
    "simplified_drift", "kappa",
    "SamplerConfig", "Polynomial", "Constant", "Trace",
    "run_chain", "run_repeats", "step",
]
