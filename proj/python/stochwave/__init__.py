"""Stochastic travelling waves for reaction-diffusion SPDEs.

Thin python layer over the C++ core: deterministic and instantaneous
stochastic waves, sigma-power expansions, correlated-noise sampling, and
single-path SPDE simulation.
"""

from ._core import (  # noqa: F401
    CovarianceKernel,
    Grid,
    ModelSpec,
    NoiseSampler,
    WavePair,
    convolve_q,
    cutoff_high,
    cutoff_low,
    expand_second_order,
    expected_gamma2_rate,
    exponential_kernel,
    fhn_model,
    gaussian_kernel,
    nagumo_explicit,
    nagumo_model,
    orbital_drift_shape,
    predicted_v1_norm,
    simulate,
    sne_wave,
    solve_instantaneous_wave,
    solve_wave,
    sqrt_kernel,
    tent_kernel,
)

__all__ = [
    "CovarianceKernel", "Grid", "ModelSpec", "NoiseSampler", "WavePair",
    "convolve_q", "cutoff_high", "cutoff_low", "expand_second_order",
    "expected_gamma2_rate", "exponential_kernel", "fhn_model",
    "gaussian_kernel", "nagumo_explicit", "nagumo_model",
    "orbital_drift_shape", "predicted_v1_norm", "simulate", "sne_wave",
    "solve_instantaneous_wave", "solve_wave", "sqrt_kernel", "tent_kernel",
]
