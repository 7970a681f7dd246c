"""Periodic-domain simulator for coupled nonlocal dislocation-density transport.

A numpy library built around four layers: spectral kernel machinery
(`spectral`), periodic grid fields and reconstruction (`fields`), the
semi-explicit upwind scheme with implicit nonlocal velocity (`scheme`),
and entropy/dissipation diagnostics (`diagnostics`), plus preset
experiments with a refinement harness (`experiments`) and a CLI (`cli`).
"""

from .diagnostics import (
    DiagnosticsRecord,
    dissipation,
    entropy,
    sigma_derivative_bound_check,
    velocity_h1_diagnostics,
)
from .experiments import Preset, RefinementReport, gaussian_initial, preset, refinement_study
from .fields import (
    State,
    deviation_from_x1_mean,
    l2_scaled,
    linf,
    mean_x1,
    q1_eval,
    theta_x1,
    theta_x2,
)
from .scheme import (
    CflReport,
    SimParams,
    StepReport,
    StressSpec,
    cfl_check,
    fixed_point_step,
    run,
    smooth_initial,
    velocity,
)
from .spectral import (
    SigmaField,
    build_sigma_field,
    convolve_scaled,
    dft2,
    fejer_weight,
    idft2,
    kernel_coeff,
    sigma_coeff,
    sigma_dft_coeffs,
)

__version__ = "0.1.0"
