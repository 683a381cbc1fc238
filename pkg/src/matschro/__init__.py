"""Numerical toolkit for 1D matrix Schrodinger operators H = H0 + V from NLS linearizations.

Grids and spectral calculus (``grid``), operators and factorization
(``operators``), resolvent kernels (``resolvent``), threshold analysis
(``threshold``), the discrete-spectrum projection and conjugation
(``projection``), time evolution (``evolution``), decay fits
(``decay``) and the identity suites (``identities``, ``verify``).
"""
from .config import RunConfig, load_config
from .decay import DecayFit, dispersive_experiment, fit_power_law, free_calibration, free_wave_profile_check
from .errors import (ConfigurationError, DegenerateProjectionError, DomainError, FactorizationError, FitError,
                     NearEigenvalueError, PrecisionError, ResolutionError, ResonanceError, SingularityError,
                     ThresholdInconsistencyError)
from .evolution import PropagatorConfig, ft0_free, ft_operator, gt_integral, propagate
from .grid import Field2, Grid, make_grid
from .identities import IdentityReport, run_suite
from .operators import (MatrixPotential, build_H, build_H0, build_power_nls_potential, factorize,
                        load_tabulated_potential, zero_potential)
from .projection import build_conjugation, build_Pd_Ps, generalized_kernel_cubic
from .resolvent import KernelOp, free_resolvent, perturbed_resolvent
from .threshold import analyze_threshold, psi_on_grid

__version__ = "0.1.0"
