"""Gaussian-smoothed p-Wasserstein distances and their statistical toolkit.

Submodules:

* ``specialfn``   entire exponential integral, reproducing kernel, Gram matrices
* ``measures``    empirical measures, samplers, noise augmentation, seeding
* ``ot``          1-D quantile, exact-LP and Sinkhorn transport solvers
* ``mmd``         order-2 smooth Sobolev discrepancy and comparison bounds
* ``twosample``   bootstrap-calibrated two-sample tests
* ``mswe``        minimum smooth Wasserstein estimation
* ``experiments`` seeded experiment grids with CSV/SVG/manifest outputs
"""

from ._backend import BACKEND
from .measures import DistributionSpec, EmpiricalMeasure, SeedSpec
from .mmd import MMDResult, d2_squared, gw_upper_bound, one_sample_identity
from .ot import OTConfig, TransportPlan, smooth_wasserstein, wasserstein_1d, wasserstein_discrete
from .specialfn import KernelParams, ein, gram, kernel
from .twosample import TestConfig, TestResult, test
from .mswe import FitResult, ParamFamily, fit

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DistributionSpec",
    "EmpiricalMeasure",
    "SeedSpec",
    "KernelParams",
    "MMDResult",
    "OTConfig",
    "TransportPlan",
    "TestConfig",
    "TestResult",
    "FitResult",
    "ParamFamily",
    "ein",
    "gram",
    "kernel",
    "d2_squared",
    "gw_upper_bound",
    "one_sample_identity",
    "smooth_wasserstein",
    "wasserstein_1d",
    "wasserstein_discrete",
    "test",
    "fit",
    "__version__",
]
