"""Meshfree blob-particle simulator for driven mass diffusion.

Particles carry equal masses and are smeared into Gaussian blobs; entropic
forces spread them, a quadratic barrier confines them, and boundary-layer
correctors exchange particles with the environment to realize prescribed
boundary densities and fluxes.
"""

__version__ = "0.1.0"

from .blobs import CellGrid, GaussianKernel, ParticleSet, density, density_gradient
from .boundary import (
    BoundaryCondition,
    StarvationError,
    dirichlet_correct,
    dirichlet_target,
    neumann_correct,
    neumann_target,
)
from .config import RunConfig, dump_config, load_config
from .geometry import Box, Cylinder, LayerCell, Patch, Sphere, build_layers, penalty_domain
from .harness import run, sweep
from .observables import FitReport, TimeSeries, fit_power_law, l1_norm, mass_inside, polar_inertia
from .presets import derive_params, preset, resolve
from .stepper import (
    RotationVelocity,
    SimParams,
    StabilityError,
    UniformVelocity,
    advect_step,
    diffusion_step,
    entropic_force,
    penalty_gradient,
    source_step,
)
