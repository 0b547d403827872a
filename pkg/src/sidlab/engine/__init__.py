"""Time integration for sidlab."""

from sidlab.config.settings import IntegratorSettings
from sidlab.engine.coupling import CouplingReport, CouplingResult, parallel_couple, verify_coupling
from sidlab.engine.flow import FlowPath, deterministic_flow
from sidlab.engine.longtime import (
    contraction_probe,
    estimate_stationary,
    shadowing_probe,
    stationary_bound,
)
from sidlab.engine.particles import (
    ParticleSystem,
    TrajectoryBatch,
    simulate_linear_frozen,
    simulate_particles,
)

__all__ = [
    "CouplingReport",
    "CouplingResult",
    "FlowPath",
    "IntegratorSettings",
    "ParticleSystem",
    "TrajectoryBatch",
    "contraction_probe",
    "deterministic_flow",
    "estimate_stationary",
    "parallel_couple",
    "shadowing_probe",
    "simulate_linear_frozen",
    "simulate_particles",
    "stationary_bound",
    "verify_coupling",
]
