"""Model components: confinement drifts, interactions, kernels and the assembled model."""

from sidlab.model.config import InitialLaw, ModelConfig, build_model
from sidlab.model.diffusion import DiffusionMatrix
from sidlab.model.drift import (
    DRIFT_FAMILIES,
    ColoredNoiseDrift,
    CustomQuadraticDrift,
    DriftField,
    GeneralizedLangevinDrift,
    KineticDrift,
    OverdampedDrift,
    evaluate_drift,
)
from sidlab.model.interaction import (
    INTERACTION_FAMILIES,
    AbpBias,
    ConvolutionGradient,
    GaussianRepulsion,
    InteractionField,
    QuadraticAttraction,
    QuadraticRepulsion,
    TwoSpecies,
    ZeroInteraction,
    evaluate_interaction,
)
from sidlab.model.kernels import MemoryKernel, kernel_weights, memory_mass, vanishing_memory
from sidlab.model.potentials import QuadraticPotential, QuarticPotential, make_potential

__all__ = [
    "DRIFT_FAMILIES",
    "INTERACTION_FAMILIES",
    "AbpBias",
    "ColoredNoiseDrift",
    "ConvolutionGradient",
    "CustomQuadraticDrift",
    "DiffusionMatrix",
    "DriftField",
    "GaussianRepulsion",
    "GeneralizedLangevinDrift",
    "InitialLaw",
    "InteractionField",
    "KineticDrift",
    "MemoryKernel",
    "ModelConfig",
    "OverdampedDrift",
    "QuadraticAttraction",
    "QuadraticPotential",
    "QuadraticRepulsion",
    "QuarticPotential",
    "TwoSpecies",
    "ZeroInteraction",
    "build_model",
    "evaluate_drift",
    "evaluate_interaction",
    "kernel_weights",
    "make_potential",
    "memory_mass",
    "vanishing_memory",
]
