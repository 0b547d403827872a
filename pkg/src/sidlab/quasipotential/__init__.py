"""Exit costs: closed forms, discrete actions and the exit-cost reduction probe."""

from sidlab.quasipotential.action import (
    ActionResult,
    DiscretePath,
    action_of_path,
    exit_action,
    kinetic_action,
    minimize_action,
)
from sidlab.quasipotential.closed_form import (
    EffectivePotential,
    boundary_minimum,
    effective_potential,
    elliptic_exponent,
    elliptic_H,
    exit_cost_gap,
    kinetic_H,
)
from sidlab.quasipotential.reduction import ReductionReport, reduction_probe

__all__ = [
    "ActionResult",
    "DiscretePath",
    "EffectivePotential",
    "ReductionReport",
    "action_of_path",
    "boundary_minimum",
    "effective_potential",
    "elliptic_H",
    "elliptic_exponent",
    "exit_action",
    "exit_cost_gap",
    "kinetic_H",
    "kinetic_action",
    "minimize_action",
    "reduction_probe",
]
