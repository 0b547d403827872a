"""Named model presets.

Each preset is a nested settings dictionary merged over the defaults by
:func:`sidlab.config.settings.load_settings`.
"""

from __future__ import annotations

import copy
import math
from typing import Any

from sidlab.errors import ConfigError

_NON_INTERACTING_SIGMAS = [math.sqrt(s) for s in (0.5, 0.6, 0.75, 1.0)]
_INTERACTING_SIGMAS = [math.sqrt(s) for s in (0.275, 0.33, 0.4125, 0.55)]

_QUADRATIC_1D: dict[str, Any] = {
    "family": "overdamped",
    "potential": {"kind": "quadratic", "center": [0.0], "stiffness": 2.0},
}

PRESETS: dict[str, dict[str, Any]] = {
    "overdamped-quadratic": {
        "model": {
            "name": "overdamped-quadratic",
            "drift": _QUADRATIC_1D,
            "interaction": {"family": "zero"},
            "kernel": {"kind": "dirac"},
            "diffusion": {"scale": 1.0},
            "init": {"kind": "point", "center": [0.0]},
            "sigma": 0.5,
            "declared_rho": 2.0,
            "declared_kappa": 0.0,
        },
        "integrator": {"dt": 1e-2, "particles": 1},
        "domain": {"kind": "ball", "radius": 1.0},
        "campaign": {
            "sigmas": _NON_INTERACTING_SIGMAS,
            "replicas": 300,
            "prefactor_power": 0.5,
        },
    },
    "overdamped-quadratic-interacting": {
        "model": {
            "name": "overdamped-quadratic-interacting",
            "drift": _QUADRATIC_1D,
            "interaction": {"family": "quadratic-repulsive", "alpha": 0.45},
            "kernel": {"kind": "dirac"},
            "diffusion": {"scale": 1.0},
            "init": {"kind": "point", "center": [0.0]},
            "sigma": 0.5,
            "declared_rho": 0.65,
            "declared_kappa": 0.45,
        },
        "integrator": {"dt": 1e-2, "particles": 256},
        "domain": {"kind": "ball", "radius": 1.0},
        "campaign": {
            "sigmas": _INTERACTING_SIGMAS,
            "replicas": 300,
            "prefactor_power": 0.5,
        },
    },
    "kinetic-quadratic": {
        "model": {
            "name": "kinetic-quadratic",
            "drift": {
                "family": "kinetic",
                "potential": {"kind": "quadratic", "center": [0.5], "stiffness": 1.0},
                "friction": 2.0,
                "change_of_variable": [[1.0, 0.0], [-1.0, 1.0]],
            },
            "interaction": {"family": "zero"},
            "kernel": {"kind": "dirac"},
            "diffusion": {"matrix": [[0.0, 0.0], [0.0, math.sqrt(2.0)]]},
            "init": {"kind": "point", "center": [0.5, 0.0]},
            "sigma": 0.3,
        },
        "integrator": {"dt": 1e-2, "particles": 64},
        "domain": {"kind": "product", "radius": 1.0, "position_dims": 1},
    },
    "colored-ou": {
        "model": {
            "name": "colored-ou",
            "drift": {
                "family": "colored-noise",
                "potential": {"kind": "quadratic", "center": [0.0], "stiffness": 1.0},
                "coupling": [[math.sqrt(2.0)]],
                "noise_drift": [[-1.0]],
                "change_of_variable": [[2.0, 0.0], [0.0, 1.0]],
            },
            "interaction": {"family": "zero"},
            "kernel": {"kind": "dirac"},
            "diffusion": {"matrix": [[0.0, 0.0], [0.0, math.sqrt(2.0)]]},
            "init": {"kind": "point", "center": [0.0, 0.0]},
            "sigma": 0.3,
        },
        "integrator": {"dt": 1e-2, "particles": 64},
    },
    "gle-k3": {
        "model": {
            "name": "gle-k3",
            "drift": {
                "family": "generalized-langevin",
                "potential": {"kind": "quadratic", "center": [0.0], "stiffness": 1.0},
                "friction": 1.0,
                "memory_blocks": [[0.0, -1.0], [1.0, 1.0]],
            },
            "interaction": {"family": "zero"},
            "kernel": {"kind": "dirac"},
            "diffusion": {
                "matrix": [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, math.sqrt(2.0)]]
            },
            "init": {"kind": "point", "center": [0.0, 0.0, 0.0]},
            "sigma": 0.3,
        },
        "integrator": {"dt": 1e-2, "particles": 64},
    },
    "abp-demo": {
        "model": {
            "name": "abp-demo",
            "drift": {
                "family": "overdamped",
                "potential": {"kind": "quartic", "center": [0.0], "stiffness": 1.0, "quartic": 1.0},
            },
            "interaction": {
                "family": "abp-bias",
                "omega": 0.05,
                "eps": 0.5,
                "eps_prime": 1.0,
                "output_matrix": [[-1.0]],
                "reaction_coordinate": [[1.0]],
            },
            "kernel": {"kind": "uniform"},
            "diffusion": {"scale": 1.0},
            "init": {"kind": "ball", "center": [0.0], "radius": 0.2},
            "sigma": 0.5,
        },
        "integrator": {"dt": 1e-2, "particles": 64, "horizon": 5.0},
    },
    "two-species-demo": {
        "model": {
            "name": "two-species-demo",
            "drift": {
                "family": "overdamped",
                "potential": {"kind": "quadratic", "center": [0.0, 1.0], "stiffness": 2.0},
            },
            "interaction": {
                "family": "two-species",
                "coefficients": [[-0.2, 0.3], [-0.3, -0.2]],
            },
            "kernel": {"kind": "exponential", "rate": 1.0},
            "diffusion": {"scale": 1.0},
            "init": {"kind": "point", "center": [0.0, 1.0]},
            "sigma": 0.3,
        },
        "integrator": {"dt": 1e-2, "particles": 64},
    },
}


def list_presets() -> list[str]:
    """Names of all registered presets."""
    return sorted(PRESETS)


def get_preset(name: str) -> dict[str, Any]:
    """Return a deep copy of a preset's settings dictionary.

    Raises:
        ConfigError: If the preset is unknown.
    """
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise ConfigError(
            f"Unknown preset '{name}'. Available: {', '.join(list_presets())}"
        ) from None
