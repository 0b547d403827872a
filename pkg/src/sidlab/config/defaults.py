"""Default configuration values for sidlab."""

from typing import Any

# Format tags
FORMAT_VERSION = 1
FORMAT_PREFIX = "# sidlab:"

# Engine
DEFAULT_DT = 1e-3
DEFAULT_HORIZON = 1.0
DEFAULT_STRIDE = 10
DEFAULT_PARTICLES = 256
DEFAULT_MAX_SNAPSHOTS = 64
DEFAULT_EXPLOSION_GUARD = 1e6

# Fixed point
DEFAULT_LAMBDA_TOLERANCE = 1e-12
DEFAULT_LAMBDA_MAX_ITERATIONS = 200
DEFAULT_PI_TOLERANCE = 1e-12
DEFAULT_DIVERGENCE_RADIUS = 1e6

# Probes
DEFAULT_PROBE_SAMPLES = 10_000
DEFAULT_PROBE_RADIUS = 2.0
DEFAULT_RHO_GRID = 401

# Wasserstein
DEFAULT_EXACT_W2_CAP = 512

# Exit campaigns
DEFAULT_REPLICAS = 300
DEFAULT_MIN_REPLICAS = 30
DEFAULT_MIN_SIGMA_POINTS = 3
DEFAULT_CENSOR_LIMIT = 0.5
DEFAULT_HORIZON_MULTIPLIER = 10.0
DEFAULT_CONFIDENCE = 0.95
DEFAULT_DT_NOISE_RATIO = 0.1

# Quasi-potential
DEFAULT_ACTION_NODES = 200
DEFAULT_BOUNDARY_SAMPLES = 256

# Gronwall
DEFAULT_GRONWALL_DT = 1e-2
DEFAULT_GRONWALL_HORIZON = 50.0
DEFAULT_ENVELOPE_DEPTH = 60

# Toy chain
DEFAULT_TOYCHAIN_SAMPLES = 10_000
DEFAULT_SPREAD_WINDOW = 0.1

# Output
DEFAULT_OUTPUT_DIR = "./runs"

DEFAULT_MODEL: dict[str, Any] = {
    "name": "overdamped-quadratic",
    "drift": {
        "family": "overdamped",
        "potential": {"kind": "quadratic", "center": [0.0], "stiffness": 2.0},
    },
    "interaction": {"family": "zero"},
    "kernel": {"kind": "dirac"},
    "diffusion": {"scale": 1.0},
    "init": {"kind": "point", "center": [0.0]},
    "sigma": 0.5,
}
