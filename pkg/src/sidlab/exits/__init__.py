"""Exit domains, first-exit detection, exit campaigns and the Kramers fit."""

from sidlab.exits.campaign import (
    CampaignComparison,
    ExitCampaignResult,
    InvarianceReport,
    compare_campaigns,
    default_sigma_grid,
    deterministic_invariance_check,
    predict_exponent,
    predict_reference,
    run_campaign,
)
from sidlab.exits.detection import ExitDetector, ExitTime, first_exit, path_pairs
from sidlab.exits.domains import Domain, ball, build_domain, nested_domains
from sidlab.exits.fit import KramersFit, SigmaSamples, kramers_fit

__all__ = [
    "CampaignComparison",
    "Domain",
    "ExitCampaignResult",
    "ExitDetector",
    "ExitTime",
    "InvarianceReport",
    "KramersFit",
    "SigmaSamples",
    "ball",
    "build_domain",
    "compare_campaigns",
    "default_sigma_grid",
    "deterministic_invariance_check",
    "first_exit",
    "kramers_fit",
    "nested_domains",
    "path_pairs",
    "predict_exponent",
    "predict_reference",
    "run_campaign",
]
