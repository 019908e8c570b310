"""Non-uniform OFDM pilot patterns with low delay-domain sidelobes."""

from .ambiguity import (
    AfProfile,
    DifferenceMultiplicity,
    af_direct,
    af_power_via_dft,
    af_profile,
    delta_psl,
    difference_multiplicity,
    psl,
    psl_after_swap,
)
from .core import (
    OfdmGrid,
    PatternError,
    PilotPattern,
    SidelobeWindow,
    load_pattern,
    make_anchor_set,
    make_uniform_comb,
    save_pattern,
    validate_pattern,
)
from .estimators import PilotAidedReceiver, PilotPatternDesigner, RangeEstimator
from .optimizer import OptimizerConfig, OptimizerTrace, exhaustive_oracle, greedy_csm, hybrid_design, sccd_refine

__version__ = "0.1.0"

__all__ = [
    "AfProfile",
    "DifferenceMultiplicity",
    "af_direct",
    "af_power_via_dft",
    "af_profile",
    "delta_psl",
    "difference_multiplicity",
    "psl",
    "psl_after_swap",
    "OfdmGrid",
    "PatternError",
    "PilotPattern",
    "SidelobeWindow",
    "load_pattern",
    "make_anchor_set",
    "make_uniform_comb",
    "save_pattern",
    "validate_pattern",
    "PilotAidedReceiver",
    "PilotPatternDesigner",
    "RangeEstimator",
    "OptimizerConfig",
    "OptimizerTrace",
    "exhaustive_oracle",
    "greedy_csm",
    "hybrid_design",
    "sccd_refine",
]
