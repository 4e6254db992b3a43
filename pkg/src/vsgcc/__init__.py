"""Complex-coefficient voltage-loop analysis and simulation of grid-forming VSGs."""
from .errors import VsgError
from .lti import (ComplexRational, ComplexStateSpace, PoleGeometry, RealStateSpace,
                  embed_real, freq_response, interconnect, pole_geometry, poles_general,
                  poles_quadratic, realize_control_canonical, step_response_dominant,
                  step_response_exact)
from .params import OPTIMIZED_KC, PLACED_KC, VsgParams, preset

__all__ = [
    "VsgError", "ComplexRational", "ComplexStateSpace", "PoleGeometry", "RealStateSpace",
    "embed_real", "freq_response", "interconnect", "pole_geometry", "poles_general",
    "poles_quadratic", "realize_control_canonical", "step_response_dominant",
    "step_response_exact", "OPTIMIZED_KC", "PLACED_KC", "VsgParams", "preset",
]

__version__ = "0.1.0"
