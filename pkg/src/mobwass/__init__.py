"""Generalized Wasserstein distances with concave mobility."""

from .mobility import (ActionDensity, MobilitySpec, eval_action, eval_conjugate,
                       eval_recession, parabola_minorant, phi_norms, upper_concave_bound)
from .measures import (Grid, GridMeasure, ReferenceMeasure, generalized_moment, mollify,
                       push_forward_affine, total_mass)
from .dynamics import (TransportCurve, action_integral, c_pd_constant, ce_residual,
                       connectivity_curve, dilation_curve, glue, mass_trace, time_rescale,
                       wasserstein_1d)

__version__ = "0.1.0"
