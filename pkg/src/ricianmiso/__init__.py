"""Exact and asymptotic SINR/rate analysis of the RZF-precoded MISO downlink
over spatially correlated Rician fading."""
from .channel import (
    ChannelRealization,
    PathlossParams,
    Scenario,
    UserGeometry,
    exponential_correlation,
    hermitian_sqrt,
    pathloss,
    sample_channel,
    sample_positions,
    steering_vector,
)
from .deterministic import (
    AuxQuantities,
    DeterministicSINR,
    FixedPointSolution,
    LiftedModel,
    aux_quantities,
    corollary1_sinr,
    corollary2_sinr,
    lift_scenario,
    mc_resolvent_trace,
    rates_from_sinr,
    rayleigh_sinr,
    solve_fixed_point,
    theorem1_sinr,
)
from .precoding import ExactPerformance, PrecodingResult, ergodic_performance, exact_sinr, rzf_precoder
from .streams import RandomStreams

__version__ = "0.1.0"
