"""Echoes, coherence spectra and OTOC cluster sizes for long-range spin rings."""

from .lattice import CouplingTable, RingSpec, bond_distance, build_couplings, coupling_second_moment
from .propagator import TrotterPlan, evolve, exact_propagator
from .correlator import (
    EchoCoefficients,
    EchoMatrix,
    decompose_echo,
    distance_echo,
    echo_coefficients_exact,
    echo_coefficients_stochastic,
    echo_matrix_exact,
    echo_matrix_stochastic,
)
from .spectrum import (
    CoherenceSpectrum,
    KSeries,
    PhiGrid,
    cluster_size_direct,
    decode_spectrum,
    kseries_from_routes,
    spectrum_route,
)
from .analytics import (
    default_saturation_time,
    saturation_stats,
    scaling_fit,
    short_time_prediction,
)

__version__ = "0.1.0"
