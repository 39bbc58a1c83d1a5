"""Security analysis toolkit for the (M, L) polarization QKD protocols."""

__version__ = "0.1.0"

from .channel import (ChannelModel, ObservedStats, detection_rate, honest_stats, loss_constraint_rhs,
                      max_K, stats_from_X, zeta)
from .envelope import GoodEnvelope, f_phi
from .keyrate import (KeyRateResult, asymptotic_gain, binary_entropy, finite_rate,
                      key_length_finite, optimize_gamma, optimize_mu, scan_eps, threshold_eps)
from .montecarlo import SimConfig, SimResult, compare, simulate
from .phase_bound import (PhaseErrorBound, SubspaceAssignment, choose_phi_prime, g_asymptotic,
                          phase_error_bound_finite, verify_witness)
from .protocol import ProtocolParams, build_R, closed_form_blocks, verify_closed_forms
from .source import (PhotonNumberDist, angular_weights, fock_oracle_weights, poisson_dist,
                     verify_state_consistency)

__all__ = [
    "ChannelModel", "ObservedStats", "detection_rate", "honest_stats", "loss_constraint_rhs",
    "max_K", "stats_from_X", "zeta", "GoodEnvelope", "f_phi", "KeyRateResult",
    "asymptotic_gain", "binary_entropy", "finite_rate", "key_length_finite", "optimize_gamma",
    "optimize_mu", "scan_eps", "threshold_eps", "SimConfig", "SimResult", "compare", "simulate",
    "PhaseErrorBound", "SubspaceAssignment", "choose_phi_prime", "g_asymptotic",
    "phase_error_bound_finite", "verify_witness", "ProtocolParams", "build_R",
    "closed_form_blocks", "verify_closed_forms", "PhotonNumberDist", "angular_weights",
    "fock_oracle_weights", "poisson_dist", "verify_state_consistency",
]
