from .bounds import (BoundReport, GuoSweep, bounds_barbagallo, bounds_guo, bounds_hilding,
                     bounds_lambda2_one, bounds_main, bounds_p_combined, bounds_soderlind,
                     guo_epsilon_sweep, p_cap, q_contraction_rate, reduce_p_combined)
from .inversion import (BEST_EFFORT, PICARD, InversionCertificate, SolverConfig,
                        certificates_of, invert_certified, inverse_of, picard_rate_violations)
from .profile import (Objective, PairStats, PerturbationProfile, ProfileCheck, check_profile,
                      check_stats, estimate_profile, estimate_profile_mu, given_profile,
                      pair_stats, pareto_frontier, select_on_frontier)
from .resolvent import ScanEntry, ScanReport, exact_invertibility, resolvent_scan

__all__ = [
    "BoundReport", "GuoSweep", "bounds_barbagallo", "bounds_guo", "bounds_hilding",
    "bounds_lambda2_one", "bounds_main", "bounds_p_combined", "bounds_soderlind",
    "guo_epsilon_sweep", "p_cap", "q_contraction_rate", "reduce_p_combined",
    "BEST_EFFORT", "PICARD", "InversionCertificate", "SolverConfig", "certificates_of",
    "invert_certified", "inverse_of", "picard_rate_violations",
    "Objective", "PairStats", "PerturbationProfile", "ProfileCheck", "check_profile",
    "check_stats", "estimate_profile", "estimate_profile_mu", "given_profile", "pair_stats",
    "pareto_frontier", "select_on_frontier",
    "ScanEntry", "ScanReport", "exact_invertibility", "resolvent_scan",
]
