"""Occupancy probabilities for regime-switching letter models.

A Markov driver picks a regime at every step and a letter is drawn from that
regime's law. The package computes how often the next (regime, letter) pair
has already been seen: exactly, by simulation, through finite-sample upper
bounds, and through its regular-variation limit.
"""
from .alphabet import (LetterDistribution, RVProfile, SlowlyVaryingFn, counting_function,
                       moment_sum, rv_profile, small_mass)
from .asymptotics import (F_constant, LimitReport, convergence_diagnostic, h_norm,
                          letter_limit_check, model_limit)
from .bounds import (c_of_r, dgp_iid_bound, finite_support_bound, rv_bound,
                     rv_finite_sample_bound, shared_letter_bound, shared_letter_coeffs,
                     theorem_bound)
from .errors import (BoundNotApplicable, CapExceeded, ConfigError, ErgodicityError,
                     OccupancyError, UnsupportedOperation)
from .exact import (JointLocalTimeLaw, brute_force_regime_pmf, exact_regime_pmf,
                    iid_occupancy_pmf, joint_local_time_law)
from .markov import (ChainConstants, TransitionMatrix, minorization_constants, reverse,
                     stationary_distribution)
from .montecarlo import MCEstimate, estimate_functional, estimate_pmf
from .regime import RegimeModel, RegimePath, build_model, occupancy_stats, simulate
from .reports import BoundReport, Condition
from .special import incomplete_gamma_lower, incomplete_gamma_upper

__version__ = "0.1.0"
