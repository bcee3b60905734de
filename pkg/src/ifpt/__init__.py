"""Smoothed inverse first-passage-time barriers for credit risk.

A Brownian credit index ``Y = Y_0 + B`` is killed at rate
``lam * psi(Y_t - b(t))``, with ``psi`` a smooth periodic step.  Given a
target survival curve ``G`` the package computes the barrier ``b`` that
makes the killing time have law ``G``, checks it by Monte Carlo, prices
defaultable claims on a correlated asset and bootstraps ``G`` from CDS
quotes.
"""
from .barrier import (BarrierSolution, Diagnostics, IfptProblem, barrier_rhs,
                      bracket_barriers, initial_barrier, solve_barrier, solve_restarted)
from .calibration import (CdsQuote, DiscountCurve, RecoveryRate, bootstrap_hazard,
                          cds_leg_values, stitch_barrier, synthetic_quotes)
from .errors import (BarrierDegeneracyError, HazardBoundError, IfptError,
                     IncompatibleGridError, InvalidParameterError, MassLeakError,
                     NoRootError, NumericalError, SegmentError, UnbootstrappableQuoteError)
from .kernel import (FejerKernel, KillingKernel, MollifierKernel, MollifierPair,
                     build_fejer, build_mollifier_pair)
from .montecarlo import (McConfig, SurvivalEstimate, empirical_survival, sample_default_times,
                         survival_mc)
from .pricing import (MarketModel, PayoffSpec, conditional_price, lognormal_price,
                      price_claim)
from .spectral import ARK436L2SA, SpectralGrid, imex_step, make_grid
from .survival import (ExponentialSurvival, GaussianDensity, GridDensity,
                       PiecewiseHazardSurvival, TabulatedSurvival, check_hazard_bound,
                       make_exponential, make_piecewise_hazard, make_tabulated)

__version__ = "0.1.0"
