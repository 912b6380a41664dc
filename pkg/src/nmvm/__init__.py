"""Expected-utility portfolio selection under normal mean-variance mixture returns."""

from .concave_opt import (ConcaveSolution, GammaEvalConfig, GammaProfile, frontier, gamma_value,
                          maximize_gamma, nmvm_tangent_mv, optimal_portfolio, tangent_mv,
                          tangent_skew)
from .errors import (DegenerateModelError, NmvmError, NumericalError, ParameterError,
                     UnsupportedModelError, UtilityRangeError, ValidationError)
from .exp_opt import (ExpSolution, ThetaDomain, global_optimal, hyperplane_optimal, minimize_q,
                      q_function, short_sales_optimal, theta_domain, wealth_floor_optimal)
from .market_model import NmvmModel
from .mixing import GIG, Dirac, Gamma, InverseGamma, InverseGaussian, MixingLaw, law_from_dict
from .oracle import (descriptive_stats, mc_expected_utility, random_search_optimal,
                     read_returns_csv)
from .utility import (Exponential, HendersonHobson, PiecewiseLinear, Sahara, ShortfallPower,
                      TruncatedLinear, certainty_equivalent, utility_from_dict,
                      validate_assumption1)

__version__ = "0.1.0"
