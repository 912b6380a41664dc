"""Built-in parameter sets: daily 2020 returns of AAPL, AMZN, GOOGL and MSFT.

Two fits of the same series are provided: a skew-t fit (inverse-gamma mixing
with shape and scale ``dof/2``) and a Gaussian fit of the log returns.  The
risk-free rate is quoted annually; ``periods_per_year`` converts it by simple
division.  A divisor of 365 reproduces the reference Gaussian tangency vector,
so that is the value the built-in models use unless told otherwise.
"""

from __future__ import annotations

import numpy as np

from .market_model import NmvmModel
from .mixing import Dirac, InverseGamma

ASSETS = ("AAPL", "AMZN", "GOOGL", "MSFT")
ANNUAL_RF = 0.0125
CALIBRATED_PERIODS = 365

SKEW_T_DOF = 3.228143
SKEW_T_MU = np.array([0.00321155, -0.00042093, 0.00231314, 0.00124911])
SKEW_T_GAMMA = np.array([-0.00039805, 0.00011115, -0.00005774, 0.00000366])
SKEW_T_SIGMA = np.array([
    [0.00037775, 0.00023791, 0.00023987, 0.00028738],
    [0.00023791, 0.00028480, 0.00019535, 0.00023228],
    [0.00023987, 0.00019535, 0.00025751, 0.00024117],
    [0.00028738, 0.00023228, 0.00024117, 0.00031692],
])

GAUSSIAN_MU = np.array([0.00229349, 0.00214277, 0.00098126, 0.00133359])
GAUSSIAN_SIGMA = np.array([
    [0.00086637, 0.00050060, 0.00054323, 0.00068924],
    [0.00050060, 0.00058552, 0.00039930, 0.00049770],
    [0.00054323, 0.00039930, 0.00059199, 0.00058189],
    [0.00068924, 0.00049770, 0.00058189, 0.00076986],
])


def skew_t_2020(periods_per_year: float = CALIBRATED_PERIODS,
                annual_rf: float = ANNUAL_RF) -> NmvmModel:
    half = SKEW_T_DOF / 2.0
    return NmvmModel(SKEW_T_MU, SKEW_T_GAMMA, SKEW_T_SIGMA, annual_rf / periods_per_year,
                     InverseGamma(half, half))


def gaussian_2020(periods_per_year: float = CALIBRATED_PERIODS,
                  annual_rf: float = ANNUAL_RF) -> NmvmModel:
    return NmvmModel(GAUSSIAN_MU, np.zeros(4), GAUSSIAN_SIGMA, annual_rf / periods_per_year,
                     Dirac(1.0))


BUILTIN_MODELS = {"skew-t-2020": skew_t_2020, "gaussian-2020": gaussian_2020}
