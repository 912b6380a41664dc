"""Concave-utility optimization through the one-dimensional profile Gamma(c).

Every optimal portfolio lies on the ray x_c = (c / q) Sigma^-1 v with
v = mu - 1 r_f + gamma E Z and q = v^T Sigma^-1 v.  Along the ray terminal
wealth is W0 (1 + r_f) + c W0 eta with the scalar NMVM variable

    eta = alpha + beta Z + sigma_eta sqrt(Z) N,

so the portfolio problem reduces to maximizing Gamma(c) = E U(W0 (1 + r_f) + c W0 eta)
over c >= 0.  Gamma is evaluated either by a product quadrature rule
(Gauss-Hermite in N times a law-specific rule in Z) or by Monte Carlo on one
fixed sample stream; both are positive-weight averages of U at points affine in
c, so the computed profile is concave whenever U is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np
from scipy import linalg

from ._search import golden_max
from . import exp_opt
from .errors import DegenerateModelError, ParameterError
from .market_model import NmvmModel
from .utility import Exponential, Utility, certainty_equivalent

MV_NOT_REPRODUCIBLE = ("mean-variance tangent not available: Var Z is infinite for this "
                       "mixing law, so the return covariance does not exist")

_C_MAX = 1e12


@dataclass(frozen=True)
class GammaEvalConfig:
    method: str = "quadrature"
    n_samples: int = 1_000_000
    seed: int = 0
    n_hermite: int = 64
    n_mixing: int = 256
    check_integrability: bool = True
    clip: float = 1e15

    def __post_init__(self):
        if self.method not in ("quadrature", "monte_carlo"):
            raise ParameterError(f"unknown Gamma evaluation method {self.method!r}")
        if min(self.n_samples, self.n_hermite, self.n_mixing) < 1:
            raise ParameterError("sample and node counts must be positive")


@dataclass(frozen=True)
class ConcaveSolution:
    weights: np.ndarray
    c_star: float
    lambda_u: float
    tangent: Optional[np.ndarray]
    risk_free_fraction: float
    expected_utility: float
    certainty_equivalent: float

    def to_dict(self) -> dict[str, Any]:
        return {"weights": [float(w) for w in self.weights], "c_star": float(self.c_star),
                "lambda_u": float(self.lambda_u),
                "tangent": None if self.tangent is None else [float(t) for t in self.tangent],
                "risk_free_fraction": float(self.risk_free_fraction),
                "expected_utility": float(self.expected_utility),
                "certainty_equivalent": float(self.certainty_equivalent)}


class GammaProfile:
    """Gamma(c) for a fixed (model, utility, W0, config).

    The quadrature nodes or Monte-Carlo draws are built once, so repeated
    evaluations at different c share them.
    """

    def __init__(self, model: NmvmModel, utility: Utility, w0: float,
                 cfg: GammaEvalConfig = GammaEvalConfig()):
        if not (w0 > 0 and math.isfinite(w0)):
            raise ParameterError(f"initial wealth must be positive, got {w0}")
        model.validate("concave").raise_if_failed()
        self.model, self.utility, self.w0, self.cfg = model, utility, float(w0), cfg
        self.eta = model.eta_coefficients()
        self.base = self.w0 * (1.0 + model.r_f)
        law = model.law
        if cfg.method == "quadrature":
            z, wz = law.quadrature(cfg.n_mixing)
            n, wn = np.polynomial.hermite_e.hermegauss(cfg.n_hermite)
            wn = wn / wn.sum()
            self._z = np.repeat(z, n.size)
            self._n = np.tile(n, z.size)
            self._w = np.outer(wz, wn).ravel()
            # nodes whose weight underflowed carry no mass but can overflow U
            keep = self._w > 0
            self._z, self._n, self._w = self._z[keep], self._n[keep], self._w[keep]
        else:
            rng = np.random.default_rng(cfg.seed)
            self._z = law.draw(rng, cfg.n_samples)
            self._n = rng.standard_normal(cfg.n_samples)
            self._w = None
        e = self.eta
        # eta at every node; wealth is base + c W0 eta
        self._eta = e.alpha + e.beta * self._z + e.sigma_eta * np.sqrt(self._z) * self._n

    def is_finite(self, c: float) -> bool:
        """Analytic test of Gamma(c) > -inf from the tail of U and the moments of Z."""
        if c == 0:
            return True
        u, e, law = self.utility, self.eta, self.model.law
        if isinstance(u, Exponential):
            k = u.a * c * self.w0
            return law.laplace_is_finite(k * e.beta - 0.5 * k * k * e.sigma_eta ** 2)
        p = u.left_tail_power
        if p is None or p == 0:
            return True
        if e.beta < 0:
            return law.moment_exists(p)
        if e.beta == 0:
            return law.moment_exists(0.5 * p)
        return True

    def _values(self, c: float) -> np.ndarray:
        return self.utility.eval(self.base + c * self.w0 * self._eta)

    def __call__(self, c: float) -> float:
        return self.evaluate(c)[0]

    def evaluate(self, c: float) -> tuple[float, float]:
        """(Gamma(c), standard error); the error is zero for quadrature and at c = 0."""
        if c < 0:
            raise ParameterError("c must be nonnegative")
        if c == 0:
            return float(self.utility.eval(self.base)), 0.0
        if self.cfg.check_integrability and not self.is_finite(c):
            return -math.inf, 0.0
        vals = self._values(c)
        if self._w is not None:
            # quadrature: the clip bounds each weighted contribution
            with np.errstate(invalid="ignore", over="ignore"):
                contrib = self._w * vals
            if not np.all(np.isfinite(contrib)) or np.max(np.abs(contrib)) > self.cfg.clip:
                return -math.inf, 0.0
            return float(contrib.sum()), 0.0
        if not np.all(np.isfinite(vals)) or np.max(np.abs(vals)) > self.cfg.clip:
            return -math.inf, 0.0
        return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(vals.size))


def gamma_value(model: NmvmModel, utility: Utility, w0: float, c: float,
                cfg: GammaEvalConfig = GammaEvalConfig()) -> float:
    return GammaProfile(model, utility, w0, cfg)(c)


def maximize_gamma(model: NmvmModel, utility: Utility, w0: float,
                   cfg: GammaEvalConfig = GammaEvalConfig(),
                   profile: Optional[GammaProfile] = None) -> float:
    """c* in argmax over c >= 0 of Gamma(c)."""
    prof = profile or GammaProfile(model, utility, w0, cfg)
    cs = [0.0, 1.0]
    vals = [prof(0.0), prof(1.0)]
    falls = 1 if vals[1] < vals[0] else 0
    # a concave profile stays at -inf beyond the first -inf point
    while falls < 2 and vals[-1] > -math.inf:
        c = cs[-1] * 2.0
        if c > _C_MAX:
            raise DegenerateModelError("Gamma keeps increasing: no finite optimal portfolio")
        cs.append(c)
        vals.append(prof(c))
        falls = falls + 1 if vals[-1] < vals[-2] else 0
    j = int(np.argmax(vals))
    lo = cs[j - 1] if j > 0 else 0.0
    hi = cs[j + 1]
    c_best, v_best = golden_max(prof, lo, hi, xtol=1e-10)
    if cs[j] > 0 and vals[j] > v_best:
        c_best, v_best = cs[j], vals[j]
    if not math.isfinite(v_best):
        raise DegenerateModelError(
            "Gamma(c) = -inf for every c > 0: expected utility is -inf for any risky position")
    if v_best <= vals[0] + 1e-14 * abs(vals[0]):
        return 0.0
    return c_best


def optimal_portfolio(model: NmvmModel, utility: Utility, w0: float,
                      cfg: GammaEvalConfig = GammaEvalConfig()) -> ConcaveSolution:
    prof = GammaProfile(model, utility, w0, cfg)
    c_star = maximize_gamma(model, utility, w0, cfg, profile=prof)
    v = model.excess_vector()
    si_v = model.solve(v)
    q = float(v @ si_v)
    ones_si_v = float(si_v.sum())
    weights = (c_star / q) * si_v
    tangent = si_v / ones_si_v if ones_si_v != 0 else None
    eu = prof(c_star)
    return ConcaveSolution(weights=weights, c_star=c_star, lambda_u=ones_si_v / q * c_star,
                           tangent=tangent, risk_free_fraction=1.0 - float(weights.sum()),
                           expected_utility=eu, certainty_equivalent=certainty_equivalent(utility, eu))


@dataclass(frozen=True)
class RouteComparison:
    """Closed-form exponential optimum against the Gamma-route optimum."""

    closed: np.ndarray
    gamma_route: Optional[np.ndarray]
    cosine: float
    max_rel_diff: float
    error: Optional[str] = None


def compare_exponential_routes(model: NmvmModel, a: float, w0: float,
                               cfg: GammaEvalConfig = GammaEvalConfig()) -> RouteComparison:
    """Both exponential-utility solutions side by side.

    The closed form lies in span(Sigma^-1 gamma, Sigma^-1 e) while the Gamma
    route is restricted to the ray through Sigma^-1 v; they coincide for
    Gaussian models but not in general, so the divergence is measured and
    reported instead of assumed away.
    """
    closed = exp_opt.global_optimal(model, a, w0).weights
    try:
        other = optimal_portfolio(model, Exponential(a), w0, cfg).weights
    except DegenerateModelError as exc:
        return RouteComparison(closed, None, math.nan, math.inf, str(exc))
    den = float(np.linalg.norm(closed) * np.linalg.norm(other))
    cos = float(closed @ other) / den if den > 0 else math.nan
    rel = float(np.max(np.abs(other - closed) / np.maximum(np.abs(closed), 1e-300)))
    return RouteComparison(closed, other, cos, rel)


# -- tangent portfolios and frontiers -------------------------------------------------

def tangent_skew(model: NmvmModel) -> np.ndarray:
    """Unit-sum normalization of Sigma^-1 v."""
    si_v = model.solve(model.excess_vector())
    den = float(si_v.sum())
    if den == 0:
        raise DegenerateModelError("1^T Sigma^-1 v = 0: the tangent portfolio is undefined")
    return si_v / den


def tangent_mv(mean: Sequence[float], cov, r_f: float) -> np.ndarray:
    """Classical tangency portfolio for mean vector ``mean`` and covariance ``cov``."""
    mean = np.asarray(mean, dtype=float).ravel()
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (mean.size, mean.size):
        raise ParameterError("covariance shape does not match the mean vector")
    try:
        fac = linalg.cho_factor(cov, lower=True)
    except linalg.LinAlgError as exc:
        raise ParameterError("covariance is not positive definite") from exc
    w = linalg.cho_solve(fac, mean - r_f)
    den = float(w.sum())
    if den == 0:
        raise DegenerateModelError("1^T Omega^-1 (m - 1 r_f) = 0: the tangent portfolio is undefined")
    return w / den


def nmvm_mean_cov(model: NmvmModel) -> Optional[tuple[np.ndarray, np.ndarray]]:
    """Mean and covariance of X, or ``None`` when Var Z is infinite."""
    mom = model.law.moments()
    if not (math.isfinite(mom.mean) and math.isfinite(mom.variance)):
        return None
    mean = model.mu + model.gamma * mom.mean
    cov = mom.variance * np.outer(model.gamma, model.gamma) + mom.mean * model.sigma
    return mean, cov


def nmvm_tangent_mv(model: NmvmModel) -> tuple[Optional[np.ndarray], Optional[str]]:
    """(tangent, None) when the covariance exists, else (None, notice)."""
    mc = nmvm_mean_cov(model)
    if mc is None:
        return None, MV_NOT_REPRODUCIBLE
    return tangent_mv(mc[0], mc[1], model.r_f), None


@dataclass(frozen=True)
class FrontierRow:
    kind: str
    c: float
    std: float
    mean: float


def frontier(model: NmvmModel, w0: float, n_points: int = 50,
             c_range: tuple[float, float] = (0.0, 0.05)) -> tuple[list[FrontierRow], Optional[str]]:
    """Wealth (std, mean) along both capital lines, indexed by the excess mean c.

    The skew line uses the return vector with mean mu + gamma E Z and covariance
    Sigma; the mean-variance line uses the true mean and covariance of X and is
    omitted (with a notice) when Var Z is infinite.
    """
    if n_points < 1:
        raise ParameterError("n_points must be positive")
    base = w0 * (1.0 + model.r_f)
    cs = np.linspace(c_range[0], c_range[1], n_points)
    v = model.excess_vector()
    q = float(v @ model.solve(v))
    rows = [FrontierRow("skew", float(c), float(w0 * c / math.sqrt(q)), float(base + w0 * c))
            for c in cs]
    mc = nmvm_mean_cov(model)
    if mc is None:
        return rows, MV_NOT_REPRODUCIBLE
    em = mc[0] - model.r_f
    q_mv = float(em @ linalg.cho_solve(linalg.cho_factor(mc[1], lower=True), em))
    rows += [FrontierRow("mv", float(c), float(w0 * c / math.sqrt(q_mv)), float(base + w0 * c))
             for c in cs]
    return rows, None


def frontier_point(model: NmvmModel, w0: float, weights: Sequence[float]) -> FrontierRow:
    """(std, mean) of a portfolio measured like the skew line."""
    x = np.asarray(weights, dtype=float)
    c = float(x @ model.excess_vector())
    std = w0 * float(np.linalg.norm(model.chol.T @ x))
    return FrontierRow("optimal", c, std, float(w0 * (1.0 + model.r_f) + w0 * c))
