"""Exponential utility U(w) = -exp(-a w) under NMVM returns.

For a portfolio x the expected utility factorizes as

    EU(x) = -exp(-k (1 + r_f)) exp(-k x^T e) L_Z(g(x)),
    g(x)  = k x^T gamma - (k^2 / 2) x^T Sigma x,        k = a W0, e = mu - 1 r_f,

and the unconstrained optimum is x* = (Sigma^-1 gamma - q Sigma^-1 e) / k where
q minimizes the strictly convex Q(theta) = exp(C theta) L_Z(A/2 - theta^2 C/2)
over the interval Theta = {|theta| <= theta_hat}, theta_hat = sqrt((A - 2 s_hat)/C).

All comparisons are carried out on log(-EU) so large ``a W0`` never overflows.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from ._search import golden_min
from .errors import DegenerateModelError, NumericalError, ParameterError, UnsupportedModelError
from .market_model import NmvmModel

MAX_SHORT_SALES_ASSETS = 20
POSITIVITY_TOL = 1e-12
_ENDPOINT_RTOL = 1e-12


@dataclass(frozen=True)
class ThetaDomain:
    theta_hat: float
    closed: bool

    def contains(self, theta: float) -> bool:
        if self.closed:
            return abs(theta) <= self.theta_hat
        return abs(theta) < self.theta_hat


@dataclass(frozen=True)
class ExpSolution:
    weights: np.ndarray
    q_min: Optional[float]
    expected_utility: float
    risk_aversion: float
    initial_wealth: float
    log_neg_expected_utility: float
    active_set: tuple[int, ...] = ()
    binding: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {"weights": [float(w) for w in self.weights],
                "q_min": None if self.q_min is None else float(self.q_min),
                "expected_utility": float(self.expected_utility),
                "log_neg_expected_utility": float(self.log_neg_expected_utility),
                "active_set": list(self.active_set),
                "binding": bool(self.binding)}


def _check_aw(a: float, w0: float) -> float:
    if not (a > 0 and math.isfinite(a)):
        raise ParameterError(f"risk aversion must be positive, got {a}")
    if not (w0 > 0 and math.isfinite(w0)):
        raise ParameterError(f"initial wealth must be positive, got {w0}")
    return a * w0


def _require_exponential(model: NmvmModel) -> None:
    model.validate("exponential").raise_if_failed()


# -- Theta and Q ----------------------------------------------------------------

def theta_domain(model: NmvmModel) -> ThetaDomain:
    _require_exponential(model)
    cv = model.law.critical_value()
    if cv.s_hat == -math.inf:
        return ThetaDomain(math.inf, False)
    sc = model.scalars()
    return ThetaDomain(math.sqrt(max(sc.A - 2.0 * cv.s_hat, 0.0) / sc.C), cv.finite_at_s_hat)


def _laplace_arg(model: NmvmModel, dom: ThetaDomain, theta: float) -> float:
    sc = model.scalars()
    s = 0.5 * sc.A - 0.5 * theta * theta * sc.C
    # on a closed endpoint snap rounding error back onto s_hat
    if dom.closed and abs(theta) <= dom.theta_hat * (1 + _ENDPOINT_RTOL):
        s = max(s, model.law.critical_value().s_hat)
    return s


def log_q(model: NmvmModel, theta: float) -> float:
    """log Q(theta); ``+inf`` outside the finiteness region."""
    dom = theta_domain(model)
    sc = model.scalars()
    return sc.C * theta + model.law.log_laplace(_laplace_arg(model, dom, theta))


def q_function(model: NmvmModel, theta: float) -> float:
    lq = log_q(model, theta)
    return math.inf if lq > 709.0 else math.exp(lq)


def minimize_q(model: NmvmModel) -> tuple[float, float]:
    """Minimizer of Q over Theta and the minimum value."""
    dom = theta_domain(model)
    sc = model.scalars()
    law = model.law

    def f(theta: float) -> float:
        return sc.C * theta + law.log_laplace(_laplace_arg(model, dom, theta))

    if dom.theta_hat == 0.0:
        return 0.0, math.exp(f(0.0))
    if math.isinf(dom.theta_hat):
        lo, hi = -1.0, 1.0
        f0 = f(0.0)
        while f(lo) <= f0 or f(hi) <= f0:
            if f(lo) <= f0:
                lo *= 2.0
            if f(hi) <= f0:
                hi *= 2.0
            if hi - lo > 1e300:
                raise NumericalError("Q minimizer escaped every bracket")
    else:
        lo, hi = -dom.theta_hat, dom.theta_hat
    theta, val = golden_min(f, lo, hi, xtol=1e-10)
    if dom.closed:
        for end in (-dom.theta_hat, dom.theta_hat):
            fe = f(end)
            if fe < val:
                theta, val = end, fe
    if not math.isfinite(val):
        raise NumericalError("Q is infinite on the whole domain")
    return theta, math.exp(val) if val < 709.0 else math.inf


# -- expected utility -------------------------------------------------------------

def log_neg_expected_utility(model: NmvmModel, a: float, w0: float, x) -> float:
    """log(-EU(x)) for exponential utility; ``+inf`` when EU = -inf."""
    k = _check_aw(a, w0)
    pr = model.wealth_projection(x)
    s = _snap(model, k * pr.a1, 0.5 * k * k * pr.a2 * pr.a2)
    return -k * (1.0 + model.r_f) - k * pr.a0 + model.law.log_laplace(s)


def _snap(model: NmvmModel, linear: float, quad: float) -> float:
    # portfolios on the boundary of Theta land on s_hat only up to rounding
    s = linear - quad
    cv = model.law.critical_value()
    if cv.finite_at_s_hat and s < cv.s_hat:
        if cv.s_hat - s <= 1e-11 * (abs(cv.s_hat) + abs(linear) + quad):
            return cv.s_hat
    return s


def exp_expected_utility(model: NmvmModel, a: float, w0: float, x) -> float:
    ln = log_neg_expected_utility(model, a, w0, x)
    if ln > 709.0:
        return -math.inf
    return -math.exp(ln)


def _eu_from_log(ln: float) -> float:
    if ln > 709.0:
        raise NumericalError(f"expected utility overflows: log(-EU) = {ln:.6g}")
    return -math.exp(ln)


# -- unconstrained and hyperplane solutions ---------------------------------------------

def _closed_form(model: NmvmModel, k: float, q: float) -> np.ndarray:
    return (model.solve(model.gamma) - q * model.solve(model.excess_mean)) / k


def global_optimal(model: NmvmModel, a: float, w0: float) -> ExpSolution:
    k = _check_aw(a, w0)
    q, _ = minimize_q(model)
    x = _closed_form(model, k, q)
    ln = log_neg_expected_utility(model, a, w0, x)
    return ExpSolution(x, q, _eu_from_log(ln), a, w0, ln)


def log_neg_eu_closed_form(model: NmvmModel, a: float, w0: float, q: float) -> float:
    """log(-EU) of the closed-form portfolio at ``q`` via B and log Q."""
    k = _check_aw(a, w0)
    sc = model.scalars()
    return -k * (1.0 + model.r_f) - sc.B + log_q(model, q)


def hyperplane_optimal(model: NmvmModel, a: float, w0: float, c: float) -> tuple[np.ndarray, float]:
    """Best portfolio on {x : x^T (mu - 1 r_f) = c} and its ``q_c``."""
    k = _check_aw(a, w0)
    _require_exponential(model)
    sc = model.scalars()
    q = (sc.B - k * c) / sc.C
    return _closed_form(model, k, q), q


# -- short-sales constraint --------------------------------------------------------

def _subset_candidate(model: NmvmModel, idx: tuple[int, ...], k: float) -> np.ndarray:
    sub = model.submodel(idx)
    if not np.any(sub.excess_mean != 0):
        # only the Laplace factor remains; it is smallest where g is largest
        return sub.solve(sub.gamma) / k
    q, _ = minimize_q(sub)
    return _closed_form(sub, k, q)


def short_sales_optimal(model: NmvmModel, a: float, w0: float) -> ExpSolution:
    """Optimum over the nonnegative orthant by enumeration of supports."""
    k = _check_aw(a, w0)
    _require_exponential(model)
    d = model.d
    if d > MAX_SHORT_SALES_ASSETS:
        raise UnsupportedModelError(
            f"short-sales enumeration supports at most {MAX_SHORT_SALES_ASSETS} assets, got {d}")
    zero = np.zeros(d)
    best_key = (log_neg_expected_utility(model, a, w0, zero), 0, ())
    best_x = zero
    for size in range(1, d + 1):
        for idx in itertools.combinations(range(d), size):
            xj = _subset_candidate(model, idx, k)
            if not np.all(xj > POSITIVITY_TOL):
                continue
            x = np.zeros(d)
            x[list(idx)] = xj
            key = (log_neg_expected_utility(model, a, w0, x), size, idx)
            if key < best_key:
                best_key, best_x = key, x
    ln, _, support = best_key
    q = None
    if len(support) == d:
        q = minimize_q(model)[0]
    active = tuple(i for i in range(d) if i not in support)
    return ExpSolution(best_x, q, _eu_from_log(ln), a, w0, ln, active_set=active)


# -- expected-wealth floor ----------------------------------------------------------

@dataclass
class _FloorLine:
    """Affine family x(c) = x0 + c x1 solving the two-constraint problem."""

    x0: np.ndarray
    x1: np.ndarray
    g: np.ndarray = field(default_factory=lambda: np.zeros(3))  # g(c) = g0 + g1 c + g2 c^2


def _floor_line(model: NmvmModel, k: float, v: np.ndarray, r: float) -> Optional[_FloorLine]:
    e = model.excess_mean
    m = np.column_stack([e, v])
    si_m = model.solve(m)
    gram = m.T @ si_m
    if np.linalg.det(gram) <= 1e-12 * gram[0, 0] * gram[1, 1]:
        return None
    h = si_m.T @ model.gamma
    si_g = model.solve(model.gamma)
    # x(t) = (Sigma^-1 gamma)/k - Sigma^-1 M G^-1 (h/k - t),  t = (c, r)
    base = si_g / k - si_m @ np.linalg.solve(gram, h / k - np.array([0.0, r]))
    slope = si_m @ np.linalg.solve(gram, np.array([1.0, 0.0]))
    sx0 = model.sigma @ base
    sx1 = model.sigma @ slope
    g0 = k * base @ model.gamma - 0.5 * k * k * base @ sx0
    g1 = k * slope @ model.gamma - k * k * base @ sx1
    g2 = -0.5 * k * k * slope @ sx1
    return _FloorLine(base, slope, np.array([g0, g1, g2]))


def wealth_floor_optimal(model: NmvmModel, a: float, w0: float, floor: float) -> ExpSolution:
    """Optimum subject to E W(x) >= ``floor``."""
    k = _check_aw(a, w0)
    model.validate("concave").raise_if_failed()
    v = model.excess_vector()
    r = (floor - w0 * (1.0 + model.r_f)) / w0
    free = global_optimal(model, a, w0)
    if free.weights @ v >= r:
        return free

    line = _floor_line(model, k, v, r)
    if line is None:
        # v is parallel to mu - 1 r_f: the floor fixes x^T e directly
        sc = model.scalars()
        ratio = float(v @ model.solve(model.excess_mean)) / sc.C
        x, q = hyperplane_optimal(model, a, w0, r / ratio)
        ln = log_neg_expected_utility(model, a, w0, x)
        return ExpSolution(x, q, _eu_from_log(ln), a, w0, ln, binding=True)

    cv = model.law.critical_value()
    g0, g1, g2 = line.g
    base = -k * (1.0 + model.r_f)

    def phi(c: float) -> float:
        s = g0 + g1 * c + g2 * c * c
        return base - k * c + model.law.log_laplace(s)

    lo, hi = _floor_interval(phi, g0, g1, g2, cv.s_hat, cv.finite_at_s_hat)
    c_best, val = _unimodal_min(phi, lo, hi)
    if cv.s_hat > -math.inf and cv.finite_at_s_hat:
        for end in (lo, hi):
            fe = phi(end)
            if fe < val:
                c_best, val = end, fe
    if not math.isfinite(val):
        raise DegenerateModelError("expected utility is -inf on the whole wealth-floor boundary")
    x = line.x0 + c_best * line.x1
    ln = log_neg_expected_utility(model, a, w0, x)
    return ExpSolution(x, None, _eu_from_log(ln), a, w0, ln, binding=True)


def _floor_interval(phi, g0, g1, g2, s_hat, closed) -> tuple[float, float]:
    if s_hat > -math.inf:
        if g2 >= 0:
            raise NumericalError("wealth-floor profile is not strictly concave in c")
        disc = g1 * g1 - 4.0 * g2 * (g0 - s_hat)
        if disc < 0:
            raise DegenerateModelError("expected utility is -inf on the whole wealth-floor boundary")
        root = math.sqrt(disc)
        c1 = (-g1 + root) / (2.0 * g2)
        c2 = (-g1 - root) / (2.0 * g2)
        return min(c1, c2), max(c1, c2)
    # unbounded domain: grow a bracket around the vertex of g until phi rises on both sides
    centre = -g1 / (2.0 * g2) if g2 < 0 else 0.0
    width = max(1.0, abs(centre))
    fc = phi(centre)
    lo, hi = centre - width, centre + width
    step_lo = step_hi = width
    for _ in range(2000):
        grow_lo, grow_hi = phi(lo) <= fc, phi(hi) <= fc
        if not (grow_lo or grow_hi):
            return lo, hi
        if grow_lo:
            step_lo *= 2.0
            lo = centre - step_lo
        if grow_hi:
            step_hi *= 2.0
            hi = centre + step_hi
    raise NumericalError("could not bracket the wealth-floor optimum")


def _unimodal_min(phi, lo: float, hi: float, n_scan: int = 64) -> tuple[float, float]:
    """Golden search guarded by a unimodality scan; dense scan if the scan fails."""
    grid = np.linspace(lo, hi, n_scan)
    vals = np.array([phi(c) for c in grid])
    if _is_unimodal(vals):
        return golden_min(phi, lo, hi, xtol=1e-12)
    dense = np.linspace(lo, hi, 4096)
    dvals = np.array([phi(c) for c in dense])
    i = int(np.argmin(dvals))
    j0, j1 = max(i - 1, 0), min(i + 1, dense.size - 1)
    return golden_min(phi, dense[j0], dense[j1], xtol=1e-12)


def _is_unimodal(vals: np.ndarray) -> bool:
    finite = np.isfinite(vals)
    if not finite.any():
        return True
    idx = np.flatnonzero(finite)
    if np.any(np.diff(idx) != 1):
        return False
    f = vals[idx]
    i = int(np.argmin(f))
    slack = 1e-12 * max(1.0, float(np.max(np.abs(f))))
    return bool(np.all(np.diff(f[: i + 1]) <= slack) and np.all(np.diff(f[i:]) >= -slack))
