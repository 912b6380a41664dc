"""Mixing laws Z for normal mean-variance mixtures.

A mixing law is the non-negative scalar random variable in

    X = mu + gamma * Z + sqrt(Z) * A @ N_d.

Every law exposes its Laplace transform ``L(s) = E exp(-s Z)`` (with ``+inf``
as an ordinary return value where the transform diverges), the critical value
below which the transform is infinite, exact moments, a seeded sampler and a
quadrature rule used for deterministic expectations.

GIG parametrization follows the density

    f(z) = (b/a)^(lam/2) z^(lam-1) / (2 K_lam(sqrt(a b))) exp(-(a/z + b z)/2),

so ``a`` pairs with ``1/z`` and ``b`` with ``z``.  Gamma(lam, b) is GIG(lam, 0, b)
(shape ``lam``, rate ``b/2``), InverseGamma(alpha, beta) is GIG(-alpha, 2 beta, 0)
and InverseGaussian(a, b) is GIG(-1/2, a, b), whose mean is ``sqrt(a/b)``.

Finiteness of the transform at the critical value ``s_hat = -b/2`` for GIG laws
with ``a > 0, b > 0``: at ``s = -b/2`` the integrand reduces to
``z^(lam-1) exp(-a/(2z))``, integrable at infinity exactly when ``lam < 0``.  So
the inverse Gaussian (``lam = -1/2``) has a finite transform at ``s_hat`` while
``lam >= 0`` does not.  The tests check this against the limit ``s -> s_hat+``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, ClassVar

import numpy as np
from scipy import special, stats

from .errors import ParameterError

_TINY_ARG = 1e-280


def log_bessel_k(nu: float, x: float) -> float:
    """log K_nu(x) for real ``nu`` and ``x > 0``.

    Uses the exponentially scaled routine so large arguments do not underflow;
    for tiny arguments where K overflows the leading small-x term is used.
    """
    if x <= 0:
        raise ParameterError(f"Bessel K argument must be positive, got {x}")
    val = special.kve(nu, x)
    if np.isfinite(val) and val > 0:
        return math.log(val) - x
    anu = abs(nu)
    if anu == 0:
        return math.log(-math.log(x / 2) - np.euler_gamma)
    return special.gammaln(anu) - math.log(2.0) - anu * math.log(x / 2)


@dataclass(frozen=True)
class CriticalValue:
    """Infimum ``s_hat`` of the finiteness region of the Laplace transform."""

    s_hat: float
    finite_at_s_hat: bool


@dataclass(frozen=True)
class Moments:
    mean: float
    variance: float
    sqrt_mean: float


class MixingLaw:
    """Base class: subclasses are frozen dataclasses."""

    family: ClassVar[str] = ""

    # -- Laplace transform -------------------------------------------------
    def log_laplace(self, s: float) -> float:
        """log E exp(-s Z); ``+inf`` where the transform diverges."""
        raise NotImplementedError

    def laplace(self, s):
        """E exp(-s Z), vectorized over ``s``; ``+inf`` where it diverges."""
        if np.ndim(s) == 0:
            return _exp_ext(self.log_laplace(float(s)))
        arr = np.asarray(s, dtype=float)
        out = np.array([_exp_ext(self.log_laplace(float(v))) for v in arr.ravel()])
        return out.reshape(arr.shape)

    def critical_value(self) -> CriticalValue:
        raise NotImplementedError

    def laplace_is_finite(self, s: float) -> bool:
        cv = self.critical_value()
        if s > cv.s_hat:
            return True
        return s == cv.s_hat and cv.finite_at_s_hat

    # -- moments -----------------------------------------------------------
    def moment(self, r: float) -> float:
        """E Z^r for ``r > 0``; ``+inf`` when the moment does not exist."""
        raise NotImplementedError

    def moment_exists(self, r: float) -> bool:
        return bool(np.isfinite(self.moment(r)))

    def moments(self) -> Moments:
        m1 = self.moment(1.0)
        m2 = self.moment(2.0)
        var = m2 - m1 * m1 if np.isfinite(m2) else math.inf
        return Moments(mean=m1, variance=max(var, 0.0), sqrt_mean=self.moment(0.5))

    # -- sampling and quadrature --------------------------------------------
    def sample(self, seed: int, n: int) -> np.ndarray:
        if n < 1:
            raise ParameterError("sample size must be at least 1")
        return self.draw(np.random.default_rng(seed), n)

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def quadrature(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights (summing to one) for expectations over Z."""
        raise NotImplementedError

    # -- serialization -------------------------------------------------------
    def params(self) -> dict[str, float]:
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        return {"family": self.family, "params": self.params()}


def _exp_ext(logval: float) -> float:
    if logval == math.inf:
        return math.inf
    return math.exp(logval) if logval < 709.0 else math.inf


def _log_space_rule(logf, t_mode: float, n: int, depth: float = 60.0, panels: int = 16):
    """Composite Gauss-Legendre rule in t = log z for a log-density ``logf(t)``.

    The range is grown from the mode until the density falls ``depth`` nats
    below its peak.
    """
    cut = float(logf(np.array(t_mode))) - depth

    def edge(direction: float) -> float:
        step = 0.25
        while float(logf(np.array(t_mode + direction * step))) > cut:
            step *= 1.5
        return t_mode + direction * step

    lo, hi = edge(-1.0), edge(1.0)
    m = max(n // panels, 2)
    x, w = np.polynomial.legendre.leggauss(m)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    t_nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    w_nodes = (half[:, None] * w[None, :]).ravel()
    lf = logf(t_nodes)
    wts = w_nodes * np.exp(lf - lf.max())
    return np.exp(t_nodes), wts / wts.sum()


def _check_positive(**kw: float) -> None:
    for name, val in kw.items():
        if not (np.isfinite(val) and val > 0):
            raise ParameterError(f"{name} must be a positive finite number, got {val}")


@dataclass(frozen=True)
class Dirac(MixingLaw):
    """Point mass at ``point``; Dirac(1) turns the model into a Gaussian one."""

    point: float = 1.0
    family: ClassVar[str] = "dirac"

    def __post_init__(self):
        _check_positive(point=self.point)

    def log_laplace(self, s: float) -> float:
        return -s * self.point

    def critical_value(self) -> CriticalValue:
        return CriticalValue(-math.inf, True)

    def moment(self, r: float) -> float:
        return self.point**r

    def moments(self) -> Moments:
        return Moments(self.point, 0.0, math.sqrt(self.point))

    def draw(self, rng, n):
        return np.full(n, float(self.point))

    def quadrature(self, n):
        return np.array([float(self.point)]), np.array([1.0])

    def params(self):
        return {"point": float(self.point)}


@dataclass(frozen=True)
class Gamma(MixingLaw):
    """Gamma law with shape ``lam`` and rate ``b/2``."""

    lam: float
    b: float
    family: ClassVar[str] = "gamma"

    def __post_init__(self):
        _check_positive(lam=self.lam, b=self.b)

    def log_laplace(self, s: float) -> float:
        t = 2.0 * s / self.b
        if t <= -1.0:
            return math.inf
        return -self.lam * math.log1p(t)

    def critical_value(self) -> CriticalValue:
        return CriticalValue(-self.b / 2.0, False)

    def moment(self, r: float) -> float:
        return math.exp(special.gammaln(self.lam + r) - special.gammaln(self.lam)
                        + r * math.log(2.0 / self.b))

    def draw(self, rng, n):
        return rng.gamma(self.lam, 2.0 / self.b, size=n)

    def quadrature(self, n):
        t, w = special.roots_genlaguerre(n, self.lam - 1.0)
        return 2.0 * t / self.b, w / w.sum()

    def params(self):
        return {"lam": float(self.lam), "b": float(self.b)}


@dataclass(frozen=True)
class InverseGamma(MixingLaw):
    """Inverse gamma law, density proportional to z^(-alpha-1) exp(-beta/z)."""

    alpha: float
    beta: float
    family: ClassVar[str] = "inverse_gamma"

    def __post_init__(self):
        _check_positive(alpha=self.alpha, beta=self.beta)

    def log_laplace(self, s: float) -> float:
        if s < 0:
            return math.inf
        x = 2.0 * math.sqrt(self.beta * s)
        if x < _TINY_ARG:
            return 0.0
        return (math.log(2.0) - special.gammaln(self.alpha)
                + self.alpha * math.log(x / 2.0) + log_bessel_k(self.alpha, x))

    def critical_value(self) -> CriticalValue:
        return CriticalValue(0.0, True)

    def moment(self, r: float) -> float:
        if r >= self.alpha:
            return math.inf
        return math.exp(r * math.log(self.beta) + special.gammaln(self.alpha - r)
                        - special.gammaln(self.alpha))

    def draw(self, rng, n):
        return self.beta / rng.gamma(self.alpha, 1.0, size=n)

    def quadrature(self, n):
        # the right tail is polynomial, so a Laguerre rule in 1/Z misses the
        # mean; integrate over log Z instead
        alpha, beta = self.alpha, self.beta

        def logf(t):
            return -alpha * t - beta * np.exp(-t)

        return _log_space_rule(logf, math.log(beta / alpha), n)

    def params(self):
        return {"alpha": float(self.alpha), "beta": float(self.beta)}


@dataclass(frozen=True)
class GIG(MixingLaw):
    """Generalized inverse Gaussian law GIG(lam, a, b).

    Admissible parameters: ``lam > 0`` needs ``b > 0`` (``a >= 0``);
    ``lam = 0`` needs ``a, b > 0``; ``lam < 0`` needs ``a > 0`` (``b >= 0``).
    The boundary cases ``a = 0`` and ``b = 0`` are the gamma and inverse
    gamma laws and are evaluated through them.
    """

    lam: float
    a: float
    b: float
    family: ClassVar[str] = "gig"

    def __post_init__(self):
        lam, a, b = self.lam, self.a, self.b
        if not all(np.isfinite(v) for v in (lam, a, b)) or a < 0 or b < 0:
            raise ParameterError(f"GIG parameters must be finite with a, b >= 0: {lam, a, b}")
        if lam > 0 and not b > 0:
            raise ParameterError("GIG with lam > 0 requires b > 0")
        if lam == 0 and not (a > 0 and b > 0):
            raise ParameterError("GIG with lam = 0 requires a > 0 and b > 0")
        if lam < 0 and not a > 0:
            raise ParameterError("GIG with lam < 0 requires a > 0")

    @property
    def _reduced(self) -> MixingLaw | None:
        if self.a == 0:
            return Gamma(self.lam, self.b)
        if self.b == 0:
            return InverseGamma(-self.lam, self.a / 2.0)
        return None

    @property
    def _omega(self) -> float:
        return math.sqrt(self.a * self.b)

    def log_laplace(self, s: float) -> float:
        red = self._reduced
        if red is not None:
            return red.log_laplace(s)
        lam, a, b = self.lam, self.a, self.b
        bs = b + 2.0 * s
        if bs < 0:
            return math.inf
        if bs == 0:
            if lam >= 0:
                return math.inf
            return (0.5 * lam * math.log(b / a) - math.log(2.0) - log_bessel_k(lam, self._omega)
                    + special.gammaln(-lam) + lam * math.log(a / 2.0))
        return (0.5 * lam * math.log(b / bs) + log_bessel_k(lam, math.sqrt(a * bs))
                - log_bessel_k(lam, self._omega))

    def critical_value(self) -> CriticalValue:
        red = self._reduced
        if red is not None:
            return red.critical_value()
        return CriticalValue(-self.b / 2.0, self.lam < 0)

    def moment(self, r: float) -> float:
        red = self._reduced
        if red is not None:
            return red.moment(r)
        w = self._omega
        return math.exp(0.5 * r * math.log(self.a / self.b) + log_bessel_k(self.lam + r, w)
                        - log_bessel_k(self.lam, w))

    def draw(self, rng, n):
        red = self._reduced
        if red is not None:
            return red.draw(rng, n)
        return stats.geninvgauss.rvs(self.lam, self._omega, scale=math.sqrt(self.a / self.b),
                                     size=n, random_state=rng)

    def quadrature(self, n):
        red = self._reduced
        if red is not None:
            return red.quadrature(n)
        lam, a, b = self.lam, self.a, self.b

        def logf(t):
            return lam * t - 0.5 * (a * np.exp(-t) + b * np.exp(t))

        t_mode = math.log((lam + math.sqrt(lam * lam + a * b)) / b)
        return _log_space_rule(logf, t_mode, n)

    def params(self):
        return {"lam": float(self.lam), "a": float(self.a), "b": float(self.b)}


@dataclass(frozen=True)
class InverseGaussian(GIG):
    """Inverse Gaussian law GIG(-1/2, a, b): mean ``sqrt(a/b)``, shape ``a``."""

    lam: float = -0.5
    a: float = 1.0
    b: float = 1.0
    family: ClassVar[str] = "inverse_gaussian"

    def __init__(self, a: float, b: float):
        object.__setattr__(self, "lam", -0.5)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        _check_positive(a=a, b=b)
        self.__post_init__()

    def draw(self, rng, n):
        return rng.wald(math.sqrt(self.a / self.b), self.a, size=n)

    def params(self):
        return {"a": float(self.a), "b": float(self.b)}

    def __repr__(self):
        return f"InverseGaussian(a={self.a!r}, b={self.b!r})"


_FAMILIES: dict[str, type[MixingLaw]] = {
    cls.family: cls for cls in (Dirac, Gamma, InverseGamma, InverseGaussian, GIG)
}


def law_from_dict(doc: dict[str, Any]) -> MixingLaw:
    """Build a law from ``{"family": ..., "params": {...}}``."""
    try:
        cls = _FAMILIES[doc["family"]]
    except KeyError as exc:
        raise ParameterError(f"unknown mixing family {doc.get('family')!r}; "
                             f"expected one of {sorted(_FAMILIES)}") from exc
    params = doc.get("params", {})
    try:
        return cls(**{k: float(v) for k, v in params.items()})
    except TypeError as exc:
        raise ParameterError(f"bad parameters for {doc['family']}: {params}") from exc
