"""One-period market with NMVM distributed risky returns.

Returns are ``X = mu + gamma Z + sqrt(Z) A N_d`` with ``Sigma = A A^T`` and a
risk-free rate ``r_f`` per period.  Terminal wealth of a portfolio ``x`` (money
fractions of ``W0`` in the risky assets) is

    W(x) = W0 (1 + r_f) + W0 x^T (X - 1 r_f).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy import linalg

from .errors import ParameterError, UnsupportedModelError, ValidationError
from .mixing import Dirac, MixingLaw, law_from_dict

PIVOT_RTOL = 1e-12
SYMMETRY_RTOL = 1e-10


@dataclass(frozen=True)
class ModelScalars:
    """Quadratic forms in the inverse dispersion metric."""

    A: float  # gamma' Sigma^-1 gamma
    B: float  # gamma' Sigma^-1 e
    C: float  # e' Sigma^-1 e, with e = mu - 1 r_f


@dataclass(frozen=True)
class WealthProjection:
    """``x^T (X - 1 r_f)`` has the law of ``a0 + a1 Z + a2 sqrt(Z) N``."""

    a0: float
    a1: float
    a2: float


@dataclass(frozen=True)
class EtaCoefficients:
    """Coefficients of the scalar return ``eta = alpha + beta Z + sigma_eta sqrt(Z) N``
    earned per unit of excess mean along the optimal ray."""

    alpha: float
    beta: float
    sigma_eta: float


@dataclass
class ValidationReport:
    level: str
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def raise_if_failed(self) -> None:
        if self.failures:
            raise ValidationError(self)


@dataclass(frozen=True, eq=False)
class NmvmModel:
    mu: np.ndarray
    gamma: np.ndarray
    sigma: np.ndarray
    r_f: float
    law: MixingLaw = field(default_factory=Dirac)
    chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float).ravel()
        gamma = np.array(self.gamma, dtype=float).ravel()
        sigma = np.array(self.sigma, dtype=float)
        d = mu.size
        if d < 1:
            raise ParameterError("model needs at least one risky asset")
        if gamma.shape != (d,) or sigma.shape != (d, d):
            raise ParameterError(f"dimension mismatch: mu {mu.shape}, gamma {gamma.shape}, "
                                 f"sigma {sigma.shape}")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(gamma))
                and np.all(np.isfinite(sigma)) and math.isfinite(self.r_f)):
            raise ParameterError("model parameters must be finite")
        scale = max(float(np.max(np.abs(sigma))), 1e-300)
        if np.max(np.abs(sigma - sigma.T)) > SYMMETRY_RTOL * scale:
            raise ParameterError("sigma must be symmetric")
        sigma = 0.5 * (sigma + sigma.T)
        try:
            chol = linalg.cholesky(sigma, lower=True)
        except linalg.LinAlgError as exc:
            raise ParameterError("sigma is not positive definite") from exc
        if np.min(np.diag(chol)) ** 2 <= PIVOT_RTOL * np.max(np.diag(sigma)):
            raise ParameterError("sigma is numerically singular (Cholesky pivot too small)")
        for arr in (mu, gamma, sigma, chol):
            arr.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "r_f", float(self.r_f))
        object.__setattr__(self, "chol", chol)

    @property
    def d(self) -> int:
        return self.mu.size

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Sigma^-1 rhs through the stored Cholesky factor."""
        return linalg.cho_solve((self.chol, True), rhs)

    @property
    def excess_mean(self) -> np.ndarray:
        """e = mu - 1 r_f."""
        return self.mu - self.r_f

    # -- validation ----------------------------------------------------------
    def validate(self, level: str = "exponential") -> ValidationReport:
        if level not in ("exponential", "concave"):
            raise ParameterError(f"unknown validation level {level!r}")
        rep = ValidationReport(level)
        e = self.excess_mean
        if not np.any(e != 0):
            rep.failures.append("mu - 1 r_f must be nonzero")
        if level == "concave":
            ez = self.law.moment(1.0)
            if not math.isfinite(ez):
                msg = "E Z is infinite: the concave problem is ill-posed"
                if np.any(self.gamma != 0):
                    msg += (" (expected utility is -inf for any short position on the"
                            " skewness direction)")
                rep.failures.append(msg)
            else:
                v = e + self.gamma * ez
                if not np.any(v != 0):
                    rep.failures.append("mu - 1 r_f + gamma E Z must be nonzero")
        return rep

    # -- derived quantities ----------------------------------------------------
    def scalars(self) -> ModelScalars:
        e = self.excess_mean
        si_g = self.solve(self.gamma)
        si_e = self.solve(e)
        return ModelScalars(A=float(self.gamma @ si_g), B=float(self.gamma @ si_e),
                            C=float(e @ si_e))

    def excess_vector(self) -> np.ndarray:
        """v = mu - 1 r_f + gamma E Z."""
        ez = self.law.moment(1.0)
        if not math.isfinite(ez):
            raise UnsupportedModelError("E Z is infinite; the excess vector is undefined")
        return self.excess_mean + self.gamma * ez

    def wealth_projection(self, x: Sequence[float]) -> WealthProjection:
        x = self._portfolio(x)
        return WealthProjection(a0=float(x @ self.excess_mean), a1=float(x @ self.gamma),
                                a2=float(np.linalg.norm(self.chol.T @ x)))

    def eta_coefficients(self) -> EtaCoefficients:
        v = self.excess_vector()
        si_v = self.solve(v)
        q = float(v @ si_v)
        return EtaCoefficients(alpha=float(si_v @ self.excess_mean) / q,
                               beta=float(si_v @ self.gamma) / q,
                               sigma_eta=1.0 / math.sqrt(q))

    def _portfolio(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.shape != (self.d,):
            raise ParameterError(f"portfolio has length {x.size}, model has {self.d} assets")
        if not np.all(np.isfinite(x)):
            raise ParameterError("portfolio weights must be finite")
        return x

    # -- sampling --------------------------------------------------------------
    def sample_returns(self, seed: int, n: int) -> np.ndarray:
        """n x d matrix of return draws."""
        z, nrm = self.sample_factors(seed, n)
        return self.returns_from_factors(z, nrm)

    def sample_factors(self, seed: int, n: int) -> tuple[np.ndarray, np.ndarray]:
        """The (Z, N_d) streams behind ``sample_returns``."""
        if n < 1:
            raise ParameterError("sample size must be at least 1")
        rng = np.random.default_rng(seed)
        z = self.law.draw(rng, n)
        nrm = rng.standard_normal((n, self.d))
        return z, nrm

    def returns_from_factors(self, z: np.ndarray, nrm: np.ndarray) -> np.ndarray:
        return self.mu + np.outer(z, self.gamma) + np.sqrt(z)[:, None] * (nrm @ self.chol.T)

    def submodel(self, idx: Sequence[int]) -> "NmvmModel":
        idx = np.asarray(idx, dtype=int)
        return NmvmModel(self.mu[idx], self.gamma[idx], self.sigma[np.ix_(idx, idx)],
                         self.r_f, self.law)

    def with_rate(self, r_f: float) -> "NmvmModel":
        return NmvmModel(self.mu, self.gamma, self.sigma, r_f, self.law)

    # -- serialization ----------------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        return {"d": self.d, "mu": self.mu.tolist(), "gamma": self.gamma.tolist(),
                "sigma": self.sigma.tolist(), "r_f": self.r_f, "law": self.law.to_dict()}

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "NmvmModel":
        try:
            mu, gamma, sigma = doc["mu"], doc["gamma"], doc["sigma"]
        except KeyError as exc:
            raise ParameterError(f"model document is missing {exc.args[0]!r}") from exc
        law = law_from_dict(doc["law"]) if "law" in doc else Dirac(1.0)
        model = cls(mu, gamma, sigma, float(doc.get("r_f", 0.0)), law)
        if "d" in doc and int(doc["d"]) != model.d:
            raise ParameterError(f"d = {doc['d']} does not match mu of length {model.d}")
        return model
