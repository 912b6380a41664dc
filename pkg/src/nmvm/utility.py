"""Utility functions of terminal wealth.

Each family evaluates vectorized over numpy arrays and carries analytic flags:
concavity, strict concavity, boundedness from above and divergence to -inf as
wealth goes to -inf.  ``left_tail_power`` is the exponent p with
U(w) ~ -|w|^p as w -> -inf, which decides integrability against heavy-tailed
wealth (``None`` for the exponential family, whose tail is exponential).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, ClassVar, Optional

import numpy as np

from .errors import ParameterError, UtilityRangeError

CE_LOWER = -1e6
CE_UPPER = 1e6


class Utility:
    family: ClassVar[str] = ""
    concave: ClassVar[bool] = True
    strictly_concave: ClassVar[bool] = True

    def __call__(self, w):
        return self.eval(w)

    def eval(self, w):
        raise NotImplementedError

    @property
    def bounded_above(self) -> bool:
        raise NotImplementedError

    @property
    def diverges_at_minus_inf(self) -> bool:
        return True

    @property
    def supremum(self) -> float:
        return math.inf

    @property
    def left_tail_power(self) -> Optional[float]:
        raise NotImplementedError

    @property
    def assumption1(self) -> bool:
        return self.bounded_above and self.diverges_at_minus_inf

    def to_dict(self) -> dict[str, Any]:
        return {"family": self.family, "params": {k: float(v) for k, v in asdict(self).items()}}


def _positive(**kw):
    for k, v in kw.items():
        if not (math.isfinite(v) and v > 0):
            raise ParameterError(f"{k} must be positive and finite, got {v}")


@dataclass(frozen=True)
class Exponential(Utility):
    a: float
    family: ClassVar[str] = "exponential"

    def __post_init__(self):
        _positive(a=self.a)

    def eval(self, w):
        with np.errstate(over="ignore"):
            return -np.exp(-self.a * np.asarray(w, dtype=float))

    bounded_above = True
    supremum = 0.0
    left_tail_power = None


@dataclass(frozen=True)
class Sahara(Utility):
    """SAHARA utility with risk aversion ``a``, scale ``b`` and threshold ``delta``.

    Written through ``w' + sqrt(b^2 + w'^2) = b exp(asinh(w'/b))`` so neither
    tail cancels.
    """

    a: float
    b: float
    delta: float = 0.0
    family: ClassVar[str] = "sahara"

    def __post_init__(self):
        _positive(a=self.a, b=self.b)
        if not math.isfinite(self.delta):
            raise ParameterError("delta must be finite")

    def eval(self, w):
        a, b = self.a, self.b
        x = np.asarray(w, dtype=float) - self.delta
        ash = np.arcsinh(x / b)
        root = np.hypot(b, x)
        with np.errstate(over="ignore", invalid="ignore"):
            if a == 1.0:
                return 0.5 * (math.log(b) + ash) + 0.5 * (x / b) * np.exp(-ash)
            return -(x + a * root) * np.exp(-a * (ash + math.log(b))) / (a * a - 1.0)

    def derivative(self, w):
        x = np.asarray(w, dtype=float) - self.delta
        return np.exp(-self.a * (np.arcsinh(x / self.b) + math.log(self.b)))

    @property
    def bounded_above(self) -> bool:
        return self.a > 1.0

    @property
    def supremum(self) -> float:
        return 0.0 if self.a > 1.0 else math.inf

    @property
    def left_tail_power(self) -> float:
        return self.a + 1.0


@dataclass(frozen=True)
class HendersonHobson(Utility):
    """U(x) = (1 + tau x - sqrt(1 + tau^2 x^2)) / tau, bounded by 1/tau."""

    tau: float
    family: ClassVar[str] = "henderson_hobson"

    def __post_init__(self):
        _positive(tau=self.tau)

    def eval(self, w):
        t = self.tau * np.asarray(w, dtype=float)
        root = np.hypot(1.0, t)
        # 1 + t - root loses everything to cancellation for large positive t
        with np.errstate(over="ignore", divide="ignore"):
            pos = 1.0 - 1.0 / (t + root)
            val = np.where(t > 0, pos, 1.0 + t - root)
        return val / self.tau

    bounded_above = True
    left_tail_power = 1.0

    @property
    def supremum(self) -> float:
        return 1.0 / self.tau


@dataclass(frozen=True)
class ShortfallPower(Utility):
    """U(w) = -(max(-w, 0))^q, indifferent to gains."""

    q: float
    family: ClassVar[str] = "shortfall_power"
    strictly_concave: ClassVar[bool] = False

    def __post_init__(self):
        if not (math.isfinite(self.q) and self.q > 1):
            raise ParameterError(f"shortfall exponent must exceed 1, got {self.q}")

    def eval(self, w):
        return -np.maximum(-np.asarray(w, dtype=float), 0.0) ** self.q

    bounded_above = True
    supremum = 0.0

    @property
    def left_tail_power(self) -> float:
        return self.q


@dataclass(frozen=True)
class TruncatedLinear(Utility):
    """U(w) = min(max(w, 0), m): bounded on both sides, so it fails the tail condition."""

    m: float
    family: ClassVar[str] = "truncated_linear"
    strictly_concave: ClassVar[bool] = False
    concave: ClassVar[bool] = False

    def __post_init__(self):
        _positive(m=self.m)

    def eval(self, w):
        return np.clip(np.asarray(w, dtype=float), 0.0, self.m)

    bounded_above = True
    diverges_at_minus_inf = False
    left_tail_power = 0.0

    @property
    def supremum(self) -> float:
        return self.m


@dataclass(frozen=True)
class PiecewiseLinear(Utility):
    """U(w) = k1 w for w >= 0 and k2 w for w < 0; unbounded above."""

    k1: float
    k2: float
    family: ClassVar[str] = "piecewise_linear"
    strictly_concave: ClassVar[bool] = False

    def __post_init__(self):
        _positive(k1=self.k1, k2=self.k2)

    def eval(self, w):
        w = np.asarray(w, dtype=float)
        return np.where(w >= 0, self.k1 * w, self.k2 * w)

    @property
    def concave(self) -> bool:  # type: ignore[override]
        return self.k2 >= self.k1

    bounded_above = False
    left_tail_power = 1.0


_FAMILIES: dict[str, type[Utility]] = {
    cls.family: cls for cls in (Exponential, Sahara, HendersonHobson, ShortfallPower,
                                TruncatedLinear, PiecewiseLinear)
}


def utility_from_dict(doc: dict[str, Any]) -> Utility:
    try:
        cls = _FAMILIES[doc["family"]]
    except KeyError as exc:
        raise ParameterError(f"unknown utility family {doc.get('family')!r}; "
                             f"expected one of {sorted(_FAMILIES)}") from exc
    params = doc.get("params", {})
    try:
        return cls(**{k: float(v) for k, v in params.items()})
    except TypeError as exc:
        raise ParameterError(f"bad parameters for {doc['family']}: {params}") from exc


# -- runtime checks ---------------------------------------------------------------

@dataclass
class Assumption1Report:
    monotone: bool
    bounded_above: bool
    diverges_at_minus_inf: bool
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def validate_assumption1(u: Utility) -> Assumption1Report:
    """Numerical probes for: non-decreasing, bounded above, U(-inf) = -inf."""
    grid = np.concatenate([-np.logspace(6, -3, 500), np.logspace(-3, 6, 500)])
    vals = np.nan_to_num(u.eval(grid), neginf=-np.finfo(float).max)
    monotone = bool(np.all(np.diff(vals) >= -1e-12 * np.maximum(1.0, np.abs(vals[1:]))))
    u1, u4, u8 = (float(u.eval(t)) for t in (1.0, 1e4, 1e8))
    late, early = u8 - u4, u4 - u1
    bounded = late <= 1e-12 or late < 0.5 * early
    diverges = float(u.eval(-1e8)) < -1e6
    failures = []
    if not monotone:
        failures.append("utility is not non-decreasing")
    if not bounded:
        failures.append("utility is not bounded from above")
    if not diverges:
        failures.append("utility does not tend to -inf as wealth tends to -inf")
    return Assumption1Report(monotone, bounded, diverges, failures)


def certainty_equivalent(u: Utility, expected_utility: float, tol: float = 1e-10) -> float:
    """Smallest wealth w in [-1e6, 1e6] with U(w) >= ``expected_utility``."""
    eu = float(expected_utility)
    lo, hi = CE_LOWER, CE_UPPER
    u_lo, u_hi = float(u.eval(lo)), float(u.eval(hi))
    if math.isnan(eu):
        raise UtilityRangeError("expected utility is NaN")
    if eu > u_hi:
        bound = u.supremum
        raise UtilityRangeError(f"expected utility {eu:.10g} exceeds U({hi:g}) = {u_hi:.10g}"
                                f" (supremum {bound:.10g})")
    if eu < u_lo:
        raise UtilityRangeError(f"expected utility {eu:.10g} lies below U({lo:g}) = {u_lo:.10g}")
    if u_lo >= eu:
        return lo
    while hi - lo > tol * max(1.0, abs(lo), abs(hi)) * 1e-2:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if float(u.eval(mid)) >= eu:
            hi = mid
        else:
            lo = mid
    return hi
