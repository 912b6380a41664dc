"""Independent checks: Monte-Carlo expected utility, random search, sample statistics."""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np
from scipy import stats

from .errors import ParameterError
from .market_model import NmvmModel
from .utility import Utility, certainty_equivalent  # noqa: F401  (re-export)

MIN_MC_SAMPLES = 1000
BATCH_SIZE = 1 << 16
DEFAULT_CLIP = 1e15


@dataclass(frozen=True)
class McReport:
    estimate: float
    std_error: float
    n: int
    seed: int
    clipped: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {"estimate": float(self.estimate), "std_error": float(self.std_error),
                "n": int(self.n), "seed": int(self.seed), "clipped": bool(self.clipped)}


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("NMVM_THREADS", "1")))
    except ValueError:
        return 1


def _batch_moments(model, utility, w0, x, n, seq, clip):
    rng = np.random.default_rng(seq)
    z = model.law.draw(rng, n)
    nrm = rng.standard_normal((n, model.d))
    excess = model.returns_from_factors(z, nrm) - model.r_f
    vals = utility.eval(w0 * (1.0 + model.r_f) + w0 * (excess @ x))
    bad = bool(np.any(~np.isfinite(vals)) or np.any(np.abs(vals) > clip))
    return float(vals.sum()), float((vals * vals).sum()), bad


def mc_expected_utility(model: NmvmModel, utility: Utility, w0: float, x: Sequence[float],
                        n: int = 1_000_000, seed: int = 0, clip: float = DEFAULT_CLIP) -> McReport:
    """Plain Monte-Carlo estimate of E U(W(x)) from joint draws of (Z, N_d).

    The sample is split into fixed-size batches with seeds spawned from
    ``seed``; batch sums are reduced in batch order, so the result does not
    depend on ``NMVM_THREADS``.
    """
    if n < MIN_MC_SAMPLES:
        raise ParameterError(f"Monte-Carlo estimates need at least {MIN_MC_SAMPLES} draws")
    x = np.asarray(x, dtype=float).ravel()
    model.wealth_projection(x)  # dimension and finiteness checks
    if not np.any(x):
        return McReport(float(utility.eval(w0 * (1.0 + model.r_f))), 0.0, n, seed)
    sizes = [BATCH_SIZE] * (n // BATCH_SIZE) + ([n % BATCH_SIZE] if n % BATCH_SIZE else [])
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(sizes, seqs))
    threads = _threads()
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda j: _batch_moments(model, utility, w0, x, j[0], j[1], clip),
                                  jobs))
    else:
        parts = [_batch_moments(model, utility, w0, x, m, s, clip) for m, s in jobs]
    total = sumsq = 0.0
    clipped = False
    for s1, s2, bad in parts:
        total += s1
        sumsq += s2
        clipped |= bad
    mean = total / n
    if not math.isfinite(mean):
        return McReport(-math.inf, math.inf, n, seed, True)
    var = max(sumsq / n - mean * mean, 0.0) * n / (n - 1)
    return McReport(mean, math.sqrt(var / n), n, seed, clipped)


@dataclass(frozen=True)
class SearchResult:
    weights: np.ndarray
    report: McReport
    index: int


def search_box(center: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """[-2 c, 4 c] for nonnegative coordinates and [4 c, -2 c] for negative ones."""
    c = np.asarray(center, dtype=float).ravel()
    if not np.all(np.isfinite(c)):
        raise ParameterError("search centre must be finite")
    return np.minimum(-2.0 * c, 4.0 * c), np.maximum(-2.0 * c, 4.0 * c)


def random_search_optimal(model: NmvmModel, utility: Utility, w0: float, center: Sequence[float],
                          n_samples: int = 100_000, seed: int = 0, mc_samples: int = 10_000,
                          chunk: int = 256) -> SearchResult:
    """Best of ``n_samples`` uniform portfolios from the box around ``center``.

    All candidates are scored on one shared return sample (common random
    numbers), and candidate i does not depend on ``n_samples``, so a larger
    search can only match or improve the best score.
    """
    if n_samples < 1:
        raise ParameterError("n_samples must be positive")
    lo, hi = search_box(center)
    if lo.size != model.d:
        raise ParameterError("search centre has the wrong dimension")
    cand_seq, mc_seq = np.random.SeedSequence(seed).spawn(2)
    u01 = np.random.default_rng(cand_seq).random((n_samples, model.d))
    cands = lo + (hi - lo) * u01
    rng = np.random.default_rng(mc_seq)
    z = model.law.draw(rng, mc_samples)
    excess = model.returns_from_factors(z, rng.standard_normal((mc_samples, model.d))) - model.r_f
    base = w0 * (1.0 + model.r_f)
    best_i, best_v, best_se = 0, -math.inf, 0.0
    for start in range(0, n_samples, chunk):
        block = cands[start:start + chunk]
        vals = utility.eval(base + w0 * (excess @ block.T))
        means = np.where(np.all(np.isfinite(vals), axis=0), vals.mean(axis=0), -math.inf)
        i = int(np.argmax(means))
        if means[i] > best_v:
            best_i, best_v = start + i, float(means[i])
            best_se = float(vals[:, i].std(ddof=1) / math.sqrt(mc_samples)) if mc_samples > 1 else 0.0
    return SearchResult(cands[best_i].copy(), McReport(best_v, best_se, mc_samples, seed), best_i)


# -- descriptive statistics ----------------------------------------------------------

@dataclass(frozen=True)
class DescriptiveStats:
    names: tuple[str, ...]
    mean: np.ndarray
    variance: np.ndarray
    skewness: np.ndarray
    kurtosis: np.ndarray
    constant: np.ndarray

    def rows(self) -> list[dict[str, Any]]:
        out = []
        for i, name in enumerate(self.names):
            out.append({"asset": name, "mean": float(self.mean[i]),
                        "variance": float(self.variance[i]),
                        "skewness": None if self.constant[i] else float(self.skewness[i]),
                        "kurtosis": None if self.constant[i] else float(self.kurtosis[i]),
                        "constant": bool(self.constant[i])})
        return out


def descriptive_stats(returns, names: Optional[Sequence[str]] = None) -> DescriptiveStats:
    """Per-column mean, sample variance, skewness and raw (non-excess) kurtosis."""
    r = np.asarray(returns, dtype=float)
    if r.ndim == 1:
        r = r[:, None]
    if r.shape[0] < 4:
        raise ParameterError("descriptive statistics need at least 4 observations")
    names = tuple(names) if names is not None else tuple(f"asset{i + 1}" for i in range(r.shape[1]))
    var = r.var(axis=0, ddof=1)
    constant = np.all(r == r[0], axis=0)
    skew = np.full(r.shape[1], np.nan)
    kurt = np.full(r.shape[1], np.nan)
    live = ~constant
    if np.any(live):
        skew[live] = stats.skew(r[:, live], axis=0)
        kurt[live] = stats.kurtosis(r[:, live], axis=0, fisher=True) + 3.0
    return DescriptiveStats(names, r.mean(axis=0), np.where(constant, 0.0, var), skew, kurt,
                            constant)


def read_returns_csv(path: str) -> tuple[tuple[str, ...], np.ndarray]:
    """Asset names and the return matrix; the first column (dates) is skipped.

    A header row is recognized by non-numeric entries.  Malformed rows raise
    :class:`ParameterError` naming the line.
    """
    rows: list[list[float]] = []
    names: Optional[tuple[str, ...]] = None
    width = None
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or all(not f.strip() for f in rec):
                continue
            fields = [f.strip() for f in rec[1:]]
            if width is None:
                width = len(fields)
                if width == 0:
                    raise ParameterError(f"line {lineno}: no return columns")
                try:
                    rows.append([float(f) for f in fields])
                except ValueError:
                    names = tuple(fields)
                continue
            if len(fields) != width:
                raise ParameterError(f"line {lineno}: expected {width} return columns, "
                                     f"found {len(fields)}")
            try:
                rows.append([float(f) for f in fields])
            except ValueError as exc:
                raise ParameterError(f"line {lineno}: {exc}") from exc
    if not rows:
        raise ParameterError(f"{path}: no data rows")
    if names is None:
        names = tuple(f"asset{i + 1}" for i in range(width))
    return names, np.array(rows)
