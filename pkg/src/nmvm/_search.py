"""Derivative-free one-dimensional search helpers."""

from __future__ import annotations

import math
from typing import Callable

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_min(f: Callable[[float], float], lo: float, hi: float,
               xtol: float = 1e-10, max_iter: int = 500) -> tuple[float, float]:
    """Minimize a unimodal ``f`` on ``[lo, hi]``; ``+inf`` values are allowed.

    Returns ``(x, f(x))`` for the best point seen, endpoints excluded.
    """
    if hi < lo:
        lo, hi = hi, lo
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    best = min((fc, c), (fd, d))
    tol = xtol * max(1.0, abs(lo), abs(hi))
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
            best = min(best, (fc, c))
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
            best = min(best, (fd, d))
    m = 0.5 * (a + b)
    fm = f(m)
    best = min(best, (fm, m))
    return best[1], best[0]


def golden_max(f: Callable[[float], float], lo: float, hi: float,
               xtol: float = 1e-10, max_iter: int = 500) -> tuple[float, float]:
    x, v = golden_min(lambda t: -f(t), lo, hi, xtol, max_iter)
    return x, -v
