"""Derivative-free one-dimensional maximization."""

from __future__ import annotations

import logging
import math
from typing import Callable

import numpy as np

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2  # 1 / phi^2


def golden_section_max(
    f: Callable[[float], float],
    a: float,
    b: float,
    rel_tol: float = 1e-8,
) -> tuple[float, float]:
    """Golden-section search for the maximum of a unimodal ``f`` on [a, b].

    :param f: Objective, assumed to have a single local maximum in [a, b].
    :param a: Lower end of the bracket.
    :param b: Upper end of the bracket.
    :param rel_tol: Final bracket width relative to its midpoint.
    :return: Tuple of (x_star, f(x_star)).
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    tol = rel_tol * max(abs(0.5 * (a + b)), 1e-300)
    if h <= tol:
        x = 0.5 * (a + b)
        return x, f(x)

    # Required steps to achieve tolerance
    n = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))

    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc = f(c)
    yd = f(d)

    for _ in range(n - 1):
        if yc > yd:
            b = d
            d = c
            yd = yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = f(c)
        else:
            a = c
            c = d
            yc = yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(d)

    x = c if yc > yd else d
    y = max(yc, yd)
    logger.debug("Golden-section converged after %d steps at x=%.10g", n, x)
    return x, y


def bracketed_max(
    f: Callable[[float], float],
    lower: float,
    upper: float,
    points: int = 64,
    rel_tol: float = 1e-8,
    log_scale: bool = True,
) -> tuple[float, float]:
    """Maximize ``f`` on [lower, upper]: coarse grid scan, then golden section.

    The grid locates the best sample; the golden-section search then runs on
    the interval spanned by its two neighbours.
    """
    if log_scale:
        grid = np.geomspace(lower, upper, points)
    else:
        grid = np.linspace(lower, upper, points)
    values = np.array([f(float(x)) for x in grid])
    i = int(np.argmax(values))
    lo = float(grid[max(i - 1, 0)])
    hi = float(grid[min(i + 1, points - 1)])
    x, y = golden_section_max(f, lo, hi, rel_tol=rel_tol)
    if values[i] > y:
        return float(grid[i]), float(values[i])
    return x, y
