"""Projected coordinate pattern search for max-min objectives on spheres."""

from __future__ import annotations

from typing import Callable

import numpy as np


def pattern_ascent(objective: Callable[[np.ndarray], float], start, project: Callable[[np.ndarray], np.ndarray],
                   step: float = 0.25, grid: float = 1e-3, max_evals: int = 10_000):
    """Maximise ``objective`` over the sphere by coordinate moves of shrinking size.

    Each move adds ``+-step`` to one coordinate and projects back; the first
    improving move is taken and the sweep continues from the next coordinate.
    A full sweep without improvement halves ``step``; the search stops when
    ``step < grid`` or the evaluation budget runs out.  Deterministic.
    Returns ``(x, value, evaluations)``.
    """
    x = project(np.asarray(start, dtype=float).copy())
    shape = x.shape
    x = x.ravel()
    f = objective(x.reshape(shape))
    evals = 1
    n = x.size
    j = 0
    while step >= grid and evals < max_evals:
        improved = False
        for t in range(n):
            c = (j + t) % n
            for sgn in (1.0, -1.0):
                z = x.copy()
                z[c] += sgn * step
                z = project(z.reshape(shape)).ravel()
                fz = objective(z.reshape(shape))
                evals += 1
                if fz > f + 1e-15:
                    x, f = z, fz
                    improved = True
                    break
                if evals >= max_evals:
                    break
            if improved or evals >= max_evals:
                j = c + 1
                break
        if not improved:
            step *= 0.5
    return x.reshape(shape), float(f), evals
