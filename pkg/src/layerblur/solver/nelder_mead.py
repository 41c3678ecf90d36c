"""Bounded-budget Nelder-Mead simplex search."""
from __future__ import annotations

import numpy as np

from ..errors import NumericError


def nelder_mead(f, x0, steps, max_evals=100, xtol=1e-6, ftol=1e-12):
    """Minimise ``f`` from ``x0`` with the initial simplex ``x0 + steps[i] e_i``.

    Uses reflection 1, expansion 2, contraction 0.5 and shrink 0.5.  ``f``
    may return ``inf`` for infeasible points; ``nan`` raises
    :class:`NumericError`.  Returns ``(x_best, f_best, evaluations)``.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    n = x0.size
    evals = 0

    def call(x):
        nonlocal evals
        evals += 1
        v = float(f(x))
        if np.isnan(v):
            raise NumericError("objective evaluated to nan during simplex search")
        return v

    simplex = [x0.copy()]
    for i in range(n):
        x = x0.copy()
        x[i] += steps[i]
        simplex.append(x)
    values = [call(x) for x in simplex[:max_evals]]
    simplex = simplex[:len(values)]
    if len(values) < n + 1:
        best = int(np.argmin(values))
        return simplex[best], values[best], evals

    simplex = np.array(simplex)
    values = np.array(values)
    while evals < max_evals:
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        if (np.max(np.abs(simplex[1:] - simplex[0])) <= xtol
                and abs(values[-1] - values[0]) <= ftol):
            break
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        fr = call(xr)
        if fr < values[0]:
            if evals >= max_evals:
                simplex[-1], values[-1] = xr, fr
                break
            xe = centroid + 2.0 * (centroid - worst)
            fe = call(xe)
            simplex[-1], values[-1] = (xe, fe) if fe < fr else (xr, fr)
        elif fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        else:
            if fr < values[-1]:
                xc = centroid + 0.5 * (xr - centroid)
            else:
                xc = centroid + 0.5 * (worst - centroid)
            if evals >= max_evals:
                if fr < values[-1]:
                    simplex[-1], values[-1] = xr, fr
                break
            fc = call(xc)
            if fc < min(fr, values[-1]):
                simplex[-1], values[-1] = xc, fc
            else:
                for j in range(1, n + 1):
                    if evals >= max_evals:
                        break
                    simplex[j] = simplex[0] + 0.5 * (simplex[j] - simplex[0])
                    values[j] = call(simplex[j])
    best = int(np.argmin(values))
    return simplex[best].copy(), float(values[best]), evals
