"""Residual of the approximate profile, linearisation potentials, the
quadratic remainder, and decay-rate scans of their Hermite projections.

All profile derivatives come from closed forms (params.phi_derivatives); no
finite differences enter, because the decay rates under test sit below FD
noise at large s.

    R(y,s)  = -phi_s + phi_yy - y phi_y/2 - (1+i d) phi/(p-1) + (1+i d)|phi|^(p-1) phi
    R*(t',y,s) = R - i (mu/s + t') phi
    V1 = (1+i d)(p+1)/2 (|phi|^(p-1) - 1/(p-1))
    V2 = (1+i d)(p-1)/2 (|phi|^(p-3) phi^2 - 1/(p-1))
    B(q) = (1+i d)(|phi+q|^(p-1)(phi+q) - |phi|^(p-1)phi - |phi|^(p-1) q
            - (p-1)/2 |phi|^(p-3) phi (phi qbar + phibar q))

project_and_fit scans a named projection of a named term over an s-grid and
fits the decay exponent by least squares in log-log coordinates, optionally
after subtracting a predicted leading term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .hermite import ComplexField, QuadratureGrid, analyze
from .params import (DerivedConstants, Parameters, derive_constants,
                     phi as phi_profile, phi_derivatives)

__all__ = [
    "residual_R",
    "residual_Rstar",
    "potentials_V",
    "potential_sup",
    "nonlinear_B",
    "fit_loglog",
    "ProjectionScan",
    "project_and_fit",
    "sup_R_scan",
]


def _const(params) -> DerivedConstants:
    if isinstance(params, DerivedConstants):
        return params
    return derive_constants(params)


def residual_R(y, s: float, params) -> np.ndarray:
    """Defect of phi from solving the self-similar equation, closed form."""
    c = _const(params)
    yarr = np.asarray(y, dtype=float)
    val, d_s, d_y, d_yy = phi_derivatives(yarr, s, c)
    lam = 1.0 + 1j * c.delta
    out = (-d_s + d_yy - 0.5 * yarr * d_y - lam / (c.p - 1.0) * val
           + lam * np.abs(val) ** (c.p - 1.0) * val)
    return out if isinstance(y, np.ndarray) else complex(out)


def residual_Rstar(theta_prime: float, y, s: float, params):
    """R*(theta', y, s) = R - i(mu/s + theta') phi."""
    c = _const(params)
    out = residual_R(y, s, c) - 1j * (c.mu / s + theta_prime) * phi_profile(y, s, c)
    return out if isinstance(y, np.ndarray) else complex(out)


def potentials_V(y, s: float, params):
    """(V1, V2) at (y, s)."""
    c = _const(params)
    val = phi_profile(np.asarray(y, dtype=float), s, c)
    lam = 1.0 + 1j * c.delta
    mod = np.abs(val)
    V1 = lam * (c.p + 1.0) / 2.0 * (mod ** (c.p - 1.0) - 1.0 / (c.p - 1.0))
    V2 = lam * (c.p - 1.0) / 2.0 * (mod ** (c.p - 3.0) * val**2 - 1.0 / (c.p - 1.0))
    if isinstance(y, np.ndarray):
        return V1, V2
    return complex(V1), complex(V2)


def potential_sup(params, region: str = "inner",
                  s_values: Sequence[float] = (1.0, 2.0, 5.0, 20.0, 100.0),
                  n_y: int = 2001) -> float:
    """Measured sup of |V_1|, |V_2|.

    region='inner' samples |y| <= s^(1/4) (the regime of the quadratic
    envelope |V_i| <= C(1+y^2)/sqrt(s)); region='line' samples far into the
    tail, where the potentials saturate at an O(1) plateau.
    """
    c = _const(params)
    worst = 0.0
    for s in s_values:
        ymax = s**0.25 if region == "inner" else 100.0 * s**0.25
        y = np.linspace(0.0, ymax, n_y)
        V1, V2 = potentials_V(y, s, c)
        worst = max(worst, float(np.max(np.abs(V1))), float(np.max(np.abs(V2))))
    return worst


def nonlinear_B(q_values, y, s: float, params, check_bound: bool = True):
    """Quadratic remainder B(q, y, s); rejects sup|q| > 1 unless told not to
    (the formula stays defined but the quadratic envelope is void there)."""
    c = _const(params)
    q = np.asarray(q_values, dtype=complex)
    if check_bound and q.size and float(np.max(np.abs(q))) > 1.0:
        raise ValueError("nonlinear_B called with sup|q| > 1")
    val = phi_profile(np.asarray(y, dtype=float), s, c)
    lam = 1.0 + 1j * c.delta
    mod = np.abs(val)
    w = val + q
    out = lam * (np.abs(w) ** (c.p - 1.0) * w
                 - mod ** (c.p - 1.0) * val
                 - mod ** (c.p - 1.0) * q
                 - (c.p - 1.0) / 2.0 * mod ** (c.p - 3.0) * val
                 * (val * np.conj(q) + np.conj(val) * q))
    return out if isinstance(q_values, np.ndarray) else complex(out)


# ---------------------------------------------------------------------------
# decay-rate scans
# ---------------------------------------------------------------------------

def fit_loglog(s_grid: np.ndarray, values: np.ndarray):
    """Least-squares slope of log|value| vs log s.

    Returns (slope, intercept, degenerate). The fit is flagged degenerate when
    any magnitude vanishes or fails to be finite.
    """
    v = np.abs(np.asarray(values, dtype=complex))
    if np.any(~np.isfinite(v)) or np.any(v <= 0.0):
        return math.nan, math.nan, True
    slope, intercept = np.polyfit(np.log(np.asarray(s_grid, float)), np.log(v), 1)
    return float(slope), float(intercept), False


@dataclass
class ProjectionScan:
    """One named projection scanned over s, with its fitted decay exponent."""

    term: str
    projection: str
    s_grid: np.ndarray
    values: np.ndarray               # projected magnitudes (after subtraction)
    predicted_leading: np.ndarray    # subtracted prediction (zeros if none)
    fitted_slope: float
    target_slope: Optional[float] = None
    degenerate: bool = False

    def rows(self):
        """CSV rows (s, value, predicted_leading, remainder)."""
        for s, v, p in zip(self.s_grid, self.values, self.predicted_leading):
            yield (float(s), float(abs(v + p)), float(abs(p)), float(abs(v)))


_TERMS = ("Rstar", "V1q", "V2qbar", "B")


def _term_values(term: str, grid: QuadratureGrid, s: float,
                 c: DerivedConstants, q_generator) -> np.ndarray:
    y = grid.nodes
    if term == "Rstar":
        return residual_Rstar(0.0, y, s, c)
    q = q_generator(grid, s)
    if term == "V1q":
        V1, _ = potentials_V(y, s, c)
        return V1 * q
    if term == "V2qbar":
        _, V2 = potentials_V(y, s, c)
        return V2 * np.conj(q)
    if term == "B":
        return nonlinear_B(q, y, s, c, check_bound=False)
    raise ValueError(f"unknown term {term!r}; expected one of {_TERMS}")


def _parse_projection(name: str):
    """'Pt0'/'Ph0' or 'tilde0'/'hat0' style names -> (kind, n)."""
    name = name.strip()
    for prefix, kind in (("Pt", "tilde"), ("Ph", "hat"),
                         ("tilde", "tilde"), ("hat", "hat")):
        if name.startswith(prefix) and name[len(prefix):].isdigit():
            return kind, int(name[len(prefix):])
    raise ValueError(f"unknown projection {name!r} (use Pt<n> or Ph<n>)")


def project_and_fit(term: str, projection: str, s_grid: Sequence[float],
                    params, grid: Optional[QuadratureGrid] = None,
                    q_generator: Optional[Callable] = None,
                    predicted: Optional[Callable[[float], float]] = None,
                    target_slope: Optional[float] = None,
                    threads: int = 1) -> ProjectionScan:
    """Scan |P~n(term)| or |P^n(term)| over s_grid and fit the decay slope.

    predicted(s), when given, is subtracted before the fit (used for the
    structured projections whose leading term is known in closed form).
    q_generator(grid, s) -> samples supplies q for the V/B terms.
    """
    c = _const(params)
    if grid is None:
        grid = QuadratureGrid.gauss(128)
    kind, n = _parse_projection(projection)
    s_grid = np.asarray(list(s_grid), dtype=float)
    if len(s_grid) < 2:
        raise ValueError("need at least two s points")

    def one(s: float) -> complex:
        vals = _term_values(term, grid, s, c, q_generator)
        Q = analyze(ComplexField(grid, vals), n)[n]
        return Q.real if kind == "tilde" else (Q.imag - c.delta * Q.real)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as ex:
            proj = np.array(list(ex.map(one, s_grid)), dtype=complex)
    else:
        proj = np.array([one(s) for s in s_grid], dtype=complex)

    pred = np.array([predicted(s) if predicted else 0.0 for s in s_grid])
    remainder = proj - pred
    slope, _, degenerate = fit_loglog(s_grid, remainder)
    return ProjectionScan(term=term, projection=projection, s_grid=s_grid,
                          values=remainder, predicted_leading=pred,
                          fitted_slope=slope, target_slope=target_slope,
                          degenerate=degenerate)


def sup_R_scan(s_grid: Sequence[float], params, y_factor: float = 5.0,
               n_y: int = 4001) -> ProjectionScan:
    """sup_{|y| <= y_factor s^(1/4)} |R| over s_grid, with its fitted slope."""
    c = _const(params)
    s_grid = np.asarray(list(s_grid), dtype=float)
    sups = []
    for s in s_grid:
        y = np.linspace(0.0, y_factor * s**0.25, n_y)
        sups.append(np.max(np.abs(residual_R(y, s, c))))
    sups = np.array(sups)
    slope, _, degenerate = fit_loglog(s_grid, sups)
    return ProjectionScan(term="R", projection="sup", s_grid=s_grid,
                          values=sups, predicted_leading=np.zeros_like(sups),
                          fitted_slope=slope, target_slope=-0.5,
                          degenerate=degenerate)
