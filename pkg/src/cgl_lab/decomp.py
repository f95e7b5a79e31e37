"""Modal decomposition of a field into Hermite coordinates, remainder and
outer part, the shrinking-set monitor and the prepared initial data.

A field q splits uniquely as

    q = sum_{n<=M} [ q~_n (1+i delta) h_n + q^_n i h_n ] + q_-

with q~_n = Re Q_n, q^_n = Im Q_n - delta Re Q_n, Q_n = <q, h_n>/||h_n||^2,
and q_- orthogonal to h_0..h_M. The outer part is

    q_e = e^(i delta s/(p-1)) q (1 - chi),   chi(y,s) = chi0(|y|/(K s^(1/4)))

where chi0 is a monotone C^2 bump (quintic smoothstep on [1,2]; the source
construction only needs a smooth monotone cutoff, C^2 suffices numerically).

The shrinking-set monitor evaluates the componentwise thresholds

    |q~_0|, |q~_1| <= A/s^(3/2)      |q^_0| <= 1/s^(3/2)   |q^_1| <= A^4/s^(3/2)
    |q~_2| <= A^5/s                  |q^_2| <= A^3/s
    |q~_j|, |q^_j| <= A^j/s^((j+1)/4)   (3 <= j <= M)
    ||q_-/(1+|y|^(M+1))||_inf <= A^(M+1)/s^((M+2)/4)
    ||q_e||_inf <= A^(M+2)/s^(1/4)

Weighted sup norms are taken over the quadrature nodes here; the simulation
monitor additionally samples its polynomial state on a uniform auxiliary grid
because the Gauss nodes cluster near the origin and under-sample the tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .hermite import (ComplexField, QuadratureGrid, analyze, synthesize,
                      hermite_poly)
from .params import DerivedConstants, Parameters, derive_constants

__all__ = [
    "cutoff_chi",
    "default_K",
    "minimum_M",
    "ModalDecomposition",
    "decompose",
    "reconstruct",
    "ShrinkingSetReport",
    "shrinking_check",
    "initial_data",
]


def _smoothstep(t):
    """Quintic smoothstep: 0 at t<=0, 1 at t>=1, C^2 at the seams."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def cutoff_chi(y, s: float, K: float):
    """chi(y, s) = chi0(|y|/(K s^(1/4))): 1 for |y| <= K s^(1/4), 0 beyond
    2 K s^(1/4), monotone in between."""
    if s <= 0:
        raise ValueError("cutoff requires s > 0")
    if K < 1:
        raise ValueError("cutoff requires K >= 1")
    xi = np.abs(np.asarray(y, dtype=float)) / (K * s**0.25)
    out = 1.0 - _smoothstep(xi - 1.0)
    return out if isinstance(y, np.ndarray) else float(out)


def default_K(params: Union[Parameters, DerivedConstants], C: float = 4.0) -> float:
    """Smallest K with sup_{|z|>K} |phi0(z)|^(p-1) <= 1/(C(p-1)).

    |phi0(z)|^(p-1) = 1/(p-1+b z^2), so K = sqrt((C-1)(p-1)/b).
    """
    c = params if isinstance(params, DerivedConstants) else derive_constants(params)
    return math.sqrt((C - 1.0) * (c.p - 1.0) / c.b)


def minimum_M(params: Union[Parameters, DerivedConstants],
              v_max: Optional[float] = None) -> int:
    """Smallest even M with M >= 4(sqrt(1+delta^2) + 1 + 2 v_max).

    v_max defaults to the measured sup of |V_1|, |V_2| over the inner region
    |y| <= s^(1/4), s >= 1 (where the quadratic potential envelope holds);
    over the whole line the potentials saturate near (p+1)sqrt(1+p)/(2(p-1))
    instead, which is reported by residual.potential_sup.
    """
    c = params if isinstance(params, DerivedConstants) else derive_constants(params)
    if v_max is None:
        from .residual import potential_sup
        v_max = potential_sup(c, region="inner")
    m = 4.0 * (math.sqrt(1.0 + c.delta**2) + 1.0 + 2.0 * v_max)
    M = int(math.ceil(m))
    return M + (M % 2)


@dataclass
class ModalDecomposition:
    """Coordinates of the splitting at one instant s."""

    M: int
    tilde: np.ndarray          # q~_0 .. q~_M
    hat: np.ndarray            # q^_0 .. q^_M
    q_minus: ComplexField
    q_e: ComplexField
    s: float
    K: float
    A: Optional[float] = None

    @property
    def Q(self) -> np.ndarray:
        """Complex Hermite coefficients Q_n = q~_n + i(q^_n + delta q~_n)
        are recovered with the delta used at construction (stored)."""
        return self._Q

    def weighted_qminus_norm(self) -> float:
        """sup |q_-|/(1+|y|^(M+1)) over the quadrature nodes.

        Fields are known at nodes only; the simulation monitor additionally
        samples its polynomial state on a uniform auxiliary grid because the
        Gauss nodes cluster near the origin."""
        y = self.q_minus.grid.nodes
        vals = np.abs(self.q_minus.values) / (1.0 + np.abs(y) ** (self.M + 1))
        return float(np.max(vals))


def decompose(q: ComplexField, M: int, s: float, K: float,
              params: Union[Parameters, DerivedConstants],
              A: Optional[float] = None) -> ModalDecomposition:
    """Split q into (q~_n, q^_n, q_-, q_e)."""
    c = params if isinstance(params, DerivedConstants) else derive_constants(params)
    if M % 2 != 0:
        raise ValueError("M must be even")
    if 2 * M > q.grid.capacity:
        raise ValueError(
            f"grid capacity {q.grid.capacity} too coarse for degree {M}")
    Q = analyze(q, M)
    tilde = Q.real.copy()
    hat = Q.imag - c.delta * Q.real
    finite = synthesize(q.grid, Q)
    q_minus = ComplexField(q.grid, q.values - finite.values)
    chi = cutoff_chi(q.grid.nodes, s, K)
    phase = np.exp(1j * c.delta * s / (c.p - 1.0))
    q_e = ComplexField(q.grid, phase * q.values * (1.0 - chi))
    d = ModalDecomposition(M=M, tilde=tilde, hat=hat, q_minus=q_minus,
                           q_e=q_e, s=s, K=K, A=A)
    d._Q = Q
    return d


def reconstruct(d: ModalDecomposition,
                params: Union[Parameters, DerivedConstants]) -> ComplexField:
    """Inverse of decompose up to quadrature rounding."""
    c = params if isinstance(params, DerivedConstants) else derive_constants(params)
    Q = d.tilde + 1j * (d.hat + c.delta * d.tilde)
    finite = synthesize(d.q_minus.grid, Q)
    return ComplexField(d.q_minus.grid, finite.values + d.q_minus.values)


@dataclass
class ShrinkingSetReport:
    """Slack ratios (measured/allowed) for every component threshold."""

    s: float
    A: float
    M: int
    ratio_tilde: np.ndarray
    ratio_hat: np.ndarray
    ratio_qminus: float
    ratio_qe: float
    qe_region_resolved: bool = True

    @property
    def inside(self) -> bool:
        return (np.all(self.ratio_tilde <= 1.0)
                and np.all(self.ratio_hat <= 1.0)
                and self.ratio_qminus <= 1.0
                and self.ratio_qe <= 1.0)

    def worst_component(self) -> str:
        names = [f"tilde{j}" for j in range(len(self.ratio_tilde))] \
            + [f"hat{j}" for j in range(len(self.ratio_hat))] \
            + ["q_minus", "q_e"]
        ratios = np.concatenate([self.ratio_tilde, self.ratio_hat,
                                 [self.ratio_qminus, self.ratio_qe]])
        return names[int(np.argmax(ratios))]

    def as_dict(self) -> dict:
        return {
            "s": self.s, "A": self.A, "M": self.M,
            "inside": bool(self.inside),
            "worst_component": self.worst_component(),
            "ratio_tilde": list(map(float, self.ratio_tilde)),
            "ratio_hat": list(map(float, self.ratio_hat)),
            "ratio_qminus": float(self.ratio_qminus),
            "ratio_qe": float(self.ratio_qe),
            "qe_region_resolved": bool(self.qe_region_resolved),
        }


def thresholds(M: int, s: float, A: float):
    """Allowed bounds for (tilde, hat, q_minus-weighted, q_e) at (A, s)."""
    j = np.arange(M + 1, dtype=float)
    tilde = A**j / s ** ((j + 1.0) / 4.0)
    hat = tilde.copy()
    tilde[0] = A / s**1.5
    tilde[1] = A / s**1.5
    tilde[2] = A**5 / s
    hat[0] = 1.0 / s**1.5
    hat[1] = A**4 / s**1.5
    hat[2] = A**3 / s
    return tilde, hat, A ** (M + 1) / s ** ((M + 2) / 4.0), A ** (M + 2) / s**0.25


def shrinking_check(d: ModalDecomposition, A: float,
                    resolved_radius: Optional[float] = None) -> ShrinkingSetReport:
    """Evaluate every inequality of the shrinking set V_A(s).

    q_e is sup-normed over nodes with |y| >= K s^(1/4); when a resolved_radius
    is given (spectral states cannot be trusted pointwise past it) the
    evaluation is restricted to resolved nodes and the report notes whether
    any remained.
    """
    bt, bh, bq, be = thresholds(d.M, d.s, A)
    rt = np.abs(d.tilde) / bt
    rh = np.abs(d.hat) / bh
    rq = d.weighted_qminus_norm() / bq
    y = np.abs(d.q_e.grid.nodes)
    mask = y >= d.K * d.s**0.25
    resolved = True
    if resolved_radius is not None:
        mask &= y <= resolved_radius
        resolved = bool(np.any(mask))
    qe_sup = float(np.max(np.abs(d.q_e.values[mask]))) if np.any(mask) else 0.0
    return ShrinkingSetReport(s=d.s, A=A, M=d.M, ratio_tilde=rt, ratio_hat=rh,
                              ratio_qminus=float(rq), ratio_qe=qe_sup / be,
                              qe_region_resolved=resolved)


def _hat0_of(values: np.ndarray, grid: QuadratureGrid, delta: float) -> float:
    Q0 = complex(np.sum(grid.weights * values))
    return Q0.imag - delta * Q0.real


def initial_data(A: float, s0: float, d0: float, d1: float,
                 params: Union[Parameters, DerivedConstants],
                 grid: QuadratureGrid, K: float):
    """Prepared initial field

        psi = [ A/s0^(3/2) (1+i delta)(d0 h0 + d1 h1) + i d2 ] chi(2y, s0)

    with d2 chosen so that the i h0 coordinate vanishes exactly. Returns
    (field, d2). Rejects a degenerate denominator (s0 too small for the
    cutoff to carry the h0 mass)."""
    c = params if isinstance(params, DerivedConstants) else derive_constants(params)
    y = grid.nodes
    chi2 = cutoff_chi(2.0 * y, s0, K)
    lam = 1.0 + 1j * c.delta
    g0 = _hat0_of(lam * chi2, grid, c.delta)
    g1 = _hat0_of(lam * y * chi2, grid, c.delta)
    den = _hat0_of(1j * chi2, grid, c.delta)
    if abs(den) < 0.5:
        raise ValueError(
            f"degenerate normalisation P^0(i chi) = {den:.3e}; s0 too small")
    amp = A / s0**1.5
    d2 = -amp * (d0 * g0 + d1 * g1) / den
    values = (amp * lam * (d0 * hermite_poly(0, y) + d1 * hermite_poly(1, y))
              + 1j * d2) * chi2
    return ComplexField(grid, values), float(d2)
