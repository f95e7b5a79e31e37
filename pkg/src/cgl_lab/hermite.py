"""Rescaled Hermite basis, Gaussian-weighted quadrature, the linearised
operators and the Mehler-kernel semigroup.

Everything lives in L^2_rho with rho(y) = exp(-y^2/4)/sqrt(4 pi). The basis

    h_m(y) = sum_{n<=m/2} m!/(n!(m-2n)!) (-1)^n y^(m-2n)

(h0=1, h1=y, h2=y^2-2, ...) satisfies h_{m+1} = y h_m - 2m h_{m-1},
h_m' = m h_{m-1} and ||h_m||^2_rho = 2^m m!.

The quadrature is Gauss-Hermite rescaled to rho: nodes y_i = 2 t_i and weights
w_i = what_i / sqrt(pi) where (t_i, what_i) integrate exp(-t^2) exactly through
degree 2n-1. The weights sum to 1 and include the density, so
sum_i w_i f(y_i) ~ int f rho dy, exact for polynomials up to the capacity.

Operators:

    L0 f      = f'' - y f'/2                (eigenvalue -m/2 on h_m)
    Ltilde f  = L0 f + (1+i delta) Re f     (eigenvalues (1-m/2) on (1+i d)h_m,
                                             -m/2 on i h_m)

The semigroup exp(s L0) is applied through the Mehler kernel

    exp(s L0)(y, x) = exp(-|x - y e^(-s/2)|^2 / (4(1-e^(-s)))) / sqrt(4 pi (1-e^(-s)))

with the displacement squared (the printed source omits the square; the
squared form is the one that reproduces the e^(-m s/2) eigen-decay, which is
the acceptance tiebreaker). The discretised kernel rows are renormalised to
sum to one, so constants are exactly invariant and the discrete maximum
principle holds exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

__all__ = [
    "QuadratureGrid",
    "ComplexField",
    "hermite_coefficients",
    "hermite_poly",
    "hermite_norm2",
    "inner",
    "analyze",
    "synthesize",
    "differentiate_coeffs",
    "apply_L0",
    "apply_Ltilde",
    "mehler_matrix",
    "mehler_apply",
    "mehler_div_bound_check",
]

DEFAULT_DEGREE_CAP = 20

# exact integer coefficient rows of h_m, built on demand
_coeff_cache: dict[int, list[int]] = {0: [1], 1: [0, 1]}


def hermite_coefficients(m: int) -> list[int]:
    """Exact integer coefficients of h_m (ascending powers of y)."""
    if m < 0:
        raise ValueError("m must be >= 0")
    top = max(_coeff_cache)
    while top < m:
        a, b = _coeff_cache[top], _coeff_cache[top - 1]
        nxt = [0] * (top + 2)
        for k, c in enumerate(a):          # y * h_top
            nxt[k + 1] += c
        for k, c in enumerate(b):          # -2*top * h_{top-1}
            nxt[k] -= 2 * top * c
        top += 1
        _coeff_cache[top] = nxt
    return _coeff_cache[m]


def hermite_poly(m: int, y, cap: int = DEFAULT_DEGREE_CAP):
    """Evaluate h_m(y). m beyond the configurable cap is rejected."""
    if m > cap:
        raise ValueError(f"hermite_poly degree {m} exceeds cap {cap}")
    coeffs = hermite_coefficients(m)
    yarr = np.asarray(y, dtype=float)
    out = np.zeros_like(yarr)
    for c in reversed(coeffs):             # Horner
        out = out * yarr + c
    return out if isinstance(y, np.ndarray) else float(out)


def hermite_norm2(m: int) -> float:
    """||h_m||^2 in L^2_rho = 2^m m! (exact for m <= 170 in float)."""
    return float(2**m * math.factorial(m))


@dataclass
class QuadratureGrid:
    """Gauss-Hermite nodes/weights for the weight rho, plus cached basis."""

    nodes: np.ndarray
    weights: np.ndarray
    capacity: int
    _basis: dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    @classmethod
    def gauss(cls, n: int = 128) -> "QuadratureGrid":
        t, w = np.polynomial.hermite.hermgauss(n)
        return cls(nodes=2.0 * t, weights=w / math.sqrt(math.pi),
                   capacity=2 * n - 1)

    @property
    def n(self) -> int:
        return len(self.nodes)

    def basis(self, nmax: int) -> np.ndarray:
        """Matrix H[i, m] = h_m(y_i) for m = 0..nmax, by stable recurrence."""
        if nmax in self._basis:
            return self._basis[nmax]
        ymax = float(np.max(np.abs(self.nodes)))
        if nmax * math.log(max(ymax, 2.0)) > 680.0:
            raise ValueError(
                f"basis degree {nmax} would overflow at |y|={ymax:.1f}")
        H = np.empty((self.n, nmax + 1))
        H[:, 0] = 1.0
        if nmax >= 1:
            H[:, 1] = self.nodes
        for m in range(1, nmax):
            H[:, m + 1] = self.nodes * H[:, m] - 2.0 * m * H[:, m - 1]
        self._basis[nmax] = H
        return H

    def norms2(self, nmax: int) -> np.ndarray:
        return np.array([hermite_norm2(m) for m in range(nmax + 1)])


@dataclass
class ComplexField:
    """Complex samples on a quadrature grid."""

    grid: QuadratureGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.nodes.shape:
            raise ValueError("field/grid size mismatch")
        if not np.all(np.isfinite(self.values.view(float))):
            raise ValueError("field contains non-finite samples")

    @classmethod
    def from_callable(cls, grid: QuadratureGrid, f: Callable) -> "ComplexField":
        return cls(grid, np.asarray(f(grid.nodes), dtype=complex))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


def _check_same_grid(f: ComplexField, g: ComplexField):
    if f.grid is not g.grid and not np.array_equal(f.grid.nodes, g.grid.nodes):
        raise ValueError("fields live on different grids")


def inner(f: ComplexField, g: ComplexField) -> complex:
    """Quadrature approximation of int f conj(g) rho dy."""
    _check_same_grid(f, g)
    return complex(np.sum(f.grid.weights * f.values * np.conj(g.values)))


def analyze(f: ComplexField, nmax: int) -> np.ndarray:
    """Complex Hermite coefficients Q_m = <f, h_m>/||h_m||^2, m = 0..nmax."""
    if 2 * nmax > f.grid.capacity:
        raise ValueError(
            f"grid capacity {f.grid.capacity} too small for degree {nmax}")
    H = f.grid.basis(nmax)
    return (H.T @ (f.grid.weights * f.values)) / f.grid.norms2(nmax)


def synthesize(grid: QuadratureGrid, coeffs: np.ndarray) -> ComplexField:
    """Field with values sum_m coeffs[m] h_m(y_i)."""
    H = grid.basis(len(coeffs) - 1)
    return ComplexField(grid, H @ np.asarray(coeffs, dtype=complex))


def differentiate_coeffs(coeffs: np.ndarray) -> np.ndarray:
    """Coefficient image of d/dy, using h_m' = m h_{m-1}."""
    out = np.zeros_like(np.asarray(coeffs, dtype=complex))
    m = np.arange(1, len(coeffs))
    out[:-1] = m * coeffs[1:]
    return out


def _default_nmax(grid: QuadratureGrid) -> int:
    # full collocation degree when representable, else the overflow-safe cap
    ymax = float(np.max(np.abs(grid.nodes)))
    return min(grid.n - 1, int(680.0 / math.log(max(ymax, 2.0))))


def apply_L0(f: ComplexField, nmax: Optional[int] = None) -> ComplexField:
    """L0 f = f'' - y f'/2 via the spectral coefficients (-m/2 eigenvalues)."""
    if nmax is None:
        nmax = _default_nmax(f.grid)
    Q = analyze(f, nmax)
    return synthesize(f.grid, -0.5 * np.arange(nmax + 1) * Q)


def apply_Ltilde(f: ComplexField, delta: float,
                 nmax: Optional[int] = None) -> ComplexField:
    """Ltilde f = L0 f + (1+i delta) Re f (R-linear, not C-linear)."""
    lin = apply_L0(f, nmax)
    return ComplexField(f.grid, lin.values + (1.0 + 1j * delta) * f.values.real)


def mehler_matrix(grid: QuadratureGrid, s: float) -> np.ndarray:
    """Discretised exp(s L0) acting on node values, rows normalised to 1.

    Entry (i, j) approximates k(y_i, x_j) w_j / rho(x_j); the exponents are
    assembled in log space so the 1/rho reweighting never overflows.
    """
    if s <= 0:
        raise ValueError("Mehler semigroup requires s > 0")
    c = math.exp(-0.5 * s)
    lam = -math.expm1(-s)            # 1 - e^(-s), accurately for small s
    y = grid.nodes[:, None]
    x = grid.nodes[None, :]
    # log[w_j / rho(x_j)] = log(w_j) + x_j^2/4 + log sqrt(4 pi)
    logw = np.log(grid.weights) + grid.nodes**2 / 4.0 + 0.5 * math.log(4.0 * math.pi)
    expo = -((x - c * y) ** 2) / (4.0 * lam) + logw[None, :] \
        - 0.5 * math.log(4.0 * math.pi * lam)
    K = np.exp(expo)
    K /= K.sum(axis=1, keepdims=True)
    return K


def mehler_apply(s: float, f: ComplexField) -> ComplexField:
    """Apply the heat semigroup exp(s L0) to the sampled field."""
    K = mehler_matrix(f.grid, s)
    return ComplexField(f.grid, K @ f.values)


def mehler_div_bound_check(s: float, f: ComplexField,
                           nmax: Optional[int] = None) -> float:
    """Measured ratio ||exp(s L0) d_y f||_inf * sqrt(1-e^(-s)) / ||f||_inf.

    The derivative is taken spectrally; the sup norms are over the nodes.
    Reported for the L^infty smoothing bound, not asserted against any
    closed-form constant.
    """
    if nmax is None:
        nmax = _default_nmax(f.grid)
    sup_f = f.sup()
    if sup_f == 0.0:
        return 0.0
    df = synthesize(f.grid, differentiate_coeffs(analyze(f, nmax)))
    smoothed = mehler_apply(s, df)
    return smoothed.sup() * math.sqrt(-math.expm1(-s)) / sup_f
