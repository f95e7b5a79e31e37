"""Physical parameters, criticality classification, derived constants and the
closed-form blow-up profile.

The model is the complex Ginzburg-Landau nonlinearity (1+i*delta)|u|^(p-1)u with
diffusion (1+i*beta). We restrict to beta = nu = 0. Criticality is decided by
the sign of p - delta^2 - beta*delta*(p+1); all quantitative machinery below
requires the critical case delta^2 = p.

Derived constants (critical case):

    kappa = (p-1)^(-1/(p-1))
    b     = (p-1)^2 / (8 sqrt(p(p+1)))
    a     = 2 kappa b / (p-1)^2  = kappa / (4 sqrt(p(p+1)))
    mu    = delta / (8p)
    alpha = -kappa / (8 sqrt(p(p+1)))

They satisfy three compatibility relations ("cond"):

    a  = 2 kappa b / (p-1)^2
    mu = 8 delta (p+1) b^2 / (p-1)^4
    1/2 + mu*delta = p(p+1) [ a^2/kappa^2 + 60 b^2/(p-1)^4 - 12 a b/(kappa (p-1)^2) ]

The last line is stated here in the form that is an exact identity; see
cond_residuals for the verification hook.

Profile (slow variable z = y / s^(1/4)):

    phi0(z)   = kappa * (1 + b z^2/(p-1))^(-(1+i delta)/(p-1))
    phi(y, s) = phi0(y/s^(1/4)) + (1+i delta) * a / sqrt(s)

phi0 is normalised so that phi0(0) = kappa exactly (a constant phase
kappa^(-i delta) relative to the raw principal power (p-1+b z^2)^(-(1+i delta)/(p-1));
the raw power differs only by that global phase and solves the same stationary
equation). All derivatives of phi are available in closed form; nothing
downstream uses finite differences on the profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

__all__ = [
    "Parameters",
    "DerivedConstants",
    "classify",
    "critical_parameters",
    "derive_constants",
    "cond_residuals",
    "phi0",
    "phi0_residual",
    "phi",
    "phi_derivatives",
]

#: absolute tolerance on p - delta^2 - beta*delta*(p+1) for the critical label
CRITICALITY_TOL = 1e-12


@dataclass(frozen=True)
class Parameters:
    """Exponents of the equation. beta and nu are carried but fixed to 0."""

    p: float
    delta: float
    beta: float = 0.0
    nu: float = 0.0

    def __post_init__(self):
        if not (self.p > 1.0):
            raise ValueError(f"p must be > 1, got {self.p}")

    @property
    def criticality_indicator(self) -> float:
        """p - delta^2 - beta*delta*(p+1); sign decides the regime."""
        return self.p - self.delta**2 - self.beta * self.delta * (self.p + 1)


def critical_parameters(p: float) -> Parameters:
    """Parameters on the critical line delta = sqrt(p), beta = nu = 0."""
    return Parameters(p=p, delta=math.sqrt(p))


def classify(params: Parameters) -> str:
    """Return 'subcritical', 'critical' or 'supercritical'."""
    ind = params.criticality_indicator
    if abs(ind) <= CRITICALITY_TOL:
        return "critical"
    return "subcritical" if ind > 0 else "supercritical"


@dataclass(frozen=True)
class DerivedConstants:
    """Profile constants at a critical parameter point.

    b_sub is None at criticality (its defining denominator vanishes there);
    b_p is None when delta^2 >= 15 (outside the validity range of the
    physicists' closed form).
    """

    p: float
    delta: float
    kappa: float
    a: float
    b: float
    mu: float
    alpha: float
    b_sub: Optional[float] = None
    b_p: Optional[float] = None


def derive_constants(params: Parameters) -> DerivedConstants:
    """Compute all derived constants; rejects non-critical parameters."""
    label = classify(params)
    if label != "critical":
        raise ValueError(
            f"derived constants require critical parameters; "
            f"(p={params.p}, delta={params.delta}, beta={params.beta}) is {label}"
        )
    p, delta = params.p, params.delta
    g = math.sqrt(p * (p + 1))
    kappa = (p - 1) ** (-1.0 / (p - 1))
    b = (p - 1) ** 2 / (8.0 * g)
    a = 2.0 * kappa * b / (p - 1) ** 2
    mu = delta / (8.0 * p)
    alpha = -kappa / (8.0 * g)

    b_p = None
    d2 = delta**2
    if d2 < 15.0:
        b_p = 2.0 / math.sqrt(1.5 / d2 * (d2 + 5.0) * (d2 + 1.0) * (15.0 - d2))

    # b_sub's denominator 4*(p - delta^2 - beta*delta*(1+p)) vanishes at
    # criticality; reported absent rather than infinite.
    return DerivedConstants(
        p=p, delta=delta, kappa=kappa, a=a, b=b, mu=mu, alpha=alpha,
        b_sub=None, b_p=b_p,
    )


def cond_residuals(c: DerivedConstants) -> Tuple[float, float, float]:
    """Residuals of the three compatibility relations between a, b, mu.

    The third relation is evaluated in its identity form with the term
    12 a b / (kappa (p-1)^2); the variant with 12 a b^2/(p-1)^4 in its place
    is not an identity (it agrees with nothing on the critical line).
    """
    p, kappa, a, b, mu, delta = c.p, c.kappa, c.a, c.b, c.mu, c.delta
    r1 = a - 2.0 * kappa * b / (p - 1) ** 2
    r2 = mu - 8.0 * delta * (p + 1) * b**2 / (p - 1) ** 4
    r3 = (0.5 + mu * delta) - p * (p + 1) * (
        a**2 / kappa**2
        + 60.0 * b**2 / (p - 1) ** 4
        - 12.0 * a * b / (kappa * (p - 1) ** 2)
    )
    return (r1, r2, r3)


ArrayLike = Union[float, np.ndarray]


def _constants(obj: Union[Parameters, DerivedConstants]) -> DerivedConstants:
    if isinstance(obj, DerivedConstants):
        return obj
    return derive_constants(obj)


def phi0(z: ArrayLike, params: Union[Parameters, DerivedConstants]) -> ArrayLike:
    """Self-similar profile phi0(z), normalised so that phi0(0) = kappa.

    Computed as kappa * exp(gamma * log(1 + b z^2/(p-1))) with
    gamma = -(1+i delta)/(p-1); the base stays on the positive real axis so no
    branch choice arises.
    """
    c = _constants(params)
    gamma = -(1.0 + 1j * c.delta) / (c.p - 1.0)
    base = 1.0 + c.b * np.asarray(z, dtype=float) ** 2 / (c.p - 1.0)
    out = c.kappa * np.exp(gamma * np.log(base))
    return out if isinstance(z, np.ndarray) else complex(out)


def _phi0_z_derivatives(z: np.ndarray, c: DerivedConstants):
    """phi0 and its first two z-derivatives, closed form."""
    gamma = -(1.0 + 1j * c.delta) / (c.p - 1.0)
    beta1 = c.b / (c.p - 1.0)
    base = 1.0 + beta1 * z**2
    f = c.kappa * np.exp(gamma * np.log(base))
    # d/dz [kappa base^gamma] = kappa gamma base^(gamma-1) * 2 beta1 z
    fp = f * gamma * 2.0 * beta1 * z / base
    fpp = f * (gamma * 2.0 * beta1 / base
               + gamma * (gamma - 1.0) * (2.0 * beta1 * z / base) ** 2)
    return f, fp, fpp


def phi(y: ArrayLike, s: float, params: Union[Parameters, DerivedConstants]) -> ArrayLike:
    """phi(y, s) = phi0(y/s^(1/4)) + (1+i delta) a / sqrt(s)."""
    c = _constants(params)
    z = np.asarray(y, dtype=float) / s**0.25
    out = phi0(z, c) + (1.0 + 1j * c.delta) * c.a / math.sqrt(s)
    return out if isinstance(y, np.ndarray) else complex(out)


def phi_derivatives(y: ArrayLike, s: float,
                    params: Union[Parameters, DerivedConstants]):
    """(phi, d phi/ds, d phi/dy, d^2 phi/dy^2) in closed form.

    Chain rule through z = y / s^(1/4):
        phi_s  = -z phi0'(z)/(4s) - (1+i delta) a / (2 s^(3/2))
        phi_y  = phi0'(z) s^(-1/4)
        phi_yy = phi0''(z) s^(-1/2)
    """
    c = _constants(params)
    yarr = np.asarray(y, dtype=float)
    z = yarr / s**0.25
    f, fp, fpp = _phi0_z_derivatives(z, c)
    corr = (1.0 + 1j * c.delta) * c.a / math.sqrt(s)
    val = f + corr
    d_s = -0.25 * z * fp / s - 0.5 * corr / s
    d_y = fp * s**-0.25
    d_yy = fpp * s**-0.5
    if isinstance(y, np.ndarray):
        return val, d_s, d_y, d_yy
    return complex(val), complex(d_s), complex(d_y), complex(d_yy)


def phi0_residual(z: ArrayLike, params: Union[Parameters, DerivedConstants]) -> ArrayLike:
    """Pointwise residual of the stationary profile equation

        -z phi0'/2 - (1+i delta) phi0/(p-1) + (1+i delta)|phi0|^(p-1) phi0.

    Vanishes identically for the closed form; evaluated as a self-check.
    """
    c = _constants(params)
    zarr = np.asarray(z, dtype=float)
    f, fp, _ = _phi0_z_derivatives(zarr, c)
    lam = 1.0 + 1j * c.delta
    res = -0.5 * zarr * fp - lam / (c.p - 1.0) * f + lam * np.abs(f) ** (c.p - 1.0) * f
    return res if isinstance(z, np.ndarray) else complex(res)
