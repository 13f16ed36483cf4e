"""Macroscopic quantities: pressures, critical densities, and the T_c shift.

All integrals over ``R^d`` of functions of ``epsilon(|k|)`` are radial.  The
building block is ``I(j) = int exp(-j epsilon(k)) dk``, known in closed form
for the Gaussian and the exponential weight and computed by radial
quadrature otherwise.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate, optimize, special

from .errors import DomainError
from .model_weights import DispersionModel, Kind, make_model, surface_area

__all__ = [
    "Method",
    "ThermoResult",
    "LowerBound",
    "radial_integral",
    "ideal_pressure",
    "alpha_pressure",
    "critical_density",
    "critical_density_alpha",
    "alpha_from_scattering_length",
    "critical_beta",
    "tc_shift_constant",
    "thmalpha_lower_bound",
    "write_curve_csv",
]

SERIES_RTOL = 1e-14
SERIES_CAP = 1_000_000


class Method(str, Enum):
    CLOSED_FORM = "closed_form"
    QUADRATURE = "quadrature"
    SERIES = "series"


@dataclass(frozen=True)
class ThermoResult:
    value: float
    method: Method
    est_error: float = 0.0

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class LowerBound:
    """A lower bound on a density; ``vacuous`` when it is not positive."""

    value: float
    rho_c: float

    @property
    def vacuous(self) -> bool:
        return not self.value > 0


def _one_minus_exp(alpha: float) -> float:
    alpha = float(alpha)
    if not alpha >= 0:
        raise DomainError(f"alpha must be nonnegative, got {alpha}")
    return 1.0 if math.isinf(alpha) else -math.expm1(-alpha)


def _has_closed_form(model: DispersionModel) -> bool:
    return model.kind in (Kind.GAUSSIAN, Kind.EXPONENTIAL3D)


def _closed_form_integral(model: DispersionModel, j):
    """``int exp(-j epsilon(k)) dk`` for real ``j > 0`` (vectorized)."""
    j = np.asarray(j, dtype=float)
    b, d = model.beta, model.dim
    if model.kind is Kind.GAUSSIAN:
        return (4.0 * math.pi * b * j) ** (-d / 2)
    # (1 + u^2)^(-2j) against 4 pi k^2 dk with u = 2 pi beta k
    # B(3/2, 2j - 3/2) = Gamma(3/2) / poch(2j - 3/2, 3/2), accurate for large j
    beta_fn = special.gamma(1.5) / special.poch(2 * j - 1.5, 1.5)
    return beta_fn / (4.0 * math.pi**2 * b**3)


def _scale_point(model: DispersionModel, level: float) -> float:
    """A radius where ``epsilon`` reaches ``level`` (for splitting quadratures)."""
    hi = 1.0 / model.beta
    while model.epsilon_radial(hi) < level:
        hi *= 2.0
        if hi > 1e12:
            return hi
    return optimize.brentq(lambda k: float(model.epsilon_radial(k)) - level, 0.0, hi, xtol=1e-14)


def _radial_quad(model: DispersionModel, f, pivot_level: float = 1.0) -> tuple[float, float]:
    """``int_{R^d} f(epsilon(|k|)) dk`` as a radial quadrature split at a scale point."""
    d = model.dim
    sd = surface_area(d)
    k1 = _scale_point(model, pivot_level)
    g = lambda k: sd * k ** (d - 1) * f(float(model.epsilon_radial(k)))  # noqa: E731
    a, ea = integrate.quad(g, 0.0, k1, limit=400, epsabs=0, epsrel=1e-10)
    b, eb = integrate.quad(g, k1, np.inf, limit=200, epsabs=1e-300, epsrel=1e-11)
    return a + b, ea + eb


def radial_integral(model: DispersionModel, j: float) -> ThermoResult:
    """``I(j) = int_{R^d} exp(-j epsilon(k)) dk``."""
    if not j > 0:
        raise DomainError("j must be positive")
    if _has_closed_form(model):
        return ThermoResult(float(_closed_form_integral(model, j)), Method.CLOSED_FORM, 0.0)
    val, err = _radial_quad(model, lambda e: math.exp(-j * e), pivot_level=1.0 / j)
    return ThermoResult(val, Method.QUADRATURE, err)


def _check_mu(mu: float) -> float:
    mu = float(mu)
    if not mu < 0:
        raise DomainError(f"the chemical potential must be strictly negative (mu < 0), got {mu}")
    return mu


def _series(term, rtol=SERIES_RTOL, cap=SERIES_CAP, chunk=4096) -> tuple[float, float, bool]:
    """Sum ``term(j)`` for j = 1, 2, ... until a term drops below rtol * partial sum."""
    total = 0.0
    start = 1
    while start <= cap:
        j = np.arange(start, min(start + chunk, cap + 1))
        t = term(j)
        csum = total + np.cumsum(t)
        small = np.flatnonzero(t < rtol * csum)
        if small.size:
            stop = small[0]
            return float(csum[stop]), float(t[stop]), True
        total = float(csum[-1])
        start += chunk
    return total, float(t[-1]), False


def ideal_pressure(model: DispersionModel, mu: float) -> ThermoResult:
    """Pressure of the non-interacting model, ``-int log(1 - exp(mu - epsilon(k))) dk``.

    For closed-form weights this is the series ``sum_j exp(j mu) I(j) / j``;
    otherwise the logarithm is integrated directly.
    """
    mu = _check_mu(mu)
    if _has_closed_form(model):
        val, last, ok = _series(lambda j: np.exp(j * mu) * _closed_form_integral(model, j) / j)
        if not ok:
            # geometric remainder bound with ratio exp(mu)
            last = last * math.exp(mu) / -math.expm1(mu)
        return ThermoResult(val, Method.SERIES, abs(last))
    val, err = _radial_quad(model, lambda e: -math.log1p(-math.exp(mu - e)))
    return ThermoResult(val, Method.QUADRATURE, err)


def alpha_pressure(model: DispersionModel, mu: float, alpha: float) -> ThermoResult:
    """Pressure with the 2-cycle penalty: ``p0 - exp(2 mu) (1 - e^-alpha) I(2) / 2``."""
    one_minus = _one_minus_exp(alpha)
    p0 = ideal_pressure(model, mu)
    i2 = radial_integral(model, 2.0)
    val = p0.value - 0.5 * math.exp(2 * mu) * one_minus * i2.value
    return ThermoResult(val, p0.method, p0.est_error + 0.5 * math.exp(2 * mu) * i2.est_error)


def _divergence_ratio(model: DispersionModel, shells: int = 12) -> float:
    """Ratio of successive dyadic-shell contributions to ``int dk / (e^eps - 1)`` near k = 0."""
    d = model.dim
    sd = surface_area(d)
    k0 = _scale_point(model, 1e-2)
    f = lambda k: sd * k ** (d - 1) / math.expm1(float(model.epsilon_radial(k)))  # noqa: E731  (k small here)
    vals = []
    for m in range(shells):
        hi = k0 * 2.0**-m
        v, _ = integrate.quad(f, hi / 2, hi, epsrel=1e-10)
        vals.append(v)
    return vals[-1] / vals[-2]


def critical_density(model: DispersionModel, method: str = "auto") -> ThermoResult:
    """``rho_c = int dk / (exp(epsilon(k)) - 1)``.

    ``method='series'`` sums ``I(j)`` (closed-form kinds only) with an
    Euler-Maclaurin remainder; ``'quadrature'`` integrates directly.  A
    divergent integral (shell contributions near k = 0 not shrinking) gives
    ``value = inf``.
    """
    if _divergence_ratio(model) >= 0.99:
        return ThermoResult(math.inf, Method.QUADRATURE, math.inf)
    if method == "auto":
        method = "series" if _has_closed_form(model) else "quadrature"
    if method == "series":
        if not _has_closed_form(model):
            raise DomainError(f"series route needs a closed-form weight, not {model.kind.value}")
        J = 2000
        I = lambda x: float(_closed_form_integral(model, x))  # noqa: E731
        head = float(np.sum(_closed_form_integral(model, np.arange(1, J + 1))))
        tail_int, tail_err = integrate.quad(I, J, np.inf, epsabs=0, epsrel=1e-10, limit=200)
        h = 1e-2 * J
        d1 = (I(J + h) - I(J - h)) / (2 * h)
        d3 = (I(J + 2 * h) - 2 * I(J + h) + 2 * I(J - h) - I(J - 2 * h)) / (2 * h**3)
        # sum_{j>J} f(j) = int_J^inf f - f(J)/2 - f'(J)/12 + f'''(J)/720 - ...
        tail = tail_int - I(J) / 2 - d1 / 12 + d3 / 720
        return ThermoResult(head + tail, Method.SERIES, abs(d3) / 720 + tail_err)
    if method != "quadrature":
        raise DomainError(f"unknown method {method!r}")
    val, err = _radial_quad(model, lambda e: math.exp(-e) / -math.expm1(-e) if e > 0 else math.inf)
    return ThermoResult(val, Method.QUADRATURE, err)


def critical_density_alpha(model: DispersionModel, alpha: float, method: str = "auto") -> ThermoResult:
    """Critical density with the 2-cycle penalty, ``rho_c - (1 - e^-alpha) I(2)``."""
    one_minus = _one_minus_exp(alpha)
    rc = critical_density(model, method)
    i2 = radial_integral(model, 2.0)
    return ThermoResult(rc.value - one_minus * i2.value, rc.method, rc.est_error + i2.est_error)


def alpha_from_scattering_length(a: float, beta: float) -> float:
    """Linear-order map ``alpha = sqrt(8 / (pi beta)) a``."""
    if not a >= 0:
        raise DomainError("scattering length must be nonnegative")
    if not beta > 0:
        raise DomainError("beta must be positive")
    return math.sqrt(8.0 / (math.pi * beta)) * a


def _gaussian_rho_c_alpha(beta: float, a: float) -> float:
    alpha = alpha_from_scattering_length(a, beta)
    zeta32 = special.zeta(1.5)
    return zeta32 * (4 * math.pi * beta) ** -1.5 + math.expm1(-alpha) * (8 * math.pi * beta) ** -1.5


def critical_beta(rho: float, a: float = 0.0) -> float:
    """Inverse temperature at which the 3-D Gaussian model with scattering
    length ``a`` has critical density ``rho``."""
    if not rho > 0:
        raise DomainError("rho must be positive")
    f = lambda b: _gaussian_rho_c_alpha(b, a) - rho  # noqa: E731
    b0 = (special.zeta(1.5) / rho) ** (2 / 3) / (4 * math.pi)
    lo, hi = 0.5 * b0, 2.0 * b0
    while f(lo) < 0:
        lo /= 2
    while f(hi) > 0:
        hi *= 2
    return optimize.brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def tc_shift_constant(rho: float = 1.0, step: float | None = None) -> float:
    """Linear-response constant ``(T_c(a) - T_c(0)) / (T_c(0) rho^(1/3) a)`` as a -> 0.

    Gaussian weight in d = 3 with ``T = 1/beta``.  Computed by forward
    differences at steps ``h`` and ``h/2`` (``h = 1e-4 rho^(-1/3)`` by
    default) combined by Richardson extrapolation.
    """
    if not rho > 0:
        raise DomainError("rho must be positive")
    h = 1e-4 * rho ** (-1 / 3) if step is None else float(step)
    b0 = critical_beta(rho, 0.0)

    def quotient(a):
        return (b0 / critical_beta(rho, a) - 1.0) / (rho ** (1 / 3) * a)

    return 2.0 * quotient(h / 2) - quotient(h)


def thmalpha_lower_bound(model: DispersionModel, rho: float, alpha: float) -> LowerBound:
    """Lower bound ``rho - 4 rho_c / (1 + e^-alpha)^2`` on the density in long cycles."""
    if not rho > 0:
        raise DomainError("rho must be positive")
    _one_minus_exp(alpha)
    rc = critical_density(model).value
    e = 0.0 if math.isinf(alpha) else math.exp(-alpha)
    return LowerBound(value=rho - 4.0 * rc / (1.0 + e) ** 2, rho_c=rc)


def write_curve_csv(path, arg_name: str, args, results) -> None:
    """Write ``(argument, value, est_error)`` rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([arg_name, "value", "est_error"])
        for x, r in zip(args, results):
            if isinstance(r, ThermoResult):
                w.writerow([repr(float(x)), repr(r.value), repr(r.est_error)])
            else:
                w.writerow([repr(float(x)), repr(float(r)), "0.0"])


def gaussian_3d(beta: float = 1.0) -> DispersionModel:
    return make_model(Kind.GAUSSIAN, beta, 3)
