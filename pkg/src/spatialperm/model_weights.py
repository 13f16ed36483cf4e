"""One-body jump weights, their torus periodizations and dispersion relations.

A jump weight is a radial function ``g(r) = exp(-xi(r))`` on R^d.  Its Fourier
transform (with the ``exp(-2 pi i k x)`` convention) is written
``C * exp(-epsilon(k))`` where ``C`` is the integral of ``g``, so that
``epsilon(0) == 0``.
"""

from __future__ import annotations

import csv
import functools
import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Mapping

import numpy as np
from scipy import integrate, interpolate, special

from .errors import DomainError, PeriodizationError, PositivityError

__all__ = [
    "Kind",
    "DispersionModel",
    "PositivityReport",
    "make_model",
    "epsilon",
    "xi_periodized_weight",
    "periodized_weight",
    "check_fourier_positivity",
    "surface_area",
    "model_from_config",
    "read_radial_table",
]


class Kind(str, Enum):
    GAUSSIAN = "gaussian"
    EXPONENTIAL3D = "exponential3d"
    POWERLAW1D = "powerlaw1d"
    TABULATED = "tabulated"


_KIND_ALIASES = {
    "gaussian": Kind.GAUSSIAN,
    "exponential3d": Kind.EXPONENTIAL3D,
    "exponential": Kind.EXPONENTIAL3D,
    "powerlaw1d": Kind.POWERLAW1D,
    "powerlaw": Kind.POWERLAW1D,
    "tabulated": Kind.TABULATED,
    "tabulatedradial": Kind.TABULATED,
}

# relative stopping threshold for image sums
_IMAGE_RTOL = 1e-14
_MAX_SHELLS = {1: 100_000, 2: 2_000, 3: 200}


def surface_area(d: int) -> float:
    """Area of the unit sphere in R^d (2 for d=1)."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def _as_kind(kind) -> Kind:
    if isinstance(kind, Kind):
        return kind
    key = str(kind).replace("_", "").replace("-", "").lower()
    try:
        return _KIND_ALIASES[key]
    except KeyError:
        raise DomainError(f"unknown model kind {kind!r}") from None


# ---------------------------------------------------------------------------
# power law (|x|/beta + 1)^(-3/2) in d=1, unit length scale


_PL_NORM = 4.0  # 2 * int_0^inf (1+r)^(-3/2) dr


def _pl_defect(kappa: float) -> float:
    """int_0^inf (1 - cos(2 pi kappa r)) (1+r)^(-3/2) dr, free of cancellation."""
    w = 2.0 * math.pi * kappa
    cut = 20.0 * math.pi  # cos(u + cut) == cos(u)
    head, _ = integrate.quad(lambda u: 2.0 * math.sin(0.5 * u) ** 2 * (u + w) ** -1.5,
                             0.0, cut, limit=400, epsabs=0.0, epsrel=1e-13)
    osc, _ = integrate.quad(lambda v: (v + cut + w) ** -1.5, 0.0, np.inf,
                            weight="cos", wvar=1.0, limlst=200)
    tail = 2.0 * (cut + w) ** -0.5 - osc
    return math.sqrt(w) * (head + tail)


def _pl_transform_asymptotic(kappa: float) -> float:
    """Large-kappa expansion from repeated integration by parts at r = 0.

    ``2 sum_n (-1)^n (3/2)_(2n+1) / (2 pi kappa)^(2n+2)``, summed up to its
    smallest term; the truncation error is of order ``exp(-2 pi kappa)``.
    """
    a2 = (2.0 * math.pi * kappa) ** 2
    term = 1.5 / a2
    total = 0.0
    n = 0
    while True:
        total += term
        nxt = -term * (2 * n + 2.5) * (2 * n + 3.5) / a2
        if abs(nxt) >= abs(term) or abs(nxt) < 1e-17 * abs(total):
            break
        term, n = nxt, n + 1
    return 2.0 * total


_PL_ASYMPTOTIC = 5.0


def _pl_epsilon_exact(kappa: float) -> float:
    if kappa == 0.0:
        return 0.0
    if kappa >= _PL_ASYMPTOTIC:
        return -math.log(_pl_transform_asymptotic(kappa) / _PL_NORM)
    ratio = 2.0 * _pl_defect(kappa) / _PL_NORM
    if not ratio < 1.0:
        raise PositivityError(f"power-law transform non-positive at k={kappa}")
    return -math.log1p(-ratio)


_PL_KMIN, _PL_KMAX, _PL_PER_DECADE = 1e-8, 1e4, 50


@functools.lru_cache(maxsize=1)
def _pl_spline():
    n = int(round(math.log10(_PL_KMAX / _PL_KMIN) * _PL_PER_DECADE)) + 1
    kappa = np.geomspace(_PL_KMIN, _PL_KMAX, n)
    eps = np.array([_pl_epsilon_exact(k) for k in kappa])
    return interpolate.CubicSpline(np.log(kappa), np.log(eps)), float(eps[0])


def _pl_epsilon(kappa: np.ndarray) -> np.ndarray:
    spline, eps_min = _pl_spline()
    kappa = np.asarray(kappa, dtype=float)
    out = np.zeros_like(kappa)
    low = (kappa > 0) & (kappa < _PL_KMIN)
    mid = (kappa >= _PL_KMIN) & (kappa <= _PL_KMAX)
    high = kappa > _PL_KMAX
    out[low] = eps_min * np.sqrt(kappa[low] / _PL_KMIN)
    out[mid] = np.exp(spline(np.log(kappa[mid])))
    if np.any(high):
        out[high] = [_pl_epsilon_exact(float(k)) for k in kappa[high]]
    return out


# ---------------------------------------------------------------------------


def _radial_kernel(d: int, k: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Angular average of exp(-2 pi i k.x) times the radial measure S_d r^(d-1)."""
    kr = np.multiply.outer(k, r)
    if d == 1:
        return 2.0 * np.cos(2.0 * np.pi * kr)
    if d == 2:
        return 2.0 * np.pi * r * special.j0(2.0 * np.pi * kr)
    return 4.0 * np.pi * r**2 * np.sinc(2.0 * kr)


@dataclass(frozen=True, eq=False)
class DispersionModel:
    """A spherically symmetric jump weight with its dispersion relation.

    Parameters
    ----------
    kind : Kind
        Closed-form family or ``TABULATED`` for user samples of ``g(r)``.
    beta : float
        Length-scale parameter (inverse temperature for the Gaussian).
    dim : int
        Spatial dimension.
    table : tuple of arrays, optional
        ``(r, g)`` samples for the tabulated kind; ``g`` is taken to vanish
        beyond the last radius.
    """

    kind: Kind
    beta: float
    dim: int
    table: tuple[np.ndarray, np.ndarray] | None = None
    normalization: float = field(init=False)

    def __post_init__(self):
        kind = _as_kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise DomainError(f"beta must be positive, got {self.beta}")
        if self.dim not in (1, 2, 3):
            raise DomainError(f"dimension must be 1, 2 or 3, got {self.dim}")
        if kind is Kind.EXPONENTIAL3D and self.dim != 3:
            raise DomainError("the exponential weight is only defined in d=3")
        if kind is Kind.POWERLAW1D and self.dim != 1:
            raise DomainError("the power-law weight is only defined in d=1")
        if kind is Kind.TABULATED:
            if self.table is None:
                raise DomainError("tabulated model requires a table of (r, g(r))")
            r, g = (np.asarray(a, dtype=float) for a in self.table)
            if r.ndim != 1 or r.shape != g.shape or r.size < 3:
                raise DomainError("table needs two equal-length columns with at least 3 rows")
            if r[0] < 0 or np.any(np.diff(r) <= 0):
                raise DomainError("table radii must be nonnegative and strictly increasing")
            if np.any(g < 0) or not np.all(np.isfinite(g)):
                raise DomainError("tabulated weights must be finite and nonnegative")
            r.setflags(write=False)
            g.setflags(write=False)
            object.__setattr__(self, "table", (r, g))
        elif self.table is not None:
            raise DomainError(f"{kind.value} model does not take a table")

        object.__setattr__(self, "normalization", self._compute_normalization())
        if kind is Kind.POWERLAW1D:
            _pl_spline()  # build the cache now, not on first use

    # -- closed forms -----------------------------------------------------

    def _compute_normalization(self) -> float:
        b, d = self.beta, self.dim
        if self.kind is Kind.GAUSSIAN:
            return (4.0 * math.pi * b) ** (d / 2)
        if self.kind is Kind.EXPONENTIAL3D:
            return 8.0 * math.pi * b**3
        if self.kind is Kind.POWERLAW1D:
            return _PL_NORM * b
        r, g = self.table
        c = float(integrate.simpson(surface_area(d) * r ** (d - 1) * g, x=r))
        if not c > 0:
            raise DomainError("tabulated weight has zero integral")
        return c

    def weight(self, r) -> np.ndarray:
        """``exp(-xi(r))`` for radii ``r >= 0``."""
        r = np.asarray(r, dtype=float)
        b = self.beta
        if self.kind is Kind.GAUSSIAN:
            return np.exp(-(r**2) / (4.0 * b))
        if self.kind is Kind.EXPONENTIAL3D:
            return np.exp(-r / b)
        if self.kind is Kind.POWERLAW1D:
            return (1.0 + r / b) ** -1.5
        rt, gt = self.table
        return np.interp(r, rt, gt, right=0.0)

    def xi(self, r) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return -np.log(self.weight(r))

    def epsilon_radial(self, kabs) -> np.ndarray:
        """Dispersion relation as a function of ``|k|`` (vectorized)."""
        k = np.asarray(kabs, dtype=float)
        b = self.beta
        if self.kind is Kind.GAUSSIAN:
            return 4.0 * math.pi**2 * b * k**2
        if self.kind is Kind.EXPONENTIAL3D:
            return 2.0 * np.log1p((2.0 * math.pi * b * k) ** 2)
        if self.kind is Kind.POWERLAW1D:
            return _pl_epsilon(b * k)
        t = self.transform(k)
        if np.any(t <= 0):
            bad = np.atleast_1d(k)[np.atleast_1d(t) <= 0][0]
            raise PositivityError(f"Fourier transform of the tabulated weight is <= 0 at |k|={bad:g}")
        return -np.log(t / self.normalization)

    def transform(self, kabs) -> np.ndarray:
        """Fourier transform ``C exp(-epsilon(|k|))`` of the jump weight."""
        k = np.asarray(kabs, dtype=float)
        if self.kind is not Kind.TABULATED:
            return self.normalization * np.exp(-self.epsilon_radial(k))
        r, g = self.table
        flat = np.atleast_1d(k).ravel()
        out = np.empty(flat.shape)
        for start in range(0, flat.size, 256):
            chunk = flat[start:start + 256]
            out[start:start + 256] = integrate.simpson(_radial_kernel(self.dim, chunk, r) * g, x=r, axis=-1)
        return out.reshape(k.shape) if k.ndim else out[0]

    def exp_neg_epsilon(self, kabs) -> np.ndarray:
        return np.exp(-self.epsilon_radial(kabs))

    def describe(self) -> dict:
        out = {"kind": self.kind.value, "beta": self.beta, "dim": self.dim}
        if self.table is not None:
            out["table"] = [self.table[0].tolist(), self.table[1].tolist()]
        return out


def make_model(kind, beta: float = 1.0, dim: int = 3, table=None) -> DispersionModel:
    """Build a jump-weight model.

    >>> make_model("gaussian", 1.0, 3).normalization  # (4 pi)^(3/2)
    44.546...
    """
    return DispersionModel(_as_kind(kind), float(beta), int(dim), table)


def epsilon(model: DispersionModel, k) -> float | np.ndarray:
    """Dispersion ``epsilon(k)`` at a d-vector ``k`` or an array of shape (..., d).

    Raises `PositivityError` where the transform of the weight is not positive.
    """
    k = np.asarray(k, dtype=float)
    if model.dim == 1 and (k.ndim == 0 or k.shape[-1] != 1):
        kabs = np.abs(k)
    else:
        if k.shape[-1] != model.dim:
            raise DomainError(f"k must have {model.dim} components, got shape {k.shape}")
        kabs = np.linalg.norm(k, axis=-1)
    out = model.epsilon_radial(kabs)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# periodization on the torus of side L


def _reduce(dx: np.ndarray, L: float) -> np.ndarray:
    return dx - L * np.round(dx / L)


def _gaussian_image_sum_1d(x: np.ndarray, L: float, beta: float) -> np.ndarray:
    total = np.exp(-(x**2) / (4.0 * beta))
    m = 1
    while True:
        shell = np.exp(-((x - m * L) ** 2) / (4.0 * beta)) + np.exp(-((x + m * L) ** 2) / (4.0 * beta))
        total = total + shell
        if np.all(shell <= _IMAGE_RTOL * total):
            return total
        m += 1
        if m > _MAX_SHELLS[1]:
            raise PeriodizationError("Gaussian image sum did not converge")


def _shell_offsets(s: int, d: int) -> np.ndarray:
    if s == 0:
        return np.zeros((1, d))
    rng = range(-s, s + 1)
    pts = np.array([p for p in itertools.product(rng, repeat=d) if max(abs(c) for c in p) == s], dtype=float)
    return pts


def periodized_weight(model: DispersionModel, dx, L: float) -> np.ndarray:
    """``exp(-xi_L(dx)) = sum_{y in Z^d} exp(-xi(dx - L y))``, vectorized over ``dx``.

    ``dx`` has shape (..., d) (or (...) in one dimension).  Images are added
    shell by shell until a shell contributes less than 1e-14 of the running
    total; the Gaussian factorizes over coordinates and the power law is
    summed exactly with Hurwitz zeta functions.
    """
    if not L > 0:
        raise DomainError(f"box side must be positive, got {L}")
    d = model.dim
    dx = np.asarray(dx, dtype=float)
    if d == 1 and (dx.ndim == 0 or dx.shape[-1] != 1):
        dx = dx[..., None]
    if dx.shape[-1] != d:
        raise DomainError(f"displacements must have {d} components")
    x = _reduce(dx, L)

    if model.kind is Kind.GAUSSIAN:
        return np.prod(_gaussian_image_sum_1d(x, L, model.beta), axis=-1)

    if model.kind is Kind.POWERLAW1D:
        b = model.beta
        u = np.mod(x[..., 0], L)
        return b**1.5 * L**-1.5 * (special.zeta(1.5, (b + u) / L) + special.zeta(1.5, (b + L - u) / L))

    flat = x.reshape(-1, d)
    total = np.zeros(flat.shape[0])
    r_support = model.table[0][-1] if model.kind is Kind.TABULATED else None
    s = 0
    while True:
        offs = _shell_offsets(s, d) * L
        dist = np.linalg.norm(flat[:, None, :] - offs[None, :, :], axis=-1)
        shell = model.weight(dist).sum(axis=1)
        total += shell
        if r_support is not None:
            if (s + 0.5) * L > r_support:
                break
        elif s >= 1 and np.all(shell <= _IMAGE_RTOL * total):
            break
        s += 1
        if s > _MAX_SHELLS[d]:
            raise PeriodizationError(f"image sum did not converge after {s} shells")
    return total.reshape(x.shape[:-1])


def xi_periodized_weight(model: DispersionModel, x, L: float) -> float:
    """Periodized jump weight ``exp(-xi_L(x))`` at a single displacement ``x``."""
    return float(periodized_weight(model, np.asarray(x, dtype=float), L))


# ---------------------------------------------------------------------------
# Fourier positivity of radial profiles


@dataclass(frozen=True)
class PositivityReport:
    is_convex_premise: bool
    min_transform_value: float
    grid_spec: dict
    k_at_min: float = 0.0
    peak_value: float = 0.0
    tolerance: float = 1e-9

    @property
    def nonnegative(self) -> bool:
        """Transform counts as nonnegative down to ``-tolerance * peak``."""
        return self.min_transform_value >= -self.tolerance * self.peak_value


def check_fourier_positivity(profile: Callable[[np.ndarray], np.ndarray] | tuple,
                             dim: int, r_max: float, k_max: float,
                             n_r: int = 2001, n_k: int = 201,
                             tol: float = 1e-9, order: int = 8) -> PositivityReport:
    """Check convexity of ``r^(d-1) g(r)`` and scan the radial Fourier transform.

    Parameters
    ----------
    profile : callable or (r, g) samples
        Radial profile ``g``; samples are linearly interpolated and taken as
        zero beyond the last radius.
    dim : int
        Dimension of the ambient space.
    r_max, k_max : float
        Radial and frequency ranges of the scan.
    n_r, n_k : int
        Number of radial grid points and of frequencies.
    tol : float
        Transform values above ``-tol * peak`` count as nonnegative.

    Notes
    -----
    For d = 1 and 3 the radial integral at frequency k is truncated at the
    largest whole number of kernel periods below ``r_max``.  For profiles
    with convex ``r^(d-1) g`` in d = 1 every period contributes a
    nonnegative amount, so the truncated value is a lower bound of the
    full transform.
    """
    if n_r < 3 or n_k < 3:
        raise DomainError("grid too coarse: need at least 3 radial points and 3 frequencies")
    if dim not in (1, 2, 3):
        raise DomainError("dimension must be 1, 2 or 3")
    if not (r_max > 0 and k_max > 0):
        raise DomainError("r_max and k_max must be positive")
    if isinstance(profile, tuple):
        rt, gt = (np.asarray(a, dtype=float) for a in profile)
        g = lambda r: np.interp(r, rt, gt, right=0.0)  # noqa: E731
    else:
        g = profile

    r = np.linspace(r_max / n_r, r_max, n_r)
    gr = np.asarray(g(r), dtype=float)
    if np.any(gr < 0):
        raise DomainError("profile has negative samples")
    h = r ** (dim - 1) * gr
    second = h[:-2] - 2.0 * h[1:-1] + h[2:]
    scale = float(np.max(np.abs(h))) or 1.0
    convex = bool(np.all(second >= -1e-12 * scale))

    nodes, wts = np.polynomial.legendre.leggauss(order)
    ks = np.linspace(0.0, k_max, n_k)
    values = np.empty(n_k)
    for i, k in enumerate(ks):
        upper = r_max
        if dim in (1, 3) and k * r_max >= 1.0:
            upper = math.floor(k * r_max) / k
        edges = np.linspace(0.0, upper, n_r)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * np.diff(edges)
        rr = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
        ww = (half[:, None] * wts[None, :]).ravel()
        kern = _radial_kernel(dim, np.array([k]), rr)[0]
        values[i] = float(np.sum(ww * kern * np.asarray(g(rr), dtype=float)))

    imin = int(np.argmin(values))
    return PositivityReport(
        is_convex_premise=convex,
        min_transform_value=float(values[imin]),
        grid_spec={"dim": dim, "r_max": r_max, "k_max": k_max, "n_r": n_r, "n_k": n_k,
                   "quadrature": f"Gauss-Legendre order {order} per radial cell"},
        k_at_min=float(ks[imin]),
        peak_value=float(np.max(np.abs(values))),
        tolerance=tol,
    )


# ---------------------------------------------------------------------------
# config files


def read_radial_table(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a two-column CSV ``r, g(r)``; a non-numeric first row is a header."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                if rows:
                    raise DomainError(f"malformed row in {path}: {row}") from None
    if not rows:
        raise DomainError(f"no data rows in {path}")
    arr = np.array(rows)
    return arr[:, 0], arr[:, 1]


def model_from_config(cfg: Mapping, base_dir=None) -> DispersionModel:
    """Build a model from a mapping with keys ``kind``, ``beta``, ``dim``, ``table``."""
    try:
        kind = cfg["kind"]
    except KeyError:
        raise DomainError("model config needs a 'kind' key") from None
    table = cfg.get("table")
    if isinstance(table, (str, Path)):
        path = Path(table)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        table = read_radial_table(path)
    return make_model(kind, float(cfg.get("beta", 1.0)), int(cfg.get("dim", 3)), table)
