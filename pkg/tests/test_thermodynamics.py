import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from spatialperm.errors import DomainError
from spatialperm.model_weights import make_model
from spatialperm.thermodynamics import (
    Method,
    alpha_from_scattering_length,
    alpha_pressure,
    critical_density,
    critical_density_alpha,
    ideal_pressure,
    radial_integral,
    tc_shift_constant,
    thmalpha_lower_bound,
    write_curve_csv,
)

GAUSS = make_model("gaussian", 1.0, 3)
INF = math.inf
RHO_C = special.zeta(1.5) * (4 * math.pi) ** -1.5


def _series_pressure(mu, terms=20):
    return (4 * math.pi) ** -1.5 * sum(math.exp(mu * j) * j**-2.5 for j in range(1, terms + 1))


# ---- radial integrals -----------------------------------------------------


@pytest.mark.parametrize("kind,beta,dim", [("gaussian", 1.0, 3), ("gaussian", 0.5, 2), ("exponential3d", 1.0, 3)])
@pytest.mark.parametrize("j", [1.0, 2.0, 3.5])
def test_closed_form_integral_matches_quadrature(kind, beta, dim, j):
    from scipy import integrate

    from spatialperm.model_weights import surface_area

    m = make_model(kind, beta, dim)
    assert radial_integral(m, j).method is Method.CLOSED_FORM
    f = lambda k: surface_area(dim) * k ** (dim - 1) * math.exp(-j * float(m.epsilon_radial(k)))  # noqa: E731
    ref, _ = integrate.quad(f, 0, np.inf, epsabs=0, epsrel=1e-12, limit=400)
    assert radial_integral(m, j).value == pytest.approx(ref, rel=1e-8)


# ---- pressure -------------------------------------------------------------


def test_ideal_pressure_mu_minus_one():
    p = ideal_pressure(GAUSS, -1.0)
    assert p.value == pytest.approx(_series_pressure(-1.0, 60), rel=1e-12)
    assert p.value == pytest.approx(8.88e-3, rel=1e-3)
    assert p.est_error >= 0


def test_ideal_pressure_vanishes_as_mu_to_minus_infinity():
    assert ideal_pressure(GAUSS, -50.0).value < 1e-22


@pytest.mark.parametrize("mu", [0.0, 0.5])
def test_pressure_requires_negative_mu(mu):
    with pytest.raises(DomainError, match="strictly negative"):
        ideal_pressure(GAUSS, mu)


def test_alpha_zero_pressure_equals_ideal():
    for mu in (-2.0, -0.3):
        assert alpha_pressure(GAUSS, mu, 0.0).value == ideal_pressure(GAUSS, mu).value


def test_alpha_inf_pressure_example():
    expected = _series_pressure(-1.0, 60) - 0.5 * math.exp(-2) * (8 * math.pi) ** -1.5
    assert alpha_pressure(GAUSS, -1.0, INF).value == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("alpha", [0.0, 0.5, INF])
def test_pressure_increasing_and_convex(alpha):
    mus = np.linspace(-3.0, -0.05, 25)
    p = np.array([alpha_pressure(GAUSS, m, alpha).value for m in mus])
    assert np.all(np.diff(p) > 0)
    assert np.all(p[:-2] + p[2:] - 2 * p[1:-1] >= -1e-14)


def test_numeric_pressure_for_powerlaw_matches_series():
    m = make_model("powerlaw1d", 1.0, 1)
    mu = -0.7
    p = ideal_pressure(m, mu)
    assert p.method is Method.QUADRATURE
    ref = sum(math.exp(mu * j) / j * radial_integral(m, j).value for j in range(1, 80))
    assert p.value == pytest.approx(ref, rel=1e-7)


def test_pressure_derivative_tends_to_critical_density():
    # Li_{3/2}(e^mu) approaches zeta(3/2) like sqrt(|mu|); the relative gap shrinks along mu -> 0-
    gaps = []
    for mu in (-1e-3, -1e-5, -1e-7):
        h = abs(mu) * 1e-2
        dp = (ideal_pressure(GAUSS, mu + h).value - ideal_pressure(GAUSS, mu - h).value) / (2 * h)
        gaps.append(abs(dp / RHO_C - 1))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[1] < 0.01


# ---- critical density -----------------------------------------------------


def test_critical_density_gaussian():
    rc = critical_density(GAUSS)
    assert rc.value == pytest.approx(RHO_C, rel=1e-10)
    assert rc.value == pytest.approx(0.0586, abs=1e-4)


def test_series_and_quadrature_agree():
    s = critical_density(GAUSS, "series")
    q = critical_density(GAUSS, "quadrature")
    assert abs(s.value - q.value) <= max(s.est_error + q.est_error, 1e-9 * s.value)


def test_critical_density_divergent_in_low_dimension():
    assert math.isinf(critical_density(make_model("gaussian", 1.0, 2)).value)
    assert math.isinf(critical_density(make_model("gaussian", 1.0, 1)).value)


def test_critical_density_powerlaw_finite():
    v = critical_density(make_model("powerlaw1d", 1.0, 1)).value
    assert math.isfinite(v) and v > 0


def test_critical_density_alpha():
    assert critical_density_alpha(GAUSS, 0.0).value == critical_density(GAUSS).value
    assert critical_density_alpha(GAUSS, INF).value == pytest.approx(RHO_C - (8 * math.pi) ** -1.5, rel=1e-10)


# ---- scattering length, T_c shift, bound ---------------------------------------


def test_alpha_map():
    assert alpha_from_scattering_length(0.0, 1.0) == 0.0
    assert alpha_from_scattering_length(0.01, 1.0) == pytest.approx(0.01 * math.sqrt(8 / math.pi), rel=1e-15)
    assert alpha_from_scattering_length(0.01, 1.0) == pytest.approx(0.01596, abs=1e-5)


def test_tc_shift_value_and_density_independence():
    vals = [tc_shift_constant(r) for r in (0.5, 1.0, 2.0, 8.0)]
    assert vals[1] == pytest.approx(0.37, abs=0.01)
    # analytic linearization of the same critical-density relation
    assert vals[1] == pytest.approx(4 / 3 * special.zeta(1.5) ** (-4 / 3), rel=1e-6)
    assert max(vals) - min(vals) < 1e-3


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 2.0), st.floats(0.0, 20.0))
def test_lower_bound_formula(rho, alpha):
    b = thmalpha_lower_bound(GAUSS, rho, alpha)
    assert b.value == pytest.approx(rho - 4 * RHO_C / (1 + math.exp(-alpha)) ** 2, rel=1e-9, abs=1e-12)
    assert b.vacuous == (b.value <= 0)


def test_lower_bound_limits():
    assert thmalpha_lower_bound(GAUSS, 0.3, 0.0).value == pytest.approx(0.3 - RHO_C, rel=1e-10)
    b = thmalpha_lower_bound(GAUSS, 0.3, INF)
    assert b.value == pytest.approx(0.3 - 4 * RHO_C, rel=1e-9)
    assert b.value == pytest.approx(0.0656, abs=5e-4)
    assert not b.vacuous


def test_curve_csv(tmp_path):
    mus = [-2.0, -1.0]
    path = tmp_path / "p.csv"
    write_curve_csv(path, "mu", mus, [ideal_pressure(GAUSS, m) for m in mus])
    lines = path.read_text().splitlines()
    assert lines[0] == "mu,value,est_error"
    assert len(lines) == 3
