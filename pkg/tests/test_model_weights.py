import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from spatialperm.errors import DomainError
from spatialperm.model_weights import (
    Kind,
    check_fourier_positivity,
    epsilon,
    make_model,
    model_from_config,
    periodized_weight,
    xi_periodized_weight,
)

CATALOG = [("gaussian", 1.0, 1), ("gaussian", 0.7, 2), ("gaussian", 1.0, 3),
           ("exponential3d", 1.0, 3), ("exponential3d", 0.5, 3), ("powerlaw1d", 1.0, 1),
           ("powerlaw1d", 2.0, 1)]


def _direct_transform(model, k):
    """Radial quadrature of the Fourier integral of the weight, independent of the model code."""
    d = model.dim
    if d == 1:
        # int_R g(|x|) cos(2 pi k x) dx = 2 int_0^inf g(r) cos(2 pi k r) dr
        if k == 0:
            return 2 * integrate.quad(lambda r: float(model.weight(r)), 0, np.inf, limit=400)[0]
        val, _ = integrate.quad(lambda r: float(model.weight(r)), 0, np.inf, weight="cos",
                                wvar=2 * np.pi * k, limlst=200)
        return 2 * val
    if d == 2:
        from scipy.special import j0
        f = lambda r: 2 * np.pi * r * float(model.weight(r)) * j0(2 * np.pi * k * r)  # noqa: E731
        return integrate.quad(f, 0, 60 * model.beta, limit=800)[0]
    if k == 0:
        f = lambda r: 4 * np.pi * r**2 * float(model.weight(r))  # noqa: E731
    else:
        f = lambda r: 4 * np.pi * r**2 * float(model.weight(r)) * np.sinc(2 * k * r)  # noqa: E731
    return integrate.quad(f, 0, np.inf, limit=800)[0]


# ---- make_model -------------------------------------------------------


def test_gaussian_normalization():
    assert make_model("gaussian", 1.0, 3).normalization == pytest.approx((4 * math.pi) ** 1.5, rel=1e-15)


def test_exponential_normalization():
    assert make_model("exponential3d", 1.0, 3).normalization == pytest.approx(8 * math.pi, rel=1e-15)


@pytest.mark.parametrize("kind,beta,dim", CATALOG)
def test_normalization_matches_quadrature(kind, beta, dim):
    m = make_model(kind, beta, dim)
    assert m.normalization == pytest.approx(_direct_transform(m, 0.0), rel=1e-7)


@pytest.mark.parametrize("kind,dim", [("exponential3d", 2), ("powerlaw1d", 3), ("gaussian", 4)])
def test_unsupported_kind_dimension(kind, dim):
    with pytest.raises(DomainError):
        make_model(kind, 1.0, dim)


def test_bad_beta_and_table():
    with pytest.raises(DomainError):
        make_model("gaussian", -1.0, 3)
    with pytest.raises(DomainError):
        make_model("tabulated", 1.0, 1, table=([0, 2, 1], [1, 1, 1]))
    with pytest.raises(DomainError):
        make_model("tabulated", 1.0, 1, table=([0, 1, 2], [1, -1, 0]))


# ---- epsilon --------------------------------------------------------------


def test_epsilon_examples():
    g = make_model("gaussian", 1.0, 3)
    assert epsilon(g, [0, 0, 0]) == 0.0
    assert epsilon(g, [1, 0, 0]) == pytest.approx(4 * math.pi**2, rel=1e-15)
    e = make_model("exponential3d", 1.0, 3)
    assert epsilon(e, [1 / (2 * math.pi), 0, 0]) == pytest.approx(2 * math.log(2), rel=1e-14)


@pytest.mark.parametrize("kind,beta,dim", CATALOG)
def test_epsilon_zero_at_origin(kind, beta, dim):
    m = make_model(kind, beta, dim)
    assert epsilon(m, np.zeros(dim)) == 0.0


@pytest.mark.parametrize("kind,beta,dim", CATALOG)
def test_transform_matches_quadrature_at_random_k(kind, beta, dim):
    m = make_model(kind, beta, dim)
    rng = np.random.default_rng(7)
    ks = rng.uniform(0.0, 1.5 / beta, size=20)
    for k in ks:
        direct = _direct_transform(m, k)
        model_val = m.normalization * math.exp(-float(m.epsilon_radial(k)))
        assert model_val == pytest.approx(direct, rel=1e-6, abs=1e-12 * m.normalization)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.sampled_from([0, 1]))
def test_epsilon_symmetric_and_nonnegative(k, which):
    m = make_model(["gaussian", "exponential3d"][which], 1.0, 3)
    a, b = epsilon(m, k), epsilon(m, -np.asarray(k))
    assert a == b
    assert a >= 0


@settings(max_examples=50, deadline=None)
@given(st.floats(-50, 50))
def test_powerlaw_epsilon_symmetric_and_nonnegative(k):
    m = make_model("powerlaw1d", 1.0, 1)
    assert epsilon(m, k) == epsilon(m, -k)
    assert epsilon(m, k) >= 0


def test_gaussian_quadratic_lower_bound():
    m = make_model("gaussian", 1.0, 3)
    ks = np.random.default_rng(0).uniform(-1, 1, size=(200, 3))
    ks = ks[np.linalg.norm(ks, axis=1) <= 1]
    assert np.all(epsilon(m, ks) >= 4 * math.pi**2 * np.sum(ks**2, axis=1) * (1 - 1e-14))


def test_powerlaw_small_k_square_root():
    # e^{-eps} = 1 - c sqrt(k) + ... for a |x|^{-3/2} tail
    m = make_model("powerlaw1d", 1.0, 1)
    ks = np.array([1e-6, 1e-7, 1e-8])
    ratio = m.epsilon_radial(ks) / np.sqrt(ks)
    assert np.ptp(ratio) / ratio.mean() < 0.01


def test_tabulated_gaussian_matches_closed_form():
    r = np.linspace(0, 12, 4001)
    tab = make_model("tabulated", 1.0, 3, table=(r, np.exp(-r**2 / 4)))
    g = make_model("gaussian", 1.0, 3)
    assert tab.normalization == pytest.approx(g.normalization, rel=1e-8)
    ks = np.array([0.1, 0.2, 0.3])
    np.testing.assert_allclose(epsilon(tab, ks[:, None] * [1, 0, 0]), epsilon(g, ks[:, None] * [1, 0, 0]),
                               rtol=1e-6)


def test_model_from_config_reads_table(tmp_path):
    r = np.linspace(0, 10, 201)
    path = tmp_path / "g.csv"
    np.savetxt(path, np.c_[r, np.exp(-r**2 / 4)], delimiter=",", header="r,g", comments="")
    m = model_from_config({"kind": "tabulated", "dim": 1, "table": "g.csv"}, base_dir=tmp_path)
    assert m.kind is Kind.TABULATED
    assert m.normalization == pytest.approx(math.sqrt(4 * math.pi), rel=1e-6)


# ---- periodization -------------------------------------------------------


def test_periodized_gaussian_d1_L2_origin():
    m = make_model("gaussian", 1.0, 1)
    # e^{-(2y)^2/4} = e^{-y^2}
    oracle = sum(math.exp(-y * y) for y in range(-10, 11))
    assert xi_periodized_weight(m, [0.0], 2.0) == pytest.approx(oracle, rel=1e-14)


def test_periodized_origin_large_L():
    m = make_model("gaussian", 1.0, 3)
    assert xi_periodized_weight(m, [0.0, 0.0, 0.0], 200.0) == 1.0


@settings(max_examples=40, deadline=None)
@given(st.floats(0.5, 12), st.lists(st.floats(-5, 5), min_size=3, max_size=3))
def test_periodicity(L, x):
    m = make_model("gaussian", 1.0, 3)
    x = np.asarray(x)
    a = xi_periodized_weight(m, x, L)
    b = xi_periodized_weight(m, x + np.array([L, 0, 0]), L)
    assert a == pytest.approx(b, rel=1e-12)


@pytest.mark.parametrize("kind,dim", [("gaussian", 3), ("exponential3d", 3)])
def test_periodized_converges_geometrically(kind, dim):
    m = make_model(kind, 1.0, dim)
    x = np.array([0.7, 0.2, -0.4])
    exact = float(m.weight(np.linalg.norm(x)))
    errs = [abs(xi_periodized_weight(m, x, L) - exact) for L in (4.0, 8.0, 16.0)]
    assert errs[0] > errs[1] > errs[2]
    # faster than any power of L: each doubling shrinks the error by more than 2^6
    assert errs[1] < errs[0] / 64


def test_periodized_weight_broadcasts():
    m = make_model("gaussian", 1.0, 1)
    dx = np.linspace(-1, 1, 7)[:, None]
    vals = periodized_weight(m, dx, 3.0)
    assert vals.shape == (7,)
    np.testing.assert_allclose(vals, vals[::-1], rtol=1e-14)


# ---- positivity ------------------------------------------------------------


def test_positivity_gaussian_d3():
    rep = check_fourier_positivity(lambda r: np.exp(-np.asarray(r) ** 2 / 4), 3, 40.0, 2.0)
    assert rep.min_transform_value > 0 or rep.nonnegative


def test_positivity_power_law_d1():
    rep = check_fourier_positivity(lambda r: (np.asarray(r) + 1.0) ** -1.5, 1, 400.0, 5.0, n_r=4001)
    assert rep.is_convex_premise
    assert rep.min_transform_value >= -rep.tolerance * rep.peak_value


def test_positivity_hard_cutoff_d1():
    rep = check_fourier_positivity(lambda r: (np.asarray(r) < 1).astype(float), 1, 4.0, 5.0)
    assert not rep.is_convex_premise
    assert not rep.nonnegative
    # transform of the indicator of [-1, 1] is 2 sinc(2k); first negative lobe minimum near k = 0.715
    k = np.linspace(0.5, 1.0, 20001)
    sinc_min = float(np.min(2 * np.sinc(2 * k)))
    assert rep.min_transform_value == pytest.approx(sinc_min, abs=2e-3)


def test_positivity_rejects_coarse_grid_and_negative_profile():
    with pytest.raises(DomainError):
        check_fourier_positivity(lambda r: np.exp(-r), 1, 1.0, 1.0, n_r=2)
    with pytest.raises(DomainError):
        check_fourier_positivity(lambda r: -np.ones_like(r), 1, 1.0, 1.0)
