import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from spatialperm.errors import DomainError, ResourceCapError, UnsupportedExactError
from spatialperm.model_weights import make_model
from spatialperm.spectral import (
    ModeSet,
    build_mode_set,
    cycle_sum_log_partition,
    expected_cycle_density,
    h_table,
    mgf_n0,
    occupation_marginal,
    occupation_tail,
    partition_table,
    sample_occupation,
    sample_occupations,
    typical_set_probability,
)

INF = math.inf
E1, E2 = math.exp(-1), math.exp(-2)


# ---- independent brute-force references -----------------------------------


def _n2(p):
    return sum(1 for i, j in enumerate(p) if j != i and p[j] == i) // 2


def brute_h(n, alpha):
    if n == 0:
        return 1.0
    w = 0.0 if alpha == INF else math.exp(-alpha)
    return sum(w ** _n2(p) if _n2(p) else 1.0 for p in itertools.permutations(range(n))) / math.factorial(n)


def occupation_states(K, N):
    for c in itertools.combinations_with_replacement(range(K), N):
        yield tuple(c.count(k) for k in range(K))


def brute_partition(energies, N, alpha):
    states = list(occupation_states(len(energies), N))
    w = np.array([math.prod(math.exp(-e * n) * brute_h(n, alpha) for e, n in zip(energies, s)) for s in states])
    return states, w


def brute_window_count(n, m, hi):
    """Expected number of indices in cycles with length in [m, hi] for a uniform permutation of size n."""
    if n == 0:
        return 0.0
    total = 0
    for p in itertools.permutations(range(n)):
        seen = [False] * n
        for s in range(n):
            if seen[s]:
                continue
            ln, i = 0, s
            while not seen[i]:
                seen[i] = True
                i = p[i]
                ln += 1
            if m <= ln <= hi:
                total += ln
    return total / math.factorial(n)


# ---- mode sets -------------------------------------------------------------


def test_first_mode_is_zero():
    ms = build_mode_set(make_model("gaussian", 1.0, 3), 5.0)
    assert np.all(ms.lattice[0] == 0)
    assert ms.energies[0] == 0.0


def test_mode_cutoff_d1_L1():
    # 4 pi^2 k^2 = 12 ln 10 at the cutoff
    ms = build_mode_set(make_model("gaussian", 1.0, 1), 1.0, tail_bound=1e-12)
    root = math.sqrt(12 * math.log(10) / (4 * math.pi**2))
    assert ms.k_cut == pytest.approx(root, rel=0.05)
    kept = np.abs(ms.modes[:, 0])
    assert np.all(kept <= ms.k_cut)
    dropped = sum(2 * math.exp(-4 * math.pi**2 * k * k) for k in range(1, 100) if k > ms.k_cut)
    assert dropped < 1e-12


@pytest.mark.parametrize("L", [3.0, 6.0, 10.0])
def test_tail_mass_below_bound(L):
    model = make_model("gaussian", 1.0, 3)
    ms = build_mode_set(model, L, tail_bound=1e-8)
    nmax = int(ms.k_cut * L) + 6
    r = np.arange(-nmax, nmax + 1)
    n2 = (r[:, None, None] ** 2 + r[None, :, None] ** 2 + r[None, None, :] ** 2).ravel()
    k2 = n2 / L**2
    outside = k2 > ms.k_cut**2
    assert np.sum(np.exp(-4 * math.pi**2 * k2[outside])) < 1e-8
    assert ms.n_modes == int(np.sum(~outside))


def test_mode_order_deterministic_and_sorted():
    model = make_model("gaussian", 1.0, 2)
    a = build_mode_set(model, 4.0)
    b = build_mode_set(model, 4.0)
    np.testing.assert_array_equal(a.lattice, b.lattice)
    norms = np.sum(a.lattice**2, axis=1)
    assert np.all(np.diff(norms) >= 0)
    for lev in range(a.n_levels):
        s, m = a.level_start[lev], a.level_mult[lev]
        block = [tuple(v) for v in a.lattice[s:s + m]]
        assert block == sorted(block)


def test_mode_count_grows_like_volume():
    model = make_model("gaussian", 1.0, 3)
    counts = []
    for L in (5.0, 10.0):
        ms = build_mode_set(model, L, tail_bound=1e-10)
        R = ms.k_cut * L
        r = np.arange(-int(R) - 1, int(R) + 2)
        n2 = r[:, None, None] ** 2 + r[None, :, None] ** 2 + r[None, None, :] ** 2
        assert ms.n_modes == int(np.sum(n2 <= R * R + 1e-9))
        counts.append(ms.n_modes)
    assert counts[1] / counts[0] == pytest.approx(8.0, rel=0.15)


def test_mode_cap():
    with pytest.raises(ResourceCapError):
        build_mode_set(make_model("gaussian", 1.0, 3), 40.0, max_modes=1000)


def test_bad_tail_bound():
    with pytest.raises(DomainError):
        build_mode_set(make_model("gaussian", 1.0, 3), 4.0, tail_bound=0.5)


# ---- h_n ------------------------------------------------------------------


def test_h_examples():
    assert h_table(INF, 4).values[4] == pytest.approx(0.625, abs=1e-15)
    assert np.all(h_table(0.0, 20).values == 1.0)
    for a in (0.2, 1.0, INF):
        t = h_table(a, 3)
        assert t.values[2] == pytest.approx(1 - t.delta, rel=1e-15)
        assert t.values[3] == pytest.approx(1 - t.delta, rel=1e-15)


@pytest.mark.parametrize("alpha", [0.0, 0.3, 1.0, INF])
def test_h_brute_force(alpha):
    t = h_table(alpha, 7)
    for n in range(8):
        assert t.values[n] == pytest.approx(brute_h(n, alpha), rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("alpha", [0.0, 0.1, 1.0, 10.0, INF])
def test_h_bounds(alpha):
    t = h_table(alpha, 200)
    d = t.delta
    assert t.values[0] == t.values[1] == 1.0
    assert np.all(t.values <= 1.0 + 1e-15)
    assert np.all(t.values >= 1.0 - d - 1e-15)
    for n in range(201):
        assert abs(t.values[n] - math.exp(-d)) <= d ** (n / 2) / math.factorial(n // 2) + 1e-15


def test_h_rejects_negative_alpha():
    with pytest.raises(DomainError):
        h_table(-1.0, 4)


# ---- partition functions ----------------------------------------------------


def test_single_mode_partition_is_one():
    for N in (0, 1, 5, 50):
        t = partition_table(ModeSet.from_energies([0.0]), N)
        assert t.logZ == 0.0


def test_two_mode_examples():
    ms = ModeSet.from_energies([0.0, 1.0])
    t0 = partition_table(ms, 2)
    assert math.exp(t0.logZ) == pytest.approx(1 + E1 + E2, rel=1e-14)
    tinf = partition_table(ms, 2, h_table(INF, 2))
    assert math.exp(tinf.logZ) == pytest.approx(0.5 * (1 + E2) + E1, rel=1e-14)


ENERGY_SETS = [[0.0], [0.0, 1.0], [0.0, 0.3, 0.3], [0.0, 0.5, 2.0], [0.0, 1.7]]


@pytest.mark.parametrize("energies", ENERGY_SETS)
@pytest.mark.parametrize("alpha", [0.0, 0.5, INF])
def test_partition_and_marginals_match_enumeration(energies, alpha):
    ms = ModeSet.from_energies(energies)
    for N in range(7):
        t = partition_table(ms, N, h_table(alpha, max(N, 1)))
        states, w = brute_partition(energies, N, alpha)
        assert math.exp(t.logZ) == pytest.approx(w.sum(), rel=1e-10)
        for k in range(len(energies)):
            p = occupation_marginal(t, k)
            ref = np.zeros(N + 1)
            for s, wt in zip(states, w):
                ref[s[k]] += wt
            np.testing.assert_allclose(p, ref / w.sum(), rtol=1e-10, atol=1e-15)


@pytest.mark.parametrize("energies", ENERGY_SETS)
def test_cycle_density_matches_enumeration(energies):
    ms = ModeSet.from_energies(energies, volume=2.0)
    for N in range(1, 6):
        t = partition_table(ms, N)
        states, w = brute_partition(energies, N, 0.0)
        for m, hi in [(a, b) for a, b in [(1, 1), (2, 2), (1, N), (2, 3), (3, N)] if a <= b]:
            ref = sum(wt * sum(brute_window_count(n, m, hi) for n in s) for s, wt in zip(states, w))
            ref /= w.sum() * 2.0
            assert expected_cycle_density(t, m, hi) == pytest.approx(ref, rel=1e-10, abs=1e-15)


def test_cycle_density_examples():
    V = 3.0
    t = partition_table(ModeSet.from_energies([0.0], volume=V), 3)
    assert expected_cycle_density(t, 2, 2) == pytest.approx(1 / V, rel=1e-14)
    assert expected_cycle_density(t, 1, 3) == pytest.approx(3 / V, rel=1e-14)
    t2 = partition_table(ModeSet.from_energies([0.0, 1.0], volume=V), 2)
    Z = 1 + E1 + E2
    assert expected_cycle_density(t2, 2, 2) == pytest.approx((1 / Z + E2 / Z) / V, rel=1e-14)


def test_cycle_density_alpha_unsupported():
    t = partition_table(ModeSet.from_energies([0.0, 1.0]), 2, h_table(0.5, 2))
    with pytest.raises(UnsupportedExactError):
        expected_cycle_density(t, 1, 1)


def test_two_mode_marginal_example():
    t = partition_table(ModeSet.from_energies([0.0, 1.0]), 2)
    assert occupation_marginal(t, 0)[2] == pytest.approx(1 / (1 + E1 + E2), rel=1e-14)


@pytest.mark.parametrize("L", [4.0, 7.0])
def test_dp_matches_cycle_sum_recursion(L):
    ms = build_mode_set(make_model("gaussian", 1.0, 3), L)
    N = int(0.12 * L**3)
    t = partition_table(ms, N)
    ref = cycle_sum_log_partition(ms, N)
    np.testing.assert_allclose(np.exp(t.log_partition() - ref), 1.0, rtol=1e-10)


def test_large_N_no_overflow():
    ms = build_mode_set(make_model("gaussian", 1.0, 3), 12.0)
    t = partition_table(ms, 3000)
    assert math.isfinite(t.logZ)
    assert t.logZ == pytest.approx(cycle_sum_log_partition(ms, 3000)[-1], rel=1e-10)


def test_log_convex_and_monotone_condensate():
    ms = build_mode_set(make_model("gaussian", 1.0, 3), 6.0)
    Nmax = 60
    t = partition_table(ms, Nmax)
    lz = t.log_partition()
    assert np.all(2 * lz[1:-1] >= lz[:-2] + lz[2:] - 1e-10)
    prev = None
    for N in range(1, Nmax + 1, 3):
        tail = occupation_tail(partition_table(ms, N), 0)
        if prev is not None:
            assert np.all(tail[: prev.size] >= prev - 1e-12)
        prev = tail


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.0, 4.0), min_size=1, max_size=3), st.integers(0, 6),
       st.sampled_from([0.0, 0.5, INF]))
def test_marginals_normalized_and_consistent(extra, N, alpha):
    energies = [0.0] + sorted(extra)
    t = partition_table(ModeSet.from_energies(energies), N, h_table(alpha, max(N, 1)))
    means = []
    for k in range(len(energies)):
        p = occupation_marginal(t, k)
        assert p.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(p >= -1e-15)
        means.append(p @ np.arange(N + 1))
    assert sum(means) == pytest.approx(N, abs=1e-9)


# ---- sampling -------------------------------------------------------------


def test_empty_sample():
    s = sample_occupation(partition_table(ModeSet.from_energies([0.0, 1.0]), 0), np.random.default_rng(0))
    assert s.total == 0 and s.counts == {}


def test_sample_frequency_two_modes():
    t = partition_table(ModeSet.from_energies([0.0, 1.0]), 2)
    draws = sample_occupations(t, np.random.default_rng(1), 100_000)
    p = 1 / (1 + E1 + E2)
    freq = np.mean(draws.totals[:, 0] == 2)
    assert abs(freq - p) < 3 * math.sqrt(p * (1 - p) / 100_000)


@pytest.mark.parametrize("alpha", [0.0, 0.5, INF])
def test_sampler_chi_square(alpha):
    energies = [0.0, 0.4, 0.4, 1.1]
    N = 5
    t = partition_table(ModeSet.from_energies(energies), N, h_table(alpha, N))
    rng = np.random.default_rng(3)
    draws = sample_occupations(t, rng, 100_000)
    states, w = brute_partition(energies, N, alpha)
    index = {s: i for i, s in enumerate(states)}
    observed = np.zeros(len(states))
    for i in range(len(draws)):
        observed[index[tuple(draws.state(i, rng).dense(len(energies)))]] += 1
    expected = w / w.sum() * len(draws)
    keep = expected >= 5
    obs = np.append(observed[keep], observed[~keep].sum())
    exp = np.append(expected[keep], expected[~keep].sum())
    if exp[-1] == 0:
        obs, exp = obs[:-1], exp[:-1]
    assert stats.chisquare(obs, exp).pvalue > 1e-4


def test_sample_state_totals():
    ms = build_mode_set(make_model("gaussian", 1.0, 3), 5.0)
    t = partition_table(ms, 40)
    rng = np.random.default_rng(4)
    draws = sample_occupations(t, rng, 50)
    for i in range(len(draws)):
        s = draws.state(i, rng)
        assert s.total == 40 and sum(s.counts.values()) == 40


# ---- MGF and typical set ----------------------------------------------------


def test_mgf_examples():
    t = partition_table(ModeSet.from_energies([0.0, 1.0, 2.0], volume=4.0), 6)
    assert mgf_n0(t, 0.0) == pytest.approx(1.0, rel=1e-14)
    single = partition_table(ModeSet.from_energies([0.0], volume=4.0), 6)
    assert mgf_n0(single, 0.7) == pytest.approx(math.exp(0.7 * 6 / 4), rel=1e-14)


def test_typical_set_single_mode():
    V = 10.0
    t = partition_table(ModeSet.from_energies([0.0], volume=V), 20)
    rng = np.random.default_rng(0)
    assert typical_set_probability(t, 0.05, 200, rng, rho0=2.0).value == 1.0
    assert typical_set_probability(t, 5.0, 200, rng, rho0=2.0).value == 1.0


def test_typical_set_needs_rho0_for_toy():
    t = partition_table(ModeSet.from_energies([0.0, 1.0]), 2)
    with pytest.raises(DomainError):
        typical_set_probability(t, 0.1, 10, np.random.default_rng(0))
