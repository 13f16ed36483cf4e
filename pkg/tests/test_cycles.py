import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spatialperm.cycles import (
    cycle_lengths,
    cycle_stats,
    finite_cycle_bound,
    macro_cycle_fractions,
    window_edges,
    write_bound_csv,
    write_histogram_csv,
)
from spatialperm.errors import DomainError
from spatialperm.model_weights import make_model

G3 = make_model("gaussian", 1.0, 3)

perms = st.integers(1, 40).flatmap(lambda n: st.permutations(list(range(n))))


def test_identity_stats():
    s = cycle_stats(np.arange(5), 5.0, pairs=[(1, 1), (2, 5)])
    assert s.rho_values == {(1, 1): 1.0, (2, 5): 0.0}
    assert s.n2 == 0 and s.max_cycle == 1 and s.N == 5


def test_single_four_cycle():
    s = cycle_stats([1, 2, 3, 0], 2.0, pairs=[(4, 4)])
    assert s.rho_values[(4, 4)] == 2.0
    assert s.n2 == 0


def test_two_plus_three_cycle():
    # (1 2)(3 4 5) in 0-based form
    s = cycle_stats([1, 0, 3, 4, 2], 5.0, pairs=[(2, 2), (3, 3)])
    assert s.rho_values[(2, 2)] == pytest.approx(2 / 5)
    assert s.rho_values[(3, 3)] == pytest.approx(3 / 5)
    assert s.n2 == 1
    assert s.histogram() == {2: 1, 3: 1}


def test_not_a_bijection():
    with pytest.raises(DomainError):
        cycle_lengths([0, 0, 1])
    with pytest.raises(DomainError):
        cycle_stats([0, 1], 0.0)


@settings(max_examples=60, deadline=None)
@given(perms, st.integers(0, 2**32 - 1))
def test_conjugation_invariance(p, seed):
    p = np.array(p)
    sigma = np.random.default_rng(seed).permutation(p.size)
    inv = np.argsort(sigma)
    conj = inv[p[sigma]]
    pairs = [(1, 1), (2, 2), (1, p.size), (3, p.size)]
    a = cycle_stats(p, 7.0, pairs)
    b = cycle_stats(conj, 7.0, pairs)
    np.testing.assert_array_equal(a.lengths, b.lengths)
    assert a.rho_values == b.rho_values


@settings(max_examples=60, deadline=None)
@given(perms)
def test_lengths_sum_to_N(p):
    assert cycle_lengths(p).sum() == len(p)


def test_macro_identity():
    N, V = 50, 40.0
    assert macro_cycle_fractions(np.arange(N), V, 0.25, 0.75, 0.9) == (N / V, 0.0, 0.0)


def test_macro_full_cycle():
    N, V = 200, 150.0
    p = np.roll(np.arange(N), 1)
    assert macro_cycle_fractions(p, V, 0.25, 0.75, N / V) == (0.0, 0.0, N / V)


@settings(max_examples=60, deadline=None)
@given(perms, st.floats(2.0, 30.0), st.floats(0.0, 0.9))
def test_macro_windows_partition(p, V, s_frac):
    N = len(p)
    s = s_frac * N / V
    ea, eb, es = window_edges(V, 0.25, 0.75, s)
    w = macro_cycle_fractions(p, V, 0.25, 0.75, s)
    ell = cycle_lengths(p)
    rest = ell[ell > max(es, eb)].sum() / V
    assert sum(w) + rest == pytest.approx(N / V, rel=1e-12)


def test_macro_boundary_in_lower_window():
    V = 16.0  # V^(1/4) = 2 exactly
    lengths = np.array([2, 3])
    low, mid, _ = macro_cycle_fractions(lengths, V, 0.25, 0.75, 1.0, lengths=True)
    assert low == 2 / V and mid == 3 / V


def test_bound_single_point():
    r = finite_cycle_bound([[0.0, 0.0, 0.0]], 0, 0.3, G3, 5)
    assert r.total == 1.0 and r.complete


def test_bound_two_points():
    d = 1.7
    r = finite_cycle_bound([[0, 0, 0], [d, 0, 0]], 0, 0.0, G3, 2)
    assert r.total == pytest.approx(1 + math.exp(-2 * d * d / 4), rel=1e-14)


def test_bound_three_points_enumeration():
    pts = np.array([[0, 0, 0], [1.0, 0, 0], [0, 1.3, 0]])
    s = 0.2
    w = lambda a, b: math.exp(-(1 - s) * np.sum((pts[a] - pts[b]) ** 2) / 4)  # noqa: E731
    ref = 1 + w(0, 1) ** 2 + w(0, 2) ** 2 + 2 * w(0, 1) * w(1, 2) * w(2, 0)
    r = finite_cycle_bound(pts, 0, s, G3, 3)
    assert r.total == pytest.approx(ref, rel=1e-13)
    assert np.all(np.diff(r.partial_sums) >= 0)


def test_bound_decreases_with_spacing():
    totals = []
    for a in (0.8, 1.0, 1.5, 2.0):
        pts = np.array([[i * a, j * a, 0.0] for i in range(3) for j in range(3)])
        totals.append(finite_cycle_bound(pts, 4, 0.0, G3, 5).total)
    assert all(x > y for x, y in zip(totals, totals[1:]))


def test_bound_budget_marks_incomplete():
    pts = np.array([[i * 0.5, j * 0.5, 0.0] for i in range(4) for j in range(4)])
    r = finite_cycle_bound(pts, 0, 0.0, G3, 8, node_budget=100)
    assert not r.complete


def test_bound_errors():
    with pytest.raises(DomainError):
        finite_cycle_bound([[0, 0, 0]], 0, 1.0, G3, 3)
    with pytest.raises(DomainError):
        finite_cycle_bound([[0, 0, 0]], 2, 0.0, G3, 3)


def test_csv_exports(tmp_path):
    write_histogram_csv(tmp_path / "h.csv", [1, 1, 3])
    assert (tmp_path / "h.csv").read_text().splitlines() == ["length,count", "1,2", "3,1"]
    r = finite_cycle_bound([[0, 0, 0], [1.0, 0, 0]], 0, 0.0, G3, 2)
    write_bound_csv(tmp_path / "b.csv", r)
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[0] == "n,partial_sum,nodes_visited"
    assert len(lines) == 3
