"""Cycle observables of permutations and the finite-cycle bound.

Permutations are 0-based integer arrays ``perm`` with ``perm[i]`` the image
of ``i``.  ``rho_{m,n}`` is the number of indices in cycles of length
between ``m`` and ``n`` (inclusive), divided by the volume.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .model_weights import DispersionModel, periodized_weight

__all__ = [
    "CycleStats",
    "cycle_lengths",
    "cycle_stats",
    "rho_window",
    "macro_cycle_fractions",
    "window_edges",
    "BoundResult",
    "finite_cycle_bound",
    "write_histogram_csv",
    "write_bound_csv",
]

PRUNE = 1e-16


def _validate(perm) -> np.ndarray:
    p = np.asarray(perm)
    if p.ndim != 1 or not np.issubdtype(p.dtype, np.integer):
        raise DomainError("permutation must be a 1-D integer array")
    if not np.array_equal(np.sort(p), np.arange(p.size)):
        raise DomainError("input is not a bijection on 0..N-1")
    return p


def cycle_lengths(perm) -> np.ndarray:
    """Lengths of the cycles of ``perm`` (one entry per cycle, unsorted)."""
    p = _validate(perm)
    seen = np.zeros(p.size, dtype=bool)
    out = []
    for s in range(p.size):
        if seen[s]:
            continue
        n = 0
        i = s
        while not seen[i]:
            seen[i] = True
            i = p[i]
            n += 1
        out.append(n)
    return np.array(out, dtype=np.int64)


def rho_window(lengths, V: float, m, n) -> float:
    """``(1/V) #{i : m <= l_i <= n}`` from a list of cycle lengths."""
    ell = np.asarray(lengths)
    sel = (ell >= m) & (ell <= n)
    return float(ell[sel].sum()) / V


@dataclass(frozen=True)
class CycleStats:
    lengths: np.ndarray
    volume: float
    rho_values: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return int(self.lengths.sum())

    @property
    def n2(self) -> int:
        return int(np.sum(self.lengths == 2))

    @property
    def max_cycle(self) -> int:
        return int(self.lengths.max()) if self.lengths.size else 0

    def rho(self, m, n) -> float:
        return rho_window(self.lengths, self.volume, m, n)

    def histogram(self) -> dict:
        vals, counts = np.unique(self.lengths, return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, counts)}


def cycle_stats(perm, V: float, pairs=()) -> CycleStats:
    """Cycle decomposition with ``rho_{m,n}`` for each requested ``(m, n)``."""
    if not V > 0:
        raise DomainError("volume must be positive")
    lengths = np.sort(cycle_lengths(perm))
    rho = {(int(m), int(n)): rho_window(lengths, V, m, n) for m, n in pairs}
    return CycleStats(lengths=lengths, volume=float(V), rho_values=rho)


def window_edges(V: float, a: float, b: float, s: float) -> tuple[int, int, int]:
    """Integer upper edges ``(ceil(V^a), ceil(V^b), floor(s V))`` of the three windows."""
    return math.ceil(V**a - 1e-12), math.ceil(V**b - 1e-12), math.floor(s * V + 1e-12)


def macro_cycle_fractions(perm_or_lengths, V: float, a: float, b: float, s: float,
                          lengths: bool = False) -> tuple[float, float, float]:
    """Densities in the windows ``[1, V^a]``, ``(V^a, V^b]`` and ``(V^b, sV]``.

    Edges are ``ceil(V^a)``, ``ceil(V^b)`` and ``floor(sV)``; a cycle whose
    length equals an edge belongs to the lower window.
    """
    if not 0 < a < b < 1:
        raise DomainError("need 0 < a < b < 1")
    if not s >= 0:
        raise DomainError("s must be nonnegative")
    ell = np.asarray(perm_or_lengths) if lengths else cycle_lengths(perm_or_lengths)
    ea, eb, es = window_edges(V, a, b, s)
    return (rho_window(ell, V, 1, ea), rho_window(ell, V, ea + 1, eb), rho_window(ell, V, eb + 1, es))


# ---------------------------------------------------------------------------
# finite-cycle bound


@dataclass(frozen=True)
class BoundResult:
    """Cumulative sums over cyclic sequences of length ``1..n_max``."""

    partial_sums: np.ndarray
    nodes_visited: np.ndarray
    complete: bool

    @property
    def total(self) -> float:
        return float(self.partial_sums[-1])


def finite_cycle_bound(points, start_index: int, s: float, model: DispersionModel, n_max: int,
                       L: float | None = None, node_budget: int = 5_000_000) -> BoundResult:
    """Sum over self-avoiding cyclic sequences ``(j_1 = i, j_2, ..., j_n)`` of
    ``prod_k exp(-(1-s) xi(x_{j_k} - x_{j_{k-1}}))`` (closing step included).

    Branches whose partial product falls below 1e-16 are pruned.  With
    ``L`` the periodized term on the torus is used.  When more than
    ``node_budget`` partial sequences are visited the enumeration stops and
    returns the partial results with ``complete = False``.
    """
    if not 0 <= s < 1:
        raise DomainError("need 0 <= s < 1")
    if n_max < 1:
        raise DomainError("n_max must be at least 1")
    pts = np.array(points, dtype=float, ndmin=2)
    if model.dim == 1 and pts.shape[1] != 1:
        pts = pts.reshape(-1, 1)
    N = pts.shape[0]
    if not 0 <= start_index < N:
        raise DomainError("start index out of range")
    dx = pts[:, None, :] - pts[None, :, :]
    if L is None:
        w = model.weight(np.linalg.norm(dx, axis=-1))
    else:
        w = periodized_weight(model, dx, L)
    W = w ** (1.0 - s)
    np.fill_diagonal(W, 0.0)

    sums = np.zeros(n_max + 1)
    nodes = np.zeros(n_max + 1, dtype=np.int64)
    sums[1] = 1.0
    nodes[1] = 1
    visited = np.zeros(N, dtype=bool)
    visited[start_index] = True
    budget = [node_budget - 1]
    complete = True

    def extend(last: int, depth: int, weight: float) -> bool:
        if depth == n_max:
            return True
        cand = np.flatnonzero(~visited)
        steps = weight * W[last, cand]
        for j, p in zip(cand, steps):
            if p < PRUNE:
                continue
            if budget[0] <= 0:
                return False
            budget[0] -= 1
            nodes[depth + 1] += 1
            sums[depth + 1] += p * W[j, start_index]
            visited[j] = True
            ok = extend(j, depth + 1, p)
            visited[j] = False
            if not ok:
                return False
        return True

    if n_max > 1:
        complete = extend(start_index, 1, 1.0)
    return BoundResult(partial_sums=np.cumsum(sums)[1:], nodes_visited=nodes[1:], complete=complete)


def write_histogram_csv(path, lengths) -> None:
    vals, counts = np.unique(np.asarray(lengths), return_counts=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["length", "count"])
        w.writerows(zip(vals.tolist(), counts.tolist()))


def write_bound_csv(path, result: BoundResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "partial_sum", "nodes_visited"])
        for n, (ps, nv) in enumerate(zip(result.partial_sums, result.nodes_visited), start=1):
            w.writerow([n, repr(float(ps)), int(nv)])

