"""Metropolis sampler for spatial random permutations on a periodic box.

The state is a point configuration ``x`` together with a permutation ``pi``;
the target weight is ``exp(-H(x, pi))`` with

    H = sum_i xi_L(x_i - x_pi(i)) + alpha N_2(pi)        (or a pair term)

where ``xi_L`` is the periodized one-body term and ``N_2`` the number of
2-cycles.  Permutation moves are transpositions ``pi -> pi o (i j)``; point
moves displace one point uniformly in a cube.  With point moves disabled the
chain samples the quenched measure at fixed points; with them enabled it
samples the annealed measure that also averages over positions.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import DomainError, ResourceCapError
from .model_weights import DispersionModel, periodized_weight

__all__ = [
    "HamiltonianSpec",
    "PermutationState",
    "ChainConfig",
    "Trace",
    "generate_points",
    "read_points",
    "write_points",
    "energy",
    "step_swap",
    "step_point",
    "run_chain",
    "blocked_error",
    "integrated_autocorr",
    "exact_quenched_distribution",
    "permutation_n2",
]

MAX_MATRIX_POINTS = 4096
DRIFT_CHECK_STEPS = 10_000
DRIFT_TOL = 1e-8


# ---------------------------------------------------------------------------
# points


def generate_points(process: str, L: float, dim: int, N: int | None = None, rho: float | None = None,
                    rng=None, path=None) -> np.ndarray:
    """Initial positions in ``[0, L)^dim``.

    ``process`` is ``"poisson"`` (N i.i.d. uniform points), ``"lattice"``
    (simple cubic lattice, N must be a perfect d-th power) or ``"file"``.
    Either ``N`` or ``rho`` may be given; ``rho`` gives ``N = ceil(rho L^d)``.
    """
    if not L > 0:
        raise DomainError("box side must be positive")
    if process == "file":
        if path is None:
            raise DomainError("file process needs a path")
        pts = read_points(path, dim, L)
        if N is not None and pts.shape[0] != N:
            raise DomainError(f"file holds {pts.shape[0]} points, expected {N}")
        return pts
    if N is None:
        if rho is None:
            raise DomainError("give either N or rho")
        N = int(math.ceil(rho * L**dim - 1e-9))
    N = int(N)
    if N < 1:
        raise DomainError("need at least one point")
    if process == "poisson":
        rng = np.random.default_rng(rng)
        return rng.random((N, dim)) * L
    if process == "lattice":
        n = int(round(N ** (1.0 / dim)))
        if n**dim != N:
            raise DomainError(f"N={N} is not a perfect {dim}-th power")
        axis = np.arange(n) * (L / n)
        grid = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1)
        return grid.reshape(-1, dim)
    raise DomainError(f"unknown point process {process!r}")


def read_points(path, dim: int, L: float | None = None) -> np.ndarray:
    """Load a CSV of points, one row per point, ``dim`` columns."""
    try:
        pts = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    except ValueError as exc:
        raise DomainError(f"malformed point file {path}: {exc}") from None
    if pts.shape[1] != dim or pts.shape[0] == 0:
        raise DomainError(f"point file {path} must have {dim} columns and at least one row")
    if not np.all(np.isfinite(pts)):
        raise DomainError(f"point file {path} contains non-finite coordinates")
    if L is not None and (np.any(pts < 0) or np.any(pts >= L)):
        raise DomainError(f"points in {path} lie outside [0, {L})^{dim}")
    return pts


def write_points(path, points) -> None:
    np.savetxt(path, np.asarray(points, dtype=float), delimiter=",", fmt="%.17g")


# ---------------------------------------------------------------------------
# Hamiltonian


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """Which terms enter ``H``.

    ``alpha`` penalizes each 2-cycle by a constant (``math.inf`` forbids
    them).  ``pair_a`` instead charges each 2-cycle ``{i, j}`` the
    first-order pair energy ``2 a / |x_i - x_j|``.  ``custom_two_body``,
    when given, replaces that pair energy by ``f(x_i, x_j, L)``.
    """

    model: DispersionModel
    L: float
    alpha: float = 0.0
    pair_a: float = 0.0
    custom_two_body: Callable | None = None

    def __post_init__(self):
        if not self.L > 0:
            raise DomainError("box side must be positive")
        if not self.alpha >= 0:
            raise DomainError("alpha must be nonnegative")
        if not self.pair_a >= 0:
            raise DomainError("pair_a must be nonnegative")
        if self.alpha > 0 and (self.pair_a > 0 or self.custom_two_body is not None):
            raise DomainError("alpha and a pair interaction are mutually exclusive")
        if self.pair_a > 0 and self.custom_two_body is not None:
            raise DomainError("pair_a and custom_two_body are mutually exclusive")

    @property
    def dim(self) -> int:
        return self.model.dim

    @property
    def has_pair(self) -> bool:
        return self.pair_a > 0 or self.custom_two_body is not None

    def xi(self, dx) -> np.ndarray:
        """Periodized one-body term for displacements of shape (..., d)."""
        with np.errstate(divide="ignore"):
            return -np.log(periodized_weight(self.model, dx, self.L))

    def pair_energy(self, xa, xb) -> float:
        if self.custom_two_body is not None:
            return float(self.custom_two_body(np.asarray(xa), np.asarray(xb), self.L))
        if self.pair_a == 0:
            return 0.0
        dx = np.asarray(xa, dtype=float) - np.asarray(xb, dtype=float)
        dx -= self.L * np.round(dx / self.L)
        r = math.sqrt(float(dx @ dx))
        return math.inf if r == 0 else 2.0 * self.pair_a / r

    def alpha_energy(self, n2: int) -> float:
        if n2 == 0 or self.alpha == 0:
            return 0.0
        return self.alpha * n2


# ---------------------------------------------------------------------------
# state with incremental cycle bookkeeping


def _cycles_of(perm: np.ndarray) -> list[list[int]]:
    seen = np.zeros(perm.size, dtype=bool)
    out = []
    for s in range(perm.size):
        if seen[s]:
            continue
        cyc = []
        i = s
        while not seen[i]:
            seen[i] = True
            cyc.append(i)
            i = perm[i]
        out.append(cyc)
    return out


def permutation_n2(perm) -> int:
    perm = np.asarray(perm)
    idx = np.arange(perm.size)
    return int(np.sum((perm != idx) & (perm[perm] == idx)) // 2)


class PermutationState:
    """Points and permutation with cached jump energies and cycle structure.

    ``perm`` and ``inv`` are 0-based.  Every index carries a cycle id;
    ``cycle_len[c]`` is the length of cycle ``c`` and ``length_counts[l]``
    the number of cycles of length ``l``.
    """

    def __init__(self, points, spec: HamiltonianSpec, perm=None):
        pts = np.array(points, dtype=float, ndmin=2)
        if spec.dim == 1 and pts.shape[0] == 1 and pts.shape[1] != 1:
            pts = pts.T
        if pts.shape[1] != spec.dim:
            raise DomainError(f"points must have {spec.dim} columns")
        N = pts.shape[0]
        if N > MAX_MATRIX_POINTS:
            raise ResourceCapError(f"N={N} exceeds the {MAX_MATRIX_POINTS}-point cap of the sampler")
        self.spec = spec
        self.points = np.mod(pts, spec.L)
        self.N = N
        self.perm = np.arange(N) if perm is None else np.array(perm, dtype=np.int64)
        if self.perm.shape != (N,) or not np.array_equal(np.sort(self.perm), np.arange(N)):
            raise DomainError("perm must be a bijection on 0..N-1")
        self.inv = np.empty(N, dtype=np.int64)
        self.inv[self.perm] = np.arange(N)
        self.xi_matrix = np.empty((N, N))
        for a in range(0, N, 256):
            block = self.points[a:a + 256, None, :] - self.points[None, :, :]
            self.xi_matrix[a:a + 256] = spec.xi(block)
        self.rebuild_cycles()
        self.energy = energy(self)

    # -- cycle structure ------------------------------------------------

    def rebuild_cycles(self) -> None:
        N = self.N
        self.cycle_id = np.empty(N, dtype=np.int64)
        self.cycle_len = np.zeros(N, dtype=np.int64)
        self.length_counts = np.zeros(N + 1, dtype=np.int64)
        cycles = _cycles_of(self.perm)
        for c, cyc in enumerate(cycles):
            self.cycle_id[cyc] = c
            self.cycle_len[c] = len(cyc)
            self.length_counts[len(cyc)] += 1
        self._free = list(range(N - 1, len(cycles) - 1, -1))

    @property
    def n2(self) -> int:
        return int(self.length_counts[2])

    def cycle_lengths(self) -> np.ndarray:
        return np.repeat(np.arange(self.N + 1), self.length_counts)

    def rho(self, m: int, n: int, volume: float | None = None) -> float:
        V = self.spec.L**self.spec.dim if volume is None else volume
        m, n = max(int(m), 1), min(int(n), self.N)
        if m > n:
            return 0.0
        ell = np.arange(m, n + 1)
        return float(ell @ self.length_counts[m : n + 1]) / V

    def max_cycle(self) -> int:
        return int(np.flatnonzero(self.length_counts)[-1])

    def check_consistency(self) -> None:
        """Compare the incremental structures with a rebuild (raises on mismatch)."""
        if not np.array_equal(self.perm[self.inv], np.arange(self.N)):
            raise AssertionError("perm and inverse disagree")
        counts = np.zeros(self.N + 1, dtype=np.int64)
        for cyc in _cycles_of(self.perm):
            ids = set(self.cycle_id[cyc].tolist())
            if len(ids) != 1 or self.cycle_len[ids.pop()] != len(cyc):
                raise AssertionError("cycle ids inconsistent with perm")
            counts[len(cyc)] += 1
        if not np.array_equal(counts, self.length_counts):
            raise AssertionError("cycle length histogram inconsistent")

    def _walk_split(self, i: int, j: int) -> tuple[int, int, list[int], bool]:
        """Lengths after splitting the common cycle of i and j by ``pi o (i j)``.

        Walks from ``pi(i)`` and ``pi(j)`` in lockstep; returns the new length
        of i's cycle, of j's cycle, the members of the smaller piece, and
        whether that piece is j's.
        """
        perm = self.perm
        a, b = perm[i], perm[j]
        side_a, side_b = [a], [b]
        while True:
            if a == j:
                d = len(side_a)
                return self.cycle_len[self.cycle_id[i]] - d, d, side_a, True
            if b == i:
                d = len(side_b)
                return d, self.cycle_len[self.cycle_id[i]] - d, side_b, False
            a, b = perm[a], perm[b]
            side_a.append(a)
            side_b.append(b)

    def _members(self, start: int) -> list[int]:
        out = [start]
        i = self.perm[start]
        while i != start:
            out.append(i)
            i = self.perm[i]
        return out

    # -- moves ----------------------------------------------------------

    def _plan_swap(self, i: int, j: int):
        """Energy change and cycle update for ``pi -> pi o (i j)``, not applied."""
        perm, M = self.perm, self.xi_matrix
        pi, pj = perm[i], perm[j]
        d_one = M[i, pj] + M[j, pi] - M[i, pi] - M[j, pj]
        ci, cj = self.cycle_id[i], self.cycle_id[j]
        same = ci == cj
        piece = None
        if same:
            li, lj, piece, _ = self._walk_split(i, j)
            old = (self.cycle_len[ci],)
            new = (li, lj)
        else:
            old = (self.cycle_len[ci], self.cycle_len[cj])
            new = (old[0] + old[1],)
        dn2 = sum(ell == 2 for ell in new) - sum(ell == 2 for ell in old)
        d_pair = self._pair_delta(i, j, pi, pj, same, old, new) if self.spec.has_pair else 0.0
        return (i, j, d_one + d_pair, dn2, same, old, new, piece)

    def _commit_swap(self, plan) -> None:
        i, j, _, _, same, old, new, piece = plan
        perm = self.perm
        pi, pj = perm[i], perm[j]
        ci, cj = self.cycle_id[i], self.cycle_id[j]
        if not same:
            big, small, start = (ci, cj, j) if old[0] >= old[1] else (cj, ci, i)
            moved = self._members(start)
        perm[i], perm[j] = pj, pi
        self.inv[pj], self.inv[pi] = i, j
        lc = self.length_counts
        for ell in old:
            lc[ell] -= 1
        for ell in new:
            lc[ell] += 1
        if same:
            c_new = self._free.pop()
            self.cycle_id[piece] = c_new
            self.cycle_len[c_new] = len(piece)
            self.cycle_len[ci] -= len(piece)
        else:
            self.cycle_id[moved] = big
            self.cycle_len[big] = new[0]
            self.cycle_len[small] = 0
            self._free.append(small)

    def _metropolis(self, d_rest: float, dn2: int, u: float) -> tuple[bool, float]:
        dH = d_rest
        if self.spec.alpha > 0 and dn2 != 0:
            dH += self.spec.alpha * dn2
        if math.isnan(dH) or dH == math.inf:
            return False, dH
        return (dH <= 0 or u < math.exp(-dH)), dH

    def try_swap(self, i: int, j: int, u: float) -> bool:
        """Propose ``pi o (i j)`` and accept if ``u < exp(-dH)``."""
        plan = self._plan_swap(i, j)
        ok, dH = self._metropolis(plan[2], plan[3], u)
        if ok:
            self._commit_swap(plan)
            self.energy = self.energy + dH if math.isfinite(dH) else energy(self)
        return ok

    def try_cycle3(self, i: int, j: int, k: int, u: float) -> bool:
        """Propose ``pi o (i j) o (i k)`` (a 3-cycle of positions) for distinct i, j, k.

        Needed when 2-cycles are forbidden: every transposition of a fixed
        point pair creates one, so transpositions alone cannot leave the
        identity.
        """
        p1 = self._plan_swap(i, j)
        self._commit_swap(p1)
        p2 = self._plan_swap(i, k)
        self._commit_swap(p2)
        ok, dH = self._metropolis(p1[2] + p2[2], p1[3] + p2[3], u)
        if ok:
            self.energy = self.energy + dH if math.isfinite(dH) else energy(self)
        else:
            self._commit_swap(self._plan_swap(i, k))
            self._commit_swap(self._plan_swap(i, j))
        return ok

    def _pair_delta(self, i, j, pi, pj, same, old, new) -> float:
        spec, x = self.spec, self.points
        delta = 0.0
        if same:
            if old[0] == 2:
                delta -= spec.pair_energy(x[i], x[j])
            if new[0] == 2:
                delta += spec.pair_energy(x[i], x[pj])
            if new[1] == 2:
                delta += spec.pair_energy(x[j], x[pi])
        else:
            if old[0] == 2:
                delta -= spec.pair_energy(x[i], x[pi])
            if old[1] == 2:
                delta -= spec.pair_energy(x[j], x[pj])
            if new[0] == 2:
                delta += spec.pair_energy(x[i], x[j])
        return delta

    def try_point(self, i: int, shift, u: float) -> bool:
        """Propose moving point i by ``shift`` (wrapped) and Metropolis-accept."""
        spec = self.spec
        new_x = np.mod(self.points[i] + shift, spec.L)
        row = spec.xi(new_x[None, :] - self.points)
        row[i] = spec.xi(np.zeros(spec.dim))
        p, q = self.perm[i], self.inv[i]
        M = self.xi_matrix
        dH = row[p] - M[i, p]
        if q != i:
            dH += row[q] - M[q, i]
        if spec.has_pair and self.cycle_len[self.cycle_id[i]] == 2:
            dH += spec.pair_energy(new_x, self.points[p]) - spec.pair_energy(self.points[i], self.points[p])
        if math.isnan(dH) or dH == math.inf:
            return False
        if dH > 0 and not u < math.exp(-dH):
            return False
        self.points[i] = new_x
        M[i, :] = row
        M[:, i] = row
        self.energy += dH
        return True


def energy(state: PermutationState, spec: HamiltonianSpec | None = None) -> float:
    """``H(x, pi)`` recomputed from scratch."""
    spec = state.spec if spec is None else spec
    x, perm = state.points, state.perm
    total = float(np.sum(spec.xi(x - x[perm])))
    n2 = permutation_n2(perm)
    total += spec.alpha_energy(n2)
    if spec.has_pair:
        idx = np.arange(state.N)
        for i in np.flatnonzero((perm != idx) & (perm[perm] == idx) & (idx < perm)):
            total += spec.pair_energy(x[i], x[perm[i]])
    return total


def _check_spec(state: PermutationState, spec: HamiltonianSpec) -> None:
    if spec is not state.spec:
        raise DomainError("state was built for a different Hamiltonian")


def step_swap(state: PermutationState, spec: HamiltonianSpec, rng) -> bool:
    """One transposition move with ``i != j`` drawn uniformly."""
    _check_spec(state, spec)
    if state.N < 2:
        raise DomainError("transposition moves need N >= 2")
    i, j = rng.choice(state.N, size=2, replace=False)
    return state.try_swap(int(i), int(j), rng.random())


def step_point(state: PermutationState, spec: HamiltonianSpec, rng, max_displacement: float) -> bool:
    """One point move with displacement uniform in ``[-delta, delta]^d``."""
    _check_spec(state, spec)
    i = int(rng.integers(state.N))
    shift = rng.uniform(-max_displacement, max_displacement, size=spec.dim)
    return state.try_point(i, shift, rng.random())


# ---------------------------------------------------------------------------
# chains


@dataclass
class ChainConfig:
    """Chain length and move mix.

    One sweep is N attempted moves.  ``burn_in=None`` runs a pilot and burns
    ten integrated autocorrelation times of the energy.  A fraction
    ``point_move_fraction`` of moves displaces a point; of the remaining
    permutation moves a fraction ``cycle3_fraction`` are 3-cycle moves and
    the rest transpositions.  ``cycle3_fraction=None`` means 0.5 when
    2-cycles are forbidden (``alpha = inf``) and 0 otherwise.
    """

    sweeps: int
    burn_in: int | None = None
    thinning: int = 1
    point_move_fraction: float = 0.0
    max_displacement: float = 1.0
    seed: int | None = None
    cycle3_fraction: float | None = None

    def __post_init__(self):
        if self.sweeps < 0:
            raise DomainError("sweeps must be nonnegative")
        if self.burn_in is not None and self.burn_in < 0:
            raise DomainError("burn_in must be nonnegative")
        if self.thinning < 1:
            raise DomainError("thinning must be at least 1")
        if not 0.0 <= self.point_move_fraction <= 1.0:
            raise DomainError("point_move_fraction must lie in [0, 1]")
        if self.cycle3_fraction is not None and not 0.0 <= self.cycle3_fraction <= 1.0:
            raise DomainError("cycle3_fraction must lie in [0, 1]")
        if not self.max_displacement > 0:
            raise DomainError("max_displacement must be positive")

    def resolved_cycle3(self, spec: HamiltonianSpec) -> float:
        if self.cycle3_fraction is not None:
            return self.cycle3_fraction
        return 0.5 if math.isinf(spec.alpha) else 0.0


def integrated_autocorr(x, c: float = 5.0) -> float:
    """Integrated autocorrelation time with a self-consistent window."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 4 or np.var(x) == 0:
        return 1.0
    y = x - x.mean()
    f = np.fft.rfft(y, n=2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n]
    acf /= acf[0]
    tau = 1.0
    for w in range(1, n):
        tau += 2.0 * acf[w]
        if w >= c * tau:
            break
    return max(tau, 1.0)


def blocked_error(x) -> float:
    """Standard error of the mean from block averages with block size ``floor(sqrt(n))``."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 4:
        return math.nan
    b = int(math.isqrt(n))
    nb = n // b
    means = x[: nb * b].reshape(nb, b).mean(axis=1)
    return float(np.std(means, ddof=1) / math.sqrt(nb))


@dataclass
class Trace:
    """Recorded observables of a chain."""

    sweeps: np.ndarray
    columns: dict
    acceptance: dict
    burn_in: int
    volume: float
    config: dict = field(default_factory=dict)

    def __len__(self):
        return int(self.sweeps.size)

    def mean(self, name: str) -> float:
        v = self.columns[name]
        return float(np.mean(v)) if v.size else math.nan

    def error(self, name: str) -> float:
        return blocked_error(self.columns[name])

    def summary(self) -> dict:
        return {
            "samples": len(self),
            "burn_in": self.burn_in,
            "acceptance": self.acceptance,
            "means": {k: self.mean(k) for k in self.columns},
            "blocked_errors": {k: self.error(k) for k in self.columns},
            "config": self.config,
        }

    def write_csv(self, path) -> None:
        names = list(self.columns)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sweep"] + names)
            for r in range(len(self)):
                w.writerow([int(self.sweeps[r])] + [repr(float(self.columns[k][r])) for k in names])

    def write_summary(self, path) -> None:
        Path(path).write_text(json.dumps(_jsonable(self.summary()), indent=2, sort_keys=True) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return obj


def _window_name(m, n) -> str:
    return f"rho_{m}_{n}"


def _sweep(state: PermutationState, rng, config: ChainConfig, counts: dict) -> None:
    N = state.N
    c3 = config.resolved_cycle3(state.spec) if N >= 3 else 0.0
    r = rng.random(N)
    kinds = np.where(r < config.point_move_fraction, 0,
                     np.where(rng.random(N) < c3, 2, 1))
    us = rng.random(N)
    if N >= 2:
        # uniform ordered triples of distinct indices
        ii = rng.integers(0, N, size=N)
        jj = rng.integers(0, N - 1, size=N)
        jj += jj >= ii
        kk = rng.integers(0, max(N - 2, 1), size=N)
        lo, hi = np.minimum(ii, jj), np.maximum(ii, jj)
        kk += kk >= lo
        kk += kk >= hi
    shifts = rng.uniform(-config.max_displacement, config.max_displacement, size=(N, state.spec.dim))
    pts = rng.integers(0, N, size=N)
    for s in range(N):
        kind = kinds[s]
        if kind == 0:
            counts["point_tried"] += 1
            counts["point_accepted"] += state.try_point(int(pts[s]), shifts[s], us[s])
        elif kind == 1 and N >= 2:
            counts["swap_tried"] += 1
            counts["swap_accepted"] += state.try_swap(int(ii[s]), int(jj[s]), us[s])
        elif kind == 2:
            counts["cycle3_tried"] += 1
            counts["cycle3_accepted"] += state.try_cycle3(int(ii[s]), int(jj[s]), int(kk[s]), us[s])


def run_chain(points_or_state, spec: HamiltonianSpec, config: ChainConfig,
              windows=((1, 1),), rng=None, check_every: int = DRIFT_CHECK_STEPS) -> Trace:
    """Run a chain and record ``rho_{m,n}`` for each window plus ``n2``,
    ``energy`` and ``max_cycle``.

    ``points_or_state`` is an (N, d) array (start from the identity) or a
    `PermutationState`.  The cached energy is compared with a full
    recomputation every ``check_every`` moves; a drift above 1e-8 raises.
    """
    rng = np.random.default_rng(config.seed if rng is None else rng)
    state = (points_or_state if isinstance(points_or_state, PermutationState)
             else PermutationState(points_or_state, spec))
    _check_spec(state, spec)
    V = spec.L**spec.dim
    windows = [(int(m), int(n)) for m, n in windows]
    counts = dict.fromkeys(["swap_tried", "swap_accepted", "point_tried", "point_accepted",
                            "cycle3_tried", "cycle3_accepted"], 0)
    since_check = 0

    def advance():
        nonlocal since_check
        _sweep(state, rng, config, counts)
        since_check += state.N
        if since_check >= check_every:
            fresh = energy(state)
            if math.isfinite(fresh) and abs(fresh - state.energy) > DRIFT_TOL:
                raise ArithmeticError(f"energy drift {fresh - state.energy:.3e} exceeds {DRIFT_TOL}")
            state.energy = fresh
            since_check = 0

    if config.sweeps == 0:
        burn = 0 if config.burn_in is None else config.burn_in
    elif config.burn_in is None:
        pilot = []
        for _ in range(200):
            advance()
            pilot.append(state.energy)
        burn = min(int(math.ceil(10 * integrated_autocorr(pilot))), 10_000)
        for _ in range(max(burn - 200, 0)):
            advance()
        burn = max(burn, 200)
    else:
        burn = config.burn_in
        for _ in range(burn):
            advance()
    for k in counts:
        counts[k] = 0

    rec_sweeps, rows = [], []
    for s in range(1, config.sweeps + 1):
        advance()
        if s % config.thinning == 0:
            rec_sweeps.append(s)
            rows.append([state.rho(m, n, V) for m, n in windows]
                        + [state.n2, state.energy, state.max_cycle()])
    names = [_window_name(m, n) for m, n in windows] + ["n2", "energy", "max_cycle"]
    data = np.array(rows, dtype=float).reshape(-1, len(names))
    columns = {name: data[:, c] for c, name in enumerate(names)}
    acceptance = {kind: (float(counts[f"{kind}_accepted"] / counts[f"{kind}_tried"])
                         if counts[f"{kind}_tried"] else math.nan)
                  for kind in ("swap", "cycle3", "point")}
    cfg = asdict(config)
    cfg["windows"] = windows
    return Trace(sweeps=np.array(rec_sweeps, dtype=np.int64), columns=columns, acceptance=acceptance,
                 burn_in=burn, volume=V, config=cfg)


# ---------------------------------------------------------------------------
# exact reference for few points


def exact_quenched_distribution(points, spec: HamiltonianSpec) -> tuple[list[tuple], np.ndarray]:
    """Boltzmann probabilities of all permutations of a small fixed point set."""
    pts = np.array(points, dtype=float, ndmin=2)
    N = pts.shape[0]
    if N > 8:
        raise ResourceCapError("exact enumeration is limited to N <= 8")
    base = PermutationState(pts, spec)
    perms = list(itertools.permutations(range(N)))
    H = np.empty(len(perms))
    for a, p in enumerate(perms):
        base.perm = np.array(p)
        H[a] = energy(base)
    with np.errstate(invalid="ignore"):
        w = np.exp(-(H - np.min(H)))
    return perms, w / w.sum()
