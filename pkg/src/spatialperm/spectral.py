"""Exact computations in the occupation-number representation.

Given the energies ``epsilon(k)`` of the dual-lattice modes of a periodic box,
the canonical measure on occupation numbers ``(n_k)`` with ``sum n_k = N`` has
weight ``prod_k exp(-epsilon(k) n_k) h_{n_k}(alpha)``.  Everything here works
from a suffix table of constrained partition sums over modes.  Modes with the
same ``|k|`` share an energy and are grouped into levels; the dynamic program
runs mode by mode but only stores one row per level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, signal, special, stats

from .errors import DomainError, ResourceCapError, UnsupportedExactError
from .model_weights import DispersionModel, surface_area

__all__ = [
    "ModeSet",
    "HTable",
    "PartitionTable",
    "OccupancyState",
    "LevelSamples",
    "ProbabilityEstimate",
    "build_mode_set",
    "h_table",
    "partition_table",
    "occupation_marginal",
    "occupation_tail",
    "expected_cycle_density",
    "sample_occupation",
    "sample_occupations",
    "mgf_n0",
    "typical_set_probability",
    "in_typical_set",
    "cycle_sum_log_partition",
    "cycle_sums",
]

DEFAULT_MAX_MODES = 2_000_000


# ---------------------------------------------------------------------------
# modes


@dataclass(frozen=True, eq=False)
class ModeSet:
    """Truncated dual lattice ``(Z/L)^d`` ordered by ``|k|`` then lexicographically.

    ``lattice`` holds the integer vectors ``n`` with ``k = n / L``.  Modes of
    equal ``|n|^2`` form a level; ``level_start[l]`` is the index of the
    first mode of level ``l`` and ``level_mult[l]`` its size.
    """

    L: float
    dim: int
    lattice: np.ndarray
    energies: np.ndarray
    k_cut: float
    tail_bound: float
    tail_estimate: float
    level_start: np.ndarray
    level_mult: np.ndarray
    level_energy: np.ndarray
    level_norm: np.ndarray
    volume: float
    model: DispersionModel | None = None

    @property
    def modes(self) -> np.ndarray:
        return self.lattice / self.L

    @property
    def n_modes(self) -> int:
        return int(self.energies.size)

    @property
    def n_levels(self) -> int:
        return int(self.level_mult.size)

    def level_of(self, mode_index: int) -> int:
        if not 0 <= mode_index < self.n_modes:
            raise DomainError(f"mode index {mode_index} out of range [0, {self.n_modes})")
        return int(np.searchsorted(self.level_start, mode_index, side="right") - 1)

    @classmethod
    def from_energies(cls, energies, volume: float = 1.0, norms=None, dim: int = 1) -> "ModeSet":
        """Toy mode set with given energies; mode 0 must have energy 0.

        Consecutive equal energies are grouped into one level.  ``norms``
        gives ``|k|`` per mode (only used by the typical-set test); by default
        mode 0 has norm 0 and the others norm ``inf``.
        """
        e = np.asarray(energies, dtype=float)
        if e.ndim != 1 or e.size == 0 or e[0] != 0.0:
            raise DomainError("energies must be a nonempty list starting with the zero mode")
        if np.any(e < 0):
            raise DomainError("mode energies must be nonnegative")
        if norms is None:
            norms = np.where(np.arange(e.size) == 0, 0.0, np.inf)
        norms = np.asarray(norms, dtype=float)
        starts = [0] + [i for i in range(1, e.size) if e[i] != e[i - 1] or norms[i] != norms[i - 1]]
        starts = np.array(starts)
        mult = np.diff(np.append(starts, e.size))
        return cls(L=volume ** (1.0 / dim), dim=dim, lattice=np.zeros((e.size, dim), dtype=int),
                   energies=e, k_cut=math.inf, tail_bound=0.0, tail_estimate=0.0,
                   level_start=starts, level_mult=mult, level_energy=e[starts],
                   level_norm=norms[starts], volume=float(volume))


def _tail_estimate(model: DispersionModel, L: float, K: float) -> float:
    """Estimate of ``sum_{|k|>K} exp(-epsilon(k))`` over ``(Z/L)^d``.

    Boundary term for the lattice points just outside the sphere plus the
    continuum integral with the radius inflated by one cell diagonal.
    """
    d = model.dim
    f = lambda k: float(model.exp_neg_epsilon(k))  # noqa: E731
    pad = math.sqrt(d) / L
    integral, _ = integrate.quad(lambda k: (k + pad) ** (d - 1) * f(k), K, np.inf, limit=200)
    boundary = 2 * d * (1.0 + K * L) ** (d - 1) * f(K)
    return boundary + surface_area(d) * L**d * integral


def _ball_count(d: int, radius: float) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * (radius + math.sqrt(d)) ** d


def build_mode_set(model: DispersionModel, L: float, tail_bound: float = 1e-10,
                   max_modes: int = DEFAULT_MAX_MODES) -> ModeSet:
    """Modes of the box of side ``L`` with ``|k| <= k_cut``.

    ``k_cut`` is the smallest radius at which the tail estimate drops below
    ``tail_bound``.  Raises `ResourceCapError` if the ball would hold more
    than ``max_modes`` lattice points.
    """
    if not L > 0:
        raise DomainError(f"box side must be positive, got {L}")
    if not 0 < tail_bound <= 1e-3:
        raise DomainError("tail_bound must lie in (0, 1e-3]")
    d = model.dim

    hi = 1.0 / L
    while _tail_estimate(model, L, hi) > tail_bound:
        hi *= 2.0
        if _ball_count(d, hi * L) > max_modes:
            raise ResourceCapError(
                f"mode cutoff for tail_bound={tail_bound:g} exceeds the cap of {max_modes} modes")
    lo = 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _tail_estimate(model, L, mid) > tail_bound:
            lo = mid
        else:
            hi = mid
    k_cut = hi
    R2 = (k_cut * L) ** 2
    R = int(math.floor(k_cut * L))
    if _ball_count(d, R) > max_modes:
        raise ResourceCapError(f"mode set would exceed the cap of {max_modes} modes")

    axis = np.arange(-R, R + 1)
    grid = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    norm2 = np.sum(grid**2, axis=1)
    keep = norm2 <= R2 + 1e-9
    grid, norm2 = grid[keep], norm2[keep]
    order = np.lexsort(tuple(grid[:, j] for j in range(d - 1, -1, -1)) + (norm2,))
    grid, norm2 = grid[order], norm2[order]

    uniq, starts, mult = np.unique(norm2, return_index=True, return_counts=True)
    norms = np.sqrt(uniq) / L
    level_energy = np.asarray(model.epsilon_radial(norms), dtype=float)
    level_energy[uniq == 0] = 0.0
    energies = np.repeat(level_energy, mult)
    return ModeSet(L=float(L), dim=d, lattice=grid, energies=energies, k_cut=k_cut,
                   tail_bound=tail_bound, tail_estimate=_tail_estimate(model, L, k_cut),
                   level_start=starts, level_mult=mult, level_energy=level_energy,
                   level_norm=norms, volume=float(L) ** d, model=model)


# ---------------------------------------------------------------------------
# h_n(alpha)


@dataclass(frozen=True, eq=False)
class HTable:
    """``h_n(alpha) = (1/n!) sum_{pi in S_n} exp(-alpha N_2(pi))`` for n = 0..nmax."""

    alpha: float
    delta: float
    values: np.ndarray

    @property
    def nmax(self) -> int:
        return self.values.size - 1

    @property
    def limit(self) -> float:
        return math.exp(-self.delta)

    def settle_index(self) -> int:
        """First n beyond which ``|h_n - exp(-delta)|`` is below double precision."""
        if self.delta == 0.0:
            return 1
        n = 0
        while True:
            m = n // 2
            if self.delta ** (n / 2) / math.factorial(m) < 1e-18 * self.limit:
                return n
            n += 1


def h_table(alpha: float, nmax: int) -> HTable:
    """Tabulate ``h_n(alpha)`` from the alternating partial sums of ``exp(-delta)``.

    ``alpha`` may be ``math.inf``.  The values are cross-checked against the
    recursion obtained by isolating the cycle through one element.
    """
    alpha = float(alpha)
    if not alpha >= 0:
        raise DomainError(f"alpha must be nonnegative, got {alpha}")
    if nmax < 1:
        raise DomainError("nmax must be at least 1")
    one_minus = 1.0 if math.isinf(alpha) else -math.expm1(-alpha)
    delta = 0.5 * one_minus
    jmax = nmax // 2
    terms = np.empty(jmax + 1)
    terms[0] = 1.0
    for j in range(1, jmax + 1):
        terms[j] = terms[j - 1] * (-delta) / j
    partial = np.cumsum(terms)
    values = partial[np.arange(nmax + 1) // 2]

    rec = np.empty(nmax + 1)
    rec[0] = rec[1] = 1.0
    running = 2.0
    for n in range(2, nmax + 1):
        rec[n] = (running - one_minus * rec[n - 2]) / n
        running += rec[n]
    if np.max(np.abs(rec - values)) > 1e-12:
        raise ArithmeticError("closed form and recursion for h_n disagree")
    values.setflags(write=False)
    return HTable(alpha=alpha, delta=delta, values=values)


# ---------------------------------------------------------------------------
# partition tables


def _log_positive(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(x)


class _ModeFilter:
    """Convolution of a sequence with one mode's weights ``q^n h_n``."""

    def __init__(self, h: HTable, size: int):
        self.h = h
        self.size = size
        self.limit = h.limit
        self.n0 = min(h.settle_index(), size)
        self.residual = h.values[: self.n0] - self.limit if h.delta > 0 else None

    def __call__(self, x: np.ndarray, q: float) -> np.ndarray:
        y = signal.lfilter([1.0], [1.0, -q], x)
        if self.residual is None:
            return y
        kern = self.residual * q ** np.arange(self.n0)
        return self.limit * y + np.convolve(x, kern)[: x.size]


def _rescale(x: np.ndarray) -> tuple[np.ndarray, float]:
    m = float(np.max(x))
    if not (m > 0 and math.isfinite(m)):
        raise ArithmeticError("partition row lost all mass or overflowed")
    return x / m, math.log(m)


@dataclass(eq=False)
class PartitionTable:
    """Suffix table of constrained partition sums over mode levels.

    ``S[l, M]`` times ``exp(S_log[l])`` is the partition sum over all modes of
    levels ``l, l+1, ...`` with total occupancy ``M``; row ``n_levels`` is the
    empty product.  ``W`` holds the same for a single level.
    """

    mode_set: ModeSet
    N: int
    h: HTable
    S: np.ndarray
    S_log: np.ndarray
    W: np.ndarray
    W_log: np.ndarray
    _marginals: dict = field(default_factory=dict, repr=False)

    @property
    def alpha(self) -> float:
        return self.h.alpha

    @property
    def volume(self) -> float:
        return self.mode_set.volume

    @property
    def logZ(self) -> float:
        return self.log_partition(self.N)

    def log_partition(self, M: int | None = None):
        """``log Z'(M)`` for one total or, with ``M=None``, for all ``0..N``."""
        row = _log_positive(self.S[0]) + self.S_log[0]
        return row if M is None else float(row[M])

    def suffix(self, level: int) -> np.ndarray:
        """Unscaled suffix row (may overflow for large systems)."""
        return self.S[level] * math.exp(self.S_log[level])


def partition_table(mode_set: ModeSet, N: int, h: HTable | None = None) -> PartitionTable:
    """Build the suffix table for ``N`` particles.

    Each mode multiplies the generating function by ``sum_n q^n h_n x^n``
    with ``q = exp(-epsilon(k))``; rows are rescaled to unit maximum and the
    logarithms of the scale factors are kept.
    """
    N = int(N)
    if N < 0:
        raise DomainError("N must be nonnegative")
    if h is None:
        h = h_table(0.0, max(N, 1))
    if h.nmax < N:
        raise DomainError(f"h table covers n <= {h.nmax}, need {N}")
    apply = _ModeFilter(h, N + 1)
    nl = mode_set.n_levels
    S = np.zeros((nl + 1, N + 1))
    S_log = np.zeros(nl + 1)
    W = np.zeros((nl, N + 1))
    W_log = np.zeros(nl)
    S[nl, 0] = 1.0
    delta0 = np.zeros(N + 1)
    delta0[0] = 1.0
    with np.errstate(under="ignore"):
        for lev in range(nl - 1, -1, -1):
            q = math.exp(-mode_set.level_energy[lev])
            y, ylog = S[lev + 1].copy(), S_log[lev + 1]
            w, wlog = delta0.copy(), 0.0
            for _ in range(int(mode_set.level_mult[lev])):
                y, s = _rescale(apply(y, q))
                ylog += s
                w, s = _rescale(apply(w, q))
                wlog += s
            S[lev], S_log[lev] = y, ylog
            W[lev], W_log[lev] = w, wlog
    return PartitionTable(mode_set=mode_set, N=N, h=h, S=S, S_log=S_log, W=W, W_log=W_log)


# ---------------------------------------------------------------------------
# marginals


def _check_total(table: PartitionTable, N: int | None) -> int:
    if N is None:
        return table.N
    N = int(N)
    if not 0 <= N <= table.N:
        raise DomainError(f"total {N} outside the table range [0, {table.N}]")
    return N


def _level_marginals(table: PartitionTable) -> tuple[np.ndarray, np.ndarray]:
    """Per-level single-mode ``log`` weights times the complement partition.

    Returns arrays ``single`` (levels x N+1) and ``other`` (levels x N+1), in
    log form, such that ``P_M(n_k = j)`` is proportional to
    ``exp(single[l, j] + other[l, M - j])`` for any mode k of level l.
    """
    cached = table._marginals.get("levels")
    if cached is not None:
        return cached
    ms, N, h = table.mode_set, table.N, table.h
    apply = _ModeFilter(h, N + 1)
    nl = ms.n_levels
    single = np.empty((nl, N + 1))
    other = np.empty((nl, N + 1))
    prefix = np.zeros(N + 1)
    prefix[0] = 1.0
    prefix_log = 0.0
    j = np.arange(N + 1)
    logh = np.log(h.values[: N + 1])
    with np.errstate(under="ignore"):
        for lev in range(nl):
            e = ms.level_energy[lev]
            q = math.exp(-e)
            rest, rest_log = table.S[lev + 1].copy(), table.S_log[lev + 1]
            for _ in range(int(ms.level_mult[lev]) - 1):
                rest, s = _rescale(apply(rest, q))
                rest_log += s
            conv, s = _rescale(np.convolve(prefix, rest)[: N + 1])
            other[lev] = _log_positive(conv) + s + prefix_log + rest_log
            single[lev] = -e * j + logh
            for _ in range(int(ms.level_mult[lev])):
                prefix, s = _rescale(apply(prefix, q))
                prefix_log += s
    table._marginals["levels"] = (single, other)
    return single, other


def _marginal_from_logs(single: np.ndarray, other: np.ndarray, N: int) -> np.ndarray:
    lp = single[: N + 1] + other[N::-1]
    lp -= np.max(lp)
    p = np.exp(lp)
    return p / p.sum()


def occupation_marginal(table: PartitionTable, mode_index: int, N: int | None = None) -> np.ndarray:
    """Distribution of ``n_k`` for mode ``mode_index`` at total ``N``.

    Returns an array of length ``N + 1`` with ``P(n_k = j)``.
    """
    N = _check_total(table, N)
    lev = table.mode_set.level_of(mode_index)
    if lev == 0 and table.mode_set.level_mult[0] == 1:
        lp = (_log_positive(table.W[0, : N + 1]) + _log_positive(table.S[1, N::-1]))
        lp -= np.max(lp)
        p = np.exp(lp)
        return p / p.sum()
    single, other = _level_marginals(table)
    return _marginal_from_logs(single[lev], other[lev], N)


def occupation_tail(table: PartitionTable, mode_index: int, N: int | None = None) -> np.ndarray:
    """``P(n_k >= j)`` for j = 0..N."""
    p = occupation_marginal(table, mode_index, N)
    return np.cumsum(p[::-1])[::-1]


def _window_counts(m: int, n: int, N: int) -> np.ndarray:
    """Expected number of indices in cycles of length in [m, n] for a uniform
    permutation of j elements, j = 0..N."""
    j = np.arange(N + 1)
    return np.clip(np.minimum(n, j) - m + 1, 0, None).astype(float)


def expected_cycle_density(table: PartitionTable, m: int, n: int, N: int | None = None) -> float:
    """Exact ``E(rho_{m,n})`` for the non-interacting model (alpha = 0).

    Given the occupation numbers, permutations are uniform within each mode,
    and a uniform permutation of j elements puts on average
    ``(min(n, j) - m + 1)^+`` indices in cycles of length in [m, n].
    """
    if table.alpha != 0.0:
        raise UnsupportedExactError(
            "no exact cycle-density formula with alpha > 0; use the Monte Carlo sampler")
    N = _check_total(table, N)
    m, n = int(m), int(n)
    if not 1 <= m <= n:
        raise DomainError(f"need 1 <= m <= n, got m={m}, n={n}")
    if N == 0:
        return 0.0
    single, other = _level_marginals(table)
    f = _window_counts(m, n, N)
    total = 0.0
    ms = table.mode_set
    for lev in range(ms.n_levels):
        total += ms.level_mult[lev] * float(_marginal_from_logs(single[lev], other[lev], N) @ f)
    return total / table.volume


# ---------------------------------------------------------------------------
# independent route for alpha = 0: cycle sums


def cycle_sums(mode_set: ModeSet, jmax: int) -> np.ndarray:
    """``B_j = sum_k exp(-j epsilon(k))`` for j = 0..jmax (B_0 = number of modes)."""
    j = np.arange(jmax + 1)
    with np.errstate(under="ignore"):
        return np.exp(-np.outer(j, mode_set.level_energy)) @ mode_set.level_mult.astype(float)


def cycle_sum_log_partition(mode_set: ModeSet, N: int) -> np.ndarray:
    """``log Z'(M)`` for M = 0..N from ``Z'(M) = (1/M) sum_j B_j Z'(M-j)``."""
    B = cycle_sums(mode_set, N)
    logB = _log_positive(B)
    logZ = np.empty(N + 1)
    logZ[0] = 0.0
    for M in range(1, N + 1):
        terms = logB[1 : M + 1] + logZ[M - 1 :: -1]
        logZ[M] = special.logsumexp(terms) - math.log(M)
    return logZ


# ---------------------------------------------------------------------------
# exact sampling


@dataclass(frozen=True)
class OccupancyState:
    counts: dict
    total: int

    def dense(self, n_modes: int) -> np.ndarray:
        out = np.zeros(n_modes, dtype=int)
        for k, v in self.counts.items():
            out[k] = v
        return out

    def to_line(self) -> str:
        return " ".join(f"{k}:{v}" for k, v in sorted(self.counts.items()))


@dataclass(frozen=True, eq=False)
class LevelSamples:
    """Independent exact draws of the total occupation of every level."""

    table: PartitionTable
    totals: np.ndarray  # (samples, levels)

    def __len__(self):
        return self.totals.shape[0]

    def split_level(self, total: int, level: int, rng) -> np.ndarray:
        return _split_level(self.table, total, level, rng)

    def state(self, i: int, rng) -> OccupancyState:
        ms = self.table.mode_set
        counts = {}
        for lev in np.flatnonzero(self.totals[i]):
            parts = _split_level(self.table, int(self.totals[i, lev]), int(lev), rng)
            for off in np.flatnonzero(parts):
                counts[int(ms.level_start[lev] + off)] = int(parts[off])
        return OccupancyState(counts=counts, total=int(self.totals[i].sum()))


def _split_level(table: PartitionTable, total: int, level: int, rng) -> np.ndarray:
    """Distribute ``total`` particles over the equal-energy modes of a level."""
    g = int(table.mode_set.level_mult[level])
    if g == 1:
        return np.array([total])
    if table.alpha == 0.0:
        # uniform over compositions: stars and bars
        bars = np.sort(rng.choice(total + g - 1, size=g - 1, replace=False))
        edges = np.concatenate(([-1], bars, [total + g - 1]))
        return np.diff(edges) - 1
    hv = table.h.values[: total + 1]
    # H[j] = j-fold convolution of h, truncated at `total`
    H = [np.zeros(total + 1)]
    H[0][0] = 1.0
    for _ in range(g - 1):
        nxt = np.convolve(H[-1], hv)[: total + 1]
        H.append(nxt / nxt.max())
    out = np.zeros(g, dtype=int)
    left = total
    for i in range(g - 1):
        rest = H[g - 1 - i]
        a = np.arange(left + 1)
        p = hv[a] * rest[left - a]
        a_i = rng.choice(left + 1, p=p / p.sum())
        out[i] = a_i
        left -= a_i
    out[-1] = left
    return out


def sample_occupations(table: PartitionTable, rng, size: int) -> LevelSamples:
    """Draw ``size`` exact samples of the level totals, vectorized over samples.

    Levels are visited in order; at level l with ``M`` particles left the
    level receives ``t`` with probability ``W_l(t) S_{l+1}(M-t) / S_l(M)``.
    """
    ms, N = table.mode_set, table.N
    nl = ms.n_levels
    logS = _log_positive(table.S)
    logW = _log_positive(table.W)
    totals = np.zeros((size, nl), dtype=np.int64)
    left = np.full(size, N, dtype=np.int64)
    rows = np.arange(size)
    for lev in range(nl):
        shift = table.W_log[lev] + table.S_log[lev + 1] - table.S_log[lev]
        u = rng.random(size)
        cum = np.zeros(size)
        draw = np.full(size, -1, dtype=np.int64)
        last_pos = np.zeros(size, dtype=np.int64)
        start, width = 0, 8
        active = rows[left > 0]
        draw[left == 0] = 0
        while active.size:
            t = start + np.arange(width)
            Ma = left[active]
            valid = t[None, :] <= Ma[:, None]
            idx = np.where(valid, Ma[:, None] - t[None, :], 0)
            tt = np.minimum(t, N)
            with np.errstate(invalid="ignore", under="ignore"):
                lp = logW[lev][tt][None, :] + logS[lev + 1][idx] - logS[lev][Ma][:, None] + shift
                p = np.where(valid, np.exp(lp), 0.0)
            cs = cum[active][:, None] + np.cumsum(p, axis=1)
            hit = (cs >= u[active][:, None]) & valid
            found = hit.any(axis=1)
            first = np.argmax(hit, axis=1)
            draw[active[found]] = start + first[found]
            pos = np.where(p > 0, t[None, :], -1).max(axis=1)
            last_pos[active] = np.maximum(last_pos[active], pos)
            cum[active] = cs[:, -1]
            exhausted = ~found & (start + width > Ma)
            # rounding left u above the total mass: take the last supported value
            draw[active[exhausted]] = last_pos[active[exhausted]]
            active = active[~found & ~exhausted]
            start += width
            width *= 2
        totals[:, lev] = draw
        left -= draw
    if np.any(left != 0):
        raise ArithmeticError("sampler failed to place all particles")
    return LevelSamples(table=table, totals=totals)


def sample_occupation(table: PartitionTable, rng) -> OccupancyState:
    """One exact draw of the occupation numbers."""
    if table.N == 0:
        return OccupancyState(counts={}, total=0)
    return sample_occupations(table, rng, 1).state(0, rng)


# ---------------------------------------------------------------------------
# condensate statistics


def mgf_n0(table: PartitionTable, lam: float, N: int | None = None) -> float:
    """``E(exp(lam * n_0 / V))`` for the zero mode."""
    if lam < 0:
        raise DomainError("lambda must be nonnegative")
    p = occupation_marginal(table, 0, N)
    return float(p @ np.exp(lam * np.arange(p.size) / table.volume))


@dataclass(frozen=True)
class ProbabilityEstimate:
    value: float
    low: float
    high: float
    samples: int
    hits: int


def in_typical_set(levels: np.ndarray, table: PartitionTable, eta: float, rho0: float,
                   rng) -> bool:
    """Membership of one level-total sample in the typical set ``A_eta``.

    The three conditions: ``|n_0/V - rho0| < eta``; the modes with
    ``0 < |k| < V^-eta`` hold fewer than ``eta V`` particles; every mode with
    ``|k| >= V^-eta`` holds fewer than ``V^(3 eta)``.
    """
    ms = table.mode_set
    V = table.volume
    kc = V**-eta
    cap = V ** (3 * eta)
    n0 = levels[0] if ms.level_mult[0] == 1 else _split_level(table, int(levels[0]), 0, rng)[0]
    if not abs(n0 / V - rho0) < eta:
        return False
    norms = ms.level_norm
    low = (norms > 0) & (norms < kc)
    low_sum = levels[low].sum()
    if ms.level_mult[0] > 1:
        low_sum += levels[0] - n0
    if not low_sum < eta * V:
        return False
    for lev in np.flatnonzero((norms >= kc) & (levels >= cap)):
        parts = _split_level(table, int(levels[lev]), int(lev), rng)
        if parts.max() >= cap:
            return False
    return True


def typical_set_probability(table: PartitionTable, eta: float, samples: int, rng,
                            rho0: float | None = None, confidence: float = 0.95) -> ProbabilityEstimate:
    """Monte Carlo estimate of ``P(A_eta)`` from exact occupation samples.

    ``rho0`` defaults to ``max(0, rho - rho_c)`` with the critical density of
    the mode set's model.
    """
    if not eta > 0:
        raise DomainError("eta must be positive")
    if rho0 is None:
        from .thermodynamics import critical_density

        model = table.mode_set.model
        if model is None:
            raise DomainError("rho0 is required for a mode set without a model")
        rho0 = max(0.0, table.N / table.volume - critical_density(model).value)
    draws = sample_occupations(table, rng, samples)
    hits = sum(in_typical_set(draws.totals[i], table, eta, rho0, rng) for i in range(samples))
    ci = stats.binomtest(hits, samples).proportion_ci(confidence_level=confidence, method="wilson")
    return ProbabilityEstimate(value=hits / samples, low=float(ci.low), high=float(ci.high),
                               samples=samples, hits=int(hits))
