"""Grid covers of near-level sets and their iterated scaled intersections.

Everything lives on an M x M bitmap over [0,1]^2 with half-open cells
[i/M,(i+1)/M) x [j/M,(j+1)/M).  Sets are conservative outer approximations
(center test plus one-cell dilation where stated); measures are cell counts
over M^2, so every inequality checked here sees an upper bound on the true
set, matching the direction of the decay estimates being verified.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .fn_core import BaseFunction, FunctionSpec, reduced_arguments

# Levels with fewer than this many grid cells per oscillation are noise.
CELLS_PER_OSCILLATION = 4


# ---------------------------------------------------------------------------
# bitmap sets
# ---------------------------------------------------------------------------

@dataclass
class GridSet:
    """Boolean mask over the unit square; bits[i, j] covers x-cell i, y-cell j."""

    bits: np.ndarray

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool)
        if self.bits.ndim != 2 or self.bits.shape[0] != self.bits.shape[1]:
            raise ValueError(f"bits must be a square 2-D mask, got {self.bits.shape}")

    @property
    def resolution(self) -> int:
        return self.bits.shape[0]

    def measure(self) -> float:
        return float(np.count_nonzero(self.bits)) / float(self.bits.size)

    def complement(self) -> "GridSet":
        return GridSet(~self.bits)

    def __and__(self, other: "GridSet") -> "GridSet":
        return GridSet(self.bits & other.bits)

    def __or__(self, other: "GridSet") -> "GridSet":
        return GridSet(self.bits | other.bits)

    def __xor__(self, other: "GridSet") -> "GridSet":
        return GridSet(self.bits ^ other.bits)

    def __eq__(self, other) -> bool:
        return isinstance(other, GridSet) and np.array_equal(self.bits, other.bits)

    def dilate(self, steps: int = 1) -> "GridSet":
        """Chebyshev dilation with periodic wrap (the sets are torus-periodic)."""
        out = self.bits.copy()
        for _ in range(steps):
            grown = out.copy()
            for axis in (0, 1):
                grown |= np.roll(out, 1, axis=axis) | np.roll(out, -1, axis=axis)
            grown |= np.roll(np.roll(out, 1, 0), 1, 1) | np.roll(np.roll(out, 1, 0), -1, 1)
            grown |= np.roll(np.roll(out, -1, 0), 1, 1) | np.roll(np.roll(out, -1, 0), -1, 1)
            out = grown
        return GridSet(out)

    def contains_within(self, other: "GridSet", fringe: int = 1) -> bool:
        """True when every cell of self lies within ``fringe`` cells of other."""
        return not np.any(self.bits & ~other.dilate(fringe).bits)

    def sample_cell_centers(self, k: int, rng: np.random.Generator):
        """Centers of k marked cells chosen uniformly (with replacement)."""
        ix, iy = np.nonzero(self.bits)
        if len(ix) == 0:
            return np.empty(0), np.empty(0)
        pick = rng.integers(0, len(ix), size=k)
        m = float(self.resolution)
        return (ix[pick] + 0.5) / m, (iy[pick] + 0.5) / m

    def write_pbm(self, path) -> None:
        """Plain PBM (P1); rows are y top-to-bottom for visual inspection."""
        m = self.resolution
        img = self.bits.T[::-1]  # row 0 = top of the square
        with open(path, "w", newline="\n") as fh:
            fh.write(f"P1\n{m} {m}\n")
            for row in img:
                fh.write("".join("1" if v else "0" for v in row) + "\n")

    @classmethod
    def full(cls, resolution: int) -> "GridSet":
        return cls(np.ones((resolution, resolution), dtype=bool))

    @classmethod
    def empty(cls, resolution: int) -> "GridSet":
        return cls(np.zeros((resolution, resolution), dtype=bool))


def measure(s: GridSet) -> float:
    return s.measure()


def cell_centers(resolution: int) -> np.ndarray:
    return (np.arange(resolution, dtype=np.float64) + 0.5) / float(resolution)


# ---------------------------------------------------------------------------
# near-level sets of the base function
# ---------------------------------------------------------------------------

def near_level_set(g: BaseFunction, epsilon: float, resolution: int,
                   method: str = "auto") -> GridSet:
    """Outer grid cover of {(x, y): |g(x) - g(y)| < epsilon}.

    Cells are marked by a center test and dilated by one cell.  For the plain
    cosine the separable factorization 2|sin^2(pi x) - sin^2(pi y)|, which
    equals |cos 2pi x - cos 2pi y| identically, is available as a fast path
    and must mark the same cells as the generic path.
    """
    if not epsilon > 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    if method == "auto":
        method = "factorized" if g.kind == "cos" else "generic"
    centers = cell_centers(resolution)
    if method == "generic":
        gv = g.sample(np.mod(centers, g.period))
        marked = np.abs(gv[:, None] - gv[None, :]) < epsilon
    elif method == "factorized":
        if g.kind != "cos":
            raise ValueError("factorized path applies to the plain cosine only")
        s2 = np.sin(math.pi * centers) ** 2
        marked = 2.0 * np.abs(s2[:, None] - s2[None, :]) < epsilon
    else:
        raise ValueError(f"unknown method {method!r}")
    return GridSet(marked).dilate(1)


def oscillation_level_set(spec: FunctionSpec, n: int, epsilon: float,
                          resolution: int) -> GridSet:
    """Center-test grid set {(x, y): |g(b_n x + th_n) - g(b_n y + th_n)| >= epsilon}."""
    if not epsilon > 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    centers = cell_centers(resolution)
    gv = spec.g.sample(reduced_arguments(spec, n, centers))
    return GridSet(np.abs(gv[:, None] - gv[None, :]) >= epsilon)


# ---------------------------------------------------------------------------
# square-grid covers
# ---------------------------------------------------------------------------

def cover_count(s: GridSet, delta: float) -> int:
    """Number of delta-squares on the 0-anchored regular grid meeting the set.

    Counts squares of the fixed grid, which upper-bounds the minimal cover.
    delta below the bitmap cell size would pretend to sub-cell knowledge, so
    it is an error.
    """
    m = s.resolution
    if delta < 1.0 / m:
        raise ValueError(f"delta {delta} finer than the grid resolution 1/{m}")
    ix, iy = np.nonzero(s.bits)
    if len(ix) == 0:
        return 0
    n_squares = int(math.ceil(1.0 / delta - 1e-12))
    inv = 1.0 / (m * delta)
    kx_lo = np.floor(ix * inv).astype(np.int64)
    ky_lo = np.floor(iy * inv).astype(np.int64)
    kx_hi = np.ceil((ix + 1) * inv).astype(np.int64) - 1
    ky_hi = np.ceil((iy + 1) * inv).astype(np.int64) - 1
    np.clip(kx_hi, None, n_squares - 1, out=kx_hi)
    np.clip(ky_hi, None, n_squares - 1, out=ky_hi)
    hit = np.zeros((n_squares, n_squares), dtype=bool)
    for kx in (kx_lo, kx_hi):
        for ky in (ky_lo, ky_hi):
            hit[kx, ky] = True
    return int(np.count_nonzero(hit))


def cover_curve(s: GridSet, deltas) -> list:
    """Empirical (delta, count, count*delta) curve; the N <= C/delta surrogate."""
    out = []
    for d in deltas:
        n = cover_count(s, d)
        out.append((float(d), n, n * float(d)))
    return out


# ---------------------------------------------------------------------------
# iterated scaled intersections
# ---------------------------------------------------------------------------

def _membership_index(spec: FunctionSpec, level: int, theta: float,
                      centers: np.ndarray, resolution: int) -> np.ndarray:
    t = reduced_arguments(spec, level, centers, theta=theta)
    idx = (t * resolution).astype(np.int64)
    return np.minimum(idx, resolution - 1)


def _level_cap(spec: FunctionSpec, n: int, resolution: int) -> int:
    """Largest level <= n with at least CELLS_PER_OSCILLATION cells per wave."""
    cap = n
    if spec.freq.max_order is not None:
        cap = min(cap, spec.freq.max_order - 1)
    for j in range(1, cap + 1):
        if spec.freq.value_float(j) > resolution / CELLS_PER_OSCILLATION:
            cap = j - 1
            break
    return cap


def iterated_intersection(a: GridSet, spec: FunctionSpec, phase_pairs,
                          n: int, resolution: int | None = None) -> GridSet:
    """Intersection of A with its n rescaled, phase-shifted periodic copies.

    A cell stays marked iff its center (x, y) has, for every 1 <= j <= n,
    (b_j x + theta_j, b_j y + theta_j) mod 1 landing in a marked cell of A;
    the mod-1 wrap realizes the translation-periodized extension of A.
    phase_pairs[j-1] supplies (theta_j^x, theta_j^y); None takes both from
    the spec's phases.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    m = a.resolution
    if resolution is not None and resolution != m:
        raise ValueError(f"A is at resolution {m}, requested {resolution}")
    if _level_cap(spec, n, m) < n:
        warnings.warn(
            f"levels past {_level_cap(spec, n, m)} have fewer than "
            f"{CELLS_PER_OSCILLATION} cells per oscillation at resolution {m}",
            UserWarning,
            stacklevel=2,
        )
    centers = cell_centers(m)
    bits = a.bits.copy()
    for j in range(1, n + 1):
        if phase_pairs is not None and j - 1 < len(phase_pairs):
            tx, ty = phase_pairs[j - 1]
        else:
            tx = ty = spec.phase(j)
        ix = _membership_index(spec, j, float(tx), centers, m)
        iy = _membership_index(spec, j, float(ty), centers, m)
        bits &= a.bits[np.ix_(ix, iy)]
    return GridSet(bits)


def intersection_sequence(a: GridSet, spec: FunctionSpec, n_max: int,
                          phase_pairs=None):
    """All iterated intersections for n = 0..n_max (capped to usable levels).

    Returns (sets, measures, n_effective); consecutive sets are nested by
    construction, so the measures are nonincreasing.
    """
    m = a.resolution
    n_eff = _level_cap(spec, n_max, m)
    if n_eff < n_max:
        warnings.warn(
            f"capping n_max at {n_eff}: level {n_eff + 1} oscillates faster than "
            f"{CELLS_PER_OSCILLATION} cells per wave at resolution {m}",
            UserWarning,
            stacklevel=2,
        )
    centers = cell_centers(m)
    sets = [GridSet(a.bits.copy())]
    bits = a.bits.copy()
    for j in range(1, n_eff + 1):
        if phase_pairs is not None and j - 1 < len(phase_pairs):
            tx, ty = phase_pairs[j - 1]
        else:
            tx = ty = spec.phase(j)
        ix = _membership_index(spec, j, float(tx), centers, m)
        iy = _membership_index(spec, j, float(ty), centers, m)
        bits = bits & a.bits[np.ix_(ix, iy)]
        sets.append(GridSet(bits.copy()))
    measures = [s.measure() for s in sets]
    return sets, measures, n_eff


# ---------------------------------------------------------------------------
# covering-rate bound
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoverParams:
    """Per-step shrink rate of the iterated intersection's cover measure."""

    delta: float
    n_squares: int
    depth: int
    rate: float
    valid: bool
    epsilon: float = math.nan


def shrink_rate_bound(n_squares: int, delta: float, ratio: float,
                      mode: str = "general", epsilon: float = math.nan) -> CoverParams:
    """Rate with measure(iterate n) < C * rate^n, from an N-square cover.

    general mode picks the depth k with ratio^(k-1) <= 2/delta < ratio^k and
    returns (N (delta + 2/ratio^k)^2)^(1/k).  With integer ratios and zero
    phases no grid square straddles a cover square, giving exactly N*delta^2
    at depth 1 (integer_b mode).  A rate >= 1 is flagged, not an error.
    """
    if n_squares < 1:
        raise ValueError(f"n_squares must be >= 1, got {n_squares}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not ratio > 1.0:
        raise ValueError(f"ratio must exceed 1, got {ratio}")
    if mode == "integer_b":
        rate = n_squares * delta ** 2
        depth = 1
    elif mode == "general":
        depth = 1
        while ratio ** depth <= 2.0 / delta:
            depth += 1
        rate = (n_squares * (delta + 2.0 / ratio ** depth) ** 2) ** (1.0 / depth)
    else:
        raise ValueError(f"mode must be 'general' or 'integer_b', got {mode!r}")
    valid = rate < 1.0
    if not valid:
        warnings.warn(
            f"shrink rate {rate:g} >= 1: delta too large for the bound to bite",
            UserWarning,
            stacklevel=2,
        )
    return CoverParams(delta=float(delta), n_squares=int(n_squares), depth=depth,
                       rate=float(rate), valid=valid, epsilon=float(epsilon))


# ---------------------------------------------------------------------------
# decay fitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecayFit:
    rate: float
    prefactor: float
    r2: float
    n_used: int


def decay_fit(measures) -> DecayFit:
    """Least-squares fit of log(measure) against the index; rate = exp(slope).

    Only the longest positive prefix is fit (a zero measure means the grid
    resolved the set to nothing); fitting fewer than 3 points is an error.
    """
    arr = np.asarray(list(measures), dtype=np.float64)
    n_pos = 0
    while n_pos < len(arr) and arr[n_pos] > 0.0:
        n_pos += 1
    if n_pos < 3:
        raise ValueError(f"need >= 3 positive leading measures, got {n_pos}")
    if n_pos < len(arr):
        warnings.warn(
            f"fitting the {n_pos}-entry positive prefix of {len(arr)} measures",
            UserWarning,
            stacklevel=2,
        )
    ns = np.arange(n_pos, dtype=np.float64)
    logs = np.log(arr[:n_pos])
    slope, intercept = np.polyfit(ns, logs, 1)
    fitted = slope * ns + intercept
    ss_res = float(np.sum((logs - fitted) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return DecayFit(rate=float(np.exp(slope)), prefactor=float(np.exp(intercept)),
                    r2=r2, n_used=n_pos)


# ---------------------------------------------------------------------------
# first-hit decomposition
# ---------------------------------------------------------------------------

@dataclass
class FirstHitDecomposition:
    """First- and second-hit partition of the square by the oscillation sets.

    sets[n] holds the cells whose first index with |g(b_n x) - g(b_n y)| >=
    epsilon is n; pair_measures[n0, n1] is the measure of the cells hitting
    first at n0 and next at n1.  partial_sums[k] accumulates
    sum_{n0 < n1 <= k} measure / (a^n0 a^n1), the series whose convergence
    drives the occupation-density argument.
    """

    epsilon: float
    resolution: int
    n_max_effective: int
    sets: list = field(repr=False)
    pair_measures: np.ndarray = field(repr=False)
    partial_sums: list = field(default_factory=list)
    residual_first: float = 0.0
    residual_pair: float = 0.0

    @property
    def partial_sum(self) -> float:
        return self.partial_sums[-1] if self.partial_sums else 0.0

    def increments(self) -> list:
        return [b - a for a, b in zip(self.partial_sums, self.partial_sums[1:])]

    def write_measures_csv(self, path) -> None:
        k = self.pair_measures.shape[0]
        with open(path, "w", newline="\n") as fh:
            fh.write("n0,n1,measure\n")
            for n0 in range(k):
                for n1 in range(n0 + 1, k):
                    fh.write(f"{n0},{n1},{float(self.pair_measures[n0, n1])!r}\n")


def first_hit_sets(spec: FunctionSpec, epsilon: float, n_max: int,
                   resolution: int) -> FirstHitDecomposition:
    """Build the first/second-hit decomposition up to n_max on the grid.

    Levels oscillating faster than the grid can resolve are dropped and the
    effective cap reported in the result.
    """
    if not epsilon > 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    m = resolution
    n_eff = _level_cap(spec, n_max, m)
    if n_eff < n_max:
        warnings.warn(
            f"capping n_max at {n_eff} of {n_max}: finer levels oscillate below "
            f"{CELLS_PER_OSCILLATION} cells per wave at resolution {m}",
            UserWarning,
            stacklevel=2,
        )
    centers = cell_centers(m)
    first = np.full((m, m), -1, dtype=np.int16)
    second = np.full((m, m), -1, dtype=np.int16)
    for n in range(n_eff + 1):
        gv = spec.g.sample(reduced_arguments(spec, n, centers))
        hit = np.abs(gv[:, None] - gv[None, :]) >= epsilon
        new_first = (first < 0) & hit
        first[new_first] = n
        new_second = hit & ~new_first & (first >= 0) & (second < 0)
        second[new_second] = n

    k = n_eff + 1
    sets = [GridSet(first == n) for n in range(k)]
    paired = second >= 0
    codes = first[paired].astype(np.int64) * k + second[paired].astype(np.int64)
    counts = np.bincount(codes, minlength=k * k).reshape(k, k)
    pair_measures = counts.astype(np.float64) / float(m * m)

    a = spec.a
    partial_sums = []
    total = 0.0
    for n1 in range(1, k):
        for n0 in range(n1):
            total += float(pair_measures[n0, n1]) / (a ** n0 * a ** n1)
        partial_sums.append(total)

    return FirstHitDecomposition(
        epsilon=float(epsilon),
        resolution=m,
        n_max_effective=n_eff,
        sets=sets,
        pair_measures=pair_measures,
        partial_sums=partial_sums,
        residual_first=float(np.count_nonzero(first < 0)) / float(m * m),
        residual_pair=float(np.count_nonzero(second < 0)) / float(m * m),
    )


def write_measures_csv(path, measures) -> None:
    """(n, measure) rows for an intersection sequence."""
    with open(path, "w", newline="\n") as fh:
        fh.write("n,measure\n")
        for n, v in enumerate(measures):
            fh.write(f"{n},{float(v)!r}\n")
