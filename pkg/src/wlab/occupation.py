"""Occupation measure of f: density, L2 norm, Fourier side, sinc products.

The occupation measure pushes Lebesgue measure on [0, 1] forward through f.
J = [0, 1] is fixed unconditionally; for non-integer frequency ratios or
nonzero phases f need not be 1-periodic, so this is the window convention,
not a periodicity claim.  Its characteristic function under the coefficient
randomness factorizes into sin(u a_n dg_n)/(u a_n dg_n) terms, which is what
links the first-hit series in `covering` to the L2 density statement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fn_core import (
    FunctionSpec,
    GraphSample,
    default_tolerance,
    reduced_arguments,
    truncation_order,
)
from .rng import substream


class AliasingError(ValueError):
    """Fourier grid too coarse for the density's support width."""


# ---------------------------------------------------------------------------
# histogram density
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OccupationDensity:
    """Histogram density of f-values; weights integrate to 1 by construction."""

    lo: float
    hi: float
    bins: int
    weights: np.ndarray
    l2_sq: float
    degenerate: bool

    @property
    def bin_width(self) -> float:
        return (self.hi - self.lo) / self.bins

    def bin_centers(self) -> np.ndarray:
        return self.lo + (np.arange(self.bins) + 0.5) * self.bin_width

    def write_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write("bin_center,density\n")
            for c, w in zip(self.bin_centers(), self.weights):
                fh.write(f"{float(c)!r},{float(w)!r}\n")


def occupation_histogram(sample: GraphSample, bins: int) -> OccupationDensity:
    """Histogram of f over the sample; each point carries mass 1/len(xs).

    The value range is the sampled min/max padded by one bin width.  A bin
    holding over half the mass flags a degenerate (near-atomic) measure; the
    result is still returned.
    """
    if bins < 2:
        raise ValueError(f"need >= 2 bins, got {bins}")
    m = len(sample)
    if m < 100 * bins:
        raise ValueError(f"need >= {100 * bins} samples for {bins} bins, got {m}")
    ys = sample.ys
    ymin, ymax = float(ys.min()), float(ys.max())
    span = ymax - ymin
    if span == 0.0:
        bw = 1.0 / bins
        lo = ymin - 0.5
    else:
        bw = span / (bins - 2)
        lo = ymin - bw
    hi = lo + bins * bw
    idx = np.clip(((ys - lo) / bw).astype(np.int64), 0, bins - 1)
    counts = np.bincount(idx, minlength=bins)
    weights = counts / (m * bw)
    l2_sq = float(np.sum(weights ** 2) * bw)
    degenerate = bool(counts.max() * 2 > m)
    return OccupationDensity(lo=lo, hi=hi, bins=bins, weights=weights,
                             l2_sq=l2_sq, degenerate=degenerate)


# ---------------------------------------------------------------------------
# Fourier transform of the occupation measure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FourierProfile:
    """Empirical characteristic function mean(exp(i u f(x))) on a u-grid."""

    us: np.ndarray
    values: np.ndarray
    quadrature_points: int

    def abs_sq(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def write_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write("u,re,im,abs2\n")
            for u, v in zip(self.us, self.values):
                fh.write(f"{float(u)!r},{float(v.real)!r},{float(v.imag)!r},{float(v.real**2 + v.imag**2)!r}\n")


def fourier_transform(sample: GraphSample, us) -> FourierProfile:
    """Rectangle-rule transform (1/m) sum_j exp(i u ys[j]) at each requested u."""
    us = np.asarray(list(us), dtype=np.float64)
    if us.size == 0:
        raise ValueError("need a nonempty frequency list")
    ys = sample.ys
    values = np.empty(us.size, dtype=np.complex128)
    chunk = max(1, (1 << 22) // max(1, ys.size))
    for start in range(0, us.size, chunk):
        block = us[start:start + chunk]
        values[start:start + chunk] = np.exp(1j * np.outer(block, ys)).mean(axis=1)
    return FourierProfile(us=us, values=values, quadrature_points=len(ys))


def char_function_profile(sample: GraphSample, du: float, u_max: float) -> FourierProfile:
    """Symmetric uniform-grid profile via the recurrence exp(i k du y) = z^k.

    One complex multiply per sample per step instead of a transcendental;
    drift is ~ steps * eps.  Negative frequencies are the exact conjugates
    (same quadrature nodes), so only u >= 0 is computed.
    """
    if not du > 0.0 or not u_max > 0.0:
        raise ValueError("du and u_max must be positive")
    n_steps = int(math.ceil(u_max / du - 1e-12))
    ys = sample.ys
    w = np.exp(1j * du * ys)
    z = np.ones_like(w)
    pos = np.empty(n_steps, dtype=np.complex128)
    for k in range(n_steps):
        z *= w
        pos[k] = z.mean()
    us = du * np.arange(-n_steps, n_steps + 1)
    values = np.concatenate([np.conj(pos[::-1]), [1.0 + 0.0j], pos])
    return FourierProfile(us=us, values=values, quadrature_points=len(ys))


def adaptive_char_profile(sample: GraphSample, du: float, decay_target: float = 1e-4,
                          u_start: float = 64.0, u_cap: float = 4096.0):
    """Grow the profile in octaves until the last octave's |mu|^2 dips below target.

    Returns (profile, reached: bool); reached is False when u_cap was hit
    with the tail still above the target.
    """
    n_steps = int(math.ceil(u_start / du))
    ys = sample.ys
    w = np.exp(1j * du * ys)
    z = np.ones_like(w)
    pos = []
    for _ in range(n_steps):
        z *= w
        pos.append(z.mean())
    reached = False
    while True:
        u_now = len(pos) * du
        half = len(pos) // 2
        tail_max = max(abs(v) ** 2 for v in pos[half:])
        if tail_max < decay_target:
            reached = True
            break
        if u_now >= u_cap:
            break
        for _ in range(len(pos)):  # double the range
            z *= w
            pos.append(z.mean())
    pos = np.asarray(pos, dtype=np.complex128)
    us = du * np.arange(-len(pos), len(pos) + 1)
    values = np.concatenate([np.conj(pos[::-1]), [1.0 + 0.0j], pos])
    return FourierProfile(us=us, values=values, quadrature_points=len(ys)), reached


# ---------------------------------------------------------------------------
# Parseval cross-check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParsevalReport:
    """Comparison of (1/2pi) integral |mu_hat|^2 du against the histogram L2 norm."""

    discrepancy: float
    fourier_integral: float
    l2_sq: float
    u_max: float
    tail_estimate: float
    tail_exponent: float
    degenerate: bool

    def to_json_dict(self) -> dict:
        # a diverging tail estimate serializes as null (strict JSON has no inf)
        return {
            "discrepancy": self.discrepancy,
            "fourier_integral": self.fourier_integral,
            "l2_sq": self.l2_sq,
            "u_max": self.u_max,
            "tail_estimate": self.tail_estimate if math.isfinite(self.tail_estimate) else None,
            "tail_exponent": self.tail_exponent,
            "degenerate": self.degenerate,
        }


def parseval_check(density: OccupationDensity, profile: FourierProfile,
                   u_max: float) -> ParsevalReport:
    """Relative gap between the truncated Fourier L2 mass and the density's.

    Convention mu_hat(u) = int exp(iut) dmu implies int |mu_hat|^2 du =
    2 pi int rho^2.  The tail beyond u_max is estimated from the decay
    exponent fitted on the last octave and reported, not added in.
    """
    us = profile.us
    du = float(us[1] - us[0]) if len(us) > 1 else math.inf
    if not np.allclose(np.diff(us), du, rtol=1e-9, atol=0.0):
        raise AliasingError("profile frequencies must form a uniform grid")
    nyquist = math.pi / (density.hi - density.lo)
    if du > nyquist * (1.0 + 1e-12):
        raise AliasingError(
            f"grid spacing {du:g} exceeds pi/(hi-lo) = {nyquist:g}; the density "
            "cannot be resolved at this sampling"
        )
    if us[0] > -u_max + 1e-12 or us[-1] < u_max - 1e-12:
        raise ValueError(f"profile covers [{us[0]:g}, {us[-1]:g}], not +-{u_max:g}")

    inside = np.abs(us) <= u_max * (1.0 + 1e-12)
    uu = us[inside]
    vv = profile.abs_sq()[inside]
    integral = float(np.trapezoid(vv, uu) / (2.0 * math.pi))
    discrepancy = abs(integral - density.l2_sq) / density.l2_sq

    # last-octave decay fit for the omitted tail, |mu|^2 ~ C u^p
    octave = (np.abs(uu) >= u_max / 2.0) & (np.abs(uu) > 0.0)
    lu = np.log(np.abs(uu[octave]))
    lv = np.log(np.maximum(vv[octave], 1e-300))
    p, logc = np.polyfit(lu, lv, 1)
    if p < -1.0:
        tail = math.exp(logc) * u_max ** (p + 1.0) / (-(p + 1.0)) / math.pi
    else:
        tail = math.inf
    return ParsevalReport(
        discrepancy=float(discrepancy),
        fourier_integral=integral,
        l2_sq=density.l2_sq,
        u_max=float(u_max),
        tail_estimate=float(tail),
        tail_exponent=float(p),
        degenerate=density.degenerate,
    )


# ---------------------------------------------------------------------------
# sinc products and the coefficient-average identity
# ---------------------------------------------------------------------------

def _sinc(z: np.ndarray) -> np.ndarray:
    """sin(z)/z with the removable singularity filled by its series."""
    z = np.asarray(z, dtype=np.float64)
    small = np.abs(z) < 1e-8
    safe = np.where(small, 1.0, z)
    out = np.sin(safe) / safe
    return np.where(small, 1.0 - z * z / 6.0, out)


@dataclass(frozen=True)
class SincFactors:
    """Factors sin(u h_n)/(u h_n) for the increment half-widths h_n = a^n dg_n."""

    x: float
    y: float
    u: float
    half_widths: np.ndarray
    factors: np.ndarray
    product: float
    tail_lower_bound: float


def increment_half_widths(spec: FunctionSpec, x: float, y: float, order: int) -> np.ndarray:
    """a^n (g(b_n x + th_n) - g(b_n y + th_n)) for n < order."""
    out = np.empty(order, dtype=np.float64)
    for n in range(order):
        gx = float(spec.g.sample(reduced_arguments(spec, n, np.asarray([x])))[0])
        gy = float(spec.g.sample(reduced_arguments(spec, n, np.asarray([y])))[0])
        out[n] = spec.a ** n * (gx - gy)
    return out


def sinc_product(spec: FunctionSpec, x: float, y: float, u: float, order: int) -> SincFactors:
    """Product over n < order of sin(u h_n)/(u h_n).

    This is the characteristic function at u of sum Z_n for independent
    uniform Z_n on (-h_n, h_n), i.e. of f(x) - f(y) truncated at ``order``
    under the coefficient law.  The omitted tail's product is bounded below
    by 1 - (2 u sup|g| a^order)^2 / (6 (1 - a^2)); the bound is reported and
    is informative when positive.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    hw = increment_half_widths(spec, x, y, order)
    factors = _sinc(u * hw)
    zt = abs(u) * 2.0 * spec.g.sup_abs * spec.a ** order
    tail_lb = 1.0 - zt * zt / (6.0 * (1.0 - spec.a ** 2))
    return SincFactors(x=float(x), y=float(y), u=float(u), half_widths=hw,
                       factors=factors, product=float(np.prod(factors)),
                       tail_lower_bound=float(tail_lb))


@dataclass(frozen=True)
class DrawAverage:
    """Monte Carlo average of exp(i u (f(x) - f(y))) over coefficient draws."""

    mean_real: float
    std_error: float
    mean_imag: float
    n_draws: int


def char_function_mc(spec: FunctionSpec, x: float, y: float, u: float,
                     n_draws: int, seed: int, order: int | None = None) -> DrawAverage:
    """Average cos(u (f(x) - f(y))) over independent coefficient draws.

    The imaginary part averages to zero by the symmetry of the coefficient
    law; it is returned as a diagnostic rather than assumed away (a nonzero
    value beyond noise means an RNG or sign bug).
    """
    if n_draws < 1000:
        raise ValueError(f"need >= 1000 draws, got {n_draws}")
    if order is None:
        order = truncation_order(spec, default_tolerance(spec))
        if spec.freq.max_order is not None:
            order = min(order, spec.freq.max_order)
    hw = increment_half_widths(spec, x, y, order)  # f(x)-f(y) = sum s_n hw_n, s_n ~ U(-1,1)
    cos_sum = 0.0
    cos_sq = 0.0
    sin_sum = 0.0
    done = 0
    chunk_idx = 0
    chunk = 1 << 14
    while done < n_draws:
        k = min(chunk, n_draws - done)
        gen = substream(seed, "char_mc", chunk_idx)
        signs = 2.0 * gen.random((k, order)) - 1.0
        df = signs @ hw
        c = np.cos(u * df)
        cos_sum += float(c.sum())
        cos_sq += float((c * c).sum())
        sin_sum += float(np.sin(u * df).sum())
        done += k
        chunk_idx += 1
    mean = cos_sum / n_draws
    var = max(cos_sq / n_draws - mean * mean, 0.0)
    return DrawAverage(
        mean_real=mean,
        std_error=math.sqrt(var / n_draws),
        mean_imag=sin_sum / n_draws,
        n_draws=n_draws,
    )


# ---------------------------------------------------------------------------
# pointwise product bound on doubly-oscillating pairs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProductBoundReport:
    """Pointwise check of |prod factors| <= 1/(eps^2 u^2 a^(n0+n1)) on pairs."""

    max_ratio: float
    n_checked: int
    n_invalid: int
    passed: bool

    def to_json_dict(self) -> dict:
        return {
            "max_ratio": self.max_ratio,
            "n_checked": self.n_checked,
            "n_invalid": self.n_invalid,
            "passed": self.passed,
        }


def pair_product_bound(spec: FunctionSpec, epsilon: float, u: float, pairs,
                       n0: int, n1: int, order: int | None = None) -> ProductBoundReport:
    """Verify the sinc-product bound on pairs drawn from both oscillation sets.

    ``pairs`` is an iterable of (x, y) with |g(b_i x) - g(b_i y)| >= epsilon
    for i in {n0, n1}; pairs violating that premise are counted as invalid
    and excluded.  An empty pair set passes vacuously.
    """
    if n0 == n1:
        raise ValueError("indices n0 and n1 must differ")
    if order is None:
        order = max(n0, n1) + 1
    if order <= max(n0, n1):
        raise ValueError("order must include both cited factors")
    bound = 1.0 / (epsilon ** 2 * u ** 2 * spec.a ** (n0 + n1))
    max_ratio = 0.0
    n_checked = 0
    n_invalid = 0
    for x, y in pairs:
        hw = increment_half_widths(spec, float(x), float(y), order)
        if abs(hw[n0]) < epsilon * spec.a ** n0 or abs(hw[n1]) < epsilon * spec.a ** n1:
            n_invalid += 1
            continue
        product = float(np.prod(_sinc(u * hw)))
        max_ratio = max(max_ratio, abs(product) / bound)
        n_checked += 1
    return ProductBoundReport(
        max_ratio=max_ratio,
        n_checked=n_checked,
        n_invalid=n_invalid,
        passed=max_ratio <= 1.0 + 1e-12,
    )
