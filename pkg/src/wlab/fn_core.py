"""Random high-frequency trigonometric series: specs, coefficient draws, evaluation.

The object of study is f(x) = sum_n c_n g(b_n x + theta_n) with |c_n| <= a^n
drawn uniformly, frequencies growing at least geometrically, and g a smooth
periodic base function.  Everything here is a pure function of (spec, seed,
inputs); frequency arguments are reduced modulo the period with exact integer
or rational arithmetic before g is evaluated, because b_n grows geometrically
and a naive product has no correct bits left past n ~ 50.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .rng import substream

TWO_PI = 2.0 * math.pi

# Dense grid used to certify sup|g'| and related constants at import time.
_CONSTANT_GRID = (1 << 18) + 1


# ---------------------------------------------------------------------------
# base functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BaseFunction:
    """Periodic carrier of every series term, with certified constants.

    ``lipschitz`` and ``sup_abs`` are bounds valid on the whole line:
    |g(x) - g(y)| <= lipschitz * |x - y| and |g(x)| <= sup_abs.
    """

    kind: str
    period: float
    lipschitz: float
    sup_abs: float

    def sample(self, t):
        """Evaluate g at reduced arguments t in [0, period]."""
        t = np.asarray(t, dtype=np.float64)
        if self.kind == "cos":
            return np.cos(TWO_PI * t)
        if self.kind == "cos2":
            return np.cos(TWO_PI * t) + 0.5 * np.cos(2.0 * TWO_PI * t)
        raise ValueError(f"unknown base function kind {self.kind!r}")

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        return self.sample(np.mod(x, self.period))


def _certified_sup(values: np.ndarray) -> float:
    # Grid max padded upward so the stored constant is a usable bound.
    return float(np.max(np.abs(values))) * (1.0 + 1e-6)


def _build_base_function(kind: str) -> BaseFunction:
    xs = np.linspace(0.0, 1.0, _CONSTANT_GRID)
    if kind == "cos":
        deriv = -TWO_PI * np.sin(TWO_PI * xs)
        sup_abs = 1.0
    elif kind == "cos2":
        deriv = -TWO_PI * np.sin(TWO_PI * xs) - TWO_PI * np.sin(2.0 * TWO_PI * xs)
        sup_abs = 1.5
    else:
        raise ValueError(f"unknown base function kind {kind!r}")
    return BaseFunction(kind=kind, period=1.0, lipschitz=_certified_sup(deriv), sup_abs=sup_abs)


COS = _build_base_function("cos")
COS_PLUS_HALF = _build_base_function("cos2")
BUILTIN_BASE_FUNCTIONS = {"cos": COS, "cos2": COS_PLUS_HALF}


def base_function(name: str) -> BaseFunction:
    try:
        return BUILTIN_BASE_FUNCTIONS[name]
    except KeyError:
        raise ValueError(
            f"unknown base function {name!r}; available: {sorted(BUILTIN_BASE_FUNCTIONS)}"
        ) from None


# ---------------------------------------------------------------------------
# frequency sequences
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _rational_power(b: float, n: int) -> Fraction:
    return Fraction(b) ** n


@dataclass(frozen=True)
class GeometricFrequencies:
    """b_n = b^n for a fixed ratio b > 1."""

    b: float

    def __post_init__(self):
        if not self.b > 1.0:
            raise ValueError(f"frequency ratio must exceed 1, got {self.b}")

    @property
    def is_integer(self) -> bool:
        return float(self.b).is_integer()

    @property
    def max_order(self):
        return None

    def value(self, n: int):
        """Exact b_n (int for integer b, Fraction otherwise)."""
        if self.is_integer:
            return int(self.b) ** n
        return _rational_power(self.b, n)

    def value_float(self, n: int) -> float:
        return float(self.b) ** n


@dataclass(frozen=True)
class ExplicitFrequencies:
    """User-supplied b_0 = 1 < b_1 < ... with consecutive ratios >= b > 1."""

    b_seq: tuple
    b: float

    def __post_init__(self):
        seq = tuple(float(v) for v in self.b_seq)
        object.__setattr__(self, "b_seq", seq)
        if not self.b > 1.0:
            raise ValueError(f"ratio lower bound must exceed 1, got {self.b}")
        if not seq:
            raise ValueError("b_seq must be nonempty")
        if seq[0] != 1.0:
            raise ValueError(f"b_seq must start at 1, got {seq[0]}")
        for n in range(len(seq) - 1):
            if not seq[n + 1] >= self.b * seq[n]:
                raise ValueError(
                    f"b_seq ratio {seq[n + 1]}/{seq[n]} at index {n} below bound {self.b}"
                )

    @property
    def is_integer(self) -> bool:
        return all(v.is_integer() for v in self.b_seq)

    @property
    def max_order(self) -> int:
        return len(self.b_seq)

    def value(self, n: int):
        v = self.b_seq[n]
        return int(v) if v.is_integer() else Fraction(v)

    def value_float(self, n: int) -> float:
        return self.b_seq[n]


def geometric(b: float) -> GeometricFrequencies:
    return GeometricFrequencies(b=float(b))


def explicit(b_seq, b: float) -> ExplicitFrequencies:
    return ExplicitFrequencies(b_seq=tuple(b_seq), b=float(b))


# ---------------------------------------------------------------------------
# function specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FunctionSpec:
    """Deterministic skeleton of the random series (law of the coefficients excluded).

    Flags are recomputed from (a, frequencies, phases) on construction and are
    never user-settable.
    """

    a: float
    freq: GeometricFrequencies | ExplicitFrequencies
    phases: tuple = ()
    g: BaseFunction = COS
    ab_gt1: bool = field(init=False, default=False)
    a2b_gt1: bool = field(init=False, default=False)
    b_integer_theta_zero: bool = field(init=False, default=False)

    def __post_init__(self):
        if not 0.0 < self.a < 1.0:
            raise ValueError(f"amplitude base a must lie in (0, 1), got {self.a}")
        object.__setattr__(self, "phases", tuple(float(t) for t in self.phases))
        b = self.freq.b
        theta_zero = all(t == 0.0 for t in self.phases)
        object.__setattr__(self, "ab_gt1", self.a * b > 1.0)
        object.__setattr__(self, "a2b_gt1", self.a * self.a * b > 1.0)
        object.__setattr__(
            self,
            "b_integer_theta_zero",
            isinstance(self.freq, GeometricFrequencies) and self.freq.is_integer and theta_zero,
        )

    def phase(self, n: int) -> float:
        return self.phases[n] if n < len(self.phases) else 0.0

    def to_dict(self) -> dict:
        d = {
            "a": self.a,
            "g": self.g.kind,
            "phases": list(self.phases),
            "ab_gt1": self.ab_gt1,
            "a2b_gt1": self.a2b_gt1,
            "b_integer_theta_zero": self.b_integer_theta_zero,
        }
        if isinstance(self.freq, GeometricFrequencies):
            d["freq_mode"] = "geometric"
            d["b"] = self.freq.b
        else:
            d["freq_mode"] = "explicit"
            d["b"] = self.freq.b
            d["b_seq"] = list(self.freq.b_seq)
        return d


def build_spec(a: float, freq, phases=(), g: BaseFunction = COS) -> FunctionSpec:
    """Validate parameters and compute the hypothesis flags.

    a*b <= 1 is allowed (evaluation is still defined) but warned about, since
    the dimension and occupation statements need a*b > 1.
    """
    spec = FunctionSpec(a=float(a), freq=freq, phases=tuple(phases), g=g)
    if not spec.ab_gt1:
        warnings.warn(
            f"a*b = {spec.a * spec.freq.b:g} <= 1: evaluation is defined but the "
            "dimension/occupation hypotheses fail",
            UserWarning,
            stacklevel=2,
        )
    return spec


# ---------------------------------------------------------------------------
# coefficient draws
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoefficientDraw:
    """One realization of the random amplitudes, |values[n]| <= a^n.

    Coefficient n comes from its own (seed, n)-keyed stream, so any prefix is
    reproducible no matter how many terms were requested.
    """

    seed: int
    values: tuple
    order: int

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) != self.order:
            raise ValueError("order must equal len(values)")

    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


def draw_coefficients(spec: FunctionSpec, seed: int, order: int) -> CoefficientDraw:
    """Draw values[n] = a^n (2u_n - 1) with u_n from the (seed, n) substream."""
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    values = [
        (spec.a ** n) * (2.0 * substream(seed, "coeff", n).random() - 1.0)
        for n in range(order)
    ]
    return CoefficientDraw(seed=int(seed), values=tuple(values), order=order)


def zero_draw(order: int = 1) -> CoefficientDraw:
    """All-zero coefficients (f identically zero); handy as a null model."""
    return CoefficientDraw(seed=0, values=(0.0,) * order, order=order)


# ---------------------------------------------------------------------------
# truncation control
# ---------------------------------------------------------------------------

def truncation_order(spec: FunctionSpec, tol: float) -> int:
    """Number of terms K after which the worst-case tail is below tol.

    Keeping terms 0..K-1 leaves a tail bounded (over all draws, all x, and
    differences f(x) - f(y)) by 2 * sup|g| * a^K / (1 - a); the returned K is
    the smallest with that bound <= tol.
    """
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    worst = 2.0 * spec.g.sup_abs / (1.0 - spec.a)
    k = 0
    bound = worst
    while bound > tol:
        k += 1
        bound = worst * spec.a ** k
    return k


def default_tolerance(spec: FunctionSpec) -> float:
    # Far below any plotting or box resolution used here.
    return 1e-9 * spec.g.sup_abs / (1.0 - spec.a)


def tail_bound(spec: FunctionSpec, order: int) -> float:
    """Guaranteed |f - f_truncated| bound after keeping ``order`` terms."""
    return spec.g.sup_abs * spec.a ** order / (1.0 - spec.a)


# ---------------------------------------------------------------------------
# exact argument reduction
# ---------------------------------------------------------------------------

_MASK63 = np.uint64((1 << 63) - 1)
_MOD63 = 1 << 63
_INV63 = 2.0 ** -63
_TWO53 = 9007199254740992.0  # 2^53


def _scaled_bits(r: np.ndarray):
    """Represent r in [0, 1) as the integer r * 2^63 where that is exact.

    Exact whenever r == 0 or r >= 2^-11 (the float's lowest set bit is then at
    2^-63 or above); the returned mask flags the stragglers.
    """
    mant, exp = np.frexp(r)
    m53 = (mant * _TWO53).astype(np.uint64)  # mant * 2^53 is an exact integer
    shift = exp + 10
    ok = shift >= 0
    bits = m53 << np.clip(shift, 0, 10).astype(np.uint64)
    return bits, ok


def _reduce_rational_scalar(bn, x: float, theta: float, period: float) -> float:
    """(bn*x + theta) mod period with exact rational arithmetic, then one rounding."""
    t = (Fraction(bn) * Fraction(x) + Fraction(theta)) % Fraction(period)
    out = float(t)
    if out >= period:  # the single final rounding can land on the boundary
        out -= period
    return out


def reduced_arguments(spec: FunctionSpec, n: int, xs, theta: float | None = None) -> np.ndarray:
    """((b_n x + theta_n) mod period) for an array of x, reduced exactly.

    Integer frequencies with unit period take a vectorized fixed-point path
    (wrapping 64-bit products); everything else goes through Fractions.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    theta = spec.phase(n) if theta is None else float(theta)
    period = spec.g.period
    bn = spec.freq.value(n)

    if period == 1.0 and isinstance(bn, int):
        r = xs - np.floor(xs)
        bits, ok = _scaled_bits(r)
        bmod = np.uint64(bn % _MOD63)
        frac = ((bmod * bits) & _MASK63).astype(np.float64) * _INV63
        if not ok.all():
            for i in np.nonzero(~ok)[0]:
                frac[i] = _reduce_rational_scalar(bn, float(r[i]), 0.0, 1.0)
        if theta != 0.0:
            frac = frac + (theta - math.floor(theta))
            frac -= np.floor(frac)
        return frac

    out = np.empty_like(xs)
    for i, x in enumerate(xs.ravel()):
        out.ravel()[i] = _reduce_rational_scalar(bn, float(x), theta, period)
    return out


# ---------------------------------------------------------------------------
# evaluation and sampling
# ---------------------------------------------------------------------------

def evaluate_many(spec: FunctionSpec, draw: CoefficientDraw, xs, order: int) -> np.ndarray:
    """Partial sum over n < order of values[n] * g(b_n x + theta_n) at each x."""
    if order > draw.order:
        raise ValueError(f"order {order} exceeds draw.order {draw.order}")
    max_order = spec.freq.max_order
    if max_order is not None and order > max_order:
        raise ValueError(f"order {order} exceeds the {max_order} explicit frequencies")
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    acc = np.zeros_like(xs)
    for n in range(order):
        c = draw.values[n]
        if c == 0.0:
            continue
        acc += c * spec.g.sample(reduced_arguments(spec, n, xs))
    return acc


def evaluate(spec: FunctionSpec, draw: CoefficientDraw, x: float, order: int) -> float:
    return float(evaluate_many(spec, draw, np.asarray([x]), order)[0])


@dataclass(frozen=True)
class GraphSample:
    """Dense sampling of (x, f(x)) on [0, 1] with truncation metadata."""

    xs: np.ndarray
    ys: np.ndarray
    truncation_order: int
    tail_bound: float

    def __post_init__(self):
        object.__setattr__(self, "xs", np.asarray(self.xs, dtype=np.float64))
        object.__setattr__(self, "ys", np.asarray(self.ys, dtype=np.float64))
        if self.xs.shape != self.ys.shape:
            raise ValueError("xs and ys must have equal length")
        if len(self.xs) >= 2 and not np.all(np.diff(self.xs) > 0):
            raise ValueError("xs must be strictly increasing")

    def __len__(self) -> int:
        return len(self.xs)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write("x,y\n")
            for x, y in zip(self.xs, self.ys):
                fh.write(f"{float(x)!r},{float(y)!r}\n")

    def to_json_dict(self, spec: FunctionSpec | None = None, seed: int | None = None) -> dict:
        d = {
            "truncation_order": self.truncation_order,
            "tail_bound": self.tail_bound,
            "points": len(self.xs),
            "xs": self.xs.tolist(),
            "ys": self.ys.tolist(),
        }
        if spec is not None:
            d["spec"] = spec.to_dict()
        if seed is not None:
            d["seed"] = seed
        return d


def sample_graph(spec: FunctionSpec, draw: CoefficientDraw, m: int,
                 tol: float | None = None) -> GraphSample:
    """Sample f on the uniform m-point grid over [0, 1]."""
    if m < 2:
        raise ValueError(f"need at least 2 sample points, got {m}")
    tol = default_tolerance(spec) if tol is None else tol
    order = truncation_order(spec, tol)
    max_order = spec.freq.max_order
    if max_order is not None:
        order = min(order, max_order)
    if order > draw.order:
        raise ValueError(
            f"draw has {draw.order} coefficients but tolerance {tol:g} needs {order}"
        )
    xs = np.linspace(0.0, 1.0, m)
    ys = evaluate_many(spec, draw, xs, order)
    return GraphSample(xs=xs, ys=ys, truncation_order=order,
                       tail_bound=tail_bound(spec, order))


def dimension_formula(spec: FunctionSpec) -> float:
    """Predicted graph dimension 2 + log a / log b (meaningful when a*b > 1)."""
    if not spec.ab_gt1:
        warnings.warn(
            "a*b <= 1: the dimension formula is outside its hypotheses",
            UserWarning,
            stacklevel=2,
        )
    return 2.0 + math.log(spec.a) / math.log(spec.freq.b)
