import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wlab import fn_core
from wlab.fn_core import (
    COS,
    COS_PLUS_HALF,
    CoefficientDraw,
    build_spec,
    default_tolerance,
    dimension_formula,
    draw_coefficients,
    evaluate,
    evaluate_many,
    explicit,
    geometric,
    sample_graph,
    truncation_order,
    zero_draw,
)

import oracles


# ---------------------------------------------------------------------------
# base functions
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("g", [COS, COS_PLUS_HALF], ids=["cos", "cos2"])
class TestBaseFunction:
    def test_periodicity(self, g):
        xs = np.linspace(-3.0, 3.0, 10_001)
        a = g(xs)
        b = g(xs + g.period)
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12)

    def test_lipschitz_on_grid(self, g):
        xs = np.linspace(0.0, 1.0, 10_000)
        vals = g(xs)
        diffs = np.abs(np.diff(vals))
        steps = np.diff(xs)
        assert np.all(diffs <= g.lipschitz * steps + 1e-12)

    def test_sup_bound_on_grid(self, g):
        xs = np.linspace(0.0, 1.0, 10_000)
        assert np.all(np.abs(g(xs)) <= g.sup_abs + 1e-12)


def test_cos2_lipschitz_is_the_true_supremum():
    # sup|g'| for cos(2 pi x) + 0.5 cos(4 pi x) is ~11.09, well above 2 pi
    assert COS_PLUS_HALF.lipschitz > 11.0
    assert COS.lipschitz == pytest.approx(2 * math.pi, rel=1e-5)


def test_unknown_base_function_rejected():
    with pytest.raises(ValueError):
        fn_core.base_function("tanh")


# ---------------------------------------------------------------------------
# build_spec
# ---------------------------------------------------------------------------

def test_build_spec_flags_figure_parameters():
    spec = build_spec(0.8, geometric(2.0))
    assert spec.ab_gt1 and spec.a2b_gt1 and spec.b_integer_theta_zero


def test_build_spec_boundary_warns():
    with pytest.warns(UserWarning, match="hypotheses fail"):
        spec = build_spec(0.5, geometric(2.0))
    assert not spec.ab_gt1
    assert not spec.a2b_gt1  # a^2 b = 0.5


def test_build_spec_rejects_bad_amplitude():
    with pytest.raises(ValueError):
        build_spec(1.2, geometric(2.0))
    with pytest.raises(ValueError):
        build_spec(0.0, geometric(2.0))


def test_explicit_frequencies_validated():
    with pytest.raises(ValueError, match="start at 1"):
        explicit([2.0, 4.0], 2.0)
    with pytest.raises(ValueError, match="below bound"):
        explicit([1.0, 2.0, 3.0], 2.0)
    freq = explicit([1.0, 2.0, 4.5, 9.0], 2.0)
    assert freq.max_order == 4


def test_flags_not_user_settable():
    spec = fn_core.FunctionSpec(a=0.9, freq=geometric(1.5))
    # a*b = 1.35 > 1 but a^2 b = 1.215 > 1; both recomputed in __post_init__
    assert spec.ab_gt1 and spec.a2b_gt1
    assert not fn_core.FunctionSpec(a=0.5, freq=geometric(1.5)).ab_gt1


def test_nonzero_phases_clear_integer_flag():
    spec = build_spec(0.8, geometric(2.0), phases=(0.0, 0.3))
    assert not spec.b_integer_theta_zero


# ---------------------------------------------------------------------------
# coefficient draws
# ---------------------------------------------------------------------------

def test_draw_support_bound():
    spec = build_spec(0.5, geometric(4.0))
    draw = draw_coefficients(spec, 99, 5)
    assert all(abs(v) <= 0.5 ** n for n, v in enumerate(draw.values))


def test_draw_deterministic_and_prefix_stable():
    spec = build_spec(0.8, geometric(2.0))
    d1 = draw_coefficients(spec, 7, 9)
    d2 = draw_coefficients(spec, 7, 9)
    d3 = draw_coefficients(spec, 7, 4)
    assert d1.values == d2.values
    assert d1.values[:4] == d3.values


def test_draw_frozen_regression_values():
    # frozen from the Philox substream contract; any change breaks reproducibility
    spec = build_spec(0.8, geometric(2.0))
    draw = draw_coefficients(spec, 12345, 4)
    assert draw.values == (
        -0.6732821195579097,
        0.23870344418549794,
        -0.22434660940378084,
        -0.24610469902459847,
    )


def test_draw_rejects_zero_order():
    spec = build_spec(0.8, geometric(2.0))
    with pytest.raises(ValueError):
        draw_coefficients(spec, 1, 0)


def test_first_coefficient_mean_near_zero():
    # values[0] = 2u - 1 has mean 0 and sd 1/sqrt(3); CLT band over fixed seeds
    spec = build_spec(0.8, geometric(2.0))
    n = 10 ** 5
    total = sum(draw_coefficients(spec, seed, 1).values[0] for seed in range(n))
    band = 3.0 * (1.0 / math.sqrt(3.0)) / math.sqrt(n)
    assert abs(total / n) <= band


@given(seed=st.integers(min_value=0, max_value=2 ** 60),
       order=st.integers(min_value=1, max_value=12),
       a=st.floats(min_value=0.1, max_value=0.95))
@settings(max_examples=40, deadline=None)
def test_draw_support_property(seed, order, a):
    spec = fn_core.FunctionSpec(a=a, freq=geometric(3.0))
    draw = draw_coefficients(spec, seed, order)
    assert all(abs(v) <= a ** n for n, v in enumerate(draw.values))


# ---------------------------------------------------------------------------
# truncation
# ---------------------------------------------------------------------------

def _smallest_order(a, sup_abs, tol):
    # direct while-loop oracle on the tail bound 2 M a^K / (1 - a)
    k = 0
    while 2.0 * sup_abs * a ** k / (1.0 - a) > tol:
        k += 1
    return k


def test_truncation_order_examples():
    spec5 = fn_core.FunctionSpec(a=0.5, freq=geometric(4.0))
    assert truncation_order(spec5, 1e-6) == _smallest_order(0.5, 1.0, 1e-6) == 22
    spec8 = fn_core.FunctionSpec(a=0.8, freq=geometric(2.0))
    assert truncation_order(spec8, 1e-6) == _smallest_order(0.8, 1.0, 1e-6) == 73


def test_truncation_order_whole_series_below_tol():
    spec = fn_core.FunctionSpec(a=0.5, freq=geometric(4.0))
    assert truncation_order(spec, 2.0 * 1.0 / 0.5) == 0
    assert truncation_order(spec, 100.0) == 0


def test_truncation_order_rejects_nonpositive_tol():
    spec = fn_core.FunctionSpec(a=0.5, freq=geometric(4.0))
    with pytest.raises(ValueError):
        truncation_order(spec, 0.0)


@given(o1=st.integers(min_value=0, max_value=30),
       o2=st.integers(min_value=0, max_value=30),
       seed=st.integers(min_value=0, max_value=10 ** 6),
       x=st.floats(min_value=0.0, max_value=1.0))
@settings(max_examples=40, deadline=None)
def test_truncation_soundness(o1, o2, seed, x):
    spec = fn_core.FunctionSpec(a=0.7, freq=geometric(2.0))
    draw = draw_coefficients(spec, seed, 31)
    lo = min(o1, o2)
    gap = abs(evaluate(spec, draw, x, o1) - evaluate(spec, draw, x, o2))
    assert gap <= 2.0 * spec.g.sup_abs * spec.a ** lo / (1.0 - spec.a) + 1e-12


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def test_zero_draw_evaluates_to_zero():
    spec = build_spec(0.8, geometric(2.0))
    xs = np.linspace(0, 1, 17)
    assert np.all(evaluate_many(spec, zero_draw(5), xs, 5) == 0.0)


def test_cosine_at_origin_sums_coefficients():
    spec = build_spec(0.8, geometric(2.0))
    draw = draw_coefficients(spec, 3, 12)
    assert evaluate(spec, draw, 0.0, 12) == pytest.approx(sum(draw.values), abs=1e-14)


def test_order_beyond_draw_rejected():
    spec = build_spec(0.8, geometric(2.0))
    draw = draw_coefficients(spec, 3, 4)
    with pytest.raises(ValueError):
        evaluate(spec, draw, 0.5, 5)


def test_high_precision_oracle_agreement_integer_b():
    spec = build_spec(0.8, geometric(2.0))
    draw = draw_coefficients(spec, 42, 100)
    for x in [0.3, 0.123456789, 1e-13, 0.9999999999, 0.5]:
        ours = evaluate(spec, draw, x, 100)
        ref = oracles.mp_eval_series(spec, draw.values, x, 100)
        assert ours == pytest.approx(ref, abs=1e-10)


def test_high_precision_oracle_agreement_rational_b():
    spec = build_spec(0.6, geometric(2.5))
    draw = draw_coefficients(spec, 5, 40)
    for x in [0.3, 0.77]:
        ours = evaluate(spec, draw, x, 40)
        ref = oracles.mp_eval_series(spec, draw.values, x, 40)
        assert ours == pytest.approx(ref, abs=1e-10)


def test_high_precision_oracle_agreement_explicit_with_phases():
    spec = build_spec(0.6, explicit([1, 3, 7.5, 20, 60], 2.0),
                      phases=(0.1, 0.7, 0.3, 0.9, 0.2))
    draw = draw_coefficients(spec, 9, 5)
    for x in [0.25, 0.8]:
        ours = evaluate(spec, draw, x, 5)
        ref = oracles.mp_eval_series(spec, draw.values, x, 5)
        assert ours == pytest.approx(ref, abs=1e-12)


def test_periodicity_bit_stable_for_integer_b():
    # x chosen dyadic so x + 1 is exact in floating point
    spec = build_spec(0.8, geometric(2.0))
    draw = draw_coefficients(spec, 11, 60)
    for k in [1, 5, 999_999]:
        x = k / 2.0 ** 20
        assert evaluate(spec, draw, x, 60) == evaluate(spec, draw, x + 1.0, 60)


@given(seed=st.integers(min_value=0, max_value=10 ** 6),
       order=st.integers(min_value=1, max_value=40),
       x=st.floats(min_value=0.0, max_value=1.0))
@settings(max_examples=40, deadline=None)
def test_boundedness_property(seed, order, x):
    spec = fn_core.FunctionSpec(a=0.8, freq=geometric(2.0))
    draw = draw_coefficients(spec, seed, order)
    bound = spec.g.sup_abs * (1.0 - spec.a ** order) / (1.0 - spec.a)
    assert abs(evaluate(spec, draw, x, order)) <= bound + 1e-12


# ---------------------------------------------------------------------------
# graph sampling
# ---------------------------------------------------------------------------

def test_sample_graph_endpoints():
    spec = build_spec(0.8, geometric(2.0))
    draw = draw_coefficients(spec, 1, 96)
    s = sample_graph(spec, draw, 2)
    assert s.xs.tolist() == [0.0, 1.0]


def test_sample_graph_zero_draw():
    spec = build_spec(0.8, geometric(2.0))
    s = sample_graph(spec, zero_draw(200), 8, tol=1e-9)
    assert np.all(s.ys == 0.0)


def test_sample_graph_periodic_closure():
    # integer b, zero phases: every term has period 1, endpoints match exactly
    spec = build_spec(0.8, geometric(2.0))
    draw = draw_coefficients(spec, 7, 120)
    s = sample_graph(spec, draw, 257)
    assert s.ys[0] == s.ys[-1]
    assert abs(s.ys[0]) <= spec.g.sup_abs / (1 - spec.a) + s.tail_bound


def test_sample_graph_y_bound():
    spec = build_spec(0.8, geometric(2.0))
    draw = draw_coefficients(spec, 5, 120)
    s = sample_graph(spec, draw, 4097)
    assert np.all(np.abs(s.ys) <= spec.g.sup_abs / (1 - spec.a) + s.tail_bound)


def test_sample_graph_needs_two_points_and_enough_coefficients():
    spec = build_spec(0.8, geometric(2.0))
    with pytest.raises(ValueError):
        sample_graph(spec, zero_draw(), 1)
    with pytest.raises(ValueError, match="coefficients"):
        sample_graph(spec, draw_coefficients(spec, 1, 3), 16)


def test_sample_graph_csv_round_trip(tmp_path):
    spec = build_spec(0.8, geometric(2.0))
    draw = draw_coefficients(spec, 7, 96)
    s = sample_graph(spec, draw, 64)
    path = tmp_path / "sample.csv"
    s.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,y"
    assert len(lines) == 65
    xs, ys = zip(*(map(float, line.split(",")) for line in lines[1:]))
    assert np.array_equal(np.asarray(xs), s.xs)
    assert np.array_equal(np.asarray(ys), s.ys)


def test_sample_graph_json_metadata():
    spec = build_spec(0.8, geometric(2.0))
    draw = draw_coefficients(spec, 7, 96)
    s = sample_graph(spec, draw, 16)
    d = s.to_json_dict(spec=spec, seed=7)
    assert d["seed"] == 7
    assert d["spec"]["freq_mode"] == "geometric"
    assert d["truncation_order"] == s.truncation_order
    assert len(d["xs"]) == 16


# ---------------------------------------------------------------------------
# dimension formula
# ---------------------------------------------------------------------------

def test_dimension_formula_exact_case():
    spec = fn_core.FunctionSpec(a=0.5, freq=geometric(4.0))
    assert dimension_formula(spec) == pytest.approx(1.5, abs=1e-12)


def test_dimension_formula_derived_values():
    import mpmath as mp
    with mp.workdps(40):
        d82 = float(2 + mp.log(mp.mpf("0.8")) / mp.log(2))
        d53 = float(2 + mp.log(mp.mpf("0.5")) / mp.log(3))
    spec = build_spec(0.8, geometric(2.0))
    assert dimension_formula(spec) == pytest.approx(d82, abs=1e-12)
    assert d82 == pytest.approx(1.6781, abs=1e-4)
    spec2 = build_spec(0.5, geometric(3.0))
    assert dimension_formula(spec2) == pytest.approx(d53, abs=1e-12)
    assert d53 == pytest.approx(1.3691, abs=1e-4)


def test_dimension_formula_warns_outside_hypotheses():
    with pytest.warns(UserWarning):
        spec = build_spec(0.4, geometric(2.0))
    with pytest.warns(UserWarning, match="outside its hypotheses"):
        dimension_formula(spec)


def test_default_tolerance_scale():
    spec = build_spec(0.8, geometric(2.0))
    assert default_tolerance(spec) == pytest.approx(5e-9)
