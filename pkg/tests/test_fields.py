import math

import numpy as np
import pytest

from pwshift.fields import (
    HigherOrderTangencyError,
    SlidingRegionError,
    SmoothField,
    SwitchingFunction,
    PiecewiseField,
    canonical_field,
    classify_boundary_point,
    divergence,
    eval_field,
    lie_derivative,
    numeric_jacobian,
)

FIELD = canonical_field()


def test_eval_on_upper_half_plane():
    (v,) = eval_field(FIELD, (0.25, 1.0))
    assert np.allclose(v, [1.0, 2.0])


def test_eval_on_lower_half_plane():
    (v,) = eval_field(FIELD, (0.25, -1.0))
    assert np.allclose(v, [-1.0, 2.0])


def test_eval_multivalued_on_manifold():
    vals = eval_field(FIELD, (0.25, 0.0))
    assert len(vals) == 2
    assert np.allclose(vals[0], [1.0, 2.0])
    assert np.allclose(vals[1], [-1.0, 2.0])


def test_eval_rejects_non_finite():
    with pytest.raises(ValueError):
        eval_field(FIELD, (float("nan"), 0.0))


def test_first_lie_derivative_quarter():
    assert lie_derivative(FIELD.plus, FIELD.switching, (0.25, 0.0)) == pytest.approx(2.0)


def test_first_lie_derivative_half():
    assert lie_derivative(FIELD.plus, FIELD.switching, (0.5, 0.0)) == pytest.approx(0.0, abs=1e-12)


def test_second_lie_derivative_at_origin_against_flow_differencing():
    # oracle: difference the first Lie derivative along the flow direction
    p = (0.0, 0.0)
    analytic = lie_derivative(FIELD.plus, FIELD.switching, p, order=2)
    vx, vy = FIELD.plus.velocity(*p)
    h = 1e-6
    fwd = lie_derivative(FIELD.plus, FIELD.switching, (p[0] + h * vx, p[1] + h * vy))
    bwd = lie_derivative(FIELD.plus, FIELD.switching, (p[0] - h * vx, p[1] - h * vy))
    oracle = (fwd - bwd) / (2 * h)
    assert analytic == pytest.approx(4 * math.pi, rel=1e-12)
    assert analytic == pytest.approx(oracle, rel=1e-6)


def test_lie_derivative_rejects_bad_order():
    with pytest.raises(ValueError):
        lie_derivative(FIELD.plus, FIELD.switching, (0.0, 0.0), order=3)


def test_classification_at_integers_and_half_integers():
    for j in range(-8, 9):
        cls = classify_boundary_point(FIELD, (float(j), 0.0))
        assert cls.kind == "two_fold" and cls.fold_kind == "visible_visible"
        cls = classify_boundary_point(FIELD, (j + 0.5, 0.0))
        assert cls.kind == "two_fold" and cls.fold_kind == "invisible_invisible"


def test_crossing_classification_at_sample_point():
    assert classify_boundary_point(FIELD, (0.1, 0.0)).kind == "crossing_plus"


def test_crossing_matches_sign_product_rule():
    rng = np.random.default_rng(11)
    xs = rng.uniform(-10, 10, size=1000)
    for x in xs:
        lp = lie_derivative(FIELD.plus, FIELD.switching, (x, 0.0))
        lm = lie_derivative(FIELD.minus, FIELD.switching, (x, 0.0))
        if abs(lp) <= 1e-6 or abs(lm) <= 1e-6:
            continue  # too close to a tangency for a sign decision
        cls = classify_boundary_point(FIELD, (float(x), 0.0))
        assert cls.is_crossing == (lp * lm > 0)
        assert cls.kind == ("crossing_plus" if lp > 0 else "crossing_minus")


def test_classify_requires_point_on_manifold():
    with pytest.raises(ValueError):
        classify_boundary_point(FIELD, (0.3, 0.5))


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(7)
    pts = rng.uniform(-5, 5, size=(1000, 2))
    for x, y in pts:
        (a00, a01), (a10, a11) = FIELD.plus.jacobian(x, y)
        (n00, n01), (n10, n11) = numeric_jacobian(FIELD.plus, (x, y))
        scale = max(1.0, abs(a10))
        assert abs(a00 - n00) <= 1e-6 * scale
        assert abs(a01 - n01) <= 1e-6 * scale
        assert abs(a10 - n10) <= 1e-6 * scale
        assert abs(a11 - n11) <= 1e-6 * scale


def test_divergence_free():
    rng = np.random.default_rng(13)
    for x, y in rng.uniform(-20, 20, size=(1000, 2)):
        assert abs(divergence(FIELD.plus, (x, y))) <= 1e-9
        assert abs(divergence(FIELD.minus, (x, y))) <= 1e-9


def _linear_field(vx, vy, jac=((0.0, 0.0), (0.0, 0.0))):
    return SmoothField(velocity=lambda x, y: (vx, vy), jacobian=lambda x, y: jac)


def _y_switching():
    return SwitchingFunction(value=lambda x, y: y,
                             gradient=lambda x, y: (0.0, 1.0))


def test_sliding_region_is_refused():
    field = PiecewiseField(plus=_linear_field(1.0, -1.0),
                           minus=_linear_field(-1.0, 1.0),
                           switching=_y_switching())
    with pytest.raises(SlidingRegionError):
        classify_boundary_point(field, (0.0, 0.0))


def test_higher_order_tangency_is_an_error_not_a_guess():
    # vertical velocity 3x^2 has first and second Lie derivative zero at x=0
    cubic = SmoothField(velocity=lambda x, y: (1.0, 3.0 * x * x),
                        jacobian=lambda x, y: ((0.0, 0.0), (6.0 * x, 0.0)))
    down = _linear_field(1.0, -1.0)
    field = PiecewiseField(plus=cubic, minus=down, switching=_y_switching())
    with pytest.raises(HigherOrderTangencyError):
        classify_boundary_point(field, (0.0, 0.0))


def test_boundary_equilibrium():
    zero_at_origin = SmoothField(velocity=lambda x, y: (x, y),
                                 jacobian=lambda x, y: ((1.0, 0.0), (0.0, 1.0)))
    field = PiecewiseField(plus=zero_at_origin, minus=_linear_field(-1.0, 1.0),
                           switching=_y_switching())
    assert classify_boundary_point(field, (0.0, 0.0)).kind == "boundary_equilibrium"


def test_one_sided_tangency_visibility():
    # plus field tangent with positive curvature (visible), minus crossing upward
    parabola = SmoothField(velocity=lambda x, y: (1.0, 2.0 * x),
                           jacobian=lambda x, y: ((0.0, 0.0), (2.0, 0.0)))
    field = PiecewiseField(plus=parabola, minus=_linear_field(-1.0, 1.0),
                           switching=_y_switching())
    cls = classify_boundary_point(field, (0.0, 0.0))
    assert cls.kind == "tangency" and cls.side == "plus" and cls.visible is True


def test_canonical_field_velocity_at_unit_height():
    (v,) = eval_field(FIELD, (0.0, 1.0))
    assert np.allclose(v, [1.0, 0.0])
