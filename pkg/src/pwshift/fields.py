"""Planar piecewise smooth vector fields.

A piecewise field is a pair of smooth half-plane fields glued along the zero
set of a switching function (canonically f(x, y) = y).  The field is
multivalued on the switching manifold, and points of the manifold are
classified from the sign pattern of the first and second Lie derivatives of f
along each side: transversal crossings, one-sided tangencies (visible or
invisible), double tangencies (two-folds) and boundary equilibria.

All field callables take (x, y) and broadcast over numpy arrays, so the same
definitions serve scalar classification and batched integration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "ON_MANIFOLD_TOL",
    "LIE_SIGN_TOL",
    "SlidingRegionError",
    "HigherOrderTangencyError",
    "SmoothField",
    "SwitchingFunction",
    "PiecewiseField",
    "BoundaryClassification",
    "eval_field",
    "lie_derivative",
    "divergence",
    "classify_boundary_point",
    "canonical_field",
    "numeric_jacobian",
]

# A point counts as lying on the switching manifold when |f| <= this; the
# canonical f is exactly y, so real zeros dominate and the tolerance only
# absorbs float noise.
ON_MANIFOLD_TOL = 1e-9

# Lie derivatives below this magnitude are treated as vanishing.
LIE_SIGN_TOL = 1e-9


class SlidingRegionError(ValueError):
    """Both first Lie derivatives are nonzero with opposite signs.

    Sliding dynamics are outside the supported model; classification refuses
    rather than guessing.
    """


class HigherOrderTangencyError(ValueError):
    """First and second Lie derivatives both vanish on one side.

    The classification taxonomy stops at order two, so such points are
    reported as errors, never silently classified.
    """


@dataclass(frozen=True)
class SmoothField:
    """Smooth planar vector field with an analytic Jacobian.

    ``velocity(x, y) -> (vx, vy)`` and
    ``jacobian(x, y) -> ((dvx_dx, dvx_dy), (dvy_dx, dvy_dy))``.

    The Jacobian is analytic (not differenced) because second Lie derivatives
    enter sign decisions and must be noise-free.
    """

    velocity: Callable
    jacobian: Callable


def _zero_hessian(x, y):
    z = np.zeros_like(np.asarray(x, dtype=float))
    return ((z, z), (z, z))


@dataclass(frozen=True)
class SwitchingFunction:
    """Scalar field whose zero set is the switching manifold.

    ``hessian`` defaults to zero, which is exact for the canonical f = y and
    for any affine switching function.
    """

    value: Callable
    gradient: Callable
    hessian: Callable = _zero_hessian


@dataclass(frozen=True)
class PiecewiseField:
    """Two smooth fields glued along f = 0: ``plus`` on f >= 0, ``minus`` on f <= 0."""

    plus: SmoothField
    minus: SmoothField
    switching: SwitchingFunction
    name: str = "piecewise-field"

    def side(self, which: str) -> SmoothField:
        if which == "plus":
            return self.plus
        if which == "minus":
            return self.minus
        raise ValueError(f"unknown side {which!r}")


@dataclass(frozen=True)
class BoundaryClassification:
    """Classification of a switching-manifold point.

    ``kind`` is one of ``crossing_plus``, ``crossing_minus``, ``tangency``,
    ``two_fold``, ``boundary_equilibrium``.  For a tangency, ``side`` names
    the tangent field and ``visible`` its visibility; for a two-fold,
    ``fold_kind`` is ``visible_visible``, ``invisible_invisible`` or
    ``visible_invisible``.
    """

    kind: str
    side: Optional[str] = None
    visible: Optional[bool] = None
    fold_kind: Optional[str] = None

    @property
    def is_crossing(self) -> bool:
        return self.kind in ("crossing_plus", "crossing_minus")

    @property
    def is_singular_tangency(self) -> bool:
        # Singular = invisible-invisible two-fold; all other tangencies are regular.
        return self.kind == "two_fold" and self.fold_kind == "invisible_invisible"


def _check_finite_point(p) -> tuple[float, float]:
    x, y = float(p[0]), float(p[1])
    if not (np.isfinite(x) and np.isfinite(y)):
        raise ValueError(f"non-finite point ({p[0]}, {p[1]})")
    return x, y


def eval_field(field: PiecewiseField, p):
    """Velocity vector(s) of the piecewise field at a point.

    Returns a tuple of one velocity on either open half-plane and of both
    velocities (plus first) on the switching manifold, where the field is
    multivalued.
    """
    x, y = _check_finite_point(p)
    f = float(field.switching.value(x, y))
    vp = np.array(field.plus.velocity(x, y), dtype=float)
    vm = np.array(field.minus.velocity(x, y), dtype=float)
    if abs(f) <= ON_MANIFOLD_TOL:
        return (vp, vm)
    return (vp,) if f > 0 else (vm,)


def lie_derivative(field_side: SmoothField, switching: SwitchingFunction, p, order: int = 1) -> float:
    """First or second Lie derivative of the switching function along a field.

    Order 1 is <grad f, X>; order 2 is <grad(Xf), X> with
    grad(Xf) = Hess(f)·X + J_Xᵀ·grad f, evaluated with analytic derivatives.
    """
    if order not in (1, 2):
        raise ValueError(f"unsupported Lie derivative order {order}; only 1 and 2")
    x, y = _check_finite_point(p)
    gx, gy = field_side.velocity(x, y)
    fx, fy = switching.gradient(x, y)
    first = fx * gx + fy * gy
    if order == 1:
        return float(first)
    (j00, j01), (j10, j11) = field_side.jacobian(x, y)
    (h00, h01), (h10, h11) = switching.hessian(x, y)
    lx = h00 * gx + h01 * gy + j00 * fx + j10 * fy
    ly = h10 * gx + h11 * gy + j01 * fx + j11 * fy
    return float(lx * gx + ly * gy)


def divergence(field_side: SmoothField, p) -> float:
    x, y = _check_finite_point(p)
    (j00, _), (_, j11) = field_side.jacobian(x, y)
    return float(j00 + j11)


def classify_boundary_point(field: PiecewiseField, p, tol: float = LIE_SIGN_TOL) -> BoundaryClassification:
    """Classify a point of the switching manifold by its Lie-derivative signs.

    Both first derivatives positive (negative) gives a crossing upward
    (downward); one vanishing first derivative gives a one-sided tangency,
    visible for the upper field when its second derivative is positive and
    for the lower field when negative; both vanishing gives a two-fold.  A
    vanishing field gives a boundary equilibrium, and a side whose first and
    second derivatives both vanish raises HigherOrderTangencyError.
    """
    x, y = _check_finite_point(p)
    f = float(field.switching.value(x, y))
    if abs(f) > ON_MANIFOLD_TOL:
        raise ValueError(f"point ({x}, {y}) is not on the switching manifold: f = {f}")

    vp = np.array(field.plus.velocity(x, y), dtype=float)
    vm = np.array(field.minus.velocity(x, y), dtype=float)
    if np.hypot(*vp) <= tol or np.hypot(*vm) <= tol:
        return BoundaryClassification(kind="boundary_equilibrium")

    lp = lie_derivative(field.plus, field.switching, p, order=1)
    lm = lie_derivative(field.minus, field.switching, p, order=1)
    plus_tangent = abs(lp) <= tol
    minus_tangent = abs(lm) <= tol

    if not plus_tangent and not minus_tangent:
        if lp > 0 and lm > 0:
            return BoundaryClassification(kind="crossing_plus")
        if lp < 0 and lm < 0:
            return BoundaryClassification(kind="crossing_minus")
        raise SlidingRegionError(
            f"point ({x}, {y}) lies in a sliding region (Lie derivatives {lp:g}, {lm:g}); "
            "sliding motion is not modeled"
        )

    if plus_tangent and minus_tangent:
        qp = lie_derivative(field.plus, field.switching, p, order=2)
        qm = lie_derivative(field.minus, field.switching, p, order=2)
        if abs(qp) <= tol or abs(qm) <= tol:
            raise HigherOrderTangencyError(
                f"unclassified higher-order tangency at ({x}, {y}): "
                f"second Lie derivatives {qp:g}, {qm:g}"
            )
        vis_p = qp > 0
        vis_m = qm < 0
        if vis_p and vis_m:
            fold = "visible_visible"
        elif not vis_p and not vis_m:
            fold = "invisible_invisible"
        else:
            fold = "visible_invisible"
        return BoundaryClassification(kind="two_fold", fold_kind=fold)

    side = "plus" if plus_tangent else "minus"
    q = lie_derivative(field.side(side), field.switching, p, order=2)
    if abs(q) <= tol:
        raise HigherOrderTangencyError(
            f"unclassified higher-order tangency at ({x}, {y}) on side {side}: "
            f"second Lie derivative {q:g}"
        )
    visible = q > 0 if side == "plus" else q < 0
    return BoundaryClassification(kind="tangency", side=side, visible=visible)


def canonical_field() -> PiecewiseField:
    """The canonical switching field used throughout the package.

    Upper half-plane velocity (1, 2 sin 2πx), lower (−1, 2 sin 2πx),
    switching function f(x, y) = y.  Both sides are divergence free, and the
    x-axis carries visible-visible two-folds at every integer and
    invisible-invisible ones at every half-integer.
    """
    two_pi = 2.0 * np.pi

    def vertical(x):
        return 2.0 * np.sin(two_pi * np.asarray(x, dtype=float))

    def d_vertical(x):
        return 2.0 * two_pi * np.cos(two_pi * np.asarray(x, dtype=float))

    def v_plus(x, y):
        x = np.asarray(x, dtype=float)
        return (np.ones_like(x), vertical(x))

    def v_minus(x, y):
        x = np.asarray(x, dtype=float)
        return (-np.ones_like(x), vertical(x))

    def jac(x, y):
        x = np.asarray(x, dtype=float)
        z = np.zeros_like(x)
        return ((z, z), (d_vertical(x), z))

    plus = SmoothField(velocity=v_plus, jacobian=jac)
    minus = SmoothField(velocity=v_minus, jacobian=jac)
    switching = SwitchingFunction(
        value=lambda x, y: np.asarray(y, dtype=float),
        gradient=lambda x, y: (np.zeros_like(np.asarray(x, dtype=float)),
                               np.ones_like(np.asarray(x, dtype=float))),
    )
    return PiecewiseField(plus=plus, minus=minus, switching=switching, name="z-infinity")


def numeric_jacobian(field_side: SmoothField, p, h: float = 1e-6):
    """Central finite-difference Jacobian, for validating analytic ones."""
    x, y = _check_finite_point(p)
    vxp, vyp = field_side.velocity(x + h, y)
    vxm, vym = field_side.velocity(x - h, y)
    uxp, uyp = field_side.velocity(x, y + h)
    uxm, uym = field_side.velocity(x, y - h)
    return (
        ((vxp - vxm) / (2 * h), (uxp - uxm) / (2 * h)),
        ((vyp - vym) / (2 * h), (uyp - uym) / (2 * h)),
    )
