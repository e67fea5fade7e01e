"""Trajectories of the canonical field on its invariant curve pair.

The canonical field's invariant set is the union of the graphs of ±P with
P(x) = (1/π)(1 − cos 2πx), partitioned into unit-time arcs: arc 2j is the
upper branch over (j, j+1) traversed rightward, arc 2j+1 the lower branch
over the same cell traversed leftward.  A trajectory that starts at a double
tangency (j, 0) is determined by one binary branch choice per tangency
visit, and its itinerary is the arc index occupied on each unit time
interval.  Itineraries obey the successor rule: after an even arc n comes
n+1 or n+2, after an odd arc n comes n−1 or n−2.

The module provides the combinatorial trajectory representation, the
itinerary coding, the time-one map, the Hausdorff-based distance on
trajectory classes, and numeric flow integration with crossing/tangency
event localization that reproduces the combinatorics.
"""

from __future__ import annotations

import csv
import functools
import json
from dataclasses import dataclass, field as dataclass_field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .fields import (
    ON_MANIFOLD_TOL,
    BoundaryClassification,
    PiecewiseField,
    canonical_field,
    classify_boundary_point,
    lie_derivative,
)

__all__ = [
    "UP",
    "DOWN",
    "invariant_curve",
    "arc_cell",
    "arc_is_upper",
    "arc_endpoints",
    "arc_point",
    "successors",
    "TrajectoryClass",
    "build_trajectory",
    "itinerary",
    "is_admissible",
    "time_one",
    "arc_hausdorff_distance",
    "HausdorffResult",
    "trajectory_distance",
    "TrajectoryDistance",
    "FlowEvent",
    "FlowPath",
    "IntegrationError",
    "integrate_flow",
    "itineraries_by_integration",
    "itinerary_from_path",
    "itineraries_to_csv",
    "itineraries_from_csv",
    "trajectory_to_json",
    "trajectory_from_json",
]

UP = True     # continue on the upper branch, moving right
DOWN = False  # continue on the lower branch, moving left

_CHOICE_ALIASES = {
    "up": UP, "right": UP, "u": UP, "r": UP, "1": UP,
    "down": DOWN, "left": DOWN, "d": DOWN, "l": DOWN, "0": DOWN,
}

# Max distance between points of arcs over the same cell:
# sqrt(1 + (4/pi)^2) < 1.7.  Used in distance tail bounds.
_SAME_CELL_DIAMETER = 1.7


def invariant_curve(x):
    """Height of the upper invariant branch: (1/π)(1 − cos 2πx).

    Obtained by integrating dy/dx = 2 sin 2πx through (0, 0); vanishes with
    zero slope and positive curvature at every integer.
    """
    x = np.asarray(x, dtype=float)
    return (1.0 - np.cos(2.0 * np.pi * x)) / np.pi


def arc_cell(n: int) -> int:
    """Cell index j of arc n: arc 2j and 2j+1 both live over (j, j+1)."""
    return n // 2


def arc_is_upper(n: int) -> bool:
    return n % 2 == 0


def arc_endpoints(n: int) -> tuple[int, int]:
    """(start, end) double-tangency abscissas of arc n, in flow order."""
    j = arc_cell(n)
    return (j, j + 1) if arc_is_upper(n) else (j + 1, j)


def arc_point(n: int, t):
    """Point of arc n at parameter t in [0, 1] along the flow direction."""
    t = np.asarray(t, dtype=float)
    j = arc_cell(n)
    if arc_is_upper(n):
        x = j + t
        return x, invariant_curve(x)
    x = j + 1 - t
    return x, -invariant_curve(x)


def successors(n: int) -> tuple[int, int]:
    """Admissible next arcs after arc n."""
    return (n + 1, n + 2) if arc_is_upper(n) else (n - 1, n - 2)


def _parse_choice(c) -> bool:
    if isinstance(c, str):
        try:
            return _CHOICE_ALIASES[c.lower()]
        except KeyError:
            raise ValueError(f"unknown branch choice {c!r}") from None
    if isinstance(c, (bool, np.bool_)):
        return bool(c)
    if c in (0, 1):
        return bool(c)
    raise ValueError(f"unknown branch choice {c!r}")


@dataclass(frozen=True)
class TrajectoryClass:
    """A trajectory class: start double tangency plus branch choices.

    This is the normalized representative with γ(0) at a double tangency;
    every class has exactly one such representative, and the per-interval
    distance below is defined on them.
    """

    start_two_fold: int
    choices: tuple[bool, ...]

    def __post_init__(self):
        if len(self.choices) == 0:
            raise ValueError("a trajectory needs at least one branch choice")

    @property
    def arcs(self) -> tuple[int, ...]:
        return itinerary(self)

    def two_folds(self) -> tuple[int, ...]:
        """Double tangencies visited, one per integer time 0..len(choices)."""
        out = [self.start_two_fold]
        j = self.start_two_fold
        for c in self.choices:
            j = j + 1 if c else j - 1
            out.append(j)
        return tuple(out)


def build_trajectory(j0: int, choices: Sequence) -> TrajectoryClass:
    """Trajectory from double tangency (j0, 0) following branch choices.

    Choice True/"up"/"right" takes the upper arc 2j (ending at j+1);
    False/"down"/"left" takes the lower arc 2j−1 (ending at j−1).
    """
    parsed = tuple(_parse_choice(c) for c in choices)
    return TrajectoryClass(start_two_fold=int(j0), choices=parsed)


def itinerary(traj: TrajectoryClass, length: Optional[int] = None) -> tuple[int, ...]:
    """Arc indices occupied on successive unit time intervals."""
    if length is None:
        length = len(traj.choices)
    if length > len(traj.choices):
        raise ValueError(f"trajectory has only {len(traj.choices)} choices, asked for {length}")
    arcs = []
    j = traj.start_two_fold
    for c in traj.choices[:length]:
        if c:
            arcs.append(2 * j)
            j += 1
        else:
            arcs.append(2 * j - 1)
            j -= 1
    return tuple(arcs)


def is_admissible(seq: Sequence[int]) -> bool:
    """Whether consecutive arc indices obey the successor rule."""
    return all(b in successors(a) for a, b in zip(seq, seq[1:]))


def time_one(traj: TrajectoryClass) -> TrajectoryClass:
    """Drop the first arc: the time-one map on trajectory classes.

    The new start is the far endpoint of the first arc, and the itinerary
    shifts left by one.
    """
    if len(traj.choices) < 2:
        raise ValueError("time-one map needs at least 2 choices of horizon")
    j0 = traj.start_two_fold + (1 if traj.choices[0] else -1)
    return TrajectoryClass(start_two_fold=j0, choices=traj.choices[1:])


@dataclass(frozen=True)
class HausdorffResult:
    value: float
    sampling_error: float

    def __float__(self):
        return self.value


def _arc_samples(n: int, samples: int) -> np.ndarray:
    t = np.linspace(0.0, 1.0, samples)
    x, y = arc_point(n, t)
    return np.column_stack([x, y])


@functools.lru_cache(maxsize=4096)
def _hausdorff_normalized(m: int, n: int, samples: int) -> float:
    a = _arc_samples(m, samples)
    b = _arc_samples(n, samples)
    # max-min over the sampled point sets, both directions
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
    forward = np.sqrt(d2.min(axis=1)).max()
    backward = np.sqrt(d2.min(axis=0)).max()
    return float(max(forward, backward))


def arc_hausdorff_distance(m: int, n: int, samples: int = 1024) -> HausdorffResult:
    """Hausdorff distance between two arcs by dense parameter sampling.

    Translating both arcs by a whole number of cells is an isometry, so the
    pair is normalized before looking up the cached distance.  The sampling
    error bound comes from the parametrization speed: |curve'| <= sqrt(5),
    so every true curve point is within sqrt(5)/(2(samples−1)) of a sample.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples per arc")
    shift = 2 * arc_cell(m)
    value = _hausdorff_normalized(m - shift, n - shift, samples)
    err = np.sqrt(5.0) / (2.0 * (samples - 1))
    return HausdorffResult(value=value, sampling_error=float(err))


@dataclass(frozen=True)
class TrajectoryDistance:
    value: float
    tail_bound: float
    horizon: int

    def __float__(self):
        return self.value


def trajectory_distance(g1: TrajectoryClass, g2: TrajectoryClass, horizon: int,
                        samples: int = 1024) -> TrajectoryDistance:
    """Distance between trajectory classes: sum of 2^{−i} Hausdorff(arc_i, arc_i).

    Returns the partial sum over i < horizon together with a rigorous bound
    on the discarded tail.  Cells of the two itineraries drift apart by at
    most 2 per step and same-cell arcs are at most _SAME_CELL_DIAMETER apart,
    so the i-th term is at most (c_H + 2(i−H) + D) 2^{−i} past the horizon,
    which sums in closed form.
    """
    a1 = itinerary(g1)
    a2 = itinerary(g2)
    if len(a1) < horizon or len(a2) < horizon:
        raise ValueError(f"horizon {horizon} exceeds available arcs ({len(a1)}, {len(a2)})")
    total = 0.0
    for i in range(horizon):
        total += arc_hausdorff_distance(a1[i], a2[i], samples=samples).value / (2.0 ** i)
    # tail: cells at the horizon differ by c0; afterwards |cell gap| grows by <= 2/step
    if horizon < len(a1) and horizon < len(a2):
        c0 = abs(arc_cell(a1[horizon]) - arc_cell(a2[horizon]))
    else:
        c0 = abs(arc_cell(a1[horizon - 1]) - arc_cell(a2[horizon - 1])) + 2
    d = _SAME_CELL_DIAMETER
    tail = (2.0 ** (-horizon)) * (2.0 * (c0 + d) + 4.0 * horizon + 4.0)
    return TrajectoryDistance(value=total, tail_bound=float(tail), horizon=horizon)


# ---------------------------------------------------------------------------
# Numeric flow integration
# ---------------------------------------------------------------------------


class IntegrationError(RuntimeError):
    def __init__(self, message: str, last_time: float):
        super().__init__(f"{message} (last valid time {last_time})")
        self.last_time = last_time


@dataclass(frozen=True)
class FlowEvent:
    time: float
    point: tuple[float, float]
    kind: str            # "crossing" | "branch" | "touch" | "start"
    detail: str = ""


@dataclass
class FlowPath:
    times: np.ndarray
    points: np.ndarray  # shape (len(times), 2)
    events: list[FlowEvent] = dataclass_field(default_factory=list)
    status: str = "completed"  # completed | branch_required | singular_fixed

    @property
    def endpoint(self) -> tuple[float, float]:
        return (float(self.points[-1, 0]), float(self.points[-1, 1]))


def _rk4_step(velocity: Callable, x, y, h):
    k1x, k1y = velocity(x, y)
    k2x, k2y = velocity(x + 0.5 * h * k1x, y + 0.5 * h * k1y)
    k3x, k3y = velocity(x + 0.5 * h * k2x, y + 0.5 * h * k2y)
    k4x, k4y = velocity(x + h * k3x, y + h * k3y)
    return (x + h * (k1x + 2 * k2x + 2 * k3x + k4x) / 6.0,
            y + h * (k1y + 2 * k2y + 2 * k3y + k4y) / 6.0)


def _bisect_event(velocity, x, y, h, target, tol_value, tol_t=1e-13, max_iter=200):
    """Locate tau in (0, h] where target(state(tau)) crosses zero.

    target(0) < 0 < target(h) is assumed; the state at tau is a single RK4
    step of size tau from (x, y), accurate to O(tau^5).
    """
    lo, hi = 0.0, h
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        xm, ym = _rk4_step(velocity, x, y, mid)
        v = target(xm, ym)
        if abs(v) <= tol_value and (hi - lo) <= tol_t:
            return mid, xm, ym
        if v < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol_t:
            break
    mid = 0.5 * (lo + hi)
    xm, ym = _rk4_step(velocity, x, y, mid)
    return mid, xm, ym


def _forward_sides(field: PiecewiseField, p) -> list[int]:
    """Sides (+1 plus, −1 minus) that admit a forward continuation from p on the manifold.

    A side continues forward when its first Lie derivative points into its
    own half-plane, or is tangent with a visible second derivative.
    """
    out = []
    lp = lie_derivative(field.plus, field.switching, p, order=1)
    lm = lie_derivative(field.minus, field.switching, p, order=1)
    tol = 1e-12
    if lp > tol:
        out.append(+1)
    elif abs(lp) <= tol and lie_derivative(field.plus, field.switching, p, order=2) > 0:
        out.append(+1)
    if lm < -tol:
        out.append(-1)
    elif abs(lm) <= tol and lie_derivative(field.minus, field.switching, p, order=2) < 0:
        out.append(-1)
    return out


def integrate_flow(field: PiecewiseField, p0, duration: float, choices: Sequence = (),
                   step: float = 1e-3, crossing_tol: float = 1e-10) -> FlowPath:
    """Integrate the piecewise field with event localization.

    Fixed-step RK4 on the active side.  Transversal manifold crossings are
    localized by bisection to |f| <= crossing_tol and the trajectory is
    concatenated onto the outgoing side.  Tangential touches of the manifold
    (local extrema of f reaching zero) are detected through a sign change of
    the first Lie derivative along the flow; a visible-visible double
    tangency consumes the next branch choice, or stops the integration with
    status "branch_required" when no choice remains.  Starting at an
    invisible-invisible (singular) tangency yields the constant path.
    """
    choice_list = [_parse_choice(c) for c in choices]
    ci = 0
    x, y = float(p0[0]), float(p0[1])
    if not (np.isfinite(x) and np.isfinite(y)):
        raise IntegrationError("non-finite initial point", 0.0)
    f_of = field.switching.value
    events: list[FlowEvent] = []
    times = [0.0]
    xs = [x]
    ys = [y]

    f0 = float(f_of(x, y))
    active = 0
    if abs(f0) <= ON_MANIFOLD_TOL:
        cls = classify_boundary_point(field, (x, y))
        if cls.is_singular_tangency:
            return FlowPath(times=np.array([0.0, duration]),
                            points=np.array([[x, y], [x, y]]),
                            events=[FlowEvent(0.0, (x, y), "start", "singular tangency: constant path")],
                            status="singular_fixed")
        sides = _forward_sides(field, (x, y))
        if len(sides) == 2:
            if ci < len(choice_list):
                active = +1 if choice_list[ci] else -1
                ci += 1
                events.append(FlowEvent(0.0, (x, y), "branch", f"side {active:+d}"))
            else:
                return FlowPath(times=np.array(times), points=np.column_stack([xs, ys]),
                                events=events, status="branch_required")
        elif len(sides) == 1:
            active = sides[0]
        else:
            raise IntegrationError(f"no forward continuation from ({x}, {y})", 0.0)
    else:
        active = +1 if f0 > 0 else -1

    t = 0.0
    guard = 1e-12

    def monitor(side, px, py):
        # first Lie derivative along the active flow, oriented so that a
        # tangential touch of the manifold is a negative-to-positive crossing
        sf = field.plus if side > 0 else field.minus
        return side * lie_derivative(sf, field.switching, (px, py), order=1)

    touch_noise = 1e-9
    last_touch_t = 0.0 if events else -np.inf  # start branch counts as a touch

    def handle_touch(tau, xc, yc):
        # returns ("continue", new_active) or a terminal FlowPath
        nonlocal t, x, y, ci, last_touch_t
        last_touch_t = t + tau
        t += tau
        x, y = xc, yc
        times.append(t)
        xs.append(x)
        ys.append(y)
        cls = classify_boundary_point(field, (x, y), tol=1e-6)
        events.append(FlowEvent(t, (x, y), "touch", cls.kind))
        if cls.kind == "two_fold" and cls.fold_kind == "visible_visible":
            if ci < len(choice_list):
                side = +1 if choice_list[ci] else -1
                ci += 1
                events.append(FlowEvent(t, (x, y), "branch", f"side {side:+d}"))
                return ("continue", side)
            status = "completed" if t >= duration - 1e-12 else "branch_required"
            return FlowPath(times=np.array(times), points=np.column_stack([xs, ys]),
                            events=events, status=status)
        sides = _forward_sides(field, (x, y))
        if sides:
            return ("continue", sides[0])
        return FlowPath(times=np.array(times), points=np.column_stack([xs, ys]),
                        events=events, status="singular_fixed")

    while t < duration - 1e-12:
        h = min(step, duration - t)
        vel = field.plus.velocity if active > 0 else field.minus.velocity
        x1, y1 = _rk4_step(vel, x, y, h)
        if not (np.isfinite(x1) and np.isfinite(y1)):
            raise IntegrationError("non-finite state during integration", t)
        fa = float(f_of(x, y))
        fb = float(f_of(x1, y1))
        ma = monitor(active, x, y)
        mb = monitor(active, x1, y1)

        # Tangential touch: the oriented Lie derivative crosses zero upward at
        # a local extremum of f.  Checked before the crossing test because a
        # graze can push f through zero by integration noise alone.  When the
        # zero lands exactly on the step end the bracket degenerates and the
        # step end itself is the event point.
        if ma < -guard and mb > -touch_noise and t + h > last_touch_t + 10 * step:
            if mb > guard:
                tau, xc, yc = _bisect_event(vel, x, y, h,
                                            lambda px, py, s=active: monitor(s, px, py),
                                            tol_value=0.0)
            else:
                tau, xc, yc = h, x1, y1
            if abs(float(f_of(xc, yc))) <= ON_MANIFOLD_TOL:
                outcome = handle_touch(tau, xc, yc)
                if isinstance(outcome, FlowPath):
                    return outcome
                active = outcome[1]
                continue
            # benign interior extremum of f: no event

        if fa * fb < 0 and abs(fa) > 10 * crossing_tol:
            # transversal crossing
            sign = 1.0 if fb > fa else -1.0
            tau, xc, yc = _bisect_event(vel, x, y, h,
                                        lambda px, py, s=sign: s * float(f_of(px, py)),
                                        tol_value=crossing_tol)
            g_c = monitor(active, xc, yc)
            if abs(g_c) <= 1e-6:
                # degenerate crossing: actually a graze reached through noise
                outcome = handle_touch(tau, xc, yc)
                if isinstance(outcome, FlowPath):
                    return outcome
                active = outcome[1]
                continue
            t += tau
            x, y = xc, yc
            times.append(t)
            xs.append(x)
            ys.append(y)
            cls = classify_boundary_point(field, (x, y), tol=1e-6)
            events.append(FlowEvent(t, (x, y), "crossing", cls.kind))
            sides = _forward_sides(field, (x, y))
            if len(sides) == 1:
                active = sides[0]
            elif len(sides) == 2:
                if ci < len(choice_list):
                    active = +1 if choice_list[ci] else -1
                    ci += 1
                    events.append(FlowEvent(t, (x, y), "branch", f"side {active:+d}"))
                else:
                    return FlowPath(times=np.array(times), points=np.column_stack([xs, ys]),
                                    events=events, status="branch_required")
            else:
                raise IntegrationError(f"no forward continuation at crossing ({x}, {y})", t)
            continue

        t += h
        x, y = x1, y1
        times.append(t)
        xs.append(x)
        ys.append(y)

    return FlowPath(times=np.array(times), points=np.column_stack([xs, ys]),
                    events=events, status="completed")


def itinerary_from_path(path: FlowPath) -> tuple[int, ...]:
    """Read the itinerary of an integrated path from its half-integer-time samples."""
    out = []
    t_end = path.times[-1]
    k = 0
    while k + 0.5 <= t_end + 1e-9:
        idx = int(np.searchsorted(path.times, k + 0.5))
        idx = min(idx, len(path.times) - 1)
        x, y = path.points[idx]
        cell = int(np.floor(x))
        out.append(2 * cell if y > 0 else 2 * cell + 1)
        k += 1
    return tuple(out)


def itineraries_by_integration(starts: Sequence[int], choices, step: float = 1e-3):
    """Batched RK4 itineraries of the canonical field.

    Every arc of the canonical field takes exactly unit time, so a batch of
    trajectories can be integrated one unit interval at a time with the
    branch choices applied synchronously at the interval boundaries.  The
    itinerary letters are read from the mid-interval float states (cell and
    side), not from the combinatorics, so agreement with the successor-rule
    walk is a real consistency check.

    Returns (itineraries, endpoint_drift): an (n, L) int array and the
    largest distance of any interval endpoint from its double tangency.
    """
    field = canonical_field()
    choices = np.asarray(choices, dtype=bool)
    if choices.ndim != 2:
        raise ValueError("choices must be a 2-d boolean array (trajectories x steps)")
    n, L = choices.shape
    starts = np.asarray(starts, dtype=float)
    if starts.shape != (n,):
        raise ValueError("starts must have one entry per trajectory")
    n_sub = max(2, int(round(1.0 / step)))
    h = 1.0 / n_sub
    x = starts.copy()
    y = np.zeros(n)
    arcs = np.empty((n, L), dtype=np.int64)
    drift = 0.0
    for k in range(L):
        s = np.where(choices[:, k], 1.0, -1.0)

        def vel(px, py, s=s):
            return (s, 2.0 * np.sin(2.0 * np.pi * px))

        for sub in range(n_sub):
            x, y = _rk4_step(vel, x, y, h)
            if sub == n_sub // 2 - 1:
                cells = np.floor(x).astype(np.int64)
                arcs[:, k] = np.where(y > 0, 2 * cells, 2 * cells + 1)
        drift = max(drift,
                    float(np.abs(y).max()),
                    float(np.abs(x - np.round(x)).max()))
    return arcs, drift


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def itineraries_to_csv(path, itineraries: Iterable[Sequence[int]]) -> None:
    """One row per trajectory, comma-separated signed arc indices."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in itineraries:
            writer.writerow([int(v) for v in row])


def itineraries_from_csv(path) -> list[tuple[int, ...]]:
    with open(path, newline="") as fh:
        return [tuple(int(v) for v in row) for row in csv.reader(fh) if row]


def trajectory_to_json(traj: TrajectoryClass) -> dict:
    return {
        "start_two_fold": traj.start_two_fold,
        "choices": ["up" if c else "down" for c in traj.choices],
        "itinerary": list(itinerary(traj)),
    }


def trajectory_from_json(obj) -> TrajectoryClass:
    if isinstance(obj, str):
        obj = json.loads(obj)
    traj = build_trajectory(obj["start_two_fold"], obj["choices"])
    if "itinerary" in obj and tuple(obj["itinerary"]) != itinerary(traj):
        raise ValueError("stored itinerary disagrees with choices")
    return traj
