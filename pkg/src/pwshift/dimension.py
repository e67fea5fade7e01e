"""Entropy at infinity, escape on average, and Hausdorff dimension bounds.

The entropy at infinity measures the growth of admissible words that start
and end inside a finite rank window but spend all but a prescribed fraction
of their time outside it.  Together with the plain entropy it bounds the
Hausdorff dimension (in the sequence metric) of recurrent points and of
recurrent points escaping on average, by h / log 2.  A cylinder-cover box
counting estimator over sampled itineraries cross-checks the bounds
empirically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .graphs import CountableGraph

__all__ = [
    "escaping_word_count",
    "InfinityEntropyEstimate",
    "entropy_at_infinity",
    "escape_fraction",
    "hausdorff_dimension_bounds",
    "DimensionEstimate",
    "box_counting_dimension",
]

# Exact counting needs a finite frontier; paths are explored up to this
# multiple of the window cutoff and flagged when they touch it.
_WORKING_FACTOR = 8


def escaping_word_count(graph: CountableGraph, m_constraint: int, q: int, n: int) -> tuple[int, bool]:
    """Count admissible words of length n+2 mostly outside the rank-q window.

    Both endpoints must have rank <= q and at most (n+2)/m_constraint letters
    may (endpoints counted).  The count is exact over states of rank up to
    8q; the flag reports whether any counted path touched that working
    cutoff, i.e. whether the returned value may undercount the unrestricted
    graph.
    """
    if m_constraint < 1 or q < 0 or n < 1:
        raise ValueError("need m_constraint >= 1, q >= 0, n >= 1")
    length = n + 2
    budget = length // m_constraint  # letters allowed inside the window
    if budget < 2:
        return 0, False  # endpoints alone already exceed the allowance
    working = max(_WORKING_FACTOR * q, _WORKING_FACTOR)
    if graph.n_states is not None:
        working = min(working, graph.n_states - 1)
    states = [graph.state_of_rank(r) for r in range(working + 1)]
    index = {s: i for i, s in enumerate(states)}
    ranks = [graph.rank(s) for s in states]
    succ = [[index[t] for t in graph.successors(s) if t in index] for s in states]

    touched = False
    # dp[(state, low_count)] -> exact word count
    dp: dict[tuple[int, int], int] = {}
    for i, r in enumerate(ranks):
        if r <= q:
            dp[(i, 1)] = dp.get((i, 1), 0) + 1
            if r == working:
                touched = True
    for _ in range(length - 1):
        nxt: dict[tuple[int, int], int] = {}
        for (i, low), count in dp.items():
            for j in succ[i]:
                lo = low + (1 if ranks[j] <= q else 0)
                if lo > budget:
                    continue
                if ranks[j] == working:
                    touched = True
                key = (j, lo)
                nxt[key] = nxt.get(key, 0) + count
        dp = nxt
    total = sum(count for (i, low), count in dp.items() if ranks[i] <= q)
    return total, touched


@dataclass(frozen=True)
class InfinityEntropyEstimate:
    table: dict            # (M, q) -> growth-rate estimate
    per_q: dict            # q -> min over the M schedule
    estimate: float        # min over the upper half of the q schedule
    truncated: bool        # any count hit the working cutoff
    counts: dict           # (M, q) -> tuple of z_n values


def _growth_slope(ns: Sequence[int], zs: Sequence[int]) -> float:
    """Least-squares slope of log z_n over the n with positive counts."""
    pts = [(n, math.log(z)) for n, z in zip(ns, zs) if z > 0]
    if len(pts) < 2:
        return float("-inf")
    xs = np.array([p[0] for p in pts], dtype=float)
    ys = np.array([p[1] for p in pts], dtype=float)
    keep = xs >= xs.max() / 2.0  # discard the small-n transient
    if keep.sum() >= 2:
        xs, ys = xs[keep], ys[keep]
    slope = np.polyfit(xs, ys, 1)[0]
    return float(slope)


def entropy_at_infinity(graph: CountableGraph, m_schedule: Sequence[int],
                        q_schedule: Sequence[int], n_max: int) -> InfinityEntropyEstimate:
    """Growth rates of escaping-word counts, aggregated per the definition.

    Per (M, q) the growth rate of z_n is estimated by a least-squares slope
    of log z_n; per q the infimum over the M schedule is taken (the counts
    are nonincreasing in M), and the headline estimate is the infimum over
    the larger cutoffs.  All values inherit the working-cutoff caveat flag.
    """
    if not m_schedule or not q_schedule:
        raise ValueError("schedules must be nonempty")
    table = {}
    counts = {}
    truncated = False
    ns = list(range(1, n_max + 1))
    for q in q_schedule:
        for m_c in m_schedule:
            zs = []
            for n in ns:
                z, flag = escaping_word_count(graph, m_c, q, n)
                truncated = truncated or flag
                zs.append(z)
            counts[(m_c, q)] = tuple(zs)
            table[(m_c, q)] = _growth_slope(ns, zs)
    per_q = {q: min(table[(m_c, q)] for m_c in m_schedule) for q in q_schedule}
    qs = sorted(q_schedule)
    upper = qs[len(qs) // 2:]
    estimate = min(per_q[q] for q in upper)
    return InfinityEntropyEstimate(table=table, per_q=per_q, estimate=estimate,
                                   truncated=truncated, counts=counts)


def escape_fraction(itinerary: Sequence[int], base_letters: Iterable[int],
                    horizon: Optional[int] = None) -> dict:
    """Birkhoff occupation fractions of single-letter cylinders.

    A sequence counts as escaping at this horizon when every tested base
    letter is occupied a fraction of at most 1/sqrt(horizon) of the time;
    this is a finite-horizon surrogate for escape on average, not the limit
    set itself.
    """
    seq = np.asarray(itinerary)
    if horizon is None:
        horizon = len(seq)
    if horizon < 1 or horizon > len(seq):
        raise ValueError("horizon must be in 1..len(itinerary)")
    window = seq[:horizon]
    fractions = {int(b): float((window == int(b)).mean()) for b in base_letters}
    threshold = 1.0 / math.sqrt(horizon)
    return {
        "fractions": fractions,
        "threshold": threshold,
        "escaping_at_horizon": bool(all(f <= threshold for f in fractions.values())),
    }


def hausdorff_dimension_bounds(h_graph: float, h_inf: float,
                               strongly_positive_recurrent: Optional[bool] = None) -> dict:
    """Dimension bounds h/log 2 for recurrent points and escaping recurrent points.

    When strong positive recurrence is certified the escaping bound is
    strictly below the recurrent bound.
    """
    if not (math.isfinite(h_graph) and math.isfinite(h_inf)):
        raise ValueError("entropy inputs must be finite")
    log2 = math.log(2.0)
    bound_recurrent = h_graph / log2
    bound_escaping = h_inf / log2
    strict = bool(strongly_positive_recurrent) and bound_escaping < bound_recurrent
    return {
        "recurrent_bound": bound_recurrent,
        "escaping_recurrent_bound": bound_escaping,
        "strict_inequality": strict,
    }


@dataclass(frozen=True)
class DimensionEstimate:
    scales: tuple[float, ...]
    counts: tuple[int, ...]
    slope: float
    note: str = ""


def box_counting_dimension(samples: np.ndarray, scale_exponents: Sequence[int]) -> DimensionEstimate:
    """Box-counting slope of sampled sequences under the weighted sequence metric.

    Cylinders are the natural covers: sequences sharing a length-m prefix are
    within B·2^{1−m} of each other, B bounding per-letter differences in the
    sample, so scale 2^{−k} is covered by prefixes of length k + 1 + log2(B).
    The slope of log N(ε) against log(1/ε) estimates the dimension of the
    sampled set.
    """
    seq = np.asarray(samples)
    if seq.ndim != 2 or seq.shape[0] < 2:
        raise ValueError("need a 2-d array with at least 2 sampled sequences")
    if len(scale_exponents) < 2:
        raise ValueError("need at least 2 scales")
    spread = int(seq.max() - seq.min())
    if spread == 0:
        return DimensionEstimate(
            scales=tuple(2.0 ** -k for k in scale_exponents),
            counts=tuple(1 for _ in scale_exponents),
            slope=0.0, note="degenerate sample: all sequences share every letter",
        )
    extra = max(0, math.ceil(math.log2(spread)))
    scales = []
    counts = []
    for k in scale_exponents:
        m = k + 1 + extra
        if m > seq.shape[1]:
            raise ValueError(f"sampled sequences too short for scale exponent {k} "
                             f"(need prefixes of length {m})")
        prefixes = {tuple(row[:m]) for row in seq}
        scales.append(2.0 ** -k)
        counts.append(len(prefixes))
    xs = np.array([math.log(1.0 / s) for s in scales])
    ys = np.array([math.log(c) for c in counts])
    slope = float(np.polyfit(xs, ys, 1)[0])
    return DimensionEstimate(scales=tuple(scales), counts=tuple(counts), slope=slope)
