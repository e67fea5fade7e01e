"""One-sided shift spaces over countable graphs.

Sequence space machinery: admissible words and cylinders, the weighted
sequence metric sum |a_i − b_i| / 2^i with explicit tail bounds, and the
Gurevich entropy of a countable graph as the supremum of truncation
entropies, computed from spectral radii of truncated adjacencies with a
path-count growth-rate cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .graphs import (
    CountableGraph,
    Truncation,
    path_count,
    strong_connectivity_and_period,
    strongly_connected_components,
)

__all__ = [
    "Word",
    "UnboundedIncrementError",
    "SequenceDistance",
    "sequence_distance",
    "spectral_radius",
    "EntropyStep",
    "EntropySweep",
    "gurevich_entropy",
    "path_growth_rate",
]


class UnboundedIncrementError(ValueError):
    """The graph carries no successor-increment bound, so the sequence
    metric's convergence cannot be guaranteed."""


@dataclass(frozen=True)
class Word:
    """Finite admissible word based at position ``base``."""

    letters: tuple[int, ...]
    base: int = 0

    def __post_init__(self):
        if len(self.letters) == 0:
            raise ValueError("empty word")

    @staticmethod
    def admissible(letters: Sequence[int], graph: CountableGraph, base: int = 0) -> "Word":
        letters = tuple(int(v) for v in letters)
        for a, b in zip(letters, letters[1:]):
            if b not in graph.successors(a):
                raise ValueError(f"inadmissible step {a} -> {b} for graph {graph.name}")
        return Word(letters=letters, base=base)


@dataclass(frozen=True)
class SequenceDistance:
    value: float
    tail_bound: float
    horizon: int

    def __float__(self):
        return self.value


def sequence_distance(a: Sequence[int], b: Sequence[int], horizon: int,
                      graph: Optional[CountableGraph] = None,
                      increment_bound: Optional[int] = None) -> SequenceDistance:
    """Partial sum of |a_i − b_i| / 2^i with a geometric tail bound.

    Convergence needs bounded letter increments: |a_i − b_i| grows at most
    linearly, |a_i − b_i| <= |a_H − b_H| + 2c(i − H) past the horizon, whose
    weighted tail sums in closed form.  Raises UnboundedIncrementError when
    no increment bound is available.
    """
    if increment_bound is None and graph is not None:
        increment_bound = graph.increment_bound
    if increment_bound is None:
        raise UnboundedIncrementError(
            "no successor-increment bound available; convergence not guaranteed")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if len(a) < horizon or len(b) < horizon:
        raise ValueError(f"horizon {horizon} exceeds sequence lengths ({len(a)}, {len(b)})")
    total = 0.0
    for i in range(horizon):
        total += abs(a[i] - b[i]) / (2.0 ** i)
    c0 = abs(a[horizon - 1] - b[horizon - 1]) + 2 * increment_bound
    # sum_{i>=H} (c0 + 2c(i−H)) 2^{−i} = 2^{1−H} c0 + 2^{2−H} c
    tail = (2.0 ** (1 - horizon)) * c0 + (2.0 ** (2 - horizon)) * increment_bound
    return SequenceDistance(value=total, tail_bound=float(tail), horizon=horizon)


# ---------------------------------------------------------------------------
# Spectral radius and entropy
# ---------------------------------------------------------------------------


def spectral_radius(matrix: np.ndarray, period: int = 1, rel_tol: float = 1e-10,
                    max_iter: int = 200_000) -> tuple[float, str]:
    """Largest eigenvalue modulus of a nonnegative matrix by power iteration.

    For period-p matrices the p-step map is iterated (plain iteration
    oscillates on bipartite adjacencies) and the p-th root taken.  If the
    iteration fails to settle, falls back to the two-step map; the returned
    method string records which route produced the value.
    """
    n = matrix.shape[0]
    if n == 0:
        return 0.0, "empty"
    if not matrix.any():
        return 0.0, "nilpotent"

    def iterate(p: int, iters: int) -> Optional[float]:
        v = np.ones(n) / math.sqrt(n)
        lam = 0.0
        stable = 0
        for _ in range(iters):
            w = v
            for _ in range(p):
                w = matrix @ w
            nrm = float(np.linalg.norm(w))
            if nrm == 0.0:
                return 0.0
            if abs(nrm - lam) <= rel_tol * max(1.0, nrm):
                stable += 1
                if stable >= 3:
                    return nrm ** (1.0 / p)
            else:
                stable = 0
            lam = nrm
            v = w / nrm
        return None

    period = max(1, period)
    lam = iterate(period, max_iter)
    if lam is not None:
        return lam, f"power(p={period})"
    lam = iterate(2, max_iter)
    if lam is not None:
        return lam, "two_step_fallback"
    raise RuntimeError("power iteration failed to converge")


def _best_component(trunc: Truncation):
    """Strongly connected piece with the largest spectral radius.

    Nested truncations keep every strongly connected piece, and the spectral
    radius is monotone under taking subgraphs of nonnegative matrices, so
    maximizing over components makes the entropy lower bounds nondecreasing
    in the cutoff.

    Returns (radius, representative local index, period, method) or None for
    a loop-free truncation.
    """
    adj = trunc.adjacency()
    best = None
    for comp in strongly_connected_components(trunc):
        if len(comp) == 1 and adj[comp[0], comp[0]] == 0:
            continue
        sub = adj[np.ix_(comp, comp)]
        period = _component_period(trunc, comp)
        lam, method = spectral_radius(sub, period=period)
        if best is None or lam > best[0]:
            best = (lam, comp[0], period, method)
    return best


def _component_period(trunc: Truncation, comp: tuple[int, ...]) -> int:
    # loops through a vertex never leave its strongly connected component
    from .graphs import loop_length_gcd
    v = trunc.states[comp[0]]
    return max(loop_length_gcd(trunc, v, 2 * (len(comp) + 1)), 1)


@dataclass(frozen=True)
class EntropyStep:
    q: int
    n_states: int
    entropy: float
    radius_estimate: float  # convergence radius of the loop generating series
    method: str
    period: int
    slope: Optional[float] = None  # (1/n) log p_aa(n) cross-check


@dataclass(frozen=True)
class EntropySweep:
    graph: str
    steps: tuple[EntropyStep, ...]

    @property
    def entropy(self) -> float:
        return self.steps[-1].entropy

    @property
    def monotone(self) -> bool:
        hs = [s.entropy for s in self.steps]
        return all(b >= a - 1e-9 for a, b in zip(hs, hs[1:]))


def gurevich_entropy(graph: CountableGraph, q_schedule: Sequence[int],
                     slope_n: Optional[int] = None) -> EntropySweep:
    """Entropy lower bounds over increasing truncations.

    Each cutoff contributes log of the spectral radius of the best strongly
    connected component of the truncation; the sequence is nondecreasing and
    its supremum is the graph entropy.  The loop-series convergence radius is
    reported as exp(−h).  When ``slope_n`` is given, the independent
    path-count growth estimate (1/n) log p_aa(n) at the component's
    representative vertex is included for cross-checking.
    """
    if not q_schedule:
        raise ValueError("empty cutoff schedule")
    steps = []
    for q in q_schedule:
        trunc = graph.truncate(q)
        best = _best_component(trunc)
        if best is None:
            lam, rep_local, period, method = 0.0, 0, 1, "loop-free"
        else:
            lam, rep_local, period, method = best
        h = math.log(lam) if lam > 0 else float("-inf")
        slope = None
        if slope_n is not None and lam > 0:
            slope = path_growth_rate(trunc, trunc.states[rep_local], slope_n)
        steps.append(EntropyStep(
            q=q, n_states=trunc.n, entropy=h,
            radius_estimate=math.exp(-h) if math.isfinite(h) else float("inf"),
            method=method, period=period, slope=slope,
        ))
    return EntropySweep(graph=graph.name, steps=tuple(steps))


def path_growth_rate(trunc: Truncation, a: int, n: int) -> float:
    """(1/m) log p_aa(m) at the largest m <= n with a positive count.

    Periodic graphs have empty off-period counts, so the estimate backs down
    from n to the nearest length carrying loops.
    """
    for m in range(n, 0, -1):
        c = path_count(trunc, a, a, m)
        if c > 0:
            return math.log(c) / m
    return float("-inf")
