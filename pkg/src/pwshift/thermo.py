"""Thermodynamic formalism on truncated countable shifts.

Locally constant potentials of depth one or two, their variations, the
transfer (Ruelle) operator, weighted periodic-point partition sums, the
Gurevich pressure, first-return partition sums with the strong positive
recurrence verdict, and the variational-principle inequality check against
stationary Markov measures.

Depth-two potentials are the natural ceiling here: every weighted count
reduces to powers of an edge-weighted adjacency matrix, which keeps all
partition sums exact (up to float rounding) rather than sampled.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .graphs import CountableGraph, Truncation, strong_connectivity_and_period

__all__ = [
    "Potential",
    "zero_potential",
    "neg_log_first_potential",
    "table_potential",
    "potential_from_json",
    "edge_weight_matrix",
    "variation",
    "variation_partial_sums",
    "ruelle_apply",
    "ruelle_one_norm",
    "partition_function",
    "first_return_partition",
    "PressureEstimate",
    "gurevich_pressure",
    "pressure_spectral",
    "recurrence_report",
    "RecurrenceReport",
    "variational_check",
]


@dataclass(frozen=True)
class Potential:
    """Locally constant potential of depth 1 or 2.

    ``fn`` maps a word (tuple of states, length >= depth) to a real; only the
    first ``depth`` letters may matter.  Depths above two are rejected at
    construction: they fall outside the edge-weight reduction.
    """

    name: str
    depth: int
    fn: Callable[[tuple], float]

    def __post_init__(self):
        if self.depth not in (1, 2):
            raise ValueError("only potentials of depth 1 or 2 are supported")

    def __call__(self, word: Sequence[int]) -> float:
        word = tuple(word)
        if len(word) < self.depth:
            raise ValueError(f"word {word} shorter than potential depth {self.depth}")
        return float(self.fn(word))


def zero_potential() -> Potential:
    return Potential(name="zero", depth=1, fn=lambda w: 0.0)


def neg_log_first_potential(graph: CountableGraph) -> Potential:
    """ψ(x) = −log(m(m+1)) with m the 1-based rank of the first letter.

    Ranks enumerate the states as positive integers, so on a full graph the
    one-step weights telescope: the weight mass of N states is N/(N+1).
    """
    def fn(word, g=graph):
        m = g.rank(word[0]) + 1
        return -math.log(m * (m + 1))

    return Potential(name="neg-log-first", depth=1, fn=fn)


def table_potential(entries: dict, depth: int, name: str = "table") -> Potential:
    """Potential from an explicit word -> value table."""
    table = {tuple(int(v) for v in k): float(val) for k, val in entries.items()}

    def fn(word, t=table, d=depth):
        key = tuple(word[:d])
        try:
            return t[key]
        except KeyError:
            raise KeyError(f"word prefix {key} missing from potential table") from None

    return Potential(name=name, depth=depth, fn=fn)


def potential_from_json(obj, graph: Optional[CountableGraph] = None) -> Potential:
    """Load {"kind": "zero"|"neg_log_first"|"table", "depth": k, "entries": {...}}."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    kind = obj.get("kind")
    if kind == "zero":
        return zero_potential()
    if kind == "neg_log_first":
        if graph is None:
            raise ValueError("neg_log_first needs a graph for its state enumeration")
        return neg_log_first_potential(graph)
    if kind == "table":
        entries = {tuple(int(v) for v in key.split(",")): val
                   for key, val in obj["entries"].items()}
        return table_potential(entries, depth=int(obj["depth"]))
    raise ValueError(f"unknown potential kind {kind!r}")


def edge_weight_matrix(psi: Potential, trunc: Truncation) -> np.ndarray:
    """Adjacency with entry e^{ψ} on each edge (ψ read at the source for depth 1)."""
    b = np.zeros((trunc.n, trunc.n))
    if psi.depth == 1:
        weights = np.array([math.exp(psi((s,))) for s in trunc.states])
        for i, row in enumerate(trunc.succ):
            if row:
                b[i, list(row)] = weights[i]
        return b
    for i, row in enumerate(trunc.succ):
        si = trunc.states[i]
        for j in row:
            b[i, j] = math.exp(psi((si, trunc.states[j])))
    return b


# ---------------------------------------------------------------------------
# Variations
# ---------------------------------------------------------------------------


def _admissible_words(trunc: Truncation, length: int):
    if length == 0:
        yield ()
        return
    stack = [(i,) for i in range(trunc.n)]
    while stack:
        w = stack.pop()
        if len(w) == length:
            yield tuple(trunc.states[i] for i in w)
            continue
        for j in trunc.succ[w[-1]]:
            stack.append(w + (j,))


def variation(psi: Potential, n: int, trunc: Truncation) -> float:
    """n-th variation: sup |ψ(x) − ψ(y)| over words agreeing on letters 0..n−1.

    Exact by finite maximization: a depth-k potential is constant on depth-k
    prefixes, so only words of length k matter and the variation vanishes for
    n >= k.
    """
    if n < 1:
        raise ValueError("variation index must be >= 1")
    if n >= psi.depth:
        return 0.0
    groups: dict[tuple, list[float]] = {}
    for word in _admissible_words(trunc, psi.depth):
        groups.setdefault(word[:n], []).append(psi(word))
    spread = 0.0
    for vals in groups.values():
        spread = max(spread, max(vals) - min(vals))
    return spread


def variation_partial_sums(psi: Potential, trunc: Truncation, upto: int = 16) -> dict:
    """Partial sums of variations from index 2; the tail past the depth is zero."""
    vals = [variation(psi, m, trunc) for m in range(2, upto + 1)]
    return {
        "partial_sum": float(sum(vals)),
        "values": vals,
        "tail_zero_beyond": psi.depth,
        "summable": True,
    }


# ---------------------------------------------------------------------------
# Transfer operator
# ---------------------------------------------------------------------------


def ruelle_apply(psi: Potential, g: Callable[[tuple], float], x_word: Sequence[int],
                 trunc: Truncation) -> float:
    """One application of the transfer operator at a word prefix.

    Sums e^{ψ(u·x)} g(u·x) over the one-step preimages u·x, u ranging over
    the truncation's predecessors of the first letter of x.
    """
    x_word = tuple(int(v) for v in x_word)
    if len(x_word) < max(psi.depth - 1, 1):
        raise ValueError("prefix too short to evaluate the potential on preimages")
    ix = trunc.index_of(x_word[0])
    total = 0.0
    found = False
    for i, row in enumerate(trunc.succ):
        if ix in row:
            found = True
            y = (trunc.states[i],) + x_word
            total += math.exp(psi(y)) * float(g(y))
    if not found:
        warnings.warn(f"state {x_word[0]} has no preimages in the truncation; empty sum")
        return 0.0
    return total


def ruelle_one_norm(psi: Potential, trunc: Truncation) -> float:
    """Sup over states of the transfer operator applied to the constant one.

    A finite value certifies the finiteness route for the pressure of the
    restricted system; on a full graph with the telescoping potential this
    equals N/(N+1) < 1.
    """
    b = edge_weight_matrix(psi, trunc)
    return float(b.sum(axis=0).max())


# ---------------------------------------------------------------------------
# Partition sums and pressure
# ---------------------------------------------------------------------------


def partition_function(psi: Potential, a: int, n: int, trunc: Truncation) -> float:
    """Weighted periodic-point sum: loops of length n at a, weighted by e^{Birkhoff sum}."""
    if n < 1:
        raise ValueError("partition sums need n >= 1")
    b = edge_weight_matrix(psi, trunc)
    ia = trunc.index_of(a)
    v = np.zeros(trunc.n)
    v[ia] = 1.0
    for _ in range(n):
        v = v @ b
    return float(v[ia])


def first_return_partition(psi: Potential, a: int, n: int, trunc: Truncation) -> float:
    """Weighted loops of length n at a whose interior avoids a (taboo sums)."""
    if n < 1:
        raise ValueError("first-return sums need n >= 1")
    b = edge_weight_matrix(psi, trunc)
    ia = trunc.index_of(a)
    if n == 1:
        return float(b[ia, ia])
    v = b[ia, :].copy()
    v[ia] = 0.0
    for _ in range(n - 2):
        v = v @ b
        v[ia] = 0.0
    return float(v @ b[:, ia])


@dataclass(frozen=True)
class PressureEstimate:
    """Pressure diagnostics at one truncation.

    ``values`` is the per-n sequence (1/n) log Z_n (the defining sequence,
    −inf where the sum vanishes); ``ratio_values`` the successive growth
    log(Z_{n+1}/Z_n), whose tail is the headline ``estimate`` — the per-n
    form carries an O(1/n) prefactor bias that the ratio cancels.  The same
    estimate at a second base symbol and the gap diagnose base independence,
    and the Cesàro mean plus trend fields summarize the raw sequence.
    """

    base: int
    n_values: tuple[int, ...]
    values: tuple[float, ...]
    ratio_values: tuple[float, ...]
    estimate: float
    cesaro_last_third: float
    alt_base: Optional[int]
    alt_estimate: Optional[float]
    base_gap: Optional[float]
    mixing: bool
    period: int
    n_states: int


def _growth_estimate(z: dict[int, float], n_max: int) -> float:
    """Tail growth rate of a positive sequence via one- or two-step ratios."""
    for span in (1, 2):
        pairs = [(n, n - span) for n in range(n_max, span, -1)
                 if z.get(n, 0.0) > 0.0 and z.get(n - span, 0.0) > 0.0]
        if pairs:
            n, m = pairs[0]
            return math.log(z[n] / z[m]) / span
    return float("-inf")


def gurevich_pressure(psi: Potential, a: int, n_max: int, trunc: Truncation,
                      alt_base: Optional[int] = None) -> PressureEstimate:
    """Pressure estimate from the weighted periodic-point sums at base [a].

    Computes Z_n for n = 1..n_max by exact DP, reports the defining sequence
    and its growth-ratio tail, and repeats the estimate at a second base
    symbol as a base-independence diagnostic.  On non-mixing truncations
    (period > 1) the limit form is unavailable and the flags say so; the
    two-step ratio still measures the limsup growth.
    """
    if n_max < 2:
        raise ValueError("need n_max >= 2")
    con = strong_connectivity_and_period(trunc)
    b = edge_weight_matrix(psi, trunc)
    ia = trunc.index_of(a)

    def z_sequence(start: int) -> dict[int, float]:
        v = np.zeros(trunc.n)
        v[start] = 1.0
        out = {}
        for n in range(1, n_max + 1):
            v = v @ b
            out[n] = float(v[start])
        return out

    z = z_sequence(ia)
    values = tuple(math.log(z[n]) / n if z[n] > 0 else float("-inf")
                   for n in range(1, n_max + 1))
    ratios = tuple(math.log(z[n + 1] / z[n]) if z[n] > 0 and z[n + 1] > 0 else float("nan")
                   for n in range(1, n_max))
    estimate = _growth_estimate(z, n_max)

    finite_tail = [v for v in values[-max(1, n_max // 3):] if math.isfinite(v)]
    cesaro = float(np.mean(finite_tail)) if finite_tail else float("-inf")

    if alt_base is None:
        for s in trunc.states:
            if s != a:
                alt_base = s
                break
    alt_est = None
    gap = None
    if alt_base is not None:
        z2 = z_sequence(trunc.index_of(alt_base))
        alt_est = _growth_estimate(z2, n_max)
        if math.isfinite(estimate) and math.isfinite(alt_est):
            gap = abs(estimate - alt_est)

    return PressureEstimate(
        base=a, n_values=tuple(range(1, n_max + 1)), values=values,
        ratio_values=ratios, estimate=estimate, cesaro_last_third=cesaro,
        alt_base=alt_base, alt_estimate=alt_est, base_gap=gap,
        mixing=bool(con["connected"] and con["period"] == 1),
        period=con["period"], n_states=trunc.n,
    )


def pressure_spectral(psi: Potential, trunc: Truncation) -> float:
    """Pressure of a finite truncation as log spectral radius of the weighted adjacency.

    Dense eigenvalue route, deliberately independent of the entropy module's
    power iteration so the zero-potential identity P(0) = h is a two-sided
    check.
    """
    b = edge_weight_matrix(psi, trunc)
    if not b.any():
        return float("-inf")
    lam = float(np.abs(np.linalg.eigvals(b)).max())
    return math.log(lam) if lam > 0 else float("-inf")


@dataclass(frozen=True)
class RecurrenceReport:
    base: int
    n_values: tuple[int, ...]
    first_return_sums: tuple[float, ...]
    d_infinity: float
    entropy: float
    strongly_positive_recurrent: bool


def recurrence_report(a: int, trunc: Truncation, n_max: int = 30,
                      psi: Optional[Potential] = None) -> RecurrenceReport:
    """First-return growth rate against entropy: the strong recurrence verdict.

    The growth rate of the first-return sums is measured on a log scale, the
    same scale as the entropy it is compared against; the verdict is the
    strict inequality D < h.
    """
    psi = psi or zero_potential()
    sums = tuple(first_return_partition(psi, a, n, trunc) for n in range(1, n_max + 1))
    tail = [(math.log(s) / n) for n, s in enumerate(sums, start=1)
            if n >= max(1, n_max // 2) and s > 0]
    d_inf = max(tail) if tail else float("-inf")
    h = pressure_spectral(zero_potential(), trunc)
    return RecurrenceReport(
        base=a, n_values=tuple(range(1, n_max + 1)), first_return_sums=sums,
        d_infinity=d_inf, entropy=h,
        strongly_positive_recurrent=bool(d_inf < h),
    )


def variational_check(psi: Potential, kernel_matrix: np.ndarray, trunc: Truncation,
                      pi: Optional[np.ndarray] = None, tol: float = 1e-9) -> dict:
    """Entropy-plus-integral of a stationary Markov measure against the pressure.

    The measure is given by a stochastic kernel supported on the truncation's
    edges; its entropy is −Σ π_i Σ_j w_ij log w_ij and the potential integral
    is exact for depths one and two.  Rejects kernels whose support leaves
    the graph and vectors that are not stationary.
    """
    from .markov import stationary_distribution, StochasticKernel

    w = np.asarray(kernel_matrix, dtype=float)
    if w.shape != (trunc.n, trunc.n):
        raise ValueError("kernel shape does not match the truncation")
    adj = trunc.adjacency()
    if np.any((w > 0) & (adj == 0)):
        raise ValueError("kernel support is not contained in the truncation's edges")
    kern = StochasticKernel(states=trunc.states, matrix=w)
    if pi is None:
        pi = stationary_distribution(kern)
    else:
        pi = np.asarray(pi, dtype=float)
        if np.abs(pi @ w - pi).max() > 1e-8:
            raise ValueError("supplied distribution is not stationary for the kernel")

    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(w > 0, np.log(np.where(w > 0, w, 1.0)), 0.0)
    h_mu = float(-(pi[:, None] * w * logs).sum())

    if psi.depth == 1:
        integral = float(sum(pi[i] * psi((s,)) for i, s in enumerate(trunc.states)))
    else:
        integral = 0.0
        for i, si in enumerate(trunc.states):
            for j, sj in enumerate(trunc.states):
                if w[i, j] > 0:
                    integral += pi[i] * w[i, j] * psi((si, sj))
        integral = float(integral)

    lhs = h_mu + integral
    rhs = pressure_spectral(psi, trunc)
    return {
        "entropy_of_measure": h_mu,
        "potential_integral": integral,
        "lhs": lhs,
        "rhs": rhs,
        "satisfied": bool(lhs <= rhs + tol),
        "gap": rhs - lhs,
    }
