"""Countable directed graphs and their finite truncations.

A countable graph is given by a successor rule over integer-labeled states
plus an enumeration of the states by rank (for states indexed over all
integers the spiral enumeration 0, 1, −1, 2, −2, … is used).  Truncating at
cutoff q keeps the states of rank <= q with the induced edges; all exact
counting (paths, first-passage paths, loop lengths) happens on truncations
with arbitrary-precision integers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from math import gcd
from typing import Callable, Optional, Sequence

import numpy as np

from .trajectory import successors as arc_successors

__all__ = [
    "CountableGraph",
    "Truncation",
    "spiral_rank",
    "state_of_spiral_rank",
    "z_infinity_graph",
    "two_way_path_graph",
    "full_graph",
    "graph_from_edges",
    "graph_from_json",
    "graph_to_json",
    "truncation_to_dot",
    "builtin_graph",
    "path_count",
    "first_passage_count",
    "loop_lengths",
    "loop_length_gcd",
    "strongly_connected_components",
    "strong_connectivity_and_period",
    "predecessors_in_window",
]


def spiral_rank(state: int) -> int:
    """Enumeration of all integers as 0, 1, −1, 2, −2, …"""
    if state == 0:
        return 0
    return 2 * state - 1 if state > 0 else -2 * state


def state_of_spiral_rank(rank: int) -> int:
    if rank < 0:
        raise ValueError("rank must be nonnegative")
    if rank == 0:
        return 0
    return (rank + 1) // 2 if rank % 2 == 1 else -(rank // 2)


@dataclass(frozen=True)
class CountableGraph:
    """Successor-rule graph over integer states with a rank enumeration.

    ``increment_bound`` bounds |successor − state| and guarantees the
    convergence of the sequence metric; ``None`` means no bound is known.
    ``n_states`` is set for finite graphs.
    """

    name: str
    successors: Callable[[int], tuple[int, ...]]
    rank: Callable[[int], int]
    state_of_rank: Callable[[int], int]
    increment_bound: Optional[int] = None
    locally_finite: bool = True
    n_states: Optional[int] = None

    def states_up_to(self, q: int) -> tuple[int, ...]:
        top = q if self.n_states is None else min(q, self.n_states - 1)
        return tuple(self.state_of_rank(r) for r in range(top + 1))

    def truncate(self, q: int) -> "Truncation":
        return Truncation.of(self, q)


@dataclass(frozen=True)
class Truncation:
    """Induced subgraph on the states of rank <= q.

    Edges leaving the kept state set are dropped, so every truncation is the
    restriction used in the supremum definition of the entropy: it can only
    under-, never over-count paths.
    """

    parent: CountableGraph
    q: int
    states: tuple[int, ...]
    succ: tuple[tuple[int, ...], ...]  # local indices

    @staticmethod
    def of(graph: CountableGraph, q: int) -> "Truncation":
        states = graph.states_up_to(q)
        index = {s: i for i, s in enumerate(states)}
        succ = tuple(
            tuple(sorted(index[t] for t in graph.successors(s) if t in index))
            for s in states
        )
        return Truncation(parent=graph, q=q, states=states, succ=succ)

    @property
    def n(self) -> int:
        return len(self.states)

    def index_of(self, state: int) -> int:
        try:
            return self.states.index(state)
        except ValueError:
            raise KeyError(f"state {state} not in truncation (q={self.q})") from None

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for i, row in enumerate(self.succ):
            if row:
                a[i, list(row)] = 1.0
        return a

    def edges(self):
        for i, row in enumerate(self.succ):
            for j in row:
                yield self.states[i], self.states[j]

    def out_degrees(self) -> np.ndarray:
        return np.array([len(r) for r in self.succ])


# ---------------------------------------------------------------------------
# Builtin graphs
# ---------------------------------------------------------------------------


def z_infinity_graph() -> CountableGraph:
    """Arc-transition graph of the canonical field.

    States are arc indices over all integers; even arcs step to n+1 or n+2,
    odd arcs to n−1 or n−2.
    """
    return CountableGraph(
        name="z-infinity",
        successors=lambda n: arc_successors(n),
        rank=spiral_rank,
        state_of_rank=state_of_spiral_rank,
        increment_bound=2,
    )


def two_way_path_graph() -> CountableGraph:
    """Nearest-neighbor steps on all integers (the two-way infinite path)."""
    return CountableGraph(
        name="two-way-path",
        successors=lambda n: (n - 1, n + 1),
        rank=spiral_rank,
        state_of_rank=state_of_spiral_rank,
        increment_bound=1,
    )


def full_graph(n_letters: int, first: int = 0) -> CountableGraph:
    """Complete graph on ``n_letters`` states labeled first..first+n−1."""
    if n_letters < 1:
        raise ValueError("need at least one letter")
    letters = tuple(range(first, first + n_letters))
    return CountableGraph(
        name=f"full:{n_letters}" + (f"@{first}" if first else ""),
        successors=lambda s, L=letters: L,
        rank=lambda s, f=first: s - f,
        state_of_rank=lambda r, f=first: r + f,
        increment_bound=n_letters - 1,
        n_states=n_letters,
    )


def graph_from_edges(edges: Sequence[tuple[int, int]], name: str = "edges") -> CountableGraph:
    """Finite graph from an explicit edge list; states ranked in sorted order."""
    succ: dict[int, set[int]] = {}
    states: set[int] = set()
    for a, b in edges:
        a, b = int(a), int(b)
        states.update((a, b))
        succ.setdefault(a, set()).add(b)
    ordered = tuple(sorted(states))
    rank = {s: i for i, s in enumerate(ordered)}
    succ_t = {s: tuple(sorted(succ.get(s, ()))) for s in ordered}
    spread = max((abs(b - a) for a, b in edges), default=0)
    return CountableGraph(
        name=name,
        successors=lambda s, m=succ_t: m.get(s, ()),
        rank=lambda s, m=rank: m[s],
        state_of_rank=lambda r, o=ordered: o[r],
        increment_bound=spread,
        n_states=len(ordered),
    )


def builtin_graph(spec: str) -> CountableGraph:
    """Resolve a graph name as used by the command line: z-infinity, two-way-path, full:N."""
    if spec == "z-infinity":
        return z_infinity_graph()
    if spec == "two-way-path":
        return two_way_path_graph()
    if spec.startswith("full:"):
        return full_graph(int(spec.split(":", 1)[1]))
    raise ValueError(f"unknown builtin graph {spec!r}")


def graph_from_json(obj) -> CountableGraph:
    """Load a graph from {"kind": "builtin"|"edges", "name": …, "edges": […]}."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    kind = obj.get("kind")
    if kind == "builtin":
        return builtin_graph(obj["name"])
    if kind == "edges":
        return graph_from_edges([tuple(e) for e in obj["edges"]], name=obj.get("name", "edges"))
    raise ValueError(f"unknown graph kind {kind!r}")


def graph_to_json(trunc: Truncation) -> dict:
    return {
        "kind": "edges",
        "name": trunc.parent.name,
        "q": trunc.q,
        "edges": [[a, b] for a, b in trunc.edges()],
    }


def truncation_to_dot(trunc: Truncation) -> str:
    lines = [f'digraph "{trunc.parent.name}" {{']
    for a, b in trunc.edges():
        lines.append(f'  "{a}" -> "{b}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Exact counting
# ---------------------------------------------------------------------------


def path_count(trunc: Truncation, a: int, b: int, n: int) -> int:
    """Number of length-n paths from a to b, exact in big integers."""
    if n < 0:
        raise ValueError("path length must be nonnegative")
    ia, ib = trunc.index_of(a), trunc.index_of(b)
    counts = [0] * trunc.n
    counts[ia] = 1
    for _ in range(n):
        nxt = [0] * trunc.n
        for i, c in enumerate(counts):
            if c:
                for j in trunc.succ[i]:
                    nxt[j] += c
        counts = nxt
    return counts[ib]


def first_passage_count(trunc: Truncation, a: int, b: int, n: int) -> int:
    """Number of length-n paths a -> b whose interior avoids b."""
    if n < 1:
        raise ValueError("first-passage length must be >= 1")
    ia, ib = trunc.index_of(a), trunc.index_of(b)
    counts = [0] * trunc.n
    counts[ia] = 1
    for step in range(n):
        nxt = [0] * trunc.n
        for i, c in enumerate(counts):
            if c and not (step > 0 and i == ib):
                for j in trunc.succ[i]:
                    nxt[j] += c
        counts = nxt
    return counts[ib]


def loop_lengths(trunc: Truncation, v: int, max_len: int) -> tuple[int, ...]:
    """Lengths n <= max_len with at least one loop of length n through v."""
    iv = trunc.index_of(v)
    adj_t = trunc.adjacency().T
    reach = np.zeros(trunc.n)
    reach[iv] = 1.0
    found = []
    for n in range(1, max_len + 1):
        reach = (adj_t @ reach > 0).astype(float)
        if reach[iv]:
            found.append(n)
        if not reach.any():
            break
    return tuple(found)


def loop_length_gcd(trunc: Truncation, v: int, max_len: int) -> int:
    """gcd of loop lengths through v, stopping early once it reaches 1."""
    iv = trunc.index_of(v)
    adj_t = trunc.adjacency().T
    reach = np.zeros(trunc.n)
    reach[iv] = 1.0
    period = 0
    for n in range(1, max_len + 1):
        reach = (adj_t @ reach > 0).astype(float)
        if reach[iv]:
            period = gcd(period, n)
            if period == 1:
                return 1
        if not reach.any():
            break
    return period


def strongly_connected_components(trunc: Truncation) -> list[tuple[int, ...]]:
    """SCCs as tuples of local indices (iterative Tarjan)."""
    n = trunc.n
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[tuple[int, ...]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            succ = trunc.succ[v]
            while pi < len(succ):
                w = succ[pi]
                pi += 1
                if index[w] == -1:
                    work[-1] = (v, pi)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(tuple(sorted(comp)))
            if work:
                u, _ = work[-1]
                low[u] = min(low[u], low[v])
    return comps


def _reachable(trunc: Truncation, start: int, reverse: bool = False) -> np.ndarray:
    step = trunc.adjacency()
    if not reverse:
        step = step.T
    seen = np.zeros(trunc.n)
    seen[start] = 1.0
    while True:
        grown = ((step @ seen > 0) | (seen > 0)).astype(float)
        if (grown > 0).sum() == (seen > 0).sum():
            return grown > 0
        seen = grown


def strong_connectivity_and_period(trunc: Truncation) -> dict:
    """Strong connectivity (double reachability sweep) and loop-gcd period.

    The period is the gcd of the lengths of loops through a fixed vertex, up
    to length 2(q+1).  When the truncation is not strongly connected the
    fixed vertex is taken inside a largest nontrivial component, so the
    period describes the component actually carrying the dynamics.
    """
    if trunc.n == 0:
        raise ValueError("empty truncation")
    connected = bool(_reachable(trunc, 0).all() and _reachable(trunc, 0, reverse=True).all())
    if connected:
        v = trunc.states[0]
    else:
        comps = strongly_connected_components(trunc)
        comps = sorted(comps, key=len, reverse=True)
        v = trunc.states[comps[0][0]]
    period = loop_length_gcd(trunc, v, 2 * (trunc.q + 1))
    return {"connected": connected, "period": period}


def predecessors_in_window(graph: CountableGraph, state: int, max_rank: int) -> tuple[int, ...]:
    """States of rank <= max_rank having an edge into ``state``."""
    out = []
    for r in range(max_rank + 1):
        if graph.n_states is not None and r >= graph.n_states:
            break
        s = graph.state_of_rank(r)
        if state in graph.successors(s):
            out.append(s)
    return tuple(out)
