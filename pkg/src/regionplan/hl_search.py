"""High-level search over abstract states.

Two searches live here: a multi-source bi-directional beam search driven by
an epsilon-weighted region-distance heuristic, and a plain single-source beam
search used as a baseline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

from .cspace import ContractError

EPS_FLOOR = 1e-300


@dataclass(frozen=True)
class HighLevelPlan:
    states: tuple[int, ...]
    origin: int

    def __len__(self) -> int:
        return len(self.states)


class StaticGraph:
    """Fixed adjacency with optional region distances; handy for tests and baselines."""

    def __init__(self, adjacency: Mapping[int, Iterable[int]], distances: Mapping[tuple[int, int], float] | None = None):
        self.adj = {int(k): [int(v) for v in vs] for k, vs in adjacency.items()}
        for vs in list(self.adj.values()):
            for v in vs:
                self.adj.setdefault(v, [])
        self.states = {k: None for k in sorted(self.adj)}
        self._dist = {} if distances is None else {tuple(sorted(k)): float(v) for k, v in distances.items()}

    def neighbors(self, i: int) -> list[int]:
        return self.adj[i]

    def region_distance(self, i: int, j: int) -> float:
        if i not in self.states or j not in self.states:
            raise KeyError(f"unknown state in pair ({i}, {j})")
        return 0.0 if i == j else self._dist.get((min(i, j), max(i, j)), 1.0)


@dataclass
class HeuristicTable:
    """epsilon per ordered state pair (default 1) and a d_r cache."""

    eps: dict[tuple[int, int], float] = field(default_factory=dict)
    dr_cache: dict[tuple[int, int], float] = field(default_factory=dict)
    graph: object = field(default=None, repr=False, compare=False)

    def bind(self, graph) -> "HeuristicTable":
        self.graph = graph
        return self

    def epsilon(self, i: int, j: int) -> float:
        return self.eps.get((i, j), 1.0)

    def region_distance(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        key = (min(i, j), max(i, j))
        if key not in self.dr_cache:
            if self.graph is None:
                raise KeyError(f"no distance known for pair ({i}, {j})")
            self.dr_cache[key] = float(self.graph.region_distance(i, j))
        return self.dr_cache[key]

    def copy(self) -> "HeuristicTable":
        return HeuristicTable(dict(self.eps), dict(self.dr_cache), self.graph)

    def save(self, path) -> None:
        lines = [f"{i} {j} {v!r}" for (i, j), v in sorted(self.eps.items())]
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + ("\n" if lines else ""))

    @classmethod
    def load(cls, path) -> "HeuristicTable":
        eps = {}
        with open(path) as fh:
            for n, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    i, j, v = line.split()
                    eps[(int(i), int(j))] = float(v)
                except ValueError as exc:
                    raise ValueError(f"{path}:{n}: expected 'i j eps'") from exc
                if not 0.0 < eps[(int(i), int(j))] <= 1.0:
                    raise ValueError(f"{path}:{n}: eps outside (0, 1]")
        return cls(eps)


def h_prime(table: HeuristicTable, s1: int, s2: int) -> float:
    return table.epsilon(s1, s2) * table.region_distance(s1, s2)


def node_h(table: HeuristicTable, s_m: int | None, s_n: int, s_i: int, s_g: int) -> float:
    """Heuristic of a node at s_n reached from s_m; source nodes pass s_m=None."""
    step = 0.0 if s_m is None else h_prime(table, s_m, s_n)
    return step + min(h_prime(table, s_n, s_i), h_prime(table, s_n, s_g))


def update_heuristic(table: HeuristicTable, abstract_traj: list[int]) -> HeuristicTable:
    """Halve epsilon for every consecutive ordered pair of the abstract trajectory."""
    for a, b in zip(abstract_traj, abstract_traj[1:]):
        if a != b:
            table.eps[(a, b)] = max(table.epsilon(a, b) / 2.0, EPS_FLOOR)
    return table


def _successors(graph) -> Callable[[int], Iterable[int]]:
    if hasattr(graph, "neighbors"):
        return graph.neighbors
    return lambda i: graph[i]


def _state_ids(graph) -> list[int]:
    return sorted(graph.states) if hasattr(graph, "states") else sorted(graph)


def beam_search(graph, s0: int, sg: int, w: int, h: Callable[[int, int], float] | None = None) -> HighLevelPlan | None:
    """Single-source beam search with unit edge cost.

    ``h(parent, state)`` scores a generated state; it defaults to zero. Each
    round keeps the best ``w`` fringe nodes (FIFO among equals) and expands
    them. A state is generated at most once per search.
    """
    if w < 1:
        raise ContractError("beam width must be >= 1")
    succ = _successors(graph)
    if s0 == sg:
        return HighLevelPlan((s0,), s0)
    h = h or (lambda a, b: 0.0)
    seen = {s0}
    fringe = [(0.0, 0, (s0,))]
    counter = 1
    while fringe:
        fringe.sort(key=lambda n: (n[0], n[1]))
        beam, fringe = fringe[:w], []
        for f, _, path in beam:
            cur = path[-1]
            if cur == sg:
                return HighLevelPlan(path, s0)
        for f, _, path in beam:
            cur = path[-1]
            for nxt in succ(cur):
                if nxt in seen:
                    continue
                seen.add(nxt)
                fringe.append((len(path) + h(cur, nxt), counter, path + (nxt,)))
                counter += 1
    return None


def _ms_round(graph, table, s0, sg, w, N, sources, need_root):
    succ = _successors(graph)
    visited = {s: {s} for s in sources}
    fringe = []
    counter = 0
    for s in sources:
        fringe.append((0.0, counter, (s,), s))
        counter += 1
    plans: dict[tuple[int, ...], HighLevelPlan] = {}
    pruned = False

    def done():
        if need_root:
            return any(p.states[0] == s0 for p in plans.values())
        return len(plans) >= N

    while fringe and not done():
        fringe.sort(key=lambda n: (n[0], n[1]))
        pruned |= len(fringe) > w
        beam, fringe = fringe[:w], []
        for _, _, path, origin in beam:
            cur = path[-1]
            emitted = None
            if cur == sg and origin != sg:
                emitted = path
            elif origin == sg and cur == s0 and len(path) > 1:
                emitted = path[::-1]
            if emitted is not None:
                plans.setdefault(emitted, HighLevelPlan(emitted, origin))
                if done():
                    break
                continue
            target = s0 if origin == sg else sg
            for nxt in succ(cur):
                if nxt in path:
                    continue
                if nxt != target:
                    # the branch's target stays open so distinct routes into it all register
                    if nxt in visited[origin]:
                        continue
                    visited[origin].add(nxt)
                f = len(path) + node_h(table, cur, nxt, s0, sg)
                fringe.append((f, counter, path + (nxt,), origin))
                counter += 1
            if done():
                break
    return list(plans.values()), pruned


def ms_bidirectional_beam_search(
    graph,
    table: HeuristicTable,
    s0: int,
    sg: int,
    w: int = 20,
    N: int = 5,
    n_sources: int | None = None,
    rng: np.random.Generator | None = None,
    keep_partial: bool = False,
) -> list[HighLevelPlan]:
    """Beam search grown from s0, sg and randomly sampled sources at once.

    Any branch that reaches sg yields a plan, as does a branch from sg that
    reaches s0 (reversed). If no returned plan starts at s0, the search is
    rerun with doubled beam width until one does or nothing is pruned.
    Plans come back distinct, in emission order. When s0 cannot reach sg the
    result is empty unless ``keep_partial`` asks for the plans grown from
    other sources.
    """
    if w < 1 or N < 1:
        raise ContractError("w and N must be >= 1")
    ids = _state_ids(graph)
    known = set(ids)
    if s0 not in known or sg not in known:
        raise KeyError(f"start or goal state missing from graph ({s0}, {sg})")
    if table.graph is None and hasattr(graph, "region_distance"):
        table.bind(graph)
    if s0 == sg:
        return [HighLevelPlan((s0,), s0)]
    rng = rng if rng is not None else np.random.default_rng(0)
    n_sources = min(10, len(ids)) if n_sources is None else n_sources
    others = [s for s in ids if s not in (s0, sg)]
    k = min(n_sources, len(others))
    extra = [int(s) for s in rng.choice(others, size=k, replace=False)] if k else []
    sources = [s0, sg] + extra

    plans, pruned = _ms_round(graph, table, s0, sg, w, N, sources, need_root=False)
    width = w
    while not any(p.states[0] == s0 for p in plans) and pruned:
        width *= 2
        more, pruned = _ms_round(graph, table, s0, sg, width, N, sources, need_root=True)
        # widening exists to find a plan rooted at s0; other branches only top the list up to N
        seen = {p.states for p in plans}
        for p in more:
            if p.states not in seen and (p.states[0] == s0 or len(plans) < N):
                plans.append(p)
                seen.add(p.states)
    if not keep_partial and not rooted_plans(plans, s0):
        return []
    return plans


def rooted_plans(plans: list[HighLevelPlan], s0: int) -> list[HighLevelPlan]:
    return [p for p in plans if p.states[0] == s0]
