"""Influence graphs and graph-guided recovery attacks.

Querying a training point reveals its k most influential peers, which makes
the training set a directed graph: node i points at the k points revealed by
querying x_i. Strongly connected components of that graph bound what a
crawling attacker can recover, and the greedy omniscient baseline gives a
tractable stand-in for the (NP-hard) optimal choice of seed queries.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .influence import InfluenceExplainer, topk_explain


@dataclass
class InfluenceGraph:
    edges: list[list[int]]
    k: int

    @property
    def n_nodes(self) -> int:
        return len(self.edges)


def build_influence_graph(expl: InfluenceExplainer, k: int | None = None) -> InfluenceGraph:
    """Out-edges of node i are the top-k reveals of querying x_i."""
    k = expl.k if k is None else k
    edges = []
    for i in range(expl.n_points):
        result = topk_explain(
            expl, expl.dataset.features[i], int(expl.dataset.labels[i]), k
        )
        edges.append([int(j) for j in result.indices])
    return InfluenceGraph(edges=edges, k=k)


def strongly_connected_components(edges: list[list[int]]) -> list[list[int]]:
    """Tarjan's algorithm with an explicit stack (no recursion limit)."""
    n = len(edges)
    index = [-1] * n
    lowlink = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    counter = 0
    components: list[list[int]] = []

    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, edge_pos = work[-1]
            if edge_pos == 0:
                index[v] = lowlink[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            for pos in range(edge_pos, len(edges[v])):
                w = edges[v][pos]
                if index[w] == -1:
                    work[-1] = (v, pos + 1)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    lowlink[v] = min(lowlink[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])
            if lowlink[v] == index[v]:
                component = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    component.append(w)
                    if w == v:
                        break
                components.append(component)
    return components


@dataclass
class GraphMetrics:
    scc_count: int
    singleton_count: int
    largest_scc_size: int
    max_in_degree: int
    zero_in_degree_count: int

    def to_dict(self) -> dict:
        return {
            "scc_count": self.scc_count,
            "singleton_count": self.singleton_count,
            "largest_scc_size": self.largest_scc_size,
            "max_in_degree": self.max_in_degree,
            "zero_in_degree_count": self.zero_in_degree_count,
        }


def scc_metrics(graph: InfluenceGraph | list[list[int]]) -> GraphMetrics:
    edges = graph.edges if isinstance(graph, InfluenceGraph) else graph
    components = strongly_connected_components(edges)
    in_degree = np.zeros(len(edges), dtype=np.int64)
    for targets in edges:
        for t in targets:
            in_degree[t] += 1
    sizes = [len(c) for c in components]
    return GraphMetrics(
        scc_count=len(components),
        singleton_count=sum(1 for s in sizes if s == 1),
        largest_scc_size=max(sizes) if sizes else 0,
        max_in_degree=int(in_degree.max()) if len(edges) else 0,
        zero_in_degree_count=int((in_degree == 0).sum()),
    )


@dataclass
class TraversalResult:
    recovered: list[int]
    query_count: int


def traverse_attack(
    expl: InfluenceExplainer,
    start_query: np.ndarray,
    k: int | None = None,
    schedule: str = "bfs",
    start_label: int | None = None,
) -> TraversalResult:
    """Crawl the training set by re-querying every revealed point once.

    The start query is an arbitrary point (``start_label`` overrides the
    predicted label for it); each revealed training point is queried at most
    once with its true label (BFS by default, DFS optional), and the
    recovered set is everything revealed along the way. The query count is
    therefore at most the number recovered plus the opening query.
    """
    if schedule not in ("bfs", "dfs"):
        raise ValueError("schedule must be 'bfs' or 'dfs'")
    k = expl.k if k is None else k
    start = topk_explain(
        expl, np.asarray(start_query, dtype=np.float64), start_label, k
    )
    queries = 1
    recovered: list[int] = []
    seen: set[int] = set()
    frontier: deque[int] = deque()
    for idx in start.indices:
        idx = int(idx)
        if idx not in seen:
            seen.add(idx)
            recovered.append(idx)
            frontier.append(idx)
    while frontier:
        node = frontier.popleft() if schedule == "bfs" else frontier.pop()
        result = topk_explain(
            expl, expl.dataset.features[node], int(expl.dataset.labels[node]), k
        )
        queries += 1
        for idx in result.indices:
            idx = int(idx)
            if idx not in seen:
                seen.add(idx)
                recovered.append(idx)
                frontier.append(idx)
    return TraversalResult(recovered=recovered, query_count=queries)


@dataclass
class GreedyCoverResult:
    seed_count: int
    seeds: list[int]
    covered: set[int]

    @property
    def query_count(self) -> int:
        """Seeds plus one follow-up query per covered point."""
        return self.seed_count + len(self.covered)


def _reachable_sets(edges: list[list[int]]) -> list[set[int]]:
    """reach[v] = every node revealed by crawling outward from a query at v."""
    n = len(edges)
    reach: list[set[int]] = []
    for v in range(n):
        seen: set[int] = set(edges[v])
        frontier = deque(seen)
        while frontier:
            u = frontier.popleft()
            for w in edges[u]:
                if w not in seen:
                    seen.add(w)
                    frontier.append(w)
        reach.append(seen)
    return reach


def greedy_omniscient_baseline(graph: InfluenceGraph | list[list[int]]) -> GreedyCoverResult:
    """Greedy seed selection with full knowledge of the influence graph.

    Repeatedly seeds at the node whose crawl would cover the most still
    unrecovered nodes, until every node that has an incoming path is covered
    (zero-in-degree nodes are unreachable by any crawl and are excluded).
    """
    edges = graph.edges if isinstance(graph, InfluenceGraph) else graph
    n = len(edges)
    reach = _reachable_sets(edges)
    has_in_edge = set()
    for targets in edges:
        has_in_edge.update(targets)
    covered: set[int] = set()
    seeds: list[int] = []
    while not has_in_edge <= covered:
        best, best_gain = -1, -1
        for v in range(n):
            gain = len(reach[v] - covered)
            if gain > best_gain:
                best, best_gain = v, gain
        if best_gain <= 0:
            break
        seeds.append(best)
        covered |= reach[best]
    return GreedyCoverResult(seed_count=len(seeds), seeds=seeds, covered=covered)
