"""Topological batch scheduling over the workflow graph."""

from __future__ import annotations

from .model import WorkflowGraph


class SchedulingError(Exception):
    """Raised on cyclic graphs; carries the nodes of one cycle."""

    def __init__(self, cycle_nodes: list[str]) -> None:
        super().__init__(f"dependency cycle through {cycle_nodes}")
        self.cycle_nodes = cycle_nodes


def topological_schedule(graph: WorkflowGraph) -> list[tuple[str, ...]]:
    """Kahn layering: maximal batches of tasks with no unmet dependencies.

    Every node appears exactly once; for every edge (a, b) the batch of a
    strictly precedes the batch of b. Batches are sorted lexicographically
    for reproducibility.
    """
    indegree = {node: 0 for node in graph.nodes}
    successors: dict[str, list[str]] = {node: [] for node in graph.nodes}
    for a, b in graph.edges:
        if a not in indegree or b not in indegree:
            raise SchedulingError(sorted({a, b} - graph.nodes))
        indegree[b] += 1
        successors[a].append(b)

    frontier = sorted(n for n, d in indegree.items() if d == 0)
    batches: list[tuple[str, ...]] = []
    placed = 0
    while frontier:
        batches.append(tuple(frontier))
        placed += len(frontier)
        next_frontier = set()
        for node in frontier:
            for succ in successors[node]:
                indegree[succ] -= 1
                if indegree[succ] == 0:
                    next_frontier.add(succ)
        frontier = sorted(next_frontier)

    if placed != len(graph.nodes):
        raise SchedulingError(_find_cycle(graph, {n for n, d in indegree.items() if d > 0}))
    return batches


def _find_cycle(graph: WorkflowGraph, remaining: set[str]) -> list[str]:
    """Walk successors within the stuck set until a node repeats."""
    start = sorted(remaining)[0]
    path = [start]
    seen = {start}
    node = start
    while True:
        nexts = sorted(graph.successors(node) & remaining)
        node = nexts[0]
        if node in seen:
            cycle = path[path.index(node):]
            return sorted(cycle)
        seen.add(node)
        path.append(node)
