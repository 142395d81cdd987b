"""Integer max-flow (Edmonds-Karp) and a bipartite transportation helper."""
from __future__ import annotations

from collections import deque
from typing import Sequence


class FlowNetwork:
    """Directed graph with integer capacities stored as paired residual arcs."""

    def __init__(self, n: int):
        self.n = n
        self.head: list[int] = []
        self.cap: list[int] = []
        self.adj: list[list[int]] = [[] for _ in range(n)]

    def add_edge(self, u: int, v: int, capacity: int) -> int:
        """Add arc u->v; returns its index (the reverse arc is index + 1)."""
        if capacity < 0:
            raise ValueError("capacity must be >= 0")
        k = len(self.head)
        self.head += [v, u]
        self.cap += [capacity, 0]
        self.adj[u].append(k)
        self.adj[v].append(k + 1)
        return k

    def flow_on(self, k: int) -> int:
        return self.cap[k + 1]

    def max_flow(self, source: int, sink: int) -> int:
        total = 0
        while True:
            parent = [-1] * self.n
            parent[source] = -2
            dq = deque([source])
            while dq and parent[sink] == -1:
                u = dq.popleft()
                for k in self.adj[u]:
                    v = self.head[k]
                    if self.cap[k] > 0 and parent[v] == -1:
                        parent[v] = k
                        dq.append(v)
            if parent[sink] == -1:
                return total
            push, v = None, sink
            while v != source:
                k = parent[v]
                push = self.cap[k] if push is None else min(push, self.cap[k])
                v = self.head[k ^ 1]
            v = sink
            while v != source:
                k = parent[v]
                self.cap[k] -= push
                self.cap[k ^ 1] += push
                v = self.head[k ^ 1]
            total += push

    def reachable(self, source: int) -> set[int]:
        """Nodes reachable from ``source`` in the residual graph."""
        seen = {source}
        dq = deque([source])
        while dq:
            u = dq.popleft()
            for k in self.adj[u]:
                v = self.head[k]
                if self.cap[k] > 0 and v not in seen:
                    seen.add(v)
                    dq.append(v)
        return seen


def transport(supply: Sequence[int], capacity: Sequence[int], edges) -> tuple[int, dict, set[int]]:
    """Ship integer ``supply[j]`` to sinks ``capacity[l]`` along ``edges`` (j, l).

    Returns (shipped total, flow per edge, source-side job set of a min cut).
    All supply fits iff shipped == sum(supply); otherwise the returned job
    set J satisfies sum(supply[J]) > sum(capacity[N(J)]).
    """
    N, L = len(supply), len(capacity)
    src, snk = N + L, N + L + 1
    g = FlowNetwork(N + L + 2)
    big = sum(supply) + 1
    for j in range(N):
        g.add_edge(src, j, supply[j])
    arcs = {}
    for j, l in sorted(edges):
        arcs[(j, l)] = g.add_edge(j, N + l, big)
    for l in range(L):
        g.add_edge(N + l, snk, capacity[l])
    shipped = g.max_flow(src, snk)
    flows = {e: g.flow_on(k) for e, k in arcs.items()}
    side = g.reachable(src)
    return shipped, flows, {j for j in range(N) if j in side}
