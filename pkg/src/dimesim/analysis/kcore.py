"""k-shell decomposition by iterative peeling.

At step ``k`` (from 1) every node whose residual degree is ``k`` or less is
removed, repeatedly, until none is left; those nodes form the k-shell.
Isolated nodes are never part of the 1-core and get shell 0.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..model import to_adjacency


@dataclass(frozen=True)
class ShellRow:
    shell: int
    size: int
    max_degree: int
    mean_degree: float


@dataclass(frozen=True)
class KCoreResult:
    shell: dict  # node -> shell index

    @property
    def max_shell(self) -> int:
        return max(self.shell.values(), default=0)

    def members(self, s: int) -> set:
        return {v for v, k in self.shell.items() if k == s}


def k_core(graph) -> KCoreResult:
    """Bucket peeling in O(V + E): nodes sit in buckets by residual degree and
    the lowest non-empty bucket is drained first."""
    adj = to_adjacency(graph)
    degree = {v: len(n) for v, n in adj.items()}
    max_deg = max(degree.values(), default=0)
    buckets: list[set] = [set() for _ in range(max_deg + 1)]
    for v, d in degree.items():
        buckets[d].add(v)
    shell: dict = {}
    k = 0
    d = 0
    remaining = len(adj)
    while remaining:
        while not buckets[d]:
            d += 1
        v = buckets[d].pop()
        # the current step is the largest residual degree seen at removal
        k = max(k, d)
        shell[v] = k
        remaining -= 1
        for u in adj[v]:
            if u in shell:
                continue
            du = degree[u]
            buckets[du].discard(u)
            degree[u] = du - 1
            buckets[du - 1].add(u)
            if du - 1 < d:
                d = du - 1
    return KCoreResult(shell)


def shell_stats(kcore: KCoreResult, graph) -> list[ShellRow]:
    adj = to_adjacency(graph)
    if set(adj) != set(kcore.shell):
        raise ValueError("k-core result and graph cover different node sets")
    groups: dict[int, list[int]] = {}
    for v, s in kcore.shell.items():
        groups.setdefault(s, []).append(len(adj[v]))
    return [
        ShellRow(s, len(ds), max(ds), sum(ds) / len(ds))
        for s, ds in sorted(groups.items())
    ]


@dataclass(frozen=True)
class CoreSignature:
    top_shell: int
    max_degree_node: object
    max_degree: int
    max_degree_shell: int
    max_degree_in_top_shell: bool
    # top-shell max degree over the largest max degree of any lower shell
    dominance: float | None


def core_signature(kcore: KCoreResult, graph) -> CoreSignature:
    """Whether the highest-degree node sits in the innermost shell."""
    adj = to_adjacency(graph)
    if not adj:
        raise ValueError("empty graph")
    node = max(adj, key=lambda v: (len(adj[v]), -kcore.shell[v], str(v)))
    rows = shell_stats(kcore, adj)
    top = rows[-1]
    lower = max((r.max_degree for r in rows[:-1]), default=0)
    return CoreSignature(
        top_shell=top.shell,
        max_degree_node=node,
        max_degree=len(adj[node]),
        max_degree_shell=kcore.shell[node],
        max_degree_in_top_shell=kcore.shell[node] == top.shell,
        dominance=(top.max_degree / lower) if lower else None,
    )
