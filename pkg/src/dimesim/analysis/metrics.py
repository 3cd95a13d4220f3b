"""Degree distribution, power-law fit, clustering and neighbour degree."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from ..model import to_adjacency


@dataclass(frozen=True)
class PowerLawFit:
    gamma: float  # slope of log density vs log degree (negative)
    k_min: int
    k_max: int
    r_squared: float
    n_bins: int


@dataclass(frozen=True)
class DegreeStats:
    histogram: dict[int, int]
    n_nodes: int
    n_edges: int
    mean_degree: Fraction
    fit: PowerLawFit | None

    @property
    def gamma(self) -> float | None:
        return None if self.fit is None else self.fit.gamma


def log_bins(degrees: Iterable[int], k_min: int = 1, base: float = 2.0) -> list[tuple[int, int, int]]:
    """Logarithmic integer bins ``[lo, hi]`` with their counts, empty bins
    removed."""
    degs = sorted(d for d in degrees if d >= k_min)
    if not degs:
        return []
    bins = []
    edge = float(k_min)
    lo = k_min
    i = 0
    top = degs[-1]
    while lo <= top:
        edge *= base
        hi = max(lo, math.ceil(edge) - 1)
        bins.append((lo, hi))
        lo = hi + 1
    counts = Counter()
    for d in degs:
        while not bins[i][0] <= d <= bins[i][1]:
            i += 1
        counts[i] += 1
    return [(lo, hi, counts[j]) for j, (lo, hi) in enumerate(bins) if counts[j]]


def fit_power_law(
    degrees: Iterable[int], k_min: int = 1, base: float = 2.0, min_bin_count: int = 5
) -> PowerLawFit | None:
    """Least-squares slope of log10(bin density) against log10(bin centre),
    density being count / bin width.

    The fit range runs from ``k_min`` up to the first bin holding fewer than
    ``min_bin_count`` nodes; sparse tail bins overstate density. None when
    fewer than two bins qualify.
    """
    degrees = list(degrees)
    bins = []
    expected_lo = None
    for lo, hi, n in log_bins(degrees, k_min, base):
        if n < min_bin_count or (expected_lo is not None and lo != expected_lo):
            break
        bins.append((lo, hi, n))
        expected_lo = hi + 1
    if len(bins) < 2:
        return None
    xs = [math.log10(math.sqrt(lo * hi)) for lo, hi, _ in bins]
    ys = [math.log10(n / (hi - lo + 1)) for lo, hi, n in bins]
    mx = sum(xs) / len(xs)
    my = sum(ys) / len(ys)
    sxx = sum((x - mx) ** 2 for x in xs)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = my - slope * mx
    ss_tot = sum((y - my) ** 2 for y in ys)
    ss_res = sum((y - (intercept + slope * x)) ** 2 for x, y in zip(xs, ys))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(slope, bins[0][0], bins[-1][1], r2, len(bins))


def degree_stats(graph, k_min: int = 1, base: float = 2.0, min_bin_count: int = 5) -> DegreeStats:
    adj = to_adjacency(graph)
    if not adj:
        raise ValueError("degree_stats needs a non-empty graph")
    degrees = [len(nbrs) for nbrs in adj.values()]
    n_edges = sum(degrees) // 2
    return DegreeStats(
        dict(sorted(Counter(degrees).items())),
        len(adj),
        n_edges,
        Fraction(2 * n_edges, len(adj)),
        fit_power_law(degrees, k_min, base, min_bin_count),
    )


@dataclass(frozen=True)
class ClusteringStats:
    global_cc: float
    local: dict  # node -> coefficient, degree >= 2 only
    by_degree: dict[int, float]

    def cdf(self) -> list[tuple[float, float]]:
        """Empirical CDF of the local coefficients."""
        values = sorted(self.local.values())
        n = len(values)
        out = []
        for i, v in enumerate(values):
            if i + 1 < n and values[i + 1] == v:
                continue
            out.append((v, (i + 1) / n))
        return out


def local_clustering(adj: dict) -> dict:
    out = {}
    for v, nbrs in adj.items():
        d = len(nbrs)
        if d < 2:
            continue
        links = 0
        for u in nbrs:
            links += len(adj[u] & nbrs)
        out[v] = (links / 2) / (d * (d - 1) / 2)
    return out


def clustering(graph) -> ClusteringStats:
    adj = to_adjacency(graph)
    local = local_clustering(adj)
    global_cc = sum(local.values()) / len(local) if local else 0.0
    sums: dict[int, list[float]] = {}
    for v, c in local.items():
        sums.setdefault(len(adj[v]), []).append(c)
    by_degree = {k: sum(vs) / len(vs) for k, vs in sorted(sums.items())}
    return ClusteringStats(global_cc, local, by_degree)


def avg_neighbor_degree(graph) -> dict[int, float]:
    """k -> mean over degree-k nodes of their neighbours' mean degree."""
    adj = to_adjacency(graph)
    per_k: dict[int, list[float]] = {}
    for v, nbrs in adj.items():
        if not nbrs:
            continue
        knn = sum(len(adj[u]) for u in nbrs) / len(nbrs)
        per_k.setdefault(len(nbrs), []).append(knn)
    return {k: sum(vs) / len(vs) for k, vs in sorted(per_k.items())}
