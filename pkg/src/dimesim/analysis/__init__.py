"""Graph analytics and topology comparison."""

from .compare import (
    ComparisonReport,
    SummaryRow,
    alias_rank_curve,
    as_graph_from_pairs,
    augmented_fraction,
    compare,
    degree_pairs,
    edge_observation_histograms,
    restrict_to,
    summary_row,
    union,
    write_series,
)
from .kcore import CoreSignature, KCoreResult, ShellRow, core_signature, k_core, shell_stats
from .metrics import (
    ClusteringStats,
    DegreeStats,
    PowerLawFit,
    avg_neighbor_degree,
    clustering,
    degree_stats,
    fit_power_law,
    local_clustering,
    log_bins,
)

__all__ = [
    "ClusteringStats", "ComparisonReport", "CoreSignature", "DegreeStats", "KCoreResult",
    "PowerLawFit", "ShellRow", "SummaryRow", "alias_rank_curve", "as_graph_from_pairs",
    "augmented_fraction", "avg_neighbor_degree", "clustering", "compare", "core_signature",
    "degree_pairs", "degree_stats", "edge_observation_histograms", "fit_power_law", "k_core",
    "local_clustering", "log_bins", "restrict_to", "shell_stats", "summary_row", "union",
    "write_series",
]
