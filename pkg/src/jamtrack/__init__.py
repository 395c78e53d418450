"""Multi-scale traffic congestion bottleneck detection and propagation tracking."""

from .congestion import (
    CongestionGraphSequence,
    CongestionSubgraph,
    build_graph_sequence,
    build_subgraph,
    extract_instances,
    largest_connected_component,
)
from .detector import LocalDominanceCommunities, validate_adjacency
from .features import (
    AdaptiveAdjacency,
    build_adjacency_sequence,
    entropy_weights,
    fft_similarity,
    fuse,
    scalar_similarity,
    segment_curvature,
    spatial_similarity,
    tsi_similarity,
)
from .ingest import (
    RoadNetwork,
    SpeedMatrix,
    TsiMatrix,
    aggregate_speeds,
    compute_tsi,
    estimate_free_flow,
)
from .local_search import (
    DetectConfig,
    LeaderForest,
    Partition,
    SweepResult,
    ValuedGraph,
    assign_partition,
    attribute_values,
    build_pointer_dag,
    detect_communities,
    find_local_leaders,
    lbfs_link_leaders,
    modularity_sweep,
    select_centers,
)
from .metrics import (
    MatchEvent,
    TransitionMatrix,
    modularity,
    nmi,
    propagation_probability,
    sim_ged,
    sim_icem,
    sim_jaccard,
    sim_maxratio,
    sim_overlap,
    sim_transition_vectors,
    track_communities,
)
from .bench import BenchmarkConfig, DynamicBenchmark, generate, realized_degree_stats

__version__ = "0.1.0"
