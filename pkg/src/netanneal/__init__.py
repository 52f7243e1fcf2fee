"""netanneal: decomposition-driven parallel simulated annealing for large
homogeneous networks, with a cellular average-SINR benchmark."""

from .annealer import (AnnealConfig, SubnetState, acceptance, optimize_subnet,
                       random_neighbor, step_size, temperature)
from .decomposition import (OptimizedUnit, Split, Subnet, build_subnets,
                            enumerate_splits, filter_edges, group_units,
                            sector_partition)
from .network import (CorrelationGraph, Element, Network, ParameterSpec,
                      aggregate_quality, build_correlation_graph)
from .orchestrator import (Assignment, RunTrace, Schedule, SubnetResult,
                           advance_precision, dispatch, merge, run_alternative,
                           run_sector_baseline, threshold)
from .wireless import (Antenna, Grid, PropagationConfig, SinrEvaluator, SinrField,
                       average_sinr, compute_sinr_field, correlation_wireless,
                       generate_network, path_loss, pattern_gain, received_power,
                       sinr_at, suggest_thresholds)

__version__ = "0.1.0"
