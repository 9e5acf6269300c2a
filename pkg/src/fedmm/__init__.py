"""Surrogate-space federated majorize-minimization simulator."""

__version__ = "0.1.0"

from .compression import (CompressionSpec, build_compressor, compress, omega_p,
                          pp_compress)
from .core import (OracleConfig, check_majorization, fixed_point_residual,
                   mean_field, mm_step_s, mm_step_theta, sa_ssmm_run)
from .datasets import (ClientPartition, Dataset, balanced_kmeans_split,
                       gen_synthetic_dict, homogeneous_partition, load_matrix_csv)
from .federation import (ClientState, FedConfig, ServerState, client_round,
                         fedmm_run, naive_theta_run, server_round)
from .metrics import MetricsRecord, metric_e_p, metric_e_ps, metric_e_s, metric_e_sp
from .projection import psd_project
from .surrogate import Block, BlockLayout, StepSchedule, SurrogateVector

__all__ = [
    "CompressionSpec", "build_compressor", "compress", "omega_p", "pp_compress",
    "OracleConfig", "check_majorization", "fixed_point_residual", "mean_field",
    "mm_step_s", "mm_step_theta", "sa_ssmm_run",
    "ClientPartition", "Dataset", "balanced_kmeans_split", "gen_synthetic_dict",
    "homogeneous_partition", "load_matrix_csv",
    "ClientState", "FedConfig", "ServerState", "client_round", "fedmm_run",
    "naive_theta_run", "server_round",
    "MetricsRecord", "metric_e_p", "metric_e_ps", "metric_e_s", "metric_e_sp",
    "psd_project",
    "Block", "BlockLayout", "StepSchedule", "SurrogateVector",
]
