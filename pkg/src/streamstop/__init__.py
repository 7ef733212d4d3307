"""Stopping rules for text recognition in a video stream."""

from .combination import Accumulator, CombinerConfig, integrate
from .core import (
    EPSILON,
    AlternativesMatrix,
    CharDistribution,
    ClipStream,
    LossParams,
    StoppingDecision,
    Verdict,
    argmax_string,
    from_plain_string,
)
from .metrics import MetricConfig, char_distance, gld, rho
from .stopping import (
    ClusterPolicyParams,
    DeltaPolicyParams,
    cluster_confidence,
    delta_hat,
    policy_n_cluster,
    policy_n_delta,
    policy_n_k,
)

__version__ = "0.1.0"
