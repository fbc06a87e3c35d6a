"""Communication-aware missing-data recovery for distribution-grid sensor networks.

Sensors are grouped into balanced clusters, routed over link-disjoint Steiner
trees so that no tree carries too much of one cluster, and missing data left
by link failures is recovered per cluster with Page matrices and optimal
singular value thresholding.
"""
from commrec.clustering import ClusterAssignment, FeatureVector, cluster_balanced, extract_features
from commrec.datagen import SynthSpec, generate
from commrec.failures import FailureScenario, derive_mask, sample_failures
from commrec.measurements import MeasurementBlock, ObservationMask
from commrec.metrics import RecoveryReport, improvement, score
from commrec.network import (
    CommNetwork,
    InfeasiblePlanError,
    LdstPlan,
    TopologyError,
    build_ldst_plan,
    build_unconstrained_plan,
    check_plan,
    load_network,
)
from commrec.osvt import BACKEND, OsvtConfig, RecoveryResult, optimal_threshold, recover
from commrec.page import PageLayout, PagePair, from_page, to_page

__all__ = [
    "BACKEND",
    "ClusterAssignment",
    "CommNetwork",
    "FailureScenario",
    "FeatureVector",
    "InfeasiblePlanError",
    "LdstPlan",
    "MeasurementBlock",
    "ObservationMask",
    "OsvtConfig",
    "PageLayout",
    "PagePair",
    "RecoveryReport",
    "RecoveryResult",
    "SynthSpec",
    "TopologyError",
    "build_ldst_plan",
    "build_unconstrained_plan",
    "check_plan",
    "cluster_balanced",
    "derive_mask",
    "extract_features",
    "from_page",
    "generate",
    "improvement",
    "load_network",
    "optimal_threshold",
    "recover",
    "sample_failures",
    "score",
    "to_page",
]

__version__ = "0.1.0"
