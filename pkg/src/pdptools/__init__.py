"""Poisson-Dirichlet / Pitman-Yor process toolkit.

Generalized Stirling number tables, stick-breaking and Chinese restaurant
samplers, exact partition laws, fragmentation and coagulation, and
evidence computations for discrete base distributions.
"""

__version__ = "0.1.0"

from . import kernels
from .core import (
    IndicatorVector,
    MultiplicityVector,
    PdParams,
    SizeBiasedPartition,
    canonicalize,
    enumerate_partitions,
    iter_partitions,
    log_pochhammer,
    log_pochhammer_inc,
)
from .discrete import (
    DiscreteBase,
    dirichlet_equivalent_concentration,
    evidence_indicators,
    evidence_multiplicities,
    gibbs_resample_multiplicity,
    pdp_moments,
    power_sum_expectation,
)
from .errors import (
    CoverageError,
    DegeneratePochhammerError,
    InvalidParameterError,
    InvalidPartitionError,
    PdpError,
    ResourceCapError,
)
from .fragcoag import (
    TreeStructure,
    coagulate,
    fragment,
    sample_coagulated_crd,
    sample_fragmented_crd,
    sample_tree,
)
from .laws import (
    approx_expected_M,
    approx_var_M,
    crd_log_prob,
    dirichlet_series_bound,
    evidence_nonatomic,
    expected_M,
    expected_M_oracle,
    geometric_bound,
    partition_size_pmf,
    var_M,
)
from .samplers import (
    NonAtomicBase,
    WeightVector,
    predictive,
    sample_crp,
    sample_gem,
    sample_pdd,
    sample_pdp,
    spawn_rngs,
)
from .stirling import (
    LogStirlingTable,
    StirlingRatioTable,
    build_log_table,
    build_ratio_table,
    stirling_asymptotic,
    stirling_explicit,
)

BACKEND = kernels.BACKEND
